#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "qualpipe/gateway.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "qualpipe/errors.hpp"
#include "qualpipe/json_io.hpp"
#include "qualpipe/rng.hpp"
#include "qualpipe/text_util.hpp"

namespace qualpipe {

using nlohmann::json;

std::string canonical_request_bytes(const ChatRequest& req) {
  // json object keys serialize in sorted order, and temperature is pinned
  // to a fixed decimal string, so the bytes are platform-independent.
  json j;
  j["model"] = req.model;
  j["prompt"] = req.prompt;
  if (req.seed) {
    j["seed"] = *req.seed;
  } else {
    j["seed"] = nullptr;
  }
  if (req.system) {
    j["system"] = *req.system;
  } else {
    j["system"] = nullptr;
  }
  j["temperature"] = format_fixed(req.temperature, 6);
  return j.dump();
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string cache_key_digest(const ChatRequest& req) {
  return sha256_hex(canonical_request_bytes(req));
}

std::string build_chat_completion_body(const ChatRequest& req) {
  json messages = json::array();
  if (req.system) {
    messages.push_back({{"role", "system"}, {"content", *req.system}});
  }
  messages.push_back({{"role", "user"}, {"content", req.prompt}});
  json body = {{"model", req.model},
               {"messages", std::move(messages)},
               {"temperature", req.temperature}};
  if (req.seed) body["seed"] = *req.seed;
  return body.dump();
}

std::optional<std::string> parse_chat_completion_body(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  if (!j.contains("choices") || !j["choices"].is_array() ||
      j["choices"].empty()) {
    return std::nullopt;
  }
  const auto& choice = j["choices"][0];
  if (!choice.contains("message") || !choice["message"].contains("content") ||
      !choice["message"]["content"].is_string()) {
    return std::nullopt;
  }
  return choice["message"]["content"].get<std::string>();
}

// --- HttpTransport ---

HttpTransport::HttpTransport(std::string base_url, std::string api_key)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

TransportResponse HttpTransport::post_chat_completion(const ChatRequest& req) {
  // Split "<scheme>://<host[:port]>[/prefix]" so the prefix survives in the
  // request path.
  std::string host_part = base_url_;
  std::string path_prefix;
  auto scheme_end = base_url_.find("://");
  if (scheme_end != std::string::npos) {
    auto path_start = base_url_.find('/', scheme_end + 3);
    if (path_start != std::string::npos) {
      host_part = base_url_.substr(0, path_start);
      path_prefix = base_url_.substr(path_start);
    }
  }

  httplib::Client client(host_part);
  client.set_connection_timeout(30, 0);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) {
    headers.emplace("Authorization", "Bearer " + api_key_);
  }
  auto res = client.Post(path_prefix + "/chat/completions", headers,
                         build_chat_completion_body(req), "application/json");

  TransportResponse out;
  if (!res) {
    out.transport_error = httplib::to_string(res.error());
    return out;
  }
  out.status = res->status;
  out.body = res->body;
  if (res->has_header("Retry-After")) {
    try {
      out.retry_after_seconds = std::stod(res->get_header_value("Retry-After"));
    } catch (const std::exception&) {
    }
  }
  return out;
}

// --- ResponseCache ---

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path ResponseCache::entry_path(const std::string& digest) const {
  return dir_ / digest.substr(0, 2) / (digest + ".txt");
}

static constexpr const char* kCacheDelimiter = "\n---\n";

std::optional<std::string> ResponseCache::lookup(const std::string& digest) const {
  const auto path = entry_path(digest);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string content = ss.str();
  auto pos = content.find(kCacheDelimiter);
  if (pos == std::string::npos) return std::nullopt;
  return content.substr(pos + std::char_traits<char>::length(kCacheDelimiter));
}

void ResponseCache::store(const std::string& digest, const ChatRequest& req,
                          const std::string& response_text) const {
  const auto path = entry_path(digest);
  if (std::filesystem::exists(path)) return;  // first writer wins
  std::string content = "qualpipe cache entry v1\n";
  content += "request: " + canonical_request_bytes(req) + "\n";
  content += "sha256: " + digest;
  content += kCacheDelimiter;
  content += response_text;
  atomic_write_file(path, content);
}

// --- gateway ---

GatewayMode gateway_mode_from_string(const std::string& s) {
  if (s == "live") return GatewayMode::Live;
  if (s == "cached") return GatewayMode::Cached;
  if (s == "replay") return GatewayMode::Replay;
  throw ConfigError("unknown gateway mode: \"" + s + "\" (expected live, cached, or replay)");
}

const char* to_string(GatewayMode mode) {
  switch (mode) {
    case GatewayMode::Live: return "live";
    case GatewayMode::Cached: return "cached";
    default: return "replay";
  }
}

LlmGateway::LlmGateway(GatewayConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      cache_(config_.cache_dir) {}

std::string LlmGateway::complete(const ChatRequest& req) {
  if (req.prompt.empty()) throw ConfigError("empty prompt");
  if (req.temperature < 0.0 || req.temperature > 2.0) {
    throw ConfigError("temperature outside [0, 2]");
  }
  const std::string digest = cache_key_digest(req);
  if (config_.mode != GatewayMode::Live) {
    if (auto hit = cache_.lookup(digest)) return *hit;
    if (config_.mode == GatewayMode::Replay) throw ReplayMissError(digest);
  }
  std::string text = call_upstream(req);
  cache_.store(digest, req, text);
  return text;
}

std::string LlmGateway::call_upstream(const ChatRequest& req) {
  const RetryPolicy& policy = config_.retry;
  Rng jitter_rng(subseed(policy.jitter_seed, cache_key_digest(req)));
  double delay_ms = static_cast<double>(policy.initial_delay.count());
  TransportResponse last;
  for (int attempt = 0; attempt < policy.max_attempts; ++attempt) {
    if (attempt > 0) {
      double wait = delay_ms;
      if (policy.jitter_fraction > 0.0) {
        double jitter_max = policy.jitter_fraction * delay_ms;
        wait += static_cast<double>(jitter_rng.below(1024)) / 1023.0 * jitter_max;
      }
      if (last.retry_after_seconds) {
        wait = std::max(wait, *last.retry_after_seconds * 1000.0);
      }
      std::this_thread::sleep_for(
          std::chrono::milliseconds(static_cast<long long>(wait)));
      delay_ms *= policy.backoff_factor;
    }
    upstream_calls_.fetch_add(1);
    last = transport_->post_chat_completion(req);
    if (last.transport_error) continue;  // connect/read failure, retry
    if (last.status == 200) {
      if (auto text = parse_chat_completion_body(last.body)) return *text;
      throw UpstreamError(last.status,
                          "malformed chat-completion body: " + last.body);
    }
    const bool retryable =
        last.status == 408 || last.status == 429 || last.status >= 500;
    if (!retryable) throw UpstreamError(last.status, last.body);
  }
  if (last.status == 429) throw RateLimitedError(last.body);
  if (last.transport_error) {
    throw UpstreamError(0, "transport error: " + *last.transport_error);
  }
  throw UpstreamError(last.status, last.body);
}

std::vector<BatchItem> LlmGateway::complete_batch(
    const std::vector<ChatRequest>& reqs, int parallelism) {
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  std::vector<BatchItem> results(reqs.size());
  if (reqs.empty()) return results;

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= reqs.size()) break;
      try {
        results[i].text = complete(reqs[i]);
        results[i].ok = true;
      } catch (const std::exception& e) {
        results[i].ok = false;
        results[i].error = e.what();
      }
    }
  };

  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(parallelism), reqs.size());
  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return results;
}

}  // namespace qualpipe
