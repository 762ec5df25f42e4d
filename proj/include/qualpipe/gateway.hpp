#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace qualpipe {

// One evaluator chat-completion request.
struct ChatRequest {
  std::optional<std::string> system;
  std::string prompt;
  double temperature = 0.9;
  std::string model = "gpt-3.5-turbo";
  std::optional<std::int64_t> seed;
};

// Canonical byte serialization of a request; identical requests hash to
// identical digests on every platform.
std::string canonical_request_bytes(const ChatRequest& req);

// Lowercase hex SHA-256 of the canonical serialization.
std::string cache_key_digest(const ChatRequest& req);

std::string sha256_hex(std::string_view bytes);

// Raw transport result, before retry/backoff interpretation.
struct TransportResponse {
  int status = 0;
  std::string body;
  std::optional<double> retry_after_seconds;
  // Set when the request never produced an HTTP response (connect error...).
  std::optional<std::string> transport_error;
};

// The one seam between the gateway and the network; tests plug in scripted
// implementations.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportResponse post_chat_completion(const ChatRequest& req) = 0;
};

// POSTs an OpenAI-compatible chat-completion body to <base_url>/chat/completions.
class HttpTransport : public Transport {
 public:
  HttpTransport(std::string base_url, std::string api_key);
  TransportResponse post_chat_completion(const ChatRequest& req) override;

 private:
  std::string base_url_;
  std::string api_key_;
};

// Builds the OpenAI-compatible JSON body for a request.
std::string build_chat_completion_body(const ChatRequest& req);
// Extracts choices[0].message.content; nullopt when the shape is wrong.
std::optional<std::string> parse_chat_completion_body(const std::string& body);

// One file per key under <dir>/<first 2 hex>/<digest>.txt, plain text with
// a small header so cached evaluator behavior can be inspected directly.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> lookup(const std::string& digest) const;
  // Write-once: if the entry already exists it is left untouched.
  void store(const std::string& digest, const ChatRequest& req,
             const std::string& response_text) const;
  std::filesystem::path entry_path(const std::string& digest) const;

 private:
  std::filesystem::path dir_;
};

enum class GatewayMode { Live, Cached, Replay };

GatewayMode gateway_mode_from_string(const std::string& s);
const char* to_string(GatewayMode mode);

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds initial_delay{500};
  double backoff_factor = 2.0;
  // Jitter is drawn from [0, jitter_fraction * delay].
  double jitter_fraction = 0.25;
  std::uint64_t jitter_seed = 0;
};

struct GatewayConfig {
  GatewayMode mode = GatewayMode::Cached;
  std::filesystem::path cache_dir = ".qualpipe-cache";
  RetryPolicy retry;
};

struct BatchItem {
  bool ok = false;
  std::string text;
  std::string error;
};

// Single chokepoint for evaluator traffic: routes complete() through the
// configured mode, retries transient upstream failures, and serves/fills
// the response cache. Shareable across worker threads.
class LlmGateway {
 public:
  LlmGateway(GatewayConfig config, std::shared_ptr<Transport> transport);

  // Throws ReplayMissError / UpstreamError / RateLimitedError.
  std::string complete(const ChatRequest& req);

  // Positionally aligned results; at most `parallelism` in-flight upstream
  // calls; per-item failures never abort the batch.
  std::vector<BatchItem> complete_batch(const std::vector<ChatRequest>& reqs,
                                        int parallelism);

  std::uint64_t upstream_calls() const { return upstream_calls_.load(); }
  const GatewayConfig& config() const { return config_; }

 private:
  std::string call_upstream(const ChatRequest& req);

  GatewayConfig config_;
  std::shared_ptr<Transport> transport_;
  ResponseCache cache_;
  std::atomic<std::uint64_t> upstream_calls_{0};
};

// Deterministic rule-based evaluator used by tests and the bundled toy
// fixture: recognizes the pipeline's own prompt shapes and produces
// parseable responses derived from the prompt text alone.
class ScriptedEvaluator : public Transport {
 public:
  TransportResponse post_chat_completion(const ChatRequest& req) override;

  // The response text rule, exposed so fixtures can call it directly.
  static std::string respond(const ChatRequest& req);
};

}  // namespace qualpipe
