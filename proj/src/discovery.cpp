#include "qualpipe/discovery.hpp"

#include <algorithm>
#include <iostream>
#include <unordered_map>
#include <unordered_set>

#include "qualpipe/errors.hpp"
#include "qualpipe/rng.hpp"
#include "qualpipe/text_util.hpp"

namespace qualpipe {

namespace {

constexpr int kParseRetries = 3;

void validate_config(const DiscoveryConfig& cfg) {
  if (cfg.n_final < 1) throw ConfigError("n_final must be >= 1");
  if (cfg.prune_factor < 2) throw ConfigError("prune_factor must be >= 2");
  if (cfg.chunk_size < 1) throw ConfigError("chunk_size must be >= 1");
  if (cfg.parallelism < 1) throw ConfigError("parallelism must be >= 1");
}

// Strips a leading "Domain:" / "Subtask:" / "Sub-task:" label, which the
// sub-task template explicitly asks for.
std::string strip_item_label(const std::string& item) {
  static const char* labels[] = {"domain:", "subtask:", "sub-task:"};
  std::string lowered = to_lower(item);
  for (const char* label : labels) {
    if (lowered.rfind(label, 0) == 0) {
      return trim(item.substr(std::string(label).size()));
    }
  }
  return item;
}

std::string kind_plural(AttributeKind kind) {
  return kind == AttributeKind::Domain ? "domains" : "sub-tasks";
}

}  // namespace

std::vector<std::string> parse_numbered_list(const std::string& text) {
  std::vector<std::string> items;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = trim(std::string_view(text).substr(pos, eol - pos));
    pos = eol + 1;
    std::size_t i = 0;
    while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
    if (i == 0 || i >= line.size()) continue;
    if (line[i] != '.' && line[i] != ')') continue;
    std::string item = strip_item_label(trim(line.substr(i + 1)));
    if (!item.empty()) items.push_back(normalize_whitespace(item));
    if (pos > text.size()) break;
  }
  return items;
}

ChatRequest build_discovery_prompt(const std::string& task_instruction,
                                   const std::vector<Instance>& examples,
                                   const DiscoveryConfig& cfg) {
  std::string prompt;
  if (!task_instruction.empty()) {
    prompt += "Task instruction: " + task_instruction + "\n\n";
  }
  for (std::size_t i = 0; i < examples.size(); ++i) {
    prompt += "Example " + std::to_string(i + 1) + ":\n";
    prompt += "Input: " + examples[i].input + "\n";
    if (cfg.include_reference) {
      prompt += "Reference output: " + examples[i].reference + "\n";
    }
    prompt += "\n";
  }
  if (cfg.kind == AttributeKind::Domain) {
    prompt +=
        "Given the examples above, what are relevant domains for the data? "
        "Focus on the examples but be general. Structure the response as a "
        "numbered list.";
  } else {
    prompt +=
        "Given the examples above, what are the specific atomic sub-tasks a "
        "machine learning model needs to be competent at for the underlying "
        "task? Focus on the examples but be general. Do not list the overall "
        "task as a sub-task. Structure each item as \"Subtask: <sub-task>\". "
        "Generate a numbered list.";
  }
  ChatRequest req;
  req.prompt = std::move(prompt);
  req.temperature = cfg.temperature;
  req.model = cfg.model;
  return req;
}

ChatRequest build_prune_prompt(const std::string& task_instruction,
                               const std::vector<std::string>& names,
                               int keep, const DiscoveryConfig& cfg) {
  std::string prompt;
  if (!task_instruction.empty()) {
    prompt += "Task instruction: " + task_instruction + "\n\n";
  }
  prompt += "Candidate " + kind_plural(cfg.kind) + ":\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    prompt += std::to_string(i + 1) + ". " + names[i] + "\n";
  }
  prompt += "\nSelect the " + std::to_string(keep) +
            " most relevant, distinct, and general " + kind_plural(cfg.kind) +
            " from the candidates above. Copy each selected item verbatim. "
            "Structure the response as a numbered list.";
  ChatRequest req;
  req.prompt = std::move(prompt);
  req.temperature = cfg.temperature;
  req.model = cfg.model;
  return req;
}

CandidateList propose_candidates(const Dataset& dataset,
                                 const DiscoveryConfig& cfg,
                                 LlmGateway& gateway) {
  validate_config(cfg);
  if (dataset.instances.empty()) {
    throw DataError("discovery requires a non-empty dataset");
  }

  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (cfg.shuffle) {
    Rng rng(subseed(cfg.shuffle_seed,
                    std::string("discovery-shuffle/") + to_string(cfg.kind)));
    rng.shuffle(order);
  }

  const std::size_t k = static_cast<std::size_t>(cfg.chunk_size);
  std::vector<std::vector<Instance>> chunks;
  for (std::size_t begin = 0; begin < order.size(); begin += k) {
    std::vector<Instance> chunk;
    for (std::size_t i = begin; i < std::min(begin + k, order.size()); ++i) {
      chunk.push_back(dataset.instances[order[i]]);
    }
    chunks.push_back(std::move(chunk));
  }

  std::vector<ChatRequest> reqs;
  reqs.reserve(chunks.size());
  for (const auto& chunk : chunks) {
    reqs.push_back(build_discovery_prompt(dataset.task_instruction, chunk, cfg));
  }
  auto batch = gateway.complete_batch(reqs, cfg.parallelism);

  CandidateList out;
  std::unordered_set<std::string> seen;
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    std::vector<std::string> items;
    if (batch[c].ok) items = parse_numbered_list(batch[c].text);
    // Reprompt unparseable chunks with a bumped seed so the requests are
    // distinct cache entries. A chunk whose batch attempt failed at the
    // gateway level is retried through complete(), which rethrows the real
    // gateway error if the failure persists.
    for (int attempt = 1; items.empty() && attempt <= kParseRetries; ++attempt) {
      ChatRequest retry = reqs[c];
      if (!batch[c].ok && attempt == 1) {
        items = parse_numbered_list(gateway.complete(retry));
        if (!items.empty()) break;
      }
      retry.seed = attempt;
      items = parse_numbered_list(gateway.complete(retry));
    }
    if (items.empty()) {
      EvaluatorUnparseableError err(static_cast<int>(c));
      std::cerr << "qualpipe: warning: " << err.what() << "; chunk skipped\n";
      continue;
    }
    for (const auto& item : items) {
      std::string key = normalized_key(item);
      if (seen.insert(key).second) out.names.push_back(item);
    }
  }
  return out;
}

namespace {

// One pruning round: ask the evaluator to keep `keep` of `current`,
// verbatim-match the response, retry on inventions, and repair any
// shortfall from the highest-ranked unused candidates.
std::vector<std::string> prune_round(const std::vector<std::string>& current,
                                     int keep, const DiscoveryConfig& cfg,
                                     LlmGateway& gateway,
                                     const std::string& task_instruction) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < current.size(); ++i) {
    index.emplace(normalized_key(current[i]), i);
  }

  const ChatRequest base =
      build_prune_prompt(task_instruction, current, keep, cfg);
  std::vector<std::size_t> matched;
  for (int attempt = 0; attempt <= kParseRetries; ++attempt) {
    ChatRequest req = base;
    if (attempt > 0) req.seed = attempt;
    auto items = parse_numbered_list(gateway.complete(req));

    matched.clear();
    std::unordered_set<std::size_t> taken;
    std::string invented;
    for (const auto& item : items) {
      auto it = index.find(normalized_key(item));
      if (it == index.end()) {
        if (invented.empty()) invented = item;
        continue;
      }
      if (taken.insert(it->second).second) matched.push_back(it->second);
    }
    if (invented.empty() && matched.size() >= static_cast<std::size_t>(keep)) {
      break;
    }
    if (attempt == kParseRetries) {
      if (!invented.empty()) {
        EvaluatorInventedAttributeError err(invented);
        std::cerr << "qualpipe: warning: " << err.what()
                  << "; replacing with highest-ranked unused candidate\n";
      } else {
        std::cerr << "qualpipe: warning: evaluator kept "
                  << matched.size() << " of " << keep
                  << " requested attributes; filling from candidate order\n";
      }
    }
  }

  // Repair: truncate overshoot, fill shortfall in candidate-rank order.
  if (matched.size() > static_cast<std::size_t>(keep)) {
    matched.resize(static_cast<std::size_t>(keep));
  }
  std::unordered_set<std::size_t> used(matched.begin(), matched.end());
  for (std::size_t i = 0;
       i < current.size() && matched.size() < static_cast<std::size_t>(keep);
       ++i) {
    if (used.insert(i).second) matched.push_back(i);
  }

  std::vector<std::string> next;
  next.reserve(matched.size());
  for (std::size_t i : matched) next.push_back(current[i]);
  return next;
}

}  // namespace

AttributeSet prune_candidates(const CandidateList& cands,
                              const DiscoveryConfig& cfg, LlmGateway& gateway,
                              const std::string& task_instruction) {
  validate_config(cfg);
  if (cands.names.empty()) {
    throw DataError("cannot prune an empty candidate list");
  }

  std::vector<std::string> current = cands.names;
  const std::size_t n = static_cast<std::size_t>(cfg.n_final);
  if (current.size() < n) {
    std::cerr << "qualpipe: warning: only " << current.size()
              << " candidates discovered, fewer than the " << n
              << " requested; keeping all of them\n";
  }
  while (current.size() > n) {
    const std::size_t p = static_cast<std::size_t>(cfg.prune_factor);
    const std::size_t keep = std::max(n, (current.size() + p - 1) / p);
    current = prune_round(current, static_cast<int>(keep), cfg, gateway,
                          task_instruction);
  }

  AttributeSet set;
  set.kind = cfg.kind;
  for (const auto& name : current) {
    set.attributes.push_back(Attribute{name, cfg.kind, 0.0});
  }
  return set;
}

}  // namespace qualpipe
