#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qualpipe/domain.hpp"
#include "qualpipe/gateway.hpp"

namespace qualpipe {

// Attribute discovery: chunked prompting over the dataset produces a large
// candidate list, then iterative pruning by `prune_factor` reduces it to
// exactly `n_final` attributes.
struct DiscoveryConfig {
  int n_final = 15;      // N, attributes kept per kind
  int prune_factor = 4;  // p, per-round reduction factor
  int chunk_size = 5;    // k, instances per discovery prompt
  AttributeKind kind = AttributeKind::Domain;
  // Discovery prompts show (input, reference) pairs by default; inputs only
  // when false.
  bool include_reference = true;
  // Chunking is contiguous in dataset order so replay needs no RNG; a
  // seeded shuffle pre-pass is available for datasets with ordered bias.
  bool shuffle = false;
  std::uint64_t shuffle_seed = 0;
  int parallelism = 4;
  double temperature = 0.9;
  std::string model = "gpt-3.5-turbo";
};

// Raw attribute candidates in discovery order, deduplicated
// case-insensitively after whitespace normalization.
struct CandidateList {
  std::vector<std::string> names;
};

// Parses "1. item" / "2) item" lines; strips a leading "Domain:" or
// "Subtask:" label from each item. Returns items in order, unparseable
// lines skipped.
std::vector<std::string> parse_numbered_list(const std::string& text);

// Prompt builders, exposed so tests can pin the exact texts.
ChatRequest build_discovery_prompt(const std::string& task_instruction,
                                   const std::vector<Instance>& examples,
                                   const DiscoveryConfig& cfg);
ChatRequest build_prune_prompt(const std::string& task_instruction,
                               const std::vector<std::string>& names,
                               int keep, const DiscoveryConfig& cfg);

// One discovery prompt per contiguous chunk of `chunk_size` instances;
// responses parsed as numbered lists, normalized, deduplicated, and
// concatenated in chunk order. A chunk that stays unparseable after 3
// reprompts is skipped with a warning.
CandidateList propose_candidates(const Dataset& dataset,
                                 const DiscoveryConfig& cfg,
                                 LlmGateway& gateway);

// Prunes to exactly n_final attributes: each round keeps
// max(n_final, ceil(size / prune_factor)) of the current list, selected by
// the evaluator and verbatim-matched against it. Evaluator items that match
// nothing are retried up to 3 times, then replaced by the highest-ranked
// unused candidates. Fewer than n_final candidates are returned as-is with
// a warning. Priors are left unset.
AttributeSet prune_candidates(const CandidateList& cands,
                              const DiscoveryConfig& cfg, LlmGateway& gateway,
                              const std::string& task_instruction = "");

}  // namespace qualpipe
