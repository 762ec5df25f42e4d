#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qualpipe/gateway.hpp"
#include "qualpipe/metrics.hpp"
#include "qualpipe/scoring.hpp"

namespace qualpipe {

// Every tunable of the pipeline, resolved through the layering
// defaults < config file < environment < command-line flags.
struct RunConfig {
  // Files.
  std::filesystem::path dataset;
  std::filesystem::path out_dir = "qualpipe-out";
  // Attributes file location; empty means <out_dir>/attributes.json.
  std::filesystem::path attributes;
  std::string task_instruction;

  // Evaluator gateway.
  GatewayMode mode = GatewayMode::Cached;
  std::filesystem::path cache_dir = ".qualpipe-cache";
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;  // never serialized
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.9;
  int parallelism = 4;

  // Discovery.
  int n_attributes = 15;
  int prune_factor = 4;
  int chunk_size = 5;
  bool discovery_shuffle = false;

  // Assignment.
  double epsilon = 0.1;
  PriorMethod prior_method = PriorMethod::AffinityMass;

  // Metrics / report.
  std::string metric = "rouge-l";
  ScoreTarget target = ScoreTarget::Input;
  int top_k_samples = 10;
  bool insight_split = false;

  // Augmentation.
  std::vector<std::string> domains;
  int budget = 250;
  bool allow_backfill = false;

  // All stage randomness fans out from this seed with labeled sub-seeds.
  std::uint64_t seed = 0;
};

// Applies a JSON config document onto cfg. Unknown keys and wrong value
// types throw ConfigError naming the key.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

// Applies QUALPIPE_API_KEY when set.
void apply_environment(RunConfig& cfg);

// The resolved configuration as JSON for the report appendix; excludes the
// API key.
nlohmann::json config_to_json(const RunConfig& cfg);

// Splits a comma-separated flag value into trimmed, non-empty items.
std::vector<std::string> split_csv(const std::string& s);

}  // namespace qualpipe
