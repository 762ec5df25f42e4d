#include "qualpipe/config.hpp"

#include <cstdlib>

#include "qualpipe/errors.hpp"
#include "qualpipe/json_io.hpp"
#include "qualpipe/text_util.hpp"

namespace qualpipe {

namespace {

template <typename T>
T get_as(const nlohmann::json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key \"" + key + "\" has the wrong type");
  }
}

}  // namespace

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path.string() +
                      " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) {
    throw ConfigError("config file " + path.string() +
                      " must hold a JSON object");
  }

  for (const auto& [key, value] : doc.items()) {
    if (key == "dataset") {
      cfg.dataset = get_as<std::string>(value, key);
    } else if (key == "out_dir") {
      cfg.out_dir = get_as<std::string>(value, key);
    } else if (key == "attributes") {
      cfg.attributes = get_as<std::string>(value, key);
    } else if (key == "task_instruction") {
      cfg.task_instruction = get_as<std::string>(value, key);
    } else if (key == "mode") {
      cfg.mode = gateway_mode_from_string(get_as<std::string>(value, key));
    } else if (key == "cache_dir") {
      cfg.cache_dir = get_as<std::string>(value, key);
    } else if (key == "base_url") {
      cfg.base_url = get_as<std::string>(value, key);
    } else if (key == "api_key") {
      cfg.api_key = get_as<std::string>(value, key);
    } else if (key == "model") {
      cfg.model = get_as<std::string>(value, key);
    } else if (key == "temperature") {
      cfg.temperature = get_as<double>(value, key);
    } else if (key == "parallelism") {
      cfg.parallelism = get_as<int>(value, key);
    } else if (key == "n_attributes") {
      cfg.n_attributes = get_as<int>(value, key);
    } else if (key == "prune_factor") {
      cfg.prune_factor = get_as<int>(value, key);
    } else if (key == "chunk_size") {
      cfg.chunk_size = get_as<int>(value, key);
    } else if (key == "discovery_shuffle") {
      cfg.discovery_shuffle = get_as<bool>(value, key);
    } else if (key == "epsilon") {
      cfg.epsilon = get_as<double>(value, key);
    } else if (key == "prior_method") {
      cfg.prior_method =
          prior_method_from_string(get_as<std::string>(value, key));
    } else if (key == "metric") {
      cfg.metric = get_as<std::string>(value, key);
    } else if (key == "target") {
      cfg.target = score_target_from_string(get_as<std::string>(value, key));
    } else if (key == "top_k_samples") {
      cfg.top_k_samples = get_as<int>(value, key);
    } else if (key == "insight_split") {
      cfg.insight_split = get_as<bool>(value, key);
    } else if (key == "domains") {
      cfg.domains = get_as<std::vector<std::string>>(value, key);
    } else if (key == "budget") {
      cfg.budget = get_as<int>(value, key);
    } else if (key == "allow_backfill") {
      cfg.allow_backfill = get_as<bool>(value, key);
    } else if (key == "seed") {
      cfg.seed = get_as<std::uint64_t>(value, key);
    } else {
      throw ConfigError("unknown config key \"" + key + "\" in " +
                        path.string());
    }
  }
}

void apply_environment(RunConfig& cfg) {
  if (const char* key = std::getenv("QUALPIPE_API_KEY")) {
    cfg.api_key = key;
  }
}

nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["dataset"] = cfg.dataset.generic_string();
  j["out_dir"] = cfg.out_dir.generic_string();
  j["attributes"] = cfg.attributes.generic_string();
  j["task_instruction"] = cfg.task_instruction;
  j["mode"] = to_string(cfg.mode);
  j["cache_dir"] = cfg.cache_dir.generic_string();
  j["base_url"] = cfg.base_url;
  j["model"] = cfg.model;
  j["temperature"] = cfg.temperature;
  j["parallelism"] = cfg.parallelism;
  j["n_attributes"] = cfg.n_attributes;
  j["prune_factor"] = cfg.prune_factor;
  j["chunk_size"] = cfg.chunk_size;
  j["discovery_shuffle"] = cfg.discovery_shuffle;
  j["epsilon"] = cfg.epsilon;
  j["prior_method"] = to_string(cfg.prior_method);
  j["metric"] = cfg.metric;
  j["target"] = to_string(cfg.target);
  j["top_k_samples"] = cfg.top_k_samples;
  j["insight_split"] = cfg.insight_split;
  j["domains"] = cfg.domains;
  j["budget"] = cfg.budget;
  j["allow_backfill"] = cfg.allow_backfill;
  j["seed"] = cfg.seed;
  return j;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    std::string item = trim(s.substr(pos, comma - pos));
    if (!item.empty()) out.push_back(std::move(item));
    pos = comma + 1;
  }
  return out;
}

}  // namespace qualpipe
