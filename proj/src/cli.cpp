#include "qualpipe/cli.hpp"

#include <exception>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qualpipe/config.hpp"
#include "qualpipe/errors.hpp"
#include "qualpipe/pipeline.hpp"

namespace qualpipe {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitEvaluator = 3;
constexpr int kExitData = 4;
constexpr int kExitInfeasible = 5;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const InfeasibleError*>(&e)) return kExitInfeasible;
  if (dynamic_cast<const UpstreamError*>(&e) ||
      dynamic_cast<const RateLimitedError*>(&e) ||
      dynamic_cast<const ReplayMissError*>(&e) ||
      dynamic_cast<const EvaluatorUnparseableError*>(&e) ||
      dynamic_cast<const EvaluatorInventedAttributeError*>(&e) ||
      dynamic_cast<const NoParsableScoresError*>(&e) ||
      dynamic_cast<const EmptyInsightError*>(&e)) {
    return kExitEvaluator;
  }
  if (dynamic_cast<const Error*>(&e)) return kExitData;
  return 1;
}

// Raw string holders for flags whose value needs parsing into an enum/list;
// empty string means "flag not given, keep the layered value".
struct FlagStrings {
  std::string mode;
  std::string target;
  std::string prior_method;
  std::string domains;
};

void add_common_options(CLI::App* cmd, RunConfig& cfg, FlagStrings& raw,
                        std::string& config_path) {
  cmd->add_option("--config", config_path,
                  "JSON config file (applied before flags)");
  cmd->add_option("--dataset", cfg.dataset, "Dataset JSONL file");
  cmd->add_option("--attributes", cfg.attributes,
                  "Attributes file (default <out-dir>/attributes.json)");
  cmd->add_option("--out-dir", cfg.out_dir, "Artifact directory");
  cmd->add_option("--mode", raw.mode, "Gateway mode: live, cached, replay");
  cmd->add_option("--cache-dir", cfg.cache_dir, "Evaluator response cache");
  cmd->add_option("--base-url", cfg.base_url,
                  "OpenAI-compatible API base URL");
  cmd->add_option("--model", cfg.model, "Evaluator model name");
  cmd->add_option("--temperature", cfg.temperature, "Evaluator temperature");
  cmd->add_option("--epsilon", cfg.epsilon, "Column-bound slack epsilon");
  cmd->add_option("--n-attributes", cfg.n_attributes,
                  "Attributes kept per kind (N)");
  cmd->add_option("--prune-factor", cfg.prune_factor,
                  "Per-round pruning factor (p)");
  cmd->add_option("--chunk-size", cfg.chunk_size,
                  "Instances per discovery prompt (k)");
  cmd->add_option("--metric", cfg.metric,
                  "rouge-l, exact-match, or external:<command>");
  cmd->add_option("--prior-method", raw.prior_method,
                  "affinity-mass or threshold-count");
  cmd->add_option("--seed", cfg.seed, "Top-level random seed");
  cmd->add_option("--parallelism", cfg.parallelism,
                  "Max in-flight evaluator calls");
  cmd->add_option("--target", raw.target,
                  "Scoring target: input, reference, prediction");
  cmd->add_option("--task-instruction", cfg.task_instruction,
                  "Task instruction shown to the evaluator");
  cmd->add_option("--domains", raw.domains,
                  "Comma-separated augmentation target domains");
  cmd->add_option("--budget", cfg.budget, "Augmentation budget");
  cmd->add_flag("--allow-backfill", cfg.allow_backfill,
                "Backfill augmentation shortfalls from other targets");
  cmd->add_option("--top-k-samples", cfg.top_k_samples,
                  "Qualitative samples in the dashboard");
  cmd->add_flag("--insight-split", cfg.insight_split,
                "Separate insight calls per attribute kind");
}

void resolve_flag_strings(RunConfig& cfg, const FlagStrings& raw) {
  if (!raw.mode.empty()) cfg.mode = gateway_mode_from_string(raw.mode);
  if (!raw.target.empty()) cfg.target = score_target_from_string(raw.target);
  if (!raw.prior_method.empty()) {
    cfg.prior_method = prior_method_from_string(raw.prior_method);
  }
  if (!raw.domains.empty()) cfg.domains = split_csv(raw.domains);
}

// The config file named anywhere on the command line is applied before
// CLI11 parsing so that flags override it.
std::string prescan_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return "";
}

int run_stage(const std::string& stage, const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "qualpipe: " << stage << ": error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace

int run_cli(int argc, char** argv) {
  RunConfig cfg;
  const std::string config_path = prescan_config_path(argc, argv);
  try {
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    apply_environment(cfg);
  } catch (const std::exception& e) {
    std::cerr << "qualpipe: error: " << e.what() << "\n";
    return kExitConfig;
  }

  CLI::App app{"Qualitative LLM evaluation pipeline"};
  app.require_subcommand(0, 1);
  FlagStrings raw;
  std::string config_path_sink = config_path;

  CLI::App* discover = app.add_subcommand(
      "discover", "Discover domain and sub-task attributes");
  CLI::App* score = app.add_subcommand(
      "score", "Score instance/attribute affinities (per --target)");
  CLI::App* assign = app.add_subcommand(
      "assign", "Assign 2 attributes per instance under column bounds");
  CLI::App* report = app.add_subcommand(
      "report", "Compute metrics + insights and render the dashboard");
  CLI::App* augment = app.add_subcommand(
      "augment", "Select targeted + baseline augmentation sets");
  CLI::App* run = app.add_subcommand("run", "All stages in sequence");
  for (CLI::App* cmd : {discover, score, assign, report, augment, run}) {
    add_common_options(cmd, cfg, raw, config_path_sink);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    resolve_flag_strings(cfg, raw);
  } catch (const std::exception& e) {
    std::cerr << "qualpipe: error: " << e.what() << "\n";
    return kExitConfig;
  }

  if (discover->parsed()) {
    return run_stage("discover", [&] {
      Dataset dataset = load_dataset(cfg);
      LlmGateway gateway = make_gateway(cfg);
      run_discover(cfg, gateway, dataset);
    });
  }
  if (score->parsed()) {
    return run_stage("score", [&] {
      Dataset dataset = load_dataset(cfg);
      LlmGateway gateway = make_gateway(cfg);
      run_score(cfg, gateway, dataset, cfg.target);
    });
  }
  if (assign->parsed()) {
    return run_stage("assign", [&] { run_assign(cfg); });
  }
  if (report->parsed()) {
    return run_stage("report", [&] {
      Dataset dataset = load_dataset(cfg);
      LlmGateway gateway = make_gateway(cfg);
      run_report(cfg, gateway, dataset);
    });
  }
  if (augment->parsed()) {
    return run_stage("augment", [&] {
      Dataset dataset = load_dataset(cfg);
      run_augment(cfg, dataset);
    });
  }
  if (run->parsed()) {
    return run_stage("run", [&] {
      LlmGateway gateway = make_gateway(cfg);
      run_all(cfg, gateway);
    });
  }

  std::cout << app.help();
  return kExitConfig;
}

}  // namespace qualpipe
