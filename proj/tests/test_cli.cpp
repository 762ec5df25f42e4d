#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qualpipe/cli.hpp"
#include "qualpipe/config.hpp"
#include "qualpipe/domain.hpp"
#include "qualpipe/json_io.hpp"

using namespace qualpipe;
namespace fs = std::filesystem;

namespace {

constexpr const char* kToyConfig = "data/toy/config.json";

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

// Runs the CLI in-process with captured stdout/stderr; argv[0] is implied.
CliResult run_args(std::vector<std::string> args) {
  std::vector<std::string> full;
  full.emplace_back("qualpipe");
  for (auto& a : args) full.push_back(std::move(a));
  std::vector<char*> argv;
  argv.reserve(full.size());
  for (auto& s : full) argv.push_back(s.data());

  std::ostringstream out;
  std::ostringstream err;
  std::streambuf* old_out = std::cout.rdbuf(out.rdbuf());
  std::streambuf* old_err = std::cerr.rdbuf(err.rdbuf());
  CliResult result;
  result.code = run_cli(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  result.out = out.str();
  result.err = err.str();
  return result;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "qualpipe-cli-test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::size_t count_lines(const std::string& text) {
  std::size_t lines = 0;
  for (char c : text) {
    if (c == '\n') ++lines;
  }
  return lines;
}

const char* kArtifacts[] = {
    "attributes.json",        "affinity_input.jsonl",
    "affinity_reference.jsonl", "affinity_prediction.jsonl",
    "assignments.jsonl",      "metric_scores.jsonl",
    "report.json",            "dashboard.html",
    "insights.txt"};

}  // namespace

TEST_CASE("help exits cleanly; bad invocations exit with the config code") {
  CHECK(run_args({"--help"}).code == 0);
  CHECK(run_args({"score", "--help"}).code == 0);

  CliResult bare = run_args({});
  CHECK(bare.code == 2);
  CHECK(bare.out.find("Qualitative LLM evaluation pipeline") !=
        std::string::npos);

  CHECK(run_args({"frobnicate"}).code == 2);
  CHECK(run_args({"discover", "--bogus-flag"}).code == 2);
  CHECK(run_args({"discover", "--mode", "warp"}).code == 2);
}

TEST_CASE("configuration errors carry the stage prefix and exact cause") {
  const fs::path out = fresh_dir("config-errors");

  CliResult no_dataset = run_args({"discover", "--out-dir", out.string(),
                                   "--mode", "replay", "--cache-dir",
                                   "data/toy/cache"});
  CHECK(no_dataset.code == 2);
  CHECK(no_dataset.err.find("qualpipe: discover: error: no dataset given; "
                            "pass --dataset <file>") != std::string::npos);

  CliResult missing = run_args({"discover", "--dataset",
                                (out / "nope.jsonl").string(), "--mode",
                                "replay", "--out-dir", out.string()});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("does not exist; check --dataset") !=
        std::string::npos);

  const fs::path bad_json = out / "bad.json";
  atomic_write_file(bad_json, "{not json");
  CliResult unparseable = run_args({"run", "--config", bad_json.string()});
  CHECK(unparseable.code == 2);
  CHECK(unparseable.err.find("is not valid JSON") != std::string::npos);

  const fs::path bad_key = out / "bad_key.json";
  atomic_write_file(bad_key, "{\"epsilonn\": 0.1}");
  CliResult unknown_key = run_args({"run", "--config", bad_key.string()});
  CHECK(unknown_key.code == 2);
  CHECK(unknown_key.err.find("unknown config key \"epsilonn\"") !=
        std::string::npos);
}

TEST_CASE("the environment layers between the config file and flags") {
  const fs::path dir = fresh_dir("layering");
  const fs::path cfg_file = dir / "config.json";
  atomic_write_file(cfg_file,
                    "{\"api_key\": \"from-file\", \"model\": \"file-model\"}");

  RunConfig cfg;
  apply_config_file(cfg, cfg_file);
  CHECK(cfg.api_key == "from-file");
  CHECK(cfg.model == "file-model");

  setenv("QUALPIPE_API_KEY", "from-env", 1);
  apply_environment(cfg);
  unsetenv("QUALPIPE_API_KEY");
  CHECK(cfg.api_key == "from-env");
  CHECK(cfg.model == "file-model");

  // The serialized run configuration never leaks the key.
  CHECK_FALSE(config_to_json(cfg).contains("api_key"));
}

TEST_CASE("the toy fixture replays end to end into a fresh directory") {
  const fs::path out = fresh_dir("full-run");
  CliResult r = run_args({"run", "--config", kToyConfig, "--out-dir",
                          out.string()});
  CHECK(r.code == 0);
  INFO(r.err);
  for (const char* name : kArtifacts) {
    CHECK(fs::exists(out / name));
  }
  CHECK_FALSE(fs::exists(out / "manifest.jsonl"));  // no targets requested

  nlohmann::json report = nlohmann::json::parse(read_file(out / "report.json"));
  // The --out-dir flag overrode the config file; the rest came from the file.
  CHECK(report["run_config"]["out_dir"] == out.generic_string());
  CHECK(report["run_config"]["model"] == "gpt-3.5-turbo");
  CHECK(report["run_config"]["seed"] == 7);
  CHECK(report["metric_name"] == "rouge-l");
  CHECK(report["overall_score"].get<double>() >= 0.0);
  CHECK(report["overall_score"].get<double>() <= 1.0);
  CHECK(report["calibration_present"] == true);
  CHECK(read_file(out / "dashboard.html").find("<svg ") != std::string::npos);
}

TEST_CASE("running the stages one by one matches the single run command") {
  const fs::path all = fresh_dir("staged-all");
  REQUIRE(run_args({"run", "--config", kToyConfig, "--out-dir", all.string()})
              .code == 0);

  const fs::path staged = fresh_dir("staged-steps");
  auto stage = [&](std::vector<std::string> extra) {
    std::vector<std::string> args = std::move(extra);
    args.insert(args.end(), {"--config", kToyConfig, "--out-dir",
                             staged.string()});
    return run_args(std::move(args)).code;
  };
  REQUIRE(stage({"discover"}) == 0);
  REQUIRE(stage({"score", "--target", "input"}) == 0);
  REQUIRE(stage({"assign"}) == 0);
  REQUIRE(stage({"score", "--target", "reference"}) == 0);
  REQUIRE(stage({"score", "--target", "prediction"}) == 0);
  REQUIRE(stage({"report"}) == 0);

  for (const char* name : {"attributes.json", "affinity_input.jsonl",
                           "affinity_reference.jsonl",
                           "affinity_prediction.jsonl", "assignments.jsonl",
                           "metric_scores.jsonl", "insights.txt"}) {
    CAPTURE(name);
    CHECK(read_file(all / name) == read_file(staged / name));
  }

  // report.json differs only in the embedded output paths.
  nlohmann::json a = nlohmann::json::parse(read_file(all / "report.json"));
  nlohmann::json b = nlohmann::json::parse(read_file(staged / "report.json"));
  a.erase("run_config");
  b.erase("run_config");
  CHECK(a == b);

  // Re-running the report stage over the same artifacts is idempotent.
  const std::string report_before = read_file(staged / "report.json");
  const std::string dash_before = read_file(staged / "dashboard.html");
  REQUIRE(stage({"report"}) == 0);
  CHECK(read_file(staged / "report.json") == report_before);
  CHECK(read_file(staged / "dashboard.html") == dash_before);
}

TEST_CASE("a replay miss exits with the evaluator code") {
  const fs::path out = fresh_dir("replay-miss");
  const fs::path empty_cache = fresh_dir("replay-miss-cache");
  CliResult r = run_args({"discover", "--config", kToyConfig, "--out-dir",
                          out.string(), "--cache-dir", empty_cache.string()});
  CHECK(r.code == 3);
  CHECK(r.err.find("qualpipe: discover: error:") != std::string::npos);
}

TEST_CASE("stages refuse to run before their inputs exist") {
  const fs::path out = fresh_dir("no-artifacts");
  CliResult r = run_args({"report", "--config", kToyConfig, "--out-dir",
                          out.string()});
  CHECK(r.code == 4);
  CHECK(r.err.find("missing artifact") != std::string::npos);
  CHECK(r.err.find("qualpipe discover") != std::string::npos);

  CHECK(run_args({"assign", "--out-dir", out.string()}).code == 4);
}

TEST_CASE("a corrupted artifact names its line in the data error") {
  const fs::path out = fresh_dir("corrupt");
  AttributeSet domains{AttributeKind::Domain,
                       {{"Alpha", AttributeKind::Domain, 0.0},
                        {"Beta", AttributeKind::Domain, 0.0}}};
  AttributeSet subtasks{AttributeKind::SubTask,
                        {{"Parse", AttributeKind::SubTask, 0.0},
                         {"Emit", AttributeKind::SubTask, 0.0}}};
  write_attributes_file(out / "attributes.json", domains, subtasks);

  AffinityMatrix row;
  row.kind = AttributeKind::Domain;
  row.instance_ids = {"r1"};
  row.attribute_names = domains.names();
  row.scores = {{4, 2}};
  row.evidence = {{std::nullopt, std::nullopt}};
  row.imputed = {{false, false}};
  atomic_write_file(out / "affinity_input.jsonl",
                    affinity_to_jsonl(row) + "{broken\n");

  CliResult r = run_args({"assign", "--out-dir", out.string()});
  CHECK(r.code == 4);
  CHECK(r.err.find("line 2") != std::string::npos);
}

TEST_CASE("an unsolvable assignment exits with the infeasible code") {
  // Two domains whose affinity mass splits 5:1. With only two columns every
  // instance must use both, but the minority column bound stays below the
  // row count at every slack the widening ladder can offer.
  const fs::path out = fresh_dir("infeasible");
  AttributeSet domains{AttributeKind::Domain,
                       {{"Wide", AttributeKind::Domain, 0.0},
                        {"Narrow", AttributeKind::Domain, 0.0}}};
  AttributeSet subtasks{AttributeKind::SubTask,
                        {{"Parse", AttributeKind::SubTask, 0.0},
                         {"Emit", AttributeKind::SubTask, 0.0}}};
  write_attributes_file(out / "attributes.json", domains, subtasks);

  AffinityMatrix aff;
  aff.kind = AttributeKind::Domain;
  aff.attribute_names = domains.names();
  for (int i = 0; i < 6; ++i) {
    aff.instance_ids.push_back("r" + std::to_string(i + 1));
    aff.scores.push_back({5, 1});
    aff.evidence.push_back({std::nullopt, std::nullopt});
    aff.imputed.push_back({false, false});
  }
  atomic_write_file(out / "affinity_input.jsonl", affinity_to_jsonl(aff));

  CliResult r = run_args({"assign", "--out-dir", out.string(), "--epsilon",
                          "0.1"});
  CHECK(r.code == 5);
  CHECK(r.err.find("qualpipe: assign: error:") != std::string::npos);
}

TEST_CASE("augment writes a reproducible manifest for chosen targets") {
  const fs::path out = fresh_dir("augment");
  REQUIRE(run_args({"run", "--config", kToyConfig, "--out-dir", out.string()})
              .code == 0);

  CliResult no_targets = run_args({"augment", "--config", kToyConfig,
                                   "--out-dir", out.string()});
  CHECK(no_targets.code == 2);
  CHECK(no_targets.err.find("no augmentation targets given; pass --domains") !=
        std::string::npos);

  // Pick the domain with the most assigned instances so a budget of 2 is
  // always satisfiable.
  auto [domains, subtasks] = read_attributes_file(out / "attributes.json");
  (void)subtasks;
  AssignmentMatrix asn = assignment_from_jsonl(
      out / "assignments.jsonl", AttributeKind::Domain, domains.names());
  REQUIRE(asn.rows() == 20);
  std::size_t best = 0;
  long long best_count = -1;
  for (std::size_t j = 0; j < asn.cols(); ++j) {
    long long count = 0;
    for (std::size_t i = 0; i < asn.rows(); ++i) count += asn.assign[i][j];
    if (count > best_count) {
      best_count = count;
      best = j;
    }
  }
  REQUIRE(best_count >= 2);
  const std::string target = asn.attribute_names[best];

  auto augment = [&] {
    return run_args({"augment", "--config", kToyConfig, "--out-dir",
                     out.string(), "--domains", target, "--budget", "2",
                     "--seed", "11"});
  };
  REQUIRE(augment().code == 0);
  const std::string manifest = read_file(out / "manifest.jsonl");
  CHECK(count_lines(manifest) == 4);

  std::istringstream lines(manifest);
  std::string line;
  int targeted = 0;
  int baseline = 0;
  while (std::getline(lines, line)) {
    nlohmann::json row = nlohmann::json::parse(line);
    if (row["source"] == "targeted") {
      ++targeted;
      CHECK(row["domain"] == target);
    } else {
      CHECK(row["source"] == "baseline");
      ++baseline;
    }
  }
  CHECK(targeted == 2);
  CHECK(baseline == 2);

  REQUIRE(augment().code == 0);
  CHECK(read_file(out / "manifest.jsonl") == manifest);
}
