#pragma once

#include <filesystem>
#include <memory>
#include <utility>

#include "qualpipe/config.hpp"
#include "qualpipe/domain.hpp"
#include "qualpipe/gateway.hpp"

namespace qualpipe {

// Locations of the stage artifacts under the output directory.
struct StagePaths {
  std::filesystem::path attributes;
  std::filesystem::path affinity_input;
  std::filesystem::path affinity_reference;
  std::filesystem::path affinity_prediction;
  std::filesystem::path assignments;
  std::filesystem::path metric_scores;
  std::filesystem::path manifest;
};

StagePaths stage_paths(const RunConfig& cfg);

// HTTP transport unless one is injected (tests and the fixture generator
// pass a ScriptedEvaluator).
LlmGateway make_gateway(const RunConfig& cfg,
                        std::shared_ptr<Transport> transport = nullptr);

// Reads and validates the dataset JSONL named by cfg.dataset; attaches
// cfg.task_instruction.
Dataset load_dataset(const RunConfig& cfg);

// Stage bodies shared by the CLI subcommands and `run`. Each writes its
// artifacts atomically and returns what the next stage consumes.
std::pair<AttributeSet, AttributeSet> run_discover(const RunConfig& cfg,
                                                   LlmGateway& gateway,
                                                   const Dataset& dataset);
// Input target scores both attribute kinds; Reference/Prediction score
// sub-tasks only (they exist to measure skill calibration).
void run_score(const RunConfig& cfg, LlmGateway& gateway,
               const Dataset& dataset, ScoreTarget target);
void run_assign(const RunConfig& cfg);
EvalReport run_report(const RunConfig& cfg, LlmGateway& gateway,
                      const Dataset& dataset);
void run_augment(const RunConfig& cfg, const Dataset& dataset);
// discover -> score(input) -> assign -> score(reference) ->
// score(prediction) -> report -> augment (only when targets were given).
void run_all(const RunConfig& cfg, LlmGateway& gateway);

}  // namespace qualpipe
