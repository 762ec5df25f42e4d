#pragma once

#include <map>
#include <string>
#include <vector>

#include "qualpipe/domain.hpp"
#include "qualpipe/gateway.hpp"

namespace qualpipe {

// Whether one insight prompt covers both attribute kinds (default) or a
// prompt is built per kind.
enum class InsightScope { Combined, DomainsOnly, SubTasksOnly };

struct InsightConfig {
  InsightScope scope = InsightScope::Combined;
  double temperature = 0.9;
  std::string model = "gpt-3.5-turbo";
};

// Canonical JSON for a name -> value map: sorted keys, fixed 4-decimal
// values, so identical inputs produce byte-identical prompts on every
// platform.
std::string canonical_score_json(const std::map<std::string, double>& values);

// Builds the summary prompt: system preamble, task instruction, attribute
// lists, then importance (prior), proficiency, and calibration-distance
// blocks as canonical JSON. An empty calibration map is replaced by an
// explanatory line.
ChatRequest build_insight_prompt(
    const std::string& task_instruction, const AttributeSet& domains,
    const AttributeSet& subtasks,
    const std::map<std::string, double>& domain_proficiency,
    const std::map<std::string, double>& subtask_proficiency,
    const std::map<std::string, double>& calibration,
    const InsightConfig& cfg = {});

// Returns the evaluator's summary verbatim apart from a whitespace trim.
// Throws EmptyInsightError on an empty response.
std::string generate_insights(const ChatRequest& req, LlmGateway& gateway);

// The most misaligned (instance, attribute) cells: ranked by
// |gt - pred| descending, ties by (instance index, attribute index), at
// most one cell per instance (its largest gap). Throws ShapeMismatchError.
std::vector<QualitativeSample> extract_qualitative_samples(
    const AffinityMatrix& gt, const AffinityMatrix& pred, int top_k);

}  // namespace qualpipe
