#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qualpipe/domain.hpp"
#include "qualpipe/gateway.hpp"

namespace qualpipe {

// Which instance text is rated against the attributes. Input drives
// assignment; Reference and Prediction drive skill calibration.
enum class ScoreTarget { Input, Reference, Prediction };

const char* to_string(ScoreTarget target);
ScoreTarget score_target_from_string(const std::string& s);

struct ScoringConfig {
  int parallelism = 4;
  double temperature = 0.9;
  std::string model = "gpt-3.5-turbo";
};

// One parsed (score, evidence) cell; score already clamped to 1..5.
struct ParsedCell {
  int score = 0;
  std::string evidence;
};

// Result of parsing one evaluator response against the attribute list:
// cells aligned to attribute order, unparsed positions empty.
struct ParsedAffinityRow {
  std::vector<std::optional<ParsedCell>> cells;
  // How many scores fell outside 1..5 and were clamped (for warnings).
  int clamped_count = 0;

  std::size_t parsed_count() const {
    std::size_t n = 0;
    for (const auto& c : cells) {
      if (c) ++n;
    }
    return n;
  }
};

// Parses the bracketed scoring format
//   [Domain 1: <name>, Score: <k>, Evidence: <text>] [Domain 2: ...] ...
// Attribute resolution order: exact name match (case/whitespace
// insensitive), then the block's ordinal ("Domain 3" -> column 3), then
// block position. Fractional scores are rounded half-away-from-zero and
// clamped to 1..5. Never throws; unrecoverable text yields an empty row.
ParsedAffinityRow parse_affinity_response(
    const std::string& text, const std::vector<std::string>& attribute_names,
    AttributeKind kind);

// Exposed for tests and the scripted evaluator.
ChatRequest build_scoring_prompt(const std::string& task_instruction,
                                 const AttributeSet& attrs, ScoreTarget target,
                                 const std::string& text,
                                 const ScoringConfig& cfg);

// One prompt per instance rates all attributes at once. Rows that stay
// incomplete after 3 reprompts keep their best parse; remaining cells are
// imputed with the per-attribute median of the parsed scores (imputed flag
// set). Throws NoParsableScoresError if a whole column has no parsed value.
AffinityMatrix score_affinities(const Dataset& dataset,
                                const AttributeSet& attrs, ScoreTarget target,
                                LlmGateway& gateway,
                                const ScoringConfig& cfg = {});

// How attribute priors are derived from the affinity matrix.
//   AffinityMass   p_j ∝ sum_i s_ij          (smooth, never degenerate)
//   ThresholdCount p_j ∝ |{i : s_ij >= 4}|+1 (count of "belonging" instances)
enum class PriorMethod { AffinityMass, ThresholdCount };

const char* to_string(PriorMethod method);
PriorMethod prior_method_from_string(const std::string& s);

// Returns the attribute set with priors filled in; order preserved, priors
// sum to 1 within 1e-9.
AttributeSet compute_priors(const AffinityMatrix& aff,
                            PriorMethod method = PriorMethod::AffinityMass);

}  // namespace qualpipe
