#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qualpipe/domain.hpp"

namespace qualpipe {

enum class MetricKind { RougeL, ExactMatch, ExternalCommand };

struct MetricSpec {
  std::string name;
  MetricKind kind = MetricKind::RougeL;
  std::optional<std::string> command;  // ExternalCommand only
};

// Parses "rouge-l", "exact-match", or "external:<shell command>".
MetricSpec metric_spec_from_string(const std::string& s);

// ROUGE-L F1 over lowercased, punctuation-stripped, whitespace-split
// tokens; 0 when either side is empty or the LCS is empty.
double rouge_l(const std::string& reference, const std::string& prediction);

// 1 iff the trimmed, case-folded strings match. Single-letter A-D
// references instead match the first standalone A-D token of the
// prediction (multiple-choice answers buried in prose).
double exact_match(const std::string& reference, const std::string& prediction);

// Runs spec.command through /bin/sh, writes {id, input, reference,
// prediction} as JSON to its stdin, parses one real from its stdout,
// clamped to [0,1]. Throws CommandFailedError / UnparseableScoreError.
double external_metric(const MetricSpec& spec, const Instance& instance);

// Per-instance scores for the whole dataset (every instance needs a
// prediction).
std::vector<MetricScore> compute_metric_scores(const Dataset& dataset,
                                               const MetricSpec& spec);

// Arithmetic mean; throws EmptyScoresError.
double overall_score(const std::vector<MetricScore>& scores);

// Mean metric value over the instances assigned to each attribute.
// Attributes with no assigned instance are absent from the result, not 0.
// Throws MissingScoreError when an assigned instance has no score.
std::map<std::string, double> proficiency_breakdown(
    const std::vector<MetricScore>& scores, const AssignmentMatrix& assign);

// Per-attribute fraction of instances whose two affinity scores differ by
// more than 1; gt is scored on references, pred on predictions. Lower is
// better-calibrated. With exclude_imputed, cells imputed on either side
// leave both numerator and denominator (an attribute whose every cell is
// imputed is then absent from the result). Throws ShapeMismatchError.
std::map<std::string, double> calibration_distance(const AffinityMatrix& gt,
                                                   const AffinityMatrix& pred,
                                                   bool exclude_imputed = false);

}  // namespace qualpipe
