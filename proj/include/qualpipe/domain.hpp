#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace qualpipe {

// One dataset record: the model input, the ground-truth output, and
// (optionally) the prediction of the model under evaluation.
struct Instance {
  std::string id;
  std::string input;
  std::string reference;
  std::optional<std::string> prediction;
  std::map<std::string, std::string> metadata;

  bool operator==(const Instance&) const = default;
};

struct Dataset {
  std::vector<Instance> instances;
  std::string task_instruction;

  std::size_t size() const { return instances.size(); }
  bool operator==(const Dataset&) const = default;
};

enum class AttributeKind { Domain, SubTask };

const char* to_string(AttributeKind kind);
AttributeKind attribute_kind_from_string(const std::string& s);

// A discovered domain or sub-task, with its prior probability once priors
// have been computed (0 until then).
struct Attribute {
  std::string name;
  AttributeKind kind = AttributeKind::Domain;
  double prior = 0.0;

  bool operator==(const Attribute&) const = default;
};

struct AttributeSet {
  AttributeKind kind = AttributeKind::Domain;
  std::vector<Attribute> attributes;

  std::size_t size() const { return attributes.size(); }
  std::vector<std::string> names() const;
  std::vector<double> priors() const;
  bool operator==(const AttributeSet&) const = default;
};

// Per-(instance, attribute) affinity on the 1-5 scale, with the evaluator's
// evidence strings. imputed[i][j] marks cells filled by the imputation rule
// rather than parsed from evaluator output.
struct AffinityMatrix {
  AttributeKind kind = AttributeKind::Domain;
  std::vector<std::string> instance_ids;
  std::vector<std::string> attribute_names;
  std::vector<std::vector<int>> scores;
  std::vector<std::vector<std::optional<std::string>>> evidence;
  std::vector<std::vector<bool>> imputed;

  std::size_t rows() const { return scores.size(); }
  std::size_t cols() const { return attribute_names.size(); }
  bool operator==(const AffinityMatrix&) const = default;
};

// Binary instance x attribute matrix produced by the assignment solver,
// together with the column bounds it was solved under.
struct AssignmentMatrix {
  AttributeKind kind = AttributeKind::Domain;
  std::vector<std::string> instance_ids;
  std::vector<std::string> attribute_names;
  std::vector<std::vector<std::uint8_t>> assign;
  std::vector<long long> lower;  // L_j, rounded slack bounds
  std::vector<long long> upper;  // U_j
  double epsilon_used = 0.0;
  double objective = 0.0;

  std::size_t rows() const { return assign.size(); }
  std::size_t cols() const { return attribute_names.size(); }
  // Attribute names assigned to row i, in column order.
  std::vector<std::string> assigned_names(std::size_t i) const;
  bool operator==(const AssignmentMatrix&) const = default;
};

// Pure structural check, usable without any solver: every row sums to
// exactly 2 and every column sum lies within [lower_j, upper_j].
bool satisfies_assignment_invariants(const AssignmentMatrix& m);

struct MetricScore {
  std::string instance_id;
  std::string metric_name;
  double value = 0.0;

  bool operator==(const MetricScore&) const = default;
};

struct QualitativeSample {
  std::string instance_id;
  std::string attribute;
  int gt_score = 0;
  int pred_score = 0;

  bool operator==(const QualitativeSample&) const = default;
};

// Everything the dashboard renders: priors, per-attribute proficiency,
// calibration distances, insight text, qualitative samples, and the full
// resolved configuration of the run.
struct EvalReport {
  AttributeSet domains;
  AttributeSet subtasks;
  std::string metric_name;
  double overall_score = 0.0;
  std::map<std::string, double> domain_proficiency;
  std::map<std::string, double> subtask_proficiency;
  std::map<std::string, double> calibration;
  bool calibration_present = false;
  std::string insights;
  std::vector<QualitativeSample> qualitative_samples;
  nlohmann::json run_config = nlohmann::json::object();

  bool operator==(const EvalReport&) const = default;
};

// Checks that every attribute referenced by proficiency, calibration, or
// qualitative samples exists in the report's attribute sets and that all
// proficiency/calibration values are in [0,1]. Throws DataError.
void validate_report(const EvalReport& report);

// Raw ingestion record: one parsed JSONL object plus its 1-based line
// number for error messages.
struct RawRecord {
  nlohmann::json json;
  int line = 0;
};

// Enforces the Dataset invariants over parsed records, preserving order.
// Throws DuplicateIdError / EmptyInputError / MissingFieldError.
Dataset validate_dataset(const std::vector<RawRecord>& records,
                         std::string task_instruction = "");

}  // namespace qualpipe
