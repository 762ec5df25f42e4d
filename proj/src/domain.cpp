#include "qualpipe/domain.hpp"

#include <unordered_set>

#include "qualpipe/errors.hpp"
#include "qualpipe/text_util.hpp"

namespace qualpipe {

const char* to_string(AttributeKind kind) {
  return kind == AttributeKind::Domain ? "domain" : "subtask";
}

AttributeKind attribute_kind_from_string(const std::string& s) {
  if (s == "domain") return AttributeKind::Domain;
  if (s == "subtask") return AttributeKind::SubTask;
  throw DataError("unknown attribute kind: \"" + s + "\"");
}

std::vector<std::string> AttributeSet::names() const {
  std::vector<std::string> out;
  out.reserve(attributes.size());
  for (const auto& a : attributes) out.push_back(a.name);
  return out;
}

std::vector<double> AttributeSet::priors() const {
  std::vector<double> out;
  out.reserve(attributes.size());
  for (const auto& a : attributes) out.push_back(a.prior);
  return out;
}

std::vector<std::string> AssignmentMatrix::assigned_names(std::size_t i) const {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < cols(); ++j) {
    if (assign[i][j]) out.push_back(attribute_names[j]);
  }
  return out;
}

bool satisfies_assignment_invariants(const AssignmentMatrix& m) {
  const std::size_t n_cols = m.cols();
  if (m.lower.size() != n_cols || m.upper.size() != n_cols) return false;
  std::vector<long long> col_sums(n_cols, 0);
  for (const auto& row : m.assign) {
    if (row.size() != n_cols) return false;
    long long row_sum = 0;
    for (std::size_t j = 0; j < n_cols; ++j) {
      if (row[j] != 0 && row[j] != 1) return false;
      row_sum += row[j];
      col_sums[j] += row[j];
    }
    if (row_sum != 2) return false;
  }
  for (std::size_t j = 0; j < n_cols; ++j) {
    if (col_sums[j] < m.lower[j] || col_sums[j] > m.upper[j]) return false;
  }
  return true;
}

Dataset validate_dataset(const std::vector<RawRecord>& records,
                         std::string task_instruction) {
  Dataset ds;
  ds.task_instruction = std::move(task_instruction);
  ds.instances.reserve(records.size());
  std::unordered_set<std::string> seen;
  for (const auto& rec : records) {
    const auto& j = rec.json;
    for (const char* field : {"id", "input", "reference"}) {
      if (!j.contains(field) || j.at(field).is_null()) {
        throw MissingFieldError(field, rec.line);
      }
    }
    Instance inst;
    inst.id = j.at("id").get<std::string>();
    inst.input = j.at("input").get<std::string>();
    inst.reference = j.at("reference").get<std::string>();
    if (j.contains("prediction") && !j.at("prediction").is_null()) {
      inst.prediction = j.at("prediction").get<std::string>();
    }
    if (j.contains("metadata") && !j.at("metadata").is_null()) {
      inst.metadata =
          j.at("metadata").get<std::map<std::string, std::string>>();
    }
    if (inst.id.empty()) throw MissingFieldError("id", rec.line);
    if (trim(inst.input).empty()) throw EmptyInputError(inst.id);
    if (!seen.insert(inst.id).second) throw DuplicateIdError(inst.id);
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

namespace {
void check_attrs_exist(const std::map<std::string, double>& values,
                       const AttributeSet& set, const char* what) {
  for (const auto& [name, value] : values) {
    if (value < 0.0 || value > 1.0) {
      throw DataError(std::string(what) + " value for \"" + name +
                      "\" outside [0,1]");
    }
    bool found = false;
    for (const auto& a : set.attributes) {
      if (a.name == name) {
        found = true;
        break;
      }
    }
    if (!found) {
      throw DataError(std::string(what) + " references unknown attribute \"" +
                      name + "\"");
    }
  }
}
}  // namespace

void validate_report(const EvalReport& report) {
  check_attrs_exist(report.domain_proficiency, report.domains,
                    "domain proficiency");
  check_attrs_exist(report.subtask_proficiency, report.subtasks,
                    "subtask proficiency");
  check_attrs_exist(report.calibration, report.subtasks, "calibration");
  for (const auto& s : report.qualitative_samples) {
    bool found = false;
    for (const auto& a : report.subtasks.attributes) {
      if (a.name == s.attribute) {
        found = true;
        break;
      }
    }
    if (!found) {
      throw DataError("qualitative sample references unknown attribute \"" +
                      s.attribute + "\"");
    }
  }
}

}  // namespace qualpipe
