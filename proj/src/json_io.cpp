#include "qualpipe/json_io.hpp"

#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "qualpipe/errors.hpp"

namespace qualpipe {

using nlohmann::json;

void to_json(json& j, const Instance& v) {
  j = json{{"id", v.id},
           {"input", v.input},
           {"reference", v.reference},
           {"metadata", v.metadata}};
  if (v.prediction) {
    j["prediction"] = *v.prediction;
  } else {
    j["prediction"] = nullptr;
  }
}

void from_json(const json& j, Instance& v) {
  v.id = j.at("id").get<std::string>();
  v.input = j.at("input").get<std::string>();
  v.reference = j.at("reference").get<std::string>();
  if (j.contains("prediction") && !j.at("prediction").is_null()) {
    v.prediction = j.at("prediction").get<std::string>();
  } else {
    v.prediction.reset();
  }
  v.metadata.clear();
  if (j.contains("metadata") && !j.at("metadata").is_null()) {
    v.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
  }
}

void to_json(json& j, const Dataset& v) {
  j = json{{"task_instruction", v.task_instruction},
           {"instances", v.instances}};
}

void from_json(const json& j, Dataset& v) {
  v.task_instruction = j.at("task_instruction").get<std::string>();
  v.instances = j.at("instances").get<std::vector<Instance>>();
}

void to_json(json& j, const Attribute& v) {
  j = json{{"name", v.name}, {"kind", to_string(v.kind)}, {"prior", v.prior}};
}

void from_json(const json& j, Attribute& v) {
  v.name = j.at("name").get<std::string>();
  v.kind = attribute_kind_from_string(j.at("kind").get<std::string>());
  v.prior = j.at("prior").get<double>();
}

void to_json(json& j, const AttributeSet& v) {
  j = json{{"kind", to_string(v.kind)}, {"attributes", v.attributes}};
}

void from_json(const json& j, AttributeSet& v) {
  v.kind = attribute_kind_from_string(j.at("kind").get<std::string>());
  v.attributes = j.at("attributes").get<std::vector<Attribute>>();
}

void to_json(json& j, const AffinityMatrix& v) {
  json evidence = json::array();
  for (const auto& row : v.evidence) {
    json jrow = json::array();
    for (const auto& cell : row) {
      if (cell) {
        jrow.push_back(*cell);
      } else {
        jrow.push_back(nullptr);
      }
    }
    evidence.push_back(std::move(jrow));
  }
  j = json{{"kind", to_string(v.kind)},
           {"instance_ids", v.instance_ids},
           {"attribute_names", v.attribute_names},
           {"scores", v.scores},
           {"evidence", std::move(evidence)},
           {"imputed", v.imputed}};
}

void from_json(const json& j, AffinityMatrix& v) {
  v.kind = attribute_kind_from_string(j.at("kind").get<std::string>());
  v.instance_ids = j.at("instance_ids").get<std::vector<std::string>>();
  v.attribute_names = j.at("attribute_names").get<std::vector<std::string>>();
  v.scores = j.at("scores").get<std::vector<std::vector<int>>>();
  v.evidence.clear();
  for (const auto& jrow : j.at("evidence")) {
    std::vector<std::optional<std::string>> row;
    for (const auto& cell : jrow) {
      if (cell.is_null()) {
        row.emplace_back(std::nullopt);
      } else {
        row.emplace_back(cell.get<std::string>());
      }
    }
    v.evidence.push_back(std::move(row));
  }
  v.imputed = j.at("imputed").get<std::vector<std::vector<bool>>>();
}

void to_json(json& j, const AssignmentMatrix& v) {
  j = json{{"kind", to_string(v.kind)},
           {"instance_ids", v.instance_ids},
           {"attribute_names", v.attribute_names},
           {"assign", v.assign},
           {"lower", v.lower},
           {"upper", v.upper},
           {"epsilon_used", v.epsilon_used},
           {"objective", v.objective}};
}

void from_json(const json& j, AssignmentMatrix& v) {
  v.kind = attribute_kind_from_string(j.at("kind").get<std::string>());
  v.instance_ids = j.at("instance_ids").get<std::vector<std::string>>();
  v.attribute_names = j.at("attribute_names").get<std::vector<std::string>>();
  v.assign = j.at("assign").get<std::vector<std::vector<std::uint8_t>>>();
  v.lower = j.at("lower").get<std::vector<long long>>();
  v.upper = j.at("upper").get<std::vector<long long>>();
  v.epsilon_used = j.at("epsilon_used").get<double>();
  v.objective = j.at("objective").get<double>();
}

void to_json(json& j, const MetricScore& v) {
  j = json{{"instance_id", v.instance_id},
           {"metric_name", v.metric_name},
           {"value", v.value}};
}

void from_json(const json& j, MetricScore& v) {
  v.instance_id = j.at("instance_id").get<std::string>();
  v.metric_name = j.at("metric_name").get<std::string>();
  v.value = j.at("value").get<double>();
}

void to_json(json& j, const QualitativeSample& v) {
  j = json{{"instance_id", v.instance_id},
           {"attribute", v.attribute},
           {"gt_score", v.gt_score},
           {"pred_score", v.pred_score}};
}

void from_json(const json& j, QualitativeSample& v) {
  v.instance_id = j.at("instance_id").get<std::string>();
  v.attribute = j.at("attribute").get<std::string>();
  v.gt_score = j.at("gt_score").get<int>();
  v.pred_score = j.at("pred_score").get<int>();
}

void to_json(json& j, const EvalReport& v) {
  j = json{{"domains", v.domains},
           {"subtasks", v.subtasks},
           {"metric_name", v.metric_name},
           {"overall_score", v.overall_score},
           {"domain_proficiency", v.domain_proficiency},
           {"subtask_proficiency", v.subtask_proficiency},
           {"calibration", v.calibration},
           {"calibration_present", v.calibration_present},
           {"insights", v.insights},
           {"qualitative_samples", v.qualitative_samples},
           {"run_config", v.run_config}};
}

void from_json(const json& j, EvalReport& v) {
  v.domains = j.at("domains").get<AttributeSet>();
  v.subtasks = j.at("subtasks").get<AttributeSet>();
  v.metric_name = j.at("metric_name").get<std::string>();
  v.overall_score = j.at("overall_score").get<double>();
  v.domain_proficiency =
      j.at("domain_proficiency").get<std::map<std::string, double>>();
  v.subtask_proficiency =
      j.at("subtask_proficiency").get<std::map<std::string, double>>();
  v.calibration = j.at("calibration").get<std::map<std::string, double>>();
  v.calibration_present = j.at("calibration_present").get<bool>();
  v.insights = j.at("insights").get<std::string>();
  v.qualitative_samples =
      j.at("qualitative_samples").get<std::vector<QualitativeSample>>();
  v.run_config = j.at("run_config");
}

std::vector<RawRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<RawRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // Blank lines are tolerated; anything else must be one JSON object.
    bool blank = true;
    for (char c : line) {
      if (c != ' ' && c != '\t' && c != '\r') {
        blank = false;
        break;
      }
    }
    if (blank) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw DataError("malformed JSONL in " + path.filename().string() +
                      " at line " + std::to_string(line_no));
    }
    out.push_back(RawRecord{std::move(j), line_no});
  }
  return out;
}

void atomic_write_file(const std::filesystem::path& path,
                       const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
  }
  fs::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_attributes_file(const std::filesystem::path& path,
                           const AttributeSet& domains,
                           const AttributeSet& subtasks) {
  json j = json{{"domains", domains.names()}, {"subtasks", subtasks.names()}};
  atomic_write_file(path, j.dump(2) + "\n");
}

std::pair<AttributeSet, AttributeSet> read_attributes_file(
    const std::filesystem::path& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("domains") ||
      !j.contains("subtasks")) {
    throw DataError("malformed attributes file: " + path.string());
  }
  auto build = [](const json& names, AttributeKind kind) {
    AttributeSet set;
    set.kind = kind;
    for (const auto& n : names) {
      set.attributes.push_back(Attribute{n.get<std::string>(), kind, 0.0});
    }
    return set;
  };
  return {build(j.at("domains"), AttributeKind::Domain),
          build(j.at("subtasks"), AttributeKind::SubTask)};
}

std::string affinity_to_jsonl(const AffinityMatrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json ev = json::array();
    for (const auto& cell : m.evidence[i]) {
      if (cell) {
        ev.push_back(*cell);
      } else {
        ev.push_back(nullptr);
      }
    }
    json row = json{{"id", m.instance_ids[i]},
                    {"kind", to_string(m.kind)},
                    {"scores", m.scores[i]},
                    {"evidence", std::move(ev)},
                    {"imputed", m.imputed[i]}};
    out += row.dump();
    out += '\n';
  }
  return out;
}

AffinityMatrix affinity_from_jsonl(
    const std::filesystem::path& path, AttributeKind kind,
    const std::vector<std::string>& attribute_names) {
  AffinityMatrix m;
  m.kind = kind;
  m.attribute_names = attribute_names;
  for (const auto& rec : read_jsonl(path)) {
    const json& j = rec.json;
    try {
      if (attribute_kind_from_string(j.at("kind").get<std::string>()) != kind) {
        continue;
      }
      std::vector<std::optional<std::string>> ev;
      for (const auto& cell : j.at("evidence")) {
        if (cell.is_null()) {
          ev.emplace_back(std::nullopt);
        } else {
          ev.emplace_back(cell.get<std::string>());
        }
      }
      auto scores = j.at("scores").get<std::vector<int>>();
      if (scores.size() != attribute_names.size()) {
        throw DataError("affinity row width mismatch in " +
                        path.filename().string() + " at line " +
                        std::to_string(rec.line));
      }
      for (int s : scores) {
        if (s < 1 || s > 5) {
          throw DataError("affinity score outside 1..5 in " +
                          path.filename().string() + " at line " +
                          std::to_string(rec.line));
        }
      }
      m.instance_ids.push_back(j.at("id").get<std::string>());
      m.scores.push_back(std::move(scores));
      m.evidence.push_back(std::move(ev));
      m.imputed.push_back(j.at("imputed").get<std::vector<bool>>());
    } catch (const json::exception&) {
      throw DataError("malformed affinity row in " + path.filename().string() +
                      " at line " + std::to_string(rec.line));
    }
  }
  return m;
}

std::string assignment_to_jsonl(const AssignmentMatrix& m,
                                const AffinityMatrix& affinity) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json names = json::array();
    json scores = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (m.assign[i][j]) {
        names.push_back(m.attribute_names[j]);
        scores.push_back(affinity.scores[i][j]);
      }
    }
    json row = json{{"id", m.instance_ids[i]},
                    {"kind", to_string(m.kind)},
                    {"attributes", std::move(names)},
                    {"scores", std::move(scores)}};
    out += row.dump();
    out += '\n';
  }
  return out;
}

AssignmentMatrix assignment_from_jsonl(
    const std::filesystem::path& path, AttributeKind kind,
    const std::vector<std::string>& attribute_names) {
  AssignmentMatrix m;
  m.kind = kind;
  m.attribute_names = attribute_names;
  for (const auto& rec : read_jsonl(path)) {
    const json& j = rec.json;
    try {
      if (attribute_kind_from_string(j.at("kind").get<std::string>()) != kind) {
        continue;
      }
      std::vector<std::uint8_t> row(attribute_names.size(), 0);
      for (const auto& name : j.at("attributes")) {
        const std::string attr = name.get<std::string>();
        auto it = std::find(attribute_names.begin(), attribute_names.end(),
                            attr);
        if (it == attribute_names.end()) {
          throw DataError("assignment row names unknown attribute \"" + attr +
                          "\" in " + path.filename().string() + " at line " +
                          std::to_string(rec.line));
        }
        row[static_cast<std::size_t>(it - attribute_names.begin())] = 1;
      }
      m.instance_ids.push_back(j.at("id").get<std::string>());
      m.assign.push_back(std::move(row));
    } catch (const json::exception&) {
      throw DataError("malformed assignment row in " +
                      path.filename().string() + " at line " +
                      std::to_string(rec.line));
    }
  }
  return m;
}

std::string metric_scores_to_jsonl(const std::vector<MetricScore>& scores) {
  std::string out;
  for (const auto& s : scores) {
    out += json(s).dump();
    out += '\n';
  }
  return out;
}

std::vector<MetricScore> metric_scores_from_jsonl(
    const std::filesystem::path& path) {
  std::vector<MetricScore> out;
  for (const auto& rec : read_jsonl(path)) {
    try {
      out.push_back(rec.json.get<MetricScore>());
    } catch (const json::exception&) {
      throw DataError("malformed metric score in " + path.filename().string() +
                      " at line " + std::to_string(rec.line));
    }
  }
  return out;
}

}  // namespace qualpipe
