#include "qualpipe/insights.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "qualpipe/errors.hpp"
#include "qualpipe/text_util.hpp"

namespace qualpipe {

namespace {

constexpr const char* kSystemPreamble =
    "Given a holistic picture of the performance of a machine learning "
    "model, you are asked to summarize the model's overall performance.";

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += ", ";
    out += names[i];
  }
  return out;
}

std::map<std::string, double> prior_map(const AttributeSet& set) {
  std::map<std::string, double> out;
  for (const auto& attr : set.attributes) out.emplace(attr.name, attr.prior);
  return out;
}

void merge_into(std::map<std::string, double>& dst,
                const std::map<std::string, double>& src) {
  for (const auto& [k, v] : src) dst.emplace(k, v);
}

}  // namespace

std::string canonical_score_json(const std::map<std::string, double>& values) {
  std::string out = "{";
  bool first = true;
  for (const auto& [key, value] : values) {
    if (!first) out += ", ";
    first = false;
    out += nlohmann::json(key).dump();
    out += ": ";
    out += format_fixed(value, 4);
  }
  out += "}";
  return out;
}

ChatRequest build_insight_prompt(
    const std::string& task_instruction, const AttributeSet& domains,
    const AttributeSet& subtasks,
    const std::map<std::string, double>& domain_proficiency,
    const std::map<std::string, double>& subtask_proficiency,
    const std::map<std::string, double>& calibration,
    const InsightConfig& cfg) {
  const bool use_domains = cfg.scope != InsightScope::SubTasksOnly;
  const bool use_subtasks = cfg.scope != InsightScope::DomainsOnly;

  std::map<std::string, double> priors;
  std::map<std::string, double> proficiency;
  if (use_domains) {
    merge_into(priors, prior_map(domains));
    merge_into(proficiency, domain_proficiency);
  }
  if (use_subtasks) {
    merge_into(priors, prior_map(subtasks));
    merge_into(proficiency, subtask_proficiency);
  }

  std::string noun;
  if (use_domains && use_subtasks) {
    noun = "domains and sub-tasks";
  } else if (use_domains) {
    noun = "domains";
  } else {
    noun = "sub-tasks";
  }

  std::ostringstream prompt;
  prompt << "Given the following information, please write a brief summary "
            "highlighting important information. Please be precise and "
            "concise but please be comprehensive.\n\n";
  prompt << "A machine learning model is tasked with the following task: "
         << task_instruction << "\n\n";
  if (use_domains) {
    prompt << "These are the domains for the task: "
           << join_names(domains.names()) << "\n\n";
  }
  if (use_subtasks) {
    prompt << "These are the sub-tasks for the task: "
           << join_names(subtasks.names()) << "\n\n";
  }
  prompt << "In the evaluation data, these are the importance scores of the "
         << noun << ": " << canonical_score_json(priors) << "\n\n";
  prompt << "The following scores show how well the model performs on the "
         << noun << ": " << canonical_score_json(proficiency) << "\n\n";
  if (calibration.empty()) {
    prompt << "No skill-calibration distances are available for this run "
              "because model outputs were not scored against references.";
  } else {
    prompt << "The following distances demonstrate how much each sub-task "
              "is actually used for generating the output when it is "
              "required by the input: "
           << canonical_score_json(calibration)
           << ". A lower distance implies that the model leverages the "
              "sub-task when it needs to be used.";
  }

  ChatRequest req;
  req.system = kSystemPreamble;
  req.prompt = prompt.str();
  req.temperature = cfg.temperature;
  req.model = cfg.model;
  return req;
}

std::string generate_insights(const ChatRequest& req, LlmGateway& gateway) {
  std::string text = trim(gateway.complete(req));
  if (text.empty()) {
    throw EmptyInsightError();
  }
  return text;
}

std::vector<QualitativeSample> extract_qualitative_samples(
    const AffinityMatrix& gt, const AffinityMatrix& pred, int top_k) {
  if (top_k < 1) {
    throw ConfigError("qualitative sample count must be at least 1");
  }
  if (gt.rows() != pred.rows() || gt.attribute_names != pred.attribute_names ||
      gt.instance_ids != pred.instance_ids) {
    throw ShapeMismatchError(
        "ground-truth and prediction affinity matrices do not align");
  }
  const std::size_t rows = gt.rows();
  const std::size_t cols = gt.cols();

  struct Cell {
    int gap;
    std::size_t row;
    std::size_t col;
  };
  std::vector<Cell> best_per_row;
  best_per_row.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    if (gt.scores[i].size() != cols || pred.scores[i].size() != cols) {
      throw ShapeMismatchError("affinity matrix row width mismatch");
    }
    if (cols == 0) continue;
    Cell best{-1, i, 0};
    for (std::size_t j = 0; j < cols; ++j) {
      const int gap = std::abs(gt.scores[i][j] - pred.scores[i][j]);
      if (gap > best.gap) best = Cell{gap, i, j};
    }
    best_per_row.push_back(best);
  }

  std::stable_sort(best_per_row.begin(), best_per_row.end(),
                   [](const Cell& a, const Cell& b) {
                     if (a.gap != b.gap) return a.gap > b.gap;
                     if (a.row != b.row) return a.row < b.row;
                     return a.col < b.col;
                   });

  std::vector<QualitativeSample> out;
  const std::size_t limit =
      std::min<std::size_t>(best_per_row.size(), static_cast<std::size_t>(top_k));
  out.reserve(limit);
  for (std::size_t k = 0; k < limit; ++k) {
    const Cell& cell = best_per_row[k];
    QualitativeSample sample;
    sample.instance_id = gt.instance_ids[cell.row];
    sample.attribute = gt.attribute_names[cell.col];
    sample.gt_score = gt.scores[cell.row][cell.col];
    sample.pred_score = pred.scores[cell.row][cell.col];
    out.push_back(std::move(sample));
  }
  return out;
}

}  // namespace qualpipe
