#include "qualpipe/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <unordered_map>

#include "qualpipe/errors.hpp"
#include "qualpipe/text_util.hpp"

namespace qualpipe {

namespace {

constexpr int kParseRetries = 3;

int round_half_away_from_zero(double x) {
  return x >= 0.0 ? static_cast<int>(std::floor(x + 0.5))
                  : static_cast<int>(std::ceil(x - 0.5));
}

// Finds "<sep> score :" / "<sep> evidence :" (case-insensitive, spaces
// allowed) at or after `from`; returns the key position and sets
// `value_start` to just past the ':'. npos when absent.
std::size_t find_key(const std::string& lower, std::size_t from,
                     const char* key, std::size_t limit,
                     std::size_t* value_start) {
  const std::size_t key_len = std::strlen(key);
  for (std::size_t i = from; i < limit; ++i) {
    if (lower[i] != ',' && lower[i] != ';') continue;
    std::size_t j = i + 1;
    while (j < limit && lower[j] == ' ') ++j;
    if (j + key_len > limit || lower.compare(j, key_len, key) != 0) continue;
    std::size_t k = j + key_len;
    while (k < limit && lower[k] == ' ') ++k;
    if (k >= limit || lower[k] != ':') continue;
    *value_start = k + 1;
    return i;
  }
  return std::string::npos;
}

const char* target_noun(ScoreTarget target) {
  return target == ScoreTarget::Input ? "input" : "output";
}

}  // namespace

const char* to_string(ScoreTarget target) {
  switch (target) {
    case ScoreTarget::Input: return "input";
    case ScoreTarget::Reference: return "reference";
    default: return "prediction";
  }
}

ScoreTarget score_target_from_string(const std::string& s) {
  if (s == "input") return ScoreTarget::Input;
  if (s == "reference") return ScoreTarget::Reference;
  if (s == "prediction") return ScoreTarget::Prediction;
  throw ConfigError("unknown scoring target: \"" + s +
                    "\" (expected input, reference, or prediction)");
}

const char* to_string(PriorMethod method) {
  return method == PriorMethod::AffinityMass ? "affinity-mass"
                                             : "threshold-count";
}

PriorMethod prior_method_from_string(const std::string& s) {
  if (s == "affinity-mass") return PriorMethod::AffinityMass;
  if (s == "threshold-count") return PriorMethod::ThresholdCount;
  throw ConfigError("unknown prior method: \"" + s +
                    "\" (expected affinity-mass or threshold-count)");
}

ParsedAffinityRow parse_affinity_response(
    const std::string& text, const std::vector<std::string>& attribute_names,
    AttributeKind kind) {
  (void)kind;  // both labels are accepted regardless of kind
  ParsedAffinityRow row;
  row.cells.assign(attribute_names.size(), std::nullopt);
  if (attribute_names.empty() || text.empty()) return row;

  std::unordered_map<std::string, std::size_t> by_name;
  for (std::size_t j = 0; j < attribute_names.size(); ++j) {
    by_name.emplace(normalized_key(attribute_names[j]), j);
  }

  const std::string lower = to_lower(text);

  // A block starts at '[' followed by a Domain/Subtask label; it runs to
  // the next block start (evidence text may itself contain brackets).
  static const char* kLabels[] = {"sub-task", "subtask", "domain"};
  std::vector<std::pair<std::size_t, std::size_t>> blocks;  // ('[', past-label)
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (lower[i] != '[') continue;
    std::size_t j = i + 1;
    while (j < lower.size() && lower[j] == ' ') ++j;
    for (const char* label : kLabels) {
      const std::size_t len = std::strlen(label);
      if (lower.compare(j, len, label) == 0) {
        blocks.emplace_back(i, j + len);
        break;
      }
    }
  }

  std::size_t position = 0;  // index among successfully parsed blocks
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    std::size_t end = (b + 1 < blocks.size()) ? blocks[b + 1].first : text.size();
    while (end > blocks[b].second &&
           (std::isspace(static_cast<unsigned char>(text[end - 1])) != 0)) {
      --end;
    }
    if (end > blocks[b].second && text[end - 1] == ']') --end;

    // Optional ordinal, then ':' introducing the attribute name.
    std::size_t pos = blocks[b].second;
    while (pos < end && lower[pos] == ' ') ++pos;
    long ordinal = -1;
    std::size_t digits = pos;
    while (digits < end && lower[digits] >= '0' && lower[digits] <= '9') {
      ++digits;
    }
    if (digits > pos) ordinal = std::strtol(lower.c_str() + pos, nullptr, 10);
    pos = digits;
    while (pos < end && lower[pos] == ' ') ++pos;
    if (pos >= end || lower[pos] != ':') continue;
    const std::size_t name_start = pos + 1;

    std::size_t score_start = 0;
    const std::size_t score_key =
        find_key(lower, name_start, "score", end, &score_start);
    if (score_key == std::string::npos) continue;

    std::size_t evidence_start = 0;
    const std::size_t evidence_key =
        find_key(lower, score_start, "evidence", end, &evidence_start);
    const std::size_t score_end =
        (evidence_key == std::string::npos) ? end : evidence_key;

    const std::string score_text =
        trim(std::string_view(text).substr(score_start, score_end - score_start));
    char* parse_end = nullptr;
    const double value = std::strtod(score_text.c_str(), &parse_end);
    if (parse_end == score_text.c_str()) continue;

    const std::string name =
        trim(std::string_view(text).substr(name_start, score_key - name_start));
    std::string evidence;
    if (evidence_key != std::string::npos) {
      evidence = trim(
          std::string_view(text).substr(evidence_start, end - evidence_start));
    }

    // Resolve the target column: name, then ordinal, then block position.
    std::size_t col = attribute_names.size();
    auto it = by_name.find(normalized_key(name));
    if (it != by_name.end()) {
      col = it->second;
    } else if (ordinal >= 1 &&
               ordinal <= static_cast<long>(attribute_names.size())) {
      col = static_cast<std::size_t>(ordinal - 1);
    } else if (position < attribute_names.size()) {
      col = position;
    }
    ++position;
    if (col >= attribute_names.size()) continue;

    const int rounded = round_half_away_from_zero(value);
    const int clamped = std::clamp(rounded, 1, 5);
    if (clamped != rounded) ++row.clamped_count;
    if (!row.cells[col]) row.cells[col] = ParsedCell{clamped, evidence};
  }
  return row;
}

ChatRequest build_scoring_prompt(const std::string& task_instruction,
                                 const AttributeSet& attrs, ScoreTarget target,
                                 const std::string& text,
                                 const ScoringConfig& cfg) {
  const char* noun = target_noun(target);
  const char* preposition = target == ScoreTarget::Input ? "input to" : "output of";
  std::string prompt;
  if (attrs.kind == AttributeKind::Domain) {
    prompt += std::string("Given the ") + preposition +
              " a language model, rate to what degree the " + noun +
              " belongs to each of the following domains. Rate on a scale of "
              "1-5, with 5 being completely belongs and 1 being not belonging "
              "at all. For each domain, format the output as [Domain 1: "
              "<domain>, Score: <score>, Evidence: <evidence for score>] "
              "[Domain 2: <domain>, Score: <score>, Evidence: <evidence for "
              "score>] ... [Domain N: <domain>, Score: <score>, Evidence: "
              "<evidence for score>]. Do not add newlines between domain, "
              "score, and evidence. Make sure to include concrete evidence "
              "based on the " +
              noun +
              " to justify the score. Remember you are an accurate, faithful, "
              "critical, and fair judge.";
  } else {
    prompt += std::string("Given the ") + preposition +
              " a language model, rate to what degree each of the following "
              "sub-tasks is needed to successfully understand and complete "
              "the task. Rate on a scale of 1-5, with 5 being very used and 1 "
              "being not used at all. For each sub-task, format the output as "
              "[Subtask 1: <sub-task>, Score: <score>, Evidence: <evidence "
              "for score>] [Subtask 2: <sub-task>, Score: <score>, Evidence: "
              "<evidence for score>] ... [Subtask N: <sub-task>, Score: "
              "<score>, Evidence: <evidence for score>]. Do not add newlines "
              "between sub-task, score, and evidence. Make sure to include "
              "concrete evidence based on the " +
              noun +
              " to justify the score. Remember you are an accurate, faithful, "
              "critical, and fair judge.";
  }
  if (!task_instruction.empty()) {
    prompt += "\n\nTask instruction: " + task_instruction;
  }
  prompt += attrs.kind == AttributeKind::Domain ? "\n\nDomains:\n" : "\n\nSubtasks:\n";
  const auto names = attrs.names();
  for (std::size_t j = 0; j < names.size(); ++j) {
    prompt += std::to_string(j + 1) + ". " + names[j] + "\n";
  }
  prompt += target == ScoreTarget::Input ? "\nInput:\n" : "\nOutput:\n";
  prompt += text;

  ChatRequest req;
  req.prompt = std::move(prompt);
  req.temperature = cfg.temperature;
  req.model = cfg.model;
  return req;
}

AffinityMatrix score_affinities(const Dataset& dataset,
                                const AttributeSet& attrs, ScoreTarget target,
                                LlmGateway& gateway, const ScoringConfig& cfg) {
  if (attrs.size() < 1) {
    throw ConfigError("scoring requires at least one attribute");
  }
  if (cfg.parallelism < 1) throw ConfigError("parallelism must be >= 1");

  std::vector<ChatRequest> reqs;
  reqs.reserve(dataset.size());
  for (const auto& inst : dataset.instances) {
    const std::string* text = &inst.input;
    if (target == ScoreTarget::Reference) text = &inst.reference;
    if (target == ScoreTarget::Prediction) {
      if (!inst.prediction) {
        throw DataError("instance \"" + inst.id +
                        "\" has no prediction to score");
      }
      text = &*inst.prediction;
    }
    reqs.push_back(build_scoring_prompt(dataset.task_instruction, attrs,
                                        target, *text, cfg));
  }

  auto batch = gateway.complete_batch(reqs, cfg.parallelism);

  const std::size_t n_attrs = attrs.size();
  const auto names = attrs.names();
  std::vector<ParsedAffinityRow> rows(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    ParsedAffinityRow best;
    if (batch[i].ok) {
      best = parse_affinity_response(batch[i].text, names, attrs.kind);
    } else {
      // Redo a failed batch item through complete(): a persistent gateway
      // failure rethrows its typed error instead of silently imputing.
      best = parse_affinity_response(gateway.complete(reqs[i]), names,
                                     attrs.kind);
    }
    for (int attempt = 1;
         best.parsed_count() < n_attrs && attempt <= kParseRetries; ++attempt) {
      ChatRequest retry = reqs[i];
      retry.seed = attempt;
      auto candidate =
          parse_affinity_response(gateway.complete(retry), names, attrs.kind);
      if (candidate.parsed_count() > best.parsed_count()) {
        best = std::move(candidate);
      }
    }
    if (best.clamped_count > 0) {
      std::cerr << "qualpipe: warning: " << best.clamped_count
                << " score(s) outside 1..5 clamped for instance \""
                << dataset.instances[i].id << "\"\n";
    }
    if (best.parsed_count() < n_attrs) {
      std::cerr << "qualpipe: warning: instance \"" << dataset.instances[i].id
                << "\" kept " << best.parsed_count() << "/" << n_attrs
                << " parsed scores after retries; missing cells imputed\n";
    }
    rows[i] = std::move(best);
  }

  // Per-attribute medians of parsed values, for imputation.
  std::vector<int> medians(n_attrs, 0);
  for (std::size_t j = 0; j < n_attrs; ++j) {
    std::vector<int> parsed;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].cells[j]) parsed.push_back(rows[i].cells[j]->score);
    }
    if (parsed.empty()) throw NoParsableScoresError(names[j]);
    std::sort(parsed.begin(), parsed.end());
    const std::size_t mid = parsed.size() / 2;
    if (parsed.size() % 2 == 1) {
      medians[j] = parsed[mid];
    } else {
      medians[j] = round_half_away_from_zero(
          (parsed[mid - 1] + parsed[mid]) / 2.0);
    }
  }

  AffinityMatrix out;
  out.kind = attrs.kind;
  out.attribute_names = names;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.instance_ids.push_back(dataset.instances[i].id);
    std::vector<int> scores(n_attrs);
    std::vector<std::optional<std::string>> evidence(n_attrs);
    std::vector<bool> imputed(n_attrs, false);
    for (std::size_t j = 0; j < n_attrs; ++j) {
      if (rows[i].cells[j]) {
        scores[j] = rows[i].cells[j]->score;
        evidence[j] = rows[i].cells[j]->evidence;
      } else {
        scores[j] = medians[j];
        imputed[j] = true;
      }
    }
    out.scores.push_back(std::move(scores));
    out.evidence.push_back(std::move(evidence));
    out.imputed.push_back(std::move(imputed));
  }
  return out;
}

AttributeSet compute_priors(const AffinityMatrix& aff, PriorMethod method) {
  if (aff.rows() == 0 || aff.cols() == 0) {
    throw DataError("cannot compute priors from an empty affinity matrix");
  }
  const std::size_t n_attrs = aff.cols();
  std::vector<double> weight(n_attrs, 0.0);
  for (std::size_t j = 0; j < n_attrs; ++j) {
    if (method == PriorMethod::AffinityMass) {
      long long sum = 0;
      for (std::size_t i = 0; i < aff.rows(); ++i) sum += aff.scores[i][j];
      weight[j] = static_cast<double>(sum);
    } else {
      long long count = 0;
      for (std::size_t i = 0; i < aff.rows(); ++i) {
        if (aff.scores[i][j] >= 4) ++count;
      }
      weight[j] = static_cast<double>(count + 1);  // add-one smoothing
    }
  }
  double total = 0.0;
  for (double w : weight) total += w;

  AttributeSet out;
  out.kind = aff.kind;
  for (std::size_t j = 0; j < n_attrs; ++j) {
    out.attributes.push_back(
        Attribute{aff.attribute_names[j], aff.kind, weight[j] / total});
  }
  return out;
}

}  // namespace qualpipe
