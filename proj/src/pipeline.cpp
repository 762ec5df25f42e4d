#include "qualpipe/pipeline.hpp"

#include <utility>

#include "qualpipe/augment.hpp"
#include "qualpipe/discovery.hpp"
#include "qualpipe/errors.hpp"
#include "qualpipe/insights.hpp"
#include "qualpipe/json_io.hpp"
#include "qualpipe/metrics.hpp"
#include "qualpipe/report.hpp"
#include "qualpipe/rng.hpp"
#include "qualpipe/scoring.hpp"
#include "qualpipe/solver.hpp"

namespace qualpipe {

namespace {

namespace fs = std::filesystem;

void require_artifact(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) {
    throw DataError("missing artifact " + path.string() + "; run `" +
                    producer + "` first");
  }
}

AttributeSet with_priors(const AffinityMatrix& aff, const RunConfig& cfg) {
  return compute_priors(aff, cfg.prior_method);
}

DiscoveryConfig discovery_config(const RunConfig& cfg, AttributeKind kind) {
  DiscoveryConfig dc;
  dc.n_final = cfg.n_attributes;
  dc.prune_factor = cfg.prune_factor;
  dc.chunk_size = cfg.chunk_size;
  dc.kind = kind;
  dc.shuffle = cfg.discovery_shuffle;
  dc.shuffle_seed = cfg.seed;
  dc.parallelism = cfg.parallelism;
  dc.temperature = cfg.temperature;
  dc.model = cfg.model;
  return dc;
}

ScoringConfig scoring_config(const RunConfig& cfg) {
  ScoringConfig sc;
  sc.parallelism = cfg.parallelism;
  sc.temperature = cfg.temperature;
  sc.model = cfg.model;
  return sc;
}

nlohmann::json bounds_to_json(const LpBounds& bounds, double objective) {
  nlohmann::json j;
  j["lower"] = bounds.lower;
  j["upper"] = bounds.upper;
  j["epsilon_used"] = bounds.epsilon;
  j["objective"] = objective;
  return j;
}

double assignment_objective(const AssignmentMatrix& asn,
                            const AffinityMatrix& aff) {
  double total = 0.0;
  for (std::size_t i = 0; i < asn.rows(); ++i) {
    for (std::size_t j = 0; j < asn.cols(); ++j) {
      if (asn.assign[i][j]) total += aff.scores[i][j];
    }
  }
  return total;
}

}  // namespace

StagePaths stage_paths(const RunConfig& cfg) {
  StagePaths p;
  p.attributes = cfg.attributes.empty() ? cfg.out_dir / "attributes.json"
                                        : cfg.attributes;
  p.affinity_input = cfg.out_dir / "affinity_input.jsonl";
  p.affinity_reference = cfg.out_dir / "affinity_reference.jsonl";
  p.affinity_prediction = cfg.out_dir / "affinity_prediction.jsonl";
  p.assignments = cfg.out_dir / "assignments.jsonl";
  p.metric_scores = cfg.out_dir / "metric_scores.jsonl";
  p.manifest = cfg.out_dir / "manifest.jsonl";
  return p;
}

LlmGateway make_gateway(const RunConfig& cfg,
                        std::shared_ptr<Transport> transport) {
  GatewayConfig gc;
  gc.mode = cfg.mode;
  gc.cache_dir = cfg.cache_dir;
  gc.retry.jitter_seed = subseed(cfg.seed, "gateway-jitter");
  if (!transport) {
    transport = std::make_shared<HttpTransport>(cfg.base_url, cfg.api_key);
  }
  return LlmGateway(std::move(gc), std::move(transport));
}

Dataset load_dataset(const RunConfig& cfg) {
  if (cfg.dataset.empty()) {
    throw ConfigError("no dataset given; pass --dataset <file>");
  }
  if (!fs::exists(cfg.dataset)) {
    throw ConfigError("dataset file " + cfg.dataset.string() +
                      " does not exist; check --dataset");
  }
  return validate_dataset(read_jsonl(cfg.dataset), cfg.task_instruction);
}

std::pair<AttributeSet, AttributeSet> run_discover(const RunConfig& cfg,
                                                   LlmGateway& gateway,
                                                   const Dataset& dataset) {
  const StagePaths paths = stage_paths(cfg);

  auto discover_kind = [&](AttributeKind kind) {
    const DiscoveryConfig dc = discovery_config(cfg, kind);
    CandidateList cands = propose_candidates(dataset, dc, gateway);
    return prune_candidates(cands, dc, gateway, dataset.task_instruction);
  };

  AttributeSet domains = discover_kind(AttributeKind::Domain);
  AttributeSet subtasks = discover_kind(AttributeKind::SubTask);
  write_attributes_file(paths.attributes, domains, subtasks);
  return {std::move(domains), std::move(subtasks)};
}

void run_score(const RunConfig& cfg, LlmGateway& gateway,
               const Dataset& dataset, ScoreTarget target) {
  const StagePaths paths = stage_paths(cfg);
  require_artifact(paths.attributes, "qualpipe discover");
  auto [domains, subtasks] = read_attributes_file(paths.attributes);
  const ScoringConfig sc = scoring_config(cfg);

  if (target == ScoreTarget::Input) {
    AffinityMatrix dom =
        score_affinities(dataset, domains, target, gateway, sc);
    AffinityMatrix sub =
        score_affinities(dataset, subtasks, target, gateway, sc);
    atomic_write_file(paths.affinity_input,
                      affinity_to_jsonl(dom) + affinity_to_jsonl(sub));
    return;
  }
  AffinityMatrix sub = score_affinities(dataset, subtasks, target, gateway, sc);
  atomic_write_file(target == ScoreTarget::Reference
                        ? paths.affinity_reference
                        : paths.affinity_prediction,
                    affinity_to_jsonl(sub));
}

void run_assign(const RunConfig& cfg) {
  const StagePaths paths = stage_paths(cfg);
  require_artifact(paths.attributes, "qualpipe discover");
  require_artifact(paths.affinity_input, "qualpipe score --target input");
  auto [domains, subtasks] = read_attributes_file(paths.attributes);

  std::string out;
  for (const AttributeSet* attrs : {&domains, &subtasks}) {
    AffinityMatrix aff = affinity_from_jsonl(paths.affinity_input,
                                             attrs->kind, attrs->names());
    if (aff.rows() == 0) {
      throw DataError(std::string("no ") + to_string(attrs->kind) +
                      " affinity rows in " + paths.affinity_input.string());
    }
    AttributeSet priors = with_priors(aff, cfg);
    LpBounds bounds = compute_bounds(priors, aff.rows(), cfg.epsilon);
    AssignmentMatrix solved = solve_assignment(aff, bounds);
    out += assignment_to_jsonl(solved, aff);
  }
  atomic_write_file(paths.assignments, out);
}

EvalReport run_report(const RunConfig& cfg, LlmGateway& gateway,
                      const Dataset& dataset) {
  const StagePaths paths = stage_paths(cfg);
  require_artifact(paths.attributes, "qualpipe discover");
  require_artifact(paths.affinity_input, "qualpipe score --target input");
  require_artifact(paths.assignments, "qualpipe assign");
  auto [domains, subtasks] = read_attributes_file(paths.attributes);

  EvalReport report;
  nlohmann::json bounds_json = nlohmann::json::object();

  std::map<AttributeKind, AssignmentMatrix> assignment;
  for (AttributeSet* attrs : {&domains, &subtasks}) {
    AffinityMatrix aff = affinity_from_jsonl(paths.affinity_input,
                                             attrs->kind, attrs->names());
    if (aff.rows() == 0) {
      throw DataError(std::string("no ") + to_string(attrs->kind) +
                      " affinity rows in " + paths.affinity_input.string());
    }
    *attrs = with_priors(aff, cfg);
    AssignmentMatrix asn = assignment_from_jsonl(paths.assignments,
                                                 attrs->kind, attrs->names());
    if (asn.rows() == 0) {
      throw DataError(std::string("no ") + to_string(attrs->kind) +
                      " assignment rows in " + paths.assignments.string());
    }
    // Bounds are a pure function of priors + epsilon; recompute them for
    // the run-config appendix rather than persisting them separately.
    LpBounds bounds = compute_bounds(*attrs, asn.rows(), cfg.epsilon);
    asn.lower = bounds.lower;
    asn.upper = bounds.upper;
    asn.epsilon_used = bounds.epsilon;
    asn.objective = assignment_objective(asn, aff);
    bounds_json[to_string(attrs->kind)] =
        bounds_to_json(bounds, asn.objective);
    assignment.emplace(attrs->kind, std::move(asn));
  }

  const MetricSpec spec = metric_spec_from_string(cfg.metric);
  const std::vector<MetricScore> scores = compute_metric_scores(dataset, spec);
  atomic_write_file(paths.metric_scores, metric_scores_to_jsonl(scores));

  report.domains = domains;
  report.subtasks = subtasks;
  report.metric_name = spec.name;
  report.overall_score = overall_score(scores);
  report.domain_proficiency =
      proficiency_breakdown(scores, assignment.at(AttributeKind::Domain));
  report.subtask_proficiency =
      proficiency_breakdown(scores, assignment.at(AttributeKind::SubTask));

  if (fs::exists(paths.affinity_reference) &&
      fs::exists(paths.affinity_prediction)) {
    AffinityMatrix gt = affinity_from_jsonl(
        paths.affinity_reference, AttributeKind::SubTask, subtasks.names());
    AffinityMatrix pred = affinity_from_jsonl(
        paths.affinity_prediction, AttributeKind::SubTask, subtasks.names());
    report.calibration = calibration_distance(gt, pred);
    report.calibration_present = true;
    report.qualitative_samples =
        extract_qualitative_samples(gt, pred, cfg.top_k_samples);
  }

  InsightConfig ic;
  ic.temperature = cfg.temperature;
  ic.model = cfg.model;
  if (cfg.insight_split) {
    ic.scope = InsightScope::DomainsOnly;
    std::string dom_text = generate_insights(
        build_insight_prompt(cfg.task_instruction, domains, subtasks,
                             report.domain_proficiency,
                             report.subtask_proficiency, report.calibration,
                             ic),
        gateway);
    ic.scope = InsightScope::SubTasksOnly;
    std::string sub_text = generate_insights(
        build_insight_prompt(cfg.task_instruction, domains, subtasks,
                             report.domain_proficiency,
                             report.subtask_proficiency, report.calibration,
                             ic),
        gateway);
    report.insights = dom_text + "\n\n" + sub_text;
  } else {
    report.insights = generate_insights(
        build_insight_prompt(cfg.task_instruction, domains, subtasks,
                             report.domain_proficiency,
                             report.subtask_proficiency, report.calibration,
                             ic),
        gateway);
  }

  report.run_config = config_to_json(cfg);
  report.run_config["bounds"] = std::move(bounds_json);

  validate_report(report);
  write_report_files(cfg.out_dir, report);
  return report;
}

void run_augment(const RunConfig& cfg, const Dataset& dataset) {
  const StagePaths paths = stage_paths(cfg);
  if (cfg.domains.empty()) {
    throw ConfigError("no augmentation targets given; pass --domains");
  }
  require_artifact(paths.attributes, "qualpipe discover");
  require_artifact(paths.assignments, "qualpipe assign");
  auto [domains, subtasks] = read_attributes_file(paths.attributes);
  (void)subtasks;
  AssignmentMatrix asn = assignment_from_jsonl(paths.assignments,
                                               AttributeKind::Domain,
                                               domains.names());

  std::vector<std::string> pool;
  pool.reserve(dataset.size());
  for (const auto& inst : dataset.instances) pool.push_back(inst.id);

  std::vector<AugmentPick> targeted = select_augmentation(
      asn, pool, cfg.domains, cfg.budget, cfg.seed, cfg.allow_backfill);
  std::vector<std::string> baseline =
      select_random_baseline(pool, cfg.budget, cfg.seed);
  write_augmentation_manifest(paths.manifest, targeted, baseline);
}

void run_all(const RunConfig& cfg, LlmGateway& gateway) {
  Dataset dataset = load_dataset(cfg);
  run_discover(cfg, gateway, dataset);
  run_score(cfg, gateway, dataset, ScoreTarget::Input);
  run_assign(cfg);
  run_score(cfg, gateway, dataset, ScoreTarget::Reference);
  run_score(cfg, gateway, dataset, ScoreTarget::Prediction);
  run_report(cfg, gateway, dataset);
  if (!cfg.domains.empty()) {
    run_augment(cfg, dataset);
  }
}

}  // namespace qualpipe
