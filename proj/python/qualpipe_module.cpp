#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qualpipe/discovery.hpp"
#include "qualpipe/domain.hpp"
#include "qualpipe/metrics.hpp"
#include "qualpipe/report.hpp"
#include "qualpipe/scoring.hpp"
#include "qualpipe/solver.hpp"

namespace py = pybind11;

namespace {

using qualpipe::AffinityMatrix;
using qualpipe::AttributeKind;
using qualpipe::AttributeSet;

// Wraps a raw score matrix in the full affinity type with synthetic ids.
AffinityMatrix make_affinity(const std::vector<std::vector<int>>& scores,
                             std::vector<std::string> names) {
  AffinityMatrix m;
  m.kind = AttributeKind::Domain;
  if (names.empty() && !scores.empty()) {
    for (std::size_t j = 0; j < scores[0].size(); ++j) {
      names.push_back("attr-" + std::to_string(j + 1));
    }
  }
  m.attribute_names = std::move(names);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    m.instance_ids.push_back("row-" + std::to_string(i + 1));
    m.scores.push_back(scores[i]);
    m.evidence.emplace_back(scores[i].size());
    m.imputed.emplace_back(scores[i].size(), false);
  }
  return m;
}

AttributeSet make_attribute_set(const std::vector<double>& priors) {
  AttributeSet set;
  set.kind = AttributeKind::Domain;
  for (std::size_t j = 0; j < priors.size(); ++j) {
    set.attributes.push_back(qualpipe::Attribute{
        "attr-" + std::to_string(j + 1), AttributeKind::Domain, priors[j]});
  }
  return set;
}

py::dict assignment_to_dict(const qualpipe::AssignmentMatrix& m) {
  std::vector<std::vector<int>> assign;
  assign.reserve(m.rows());
  for (const auto& row : m.assign) {
    assign.emplace_back(row.begin(), row.end());
  }
  py::dict out;
  out["assign"] = assign;
  out["lower"] = m.lower;
  out["upper"] = m.upper;
  out["epsilon_used"] = m.epsilon_used;
  out["objective"] = m.objective;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() =
      "Core operations of the qualitative LLM-evaluation pipeline: "
      "ROUGE-L / exact-match metrics, attribute priors, the exact "
      "2-attributes-per-instance assignment solver, calibration distances, "
      "and the SVG bar-chart renderer.";

  mod.attr("__version__") = "1.0.0";

  mod.def("rouge_l", &qualpipe::rouge_l, py::arg("reference"),
          py::arg("prediction"),
          "ROUGE-L F1 over normalized whitespace tokens.");
  mod.def("exact_match", &qualpipe::exact_match, py::arg("reference"),
          py::arg("prediction"),
          "1.0 iff the trimmed, case-folded strings match (multiple-choice "
          "A-D references match the prediction's first A-D token).");

  mod.def(
      "compute_priors",
      [](const std::vector<std::vector<int>>& scores,
         std::vector<std::string> names, const std::string& method) {
        AttributeSet set = qualpipe::compute_priors(
            make_affinity(scores, std::move(names)),
            qualpipe::prior_method_from_string(method));
        std::map<std::string, double> out;
        for (const auto& a : set.attributes) out[a.name] = a.prior;
        return out;
      },
      py::arg("scores"), py::arg("names") = std::vector<std::string>{},
      py::arg("method") = "affinity-mass",
      "Attribute priors from a 1-5 affinity score matrix.");

  mod.def(
      "compute_bounds",
      [](const std::vector<double>& priors, std::size_t n_instances,
         double epsilon) {
        qualpipe::LpBounds b = qualpipe::compute_bounds(
            make_attribute_set(priors), n_instances, epsilon);
        py::dict out;
        out["lower"] = b.lower;
        out["upper"] = b.upper;
        out["epsilon_used"] = b.epsilon;
        return out;
      },
      py::arg("priors"), py::arg("n_instances"), py::arg("epsilon"),
      "Column bounds floor(2*n*p*(1-eps)) / ceil(2*n*p*(1+eps)), widened "
      "if necessary until an assignment exists.");

  mod.def(
      "solve_assignment",
      [](const std::vector<std::vector<int>>& scores,
         const std::vector<double>& priors, double epsilon) {
        AffinityMatrix aff = make_affinity(scores, {});
        qualpipe::LpBounds b = qualpipe::compute_bounds(
            make_attribute_set(priors), aff.rows(), epsilon);
        return assignment_to_dict(qualpipe::solve_assignment(aff, b));
      },
      py::arg("scores"), py::arg("priors"), py::arg("epsilon"),
      "Exact maximizer assigning each row 2 attributes under the "
      "prior-proportional column bounds.");

  mod.def(
      "brute_force_assignment",
      [](const std::vector<std::vector<int>>& scores,
         const std::vector<double>& priors, double epsilon) {
        AffinityMatrix aff = make_affinity(scores, {});
        qualpipe::LpBounds b = qualpipe::compute_bounds(
            make_attribute_set(priors), aff.rows(), epsilon);
        return assignment_to_dict(qualpipe::brute_force_assignment(aff, b));
      },
      py::arg("scores"), py::arg("priors"), py::arg("epsilon"),
      "Enumeration oracle for solve_assignment (small inputs only).");

  mod.def(
      "calibration_distance",
      [](const std::vector<std::vector<int>>& gt,
         const std::vector<std::vector<int>>& pred,
         std::vector<std::string> names) {
        return qualpipe::calibration_distance(make_affinity(gt, names),
                                              make_affinity(pred, names));
      },
      py::arg("gt"), py::arg("pred"),
      py::arg("names") = std::vector<std::string>{},
      "Per-attribute fraction of rows whose scores differ by more than 1.");

  mod.def("parse_numbered_list", &qualpipe::parse_numbered_list,
          py::arg("text"), "Items of a '1. ...' / '2) ...' list.");

  mod.def(
      "render_bar_chart",
      [](const std::vector<std::string>& labels,
         const std::vector<double>& values, const std::string& title,
         bool percent) {
        qualpipe::BarChartOptions opts;
        opts.percent = percent;
        return qualpipe::render_bar_chart(labels, values, title, opts);
      },
      py::arg("labels"), py::arg("values"), py::arg("title"),
      py::arg("percent") = false,
      "Self-contained SVG horizontal bar chart, bars sorted descending.");
}
