#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qualpipe/errors.hpp"
#include "qualpipe/json_io.hpp"
#include "qualpipe/report.hpp"

using namespace qualpipe;
namespace fs = std::filesystem;

namespace {

std::size_t count_occurrences(const std::string& haystack,
                              const std::string& needle) {
  std::size_t count = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

AttributeSet attrs_with_priors(
    const std::vector<std::pair<std::string, double>>& items,
    AttributeKind kind) {
  AttributeSet set;
  set.kind = kind;
  for (const auto& [name, prior] : items) {
    set.attributes.push_back(Attribute{name, kind, prior});
  }
  return set;
}

EvalReport sample_report(bool with_calibration) {
  EvalReport r;
  r.metric_name = "rouge-l";
  r.overall_score = 0.45;
  r.domains = attrs_with_priors({{"Sorting", 0.6}, {"Geometry", 0.4}},
                                AttributeKind::Domain);
  r.subtasks = attrs_with_priors({{"Parse", 0.7}, {"Emit", 0.3}},
                                 AttributeKind::SubTask);
  r.domain_proficiency = {{"Sorting", 0.5}, {"Geometry", 0.25}};
  r.subtask_proficiency = {{"Parse", 0.4}, {"Emit", 0.6}};
  if (with_calibration) {
    r.calibration_present = true;
    r.calibration = {{"Parse", 1.0 / 3.0}, {"Emit", 0.0}};
  }
  r.insights = "The model handles <Sorting> & friends unevenly.";
  r.qualitative_samples = {{"r1", "Parse", 5, 1}, {"r2", "Emit", 2, 4}};
  r.run_config = {{"seed", 7}, {"note", "a<b"}};
  return r;
}

}  // namespace

TEST_CASE("bars are sorted by value, ties keeping input order") {
  std::string svg = render_bar_chart({"Low", "High", "Mid"}, {0.1, 0.9, 0.5},
                                     "Chart");
  const auto high = svg.find(">High<");
  const auto mid = svg.find(">Mid<");
  const auto low = svg.find(">Low<");
  REQUIRE(high != std::string::npos);
  REQUIRE(mid != std::string::npos);
  REQUIRE(low != std::string::npos);
  CHECK(high < mid);
  CHECK(mid < low);

  std::string tied = render_bar_chart({"Second", "First"}, {0.5, 0.5}, "T");
  CHECK(tied.find(">Second<") < tied.find(">First<"));
}

TEST_CASE("chart geometry is fixed by the bar count") {
  std::string svg = render_bar_chart({"A", "B", "C"}, {1.0, 2.0, 3.0}, "G");
  // 38px title band + 3 rows of 26px + 12px padding.
  CHECK(svg.find("width=\"640\" height=\"128\"") != std::string::npos);
  CHECK(svg.find("viewBox=\"0 0 640 128\"") != std::string::npos);

  // The largest value spans the full 340px bar area when no axis maximum
  // is pinned.
  CHECK(svg.find("width=\"340\" height=\"16\"") != std::string::npos);

  BarChartOptions half;
  half.axis_max = 1.0;
  std::string scaled = render_bar_chart({"A"}, {0.5}, "G", half);
  CHECK(scaled.find("width=\"170\" height=\"16\"") != std::string::npos);

  // Values above the pinned maximum clamp to a full bar.
  std::string clamped = render_bar_chart({"A"}, {2.0}, "G", half);
  CHECK(clamped.find("width=\"340\" height=\"16\"") != std::string::npos);
}

TEST_CASE("chart values format as fractions or percentages") {
  std::string plain = render_bar_chart({"A"}, {0.8}, "G");
  CHECK(plain.find(">0.800<") != std::string::npos);

  BarChartOptions pct;
  pct.percent = true;
  std::string percent = render_bar_chart({"A"}, {0.8}, "G", pct);
  CHECK(percent.find(">80.0%<") != std::string::npos);
}

TEST_CASE("chart text is escaped and the fill color is applied") {
  BarChartOptions opts;
  opts.fill = "#e45756";
  std::string svg = render_bar_chart({"<b>&\"x\""}, {1.0},
                                     "Title <with> & \"quotes\"", opts);
  CHECK(svg.find("<b>") == std::string::npos);
  // Text-node escaping: & < > are rewritten, quotes stay literal.
  CHECK(svg.find("&lt;b&gt;&amp;\"x\"") != std::string::npos);
  CHECK(svg.find("Title &lt;with&gt; &amp; \"quotes\"") != std::string::npos);
  CHECK(svg.find("fill=\"#e45756\"") != std::string::npos);
}

TEST_CASE("charts reject mismatched or empty inputs") {
  CHECK_THROWS_AS(render_bar_chart({"A"}, {1.0, 2.0}, "G"),
                  LengthMismatchError);
  CHECK_THROWS_AS(render_bar_chart({}, {}, "G"), ConfigError);
}

TEST_CASE("identical chart inputs render byte-identical SVG") {
  auto render = [] {
    return render_bar_chart({"A", "B"}, {0.25, 0.75}, "Same");
  };
  CHECK(render() == render());
}

TEST_CASE("a full dashboard renders six charts in a fixed section order") {
  EvalReport report = sample_report(true);
  std::string html = render_dashboard(report);

  CHECK(html.rfind("<!DOCTYPE html>", 0) == 0);
  CHECK(count_occurrences(html, "<svg ") == 6);
  CHECK(html.find("45.0%") != std::string::npos);  // overall gauge value

  const char* section_ids[] = {
      "id=\"overall\"",
      "id=\"domain-priors\"",
      "id=\"subtask-priors\"",
      "id=\"domain-proficiency\"",
      "id=\"subtask-proficiency\"",
      "id=\"calibration\"",
      "id=\"insights\"",
      "id=\"samples\"",
      "id=\"run-config\""};
  std::size_t last = 0;
  for (const char* id : section_ids) {
    const auto pos = html.find(id);
    REQUIRE(pos != std::string::npos);
    CHECK(pos > last);
    last = pos;
  }

  // The calibration chart uses its own fill and framing.
  CHECK(html.find("Skill-calibration distance (lower is better)") !=
        std::string::npos);
  CHECK(html.find("fill=\"#e45756\"") != std::string::npos);

  // Insight text and run config are escaped into the document.
  CHECK(html.find("The model handles &lt;Sorting&gt; &amp; friends "
                  "unevenly.") != std::string::npos);
  CHECK(html.find("\"note\": \"a&lt;b\"") != std::string::npos);

  // Sample table shows both scores and the absolute gap.
  CHECK(html.find("<td>r1</td><td>Parse</td><td>5</td><td>1</td><td>4</td>") !=
        std::string::npos);
  CHECK(html.find("<td>r2</td><td>Emit</td><td>2</td><td>4</td><td>2</td>") !=
        std::string::npos);

  // Self-contained: no scripts, no external fetches.
  CHECK(html.find("<script") == std::string::npos);
  CHECK(html.find("https://") == std::string::npos);
}

TEST_CASE("a run without calibration explains the gap instead of charting it") {
  EvalReport report = sample_report(false);
  std::string html = render_dashboard(report);
  CHECK(count_occurrences(html, "<svg ") == 5);
  CHECK(html.find("Skill-calibration distances are not available for this "
                  "run: model outputs were not scored against references.") !=
        std::string::npos);
  CHECK(html.find("Skill-calibration distance (lower is better)") ==
        std::string::npos);

  // A calibration map without the presence flag is still not charted.
  report.calibration = {{"Parse", 0.5}};
  report.calibration_present = false;
  CHECK(count_occurrences(render_dashboard(report), "<svg ") == 5);
}

TEST_CASE("dashboards render byte-identically for equal reports") {
  EvalReport report = sample_report(true);
  CHECK(render_dashboard(report) == render_dashboard(report));
  EvalReport copy = sample_report(true);
  CHECK(render_dashboard(report) == render_dashboard(copy));
}

TEST_CASE("empty insight and sample sections degrade to explanations") {
  EvalReport report = sample_report(true);
  report.insights.clear();
  report.qualitative_samples.clear();
  std::string html = render_dashboard(report);
  CHECK(html.find("No insight summary was generated.") != std::string::npos);
  CHECK(html.find("No qualitative samples are available.") !=
        std::string::npos);
  CHECK(html.find("<table>") == std::string::npos);
}

TEST_CASE("write_report_files persists the three artifacts coherently") {
  const fs::path dir =
      fs::temp_directory_path() / "qualpipe-report-test" / "out";
  fs::remove_all(dir.parent_path());
  EvalReport report = sample_report(true);
  write_report_files(dir, report);

  CHECK(read_file(dir / "dashboard.html") == render_dashboard(report));
  CHECK(read_file(dir / "insights.txt") == report.insights + "\n");

  nlohmann::json parsed = nlohmann::json::parse(read_file(dir / "report.json"));
  CHECK(parsed.get<EvalReport>() == report);
}

TEST_CASE("report validation rejects unknown names and out-of-range values") {
  EvalReport ok = sample_report(true);
  CHECK_NOTHROW(validate_report(ok));

  EvalReport bad = sample_report(true);
  bad.domain_proficiency["Unheard Of"] = 0.5;
  CHECK_THROWS_AS(validate_report(bad), DataError);

  bad = sample_report(true);
  bad.subtask_proficiency["Parse"] = 1.5;
  CHECK_THROWS_AS(validate_report(bad), DataError);

  bad = sample_report(true);
  bad.calibration["Mystery"] = 0.1;
  CHECK_THROWS_AS(validate_report(bad), DataError);

  bad = sample_report(true);
  bad.qualitative_samples.push_back({"r9", "Mystery", 5, 1});
  CHECK_THROWS_AS(validate_report(bad), DataError);
}
