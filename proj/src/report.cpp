#include "qualpipe/report.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "qualpipe/errors.hpp"
#include "qualpipe/json_io.hpp"
#include "qualpipe/text_util.hpp"

namespace qualpipe {

namespace {

// Fixed chart geometry so identical reports render identical bytes.
constexpr long long kChartWidth = 640;
constexpr long long kLabelWidth = 252;   // bars start here
constexpr long long kBarArea = 340;      // pixels for a full-scale bar
constexpr long long kRowHeight = 26;
constexpr long long kBarHeight = 16;
constexpr long long kTitleOffset = 38;
constexpr long long kBottomPad = 12;

std::string format_value(double v, bool percent) {
  if (percent) return format_fixed(v * 100.0, 1) + "%";
  return format_fixed(v, 3);
}

std::string percent_text(double v) { return format_fixed(v * 100.0, 1) + "%"; }

std::string chart_from_map(const std::map<std::string, double>& values,
                           const std::string& title,
                           const BarChartOptions& options) {
  std::vector<std::string> labels;
  std::vector<double> vals;
  labels.reserve(values.size());
  vals.reserve(values.size());
  for (const auto& [name, value] : values) {
    labels.push_back(name);
    vals.push_back(value);
  }
  return render_bar_chart(labels, vals, title, options);
}

std::string render_gauge(const std::string& metric_name, double score) {
  const double clamped = std::clamp(score, 0.0, 1.0);
  const long long width = std::llround(clamped * 336.0);
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"360\" "
         "height=\"64\" viewBox=\"0 0 360 64\" role=\"img\">";
  svg << "<title>Overall " << escape_html(metric_name) << "</title>";
  svg << "<text x=\"12\" y=\"22\" class=\"gauge-name\">"
      << escape_html(metric_name) << "</text>";
  svg << "<text x=\"348\" y=\"22\" text-anchor=\"end\" class=\"gauge-value\">"
      << percent_text(score) << "</text>";
  svg << "<rect x=\"12\" y=\"34\" width=\"336\" height=\"14\" rx=\"7\" "
         "fill=\"#e3e7ee\"/>";
  svg << "<rect x=\"12\" y=\"34\" width=\"" << width
      << "\" height=\"14\" rx=\"7\" fill=\"#4c78a8\"/>";
  svg << "</svg>";
  return svg.str();
}

void append_section(std::ostringstream& html, const std::string& id,
                    const std::string& heading, const std::string& body) {
  html << "<section id=\"" << id << "\">";
  if (!heading.empty()) html << "<h2>" << escape_html(heading) << "</h2>";
  html << body << "</section>\n";
}

}  // namespace

std::string render_bar_chart(const std::vector<std::string>& labels,
                             const std::vector<double>& values,
                             const std::string& title,
                             const BarChartOptions& options) {
  if (labels.size() != values.size()) {
    throw LengthMismatchError(labels.size(), values.size());
  }
  if (labels.empty()) {
    throw ConfigError("bar chart requires at least one bar");
  }

  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return values[a] > values[b];
                   });

  double axis_max = options.axis_max.value_or(
      *std::max_element(values.begin(), values.end()));

  const long long n = static_cast<long long>(labels.size());
  const long long height = kTitleOffset + n * kRowHeight + kBottomPad;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kChartWidth
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << kChartWidth << " "
      << height << "\" role=\"img\">";
  svg << "<title>" << escape_html(title) << "</title>";
  svg << "<text x=\"12\" y=\"24\" class=\"chart-title\">"
      << escape_html(title) << "</text>";
  svg << "<line x1=\"" << kLabelWidth << "\" y1=\"" << kTitleOffset - 4
      << "\" x2=\"" << kLabelWidth << "\" y2=\"" << height - kBottomPad + 4
      << "\" stroke=\"#9aa4b2\" stroke-width=\"1\"/>";

  for (long long row = 0; row < n; ++row) {
    const std::size_t idx = order[static_cast<std::size_t>(row)];
    const long long top = kTitleOffset + row * kRowHeight;
    const long long bar_y = top + (kRowHeight - kBarHeight) / 2;
    const long long text_y = bar_y + kBarHeight - 3;
    double ratio = axis_max > 0.0 ? values[idx] / axis_max : 0.0;
    ratio = std::clamp(ratio, 0.0, 1.0);
    const long long bar_w = std::llround(ratio * static_cast<double>(kBarArea));

    svg << "<text x=\"" << kLabelWidth - 8 << "\" y=\"" << text_y
        << "\" text-anchor=\"end\" class=\"bar-label\">"
        << escape_html(labels[idx]) << "</text>";
    svg << "<rect x=\"" << kLabelWidth << "\" y=\"" << bar_y << "\" width=\""
        << bar_w << "\" height=\"" << kBarHeight << "\" fill=\""
        << escape_html_attr(options.fill) << "\"/>";
    svg << "<text x=\"" << kLabelWidth + bar_w + 6 << "\" y=\"" << text_y
        << "\" class=\"bar-value\">" << format_value(values[idx], options.percent)
        << "</text>";
  }
  svg << "</svg>";
  return svg.str();
}

std::string render_dashboard(const EvalReport& report) {
  std::ostringstream html;
  html << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n"
          "<meta charset=\"utf-8\">\n"
          "<title>qualpipe evaluation dashboard</title>\n"
          "<style>\n"
          "body{font-family:Helvetica,Arial,sans-serif;margin:0;"
          "background:#f5f6f8;color:#1f2937;}\n"
          "main{max-width:760px;margin:0 auto;padding:24px;}\n"
          "section{background:#fff;border:1px solid #e3e7ee;border-radius:8px;"
          "padding:16px 20px;margin-bottom:20px;}\n"
          "h1{font-size:22px;}h2{font-size:16px;margin-top:0;}\n"
          "svg{display:block;}\n"
          ".chart-title{font-size:14px;font-weight:bold;fill:#1f2937;}\n"
          ".bar-label,.bar-value{font-size:11px;fill:#1f2937;}\n"
          ".gauge-name{font-size:14px;font-weight:bold;fill:#1f2937;}\n"
          ".gauge-value{font-size:14px;fill:#1f2937;}\n"
          ".insight{white-space:pre-wrap;line-height:1.5;}\n"
          "table{border-collapse:collapse;width:100%;font-size:13px;}\n"
          "th,td{border:1px solid #e3e7ee;padding:6px 8px;text-align:left;}\n"
          "th{background:#eef1f5;}\n"
          "pre{background:#f0f2f5;padding:12px;overflow-x:auto;font-size:12px;}\n"
          "p.absent{color:#6b7280;font-style:italic;}\n"
          "</style>\n</head>\n<body>\n<main>\n"
          "<h1>Evaluation dashboard</h1>\n";

  append_section(html, "overall", "",
                 render_gauge(report.metric_name, report.overall_score));

  BarChartOptions prior_opts;
  prior_opts.percent = true;

  append_section(html, "domain-priors", "Domain priors",
                 chart_from_map(
                     [&] {
                       std::map<std::string, double> m;
                       for (const auto& a : report.domains.attributes)
                         m.emplace(a.name, a.prior);
                       return m;
                     }(),
                     "Domain priors", prior_opts));
  append_section(html, "subtask-priors", "Sub-task priors",
                 chart_from_map(
                     [&] {
                       std::map<std::string, double> m;
                       for (const auto& a : report.subtasks.attributes)
                         m.emplace(a.name, a.prior);
                       return m;
                     }(),
                     "Sub-task priors", prior_opts));

  BarChartOptions prof_opts;
  prof_opts.percent = true;
  prof_opts.axis_max = 1.0;
  append_section(html, "domain-proficiency", "Proficiency by domain",
                 report.domain_proficiency.empty()
                     ? std::string("<p class=\"absent\">No domain proficiency "
                                   "scores are available.</p>")
                     : chart_from_map(report.domain_proficiency,
                                      "Proficiency by domain", prof_opts));
  append_section(html, "subtask-proficiency", "Proficiency by sub-task",
                 report.subtask_proficiency.empty()
                     ? std::string("<p class=\"absent\">No sub-task "
                                   "proficiency scores are available.</p>")
                     : chart_from_map(report.subtask_proficiency,
                                      "Proficiency by sub-task", prof_opts));

  if (report.calibration_present && !report.calibration.empty()) {
    BarChartOptions cal_opts;
    cal_opts.percent = true;
    cal_opts.axis_max = 1.0;
    cal_opts.fill = "#e45756";
    append_section(html, "calibration", "Skill calibration",
                   chart_from_map(report.calibration,
                                  "Skill-calibration distance (lower is "
                                  "better)",
                                  cal_opts));
  } else {
    append_section(html, "calibration", "Skill calibration",
                   "<p class=\"absent\">Skill-calibration distances are not "
                   "available for this run: model outputs were not scored "
                   "against references.</p>");
  }

  append_section(html, "insights", "Insights",
                 report.insights.empty()
                     ? std::string("<p class=\"absent\">No insight summary "
                                   "was generated.</p>")
                     : "<p class=\"insight\">" + escape_html(report.insights) +
                           "</p>");

  std::string samples_body;
  if (report.qualitative_samples.empty()) {
    samples_body =
        "<p class=\"absent\">No qualitative samples are available.</p>";
  } else {
    std::ostringstream table;
    table << "<table><thead><tr><th>Instance</th><th>Attribute</th>"
             "<th>Reference score</th><th>Prediction score</th><th>Gap</th>"
             "</tr></thead><tbody>";
    for (const auto& s : report.qualitative_samples) {
      table << "<tr><td>" << escape_html(s.instance_id) << "</td><td>"
            << escape_html(s.attribute) << "</td><td>" << s.gt_score
            << "</td><td>" << s.pred_score << "</td><td>"
            << std::abs(s.gt_score - s.pred_score) << "</td></tr>";
    }
    table << "</tbody></table>";
    samples_body = table.str();
  }
  append_section(html, "samples", "Qualitative samples", samples_body);

  append_section(html, "run-config", "Run configuration",
                 "<pre>" + escape_html(report.run_config.dump(2)) + "</pre>");

  html << "</main>\n</body>\n</html>\n";
  return html.str();
}

void write_report_files(const std::filesystem::path& out_dir,
                        const EvalReport& report) {
  std::filesystem::create_directories(out_dir);
  atomic_write_file(out_dir / "dashboard.html", render_dashboard(report));
  atomic_write_file(out_dir / "report.json",
                    nlohmann::json(report).dump(2) + "\n");
  atomic_write_file(out_dir / "insights.txt", report.insights + "\n");
}

}  // namespace qualpipe
