#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qualpipe/domain.hpp"

namespace qualpipe {

struct BarChartOptions {
  // Fixed value-axis maximum; unset means auto (the largest value).
  std::optional<double> axis_max;
  // Render value labels as 1-decimal percentages instead of 3-decimal
  // fractions.
  bool percent = false;
  std::string fill = "#4c78a8";
};

// Horizontal bar chart as standalone SVG text: bars sorted by value
// descending (ties keep input order), fixed canvas geometry derived only
// from the bar count, all text escaped. Throws LengthMismatchError when
// labels and values disagree, ConfigError when empty.
std::string render_bar_chart(const std::vector<std::string>& labels,
                             const std::vector<double>& values,
                             const std::string& title,
                             const BarChartOptions& options = {});

// One self-contained HTML document (inline CSS + SVG, no external
// resources): overall metric headline, domain/sub-task prior charts,
// domain/sub-task proficiency charts, calibration chart or an explanatory
// paragraph, insight text, qualitative-sample table, and the run
// configuration. Byte-identical for identical reports.
std::string render_dashboard(const EvalReport& report);

// Writes dashboard.html, report.json, and insights.txt under out_dir.
void write_report_files(const std::filesystem::path& out_dir,
                        const EvalReport& report);

}  // namespace qualpipe
