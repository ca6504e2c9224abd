#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uqkit/diagnostics.hpp"
#include "uqkit/metrics.hpp"
#include "uqkit/types.hpp"

namespace uq {

// Serialization helpers for evaluation artifacts. All output is
// deterministic: fixed key order, shortest round-trip number formatting.

// One JSON document holding a report per score variant plus a method_notes
// header stating the integration and selection rules in force.
std::string evaluation_json(const std::vector<EvaluationReport>& reports);

// The same document as a JSON object, for callers that splice in extra
// sections (config echo, per-prompt table) before writing.
nlohmann::ordered_json evaluation_document(const std::vector<EvaluationReport>& reports);

// Flat CSV: one row per score variant. The leading '#' line restates the
// method notes.
std::string evaluation_csv(const std::vector<EvaluationReport>& reports);

// Point lists for plotting.
std::string risk_coverage_csv(const EvaluationReport& report);
std::string roc_csv(const EvaluationReport& report);

// Diagnostics bundle as one JSON document.
std::string diagnostics_json(const StratifiedReport& stratified, const LowAuSlice& slice,
                             double jaccard, double gain, size_t n_models);

// Per-item rows behind the stratification: bucket,correct,prompt_id,au,eu.
std::string stratified_csv(const StratifiedReport& stratified);

struct ChartSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

// Small self-contained SVG line chart (axes in [0,1] x [0,1]).
std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<ChartSeries>& series);

// Shortest round-trip decimal form of a double (what the JSON layer emits).
std::string number_repr(double value);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace uq
