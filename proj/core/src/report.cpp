#include "uqkit/report.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "uqkit/error.hpp"

namespace uq {

namespace {

using ordered_json = nlohmann::ordered_json;

// The two rules a reader needs to reproduce the aggregate numbers.
ordered_json method_notes() {
  ordered_json notes;
  notes["aurc"] = "uniform mean of risk over the N risk-coverage points";
  notes["coverage_selection"] = "keep the ceil(coverage*N) items with lowest score";
  notes["tie_break"] = "equal scores ordered by prompt_id";
  notes["auroc"] = "rank statistic with average ranks; incorrect is the positive class";
  return notes;
}

ordered_json ci_json(const BootstrapCI& ci) {
  ordered_json j;
  j["median"] = ci.median;
  j["low"] = ci.low;
  j["high"] = ci.high;
  j["valid_iterations"] = ci.valid_iterations;
  return j;
}

ordered_json report_json(const EvaluationReport& report) {
  ordered_json j;
  j["score"] = report.score_name;
  j["n_items"] = report.n_items;
  j["accuracy"] = report.accuracy;
  j["auroc"] = report.auroc;
  j["auroc_bootstrap"] = ci_json(report.auroc_ci);
  j["aurc"] = report.aurc;
  ordered_json cov;
  for (const auto& [label, value] : report.coverage_accuracy) cov[label] = value;
  j["coverage_accuracy"] = cov;
  ordered_json curve = ordered_json::array();
  for (const auto& point : report.curve) {
    curve.push_back(ordered_json::array({point.coverage, point.risk}));
  }
  j["risk_coverage"] = curve;
  ordered_json roc = ordered_json::array();
  for (const auto& [fpr, tpr] : report.roc) {
    roc.push_back(ordered_json::array({fpr, tpr}));
  }
  j["roc"] = roc;
  return j;
}

ordered_json group_json(const GroupSummary& group) {
  ordered_json j;
  j["count"] = group.count;
  j["mean_eu"] = group.mean_eu;
  j["p25"] = group.p25;
  j["p50"] = group.p50;
  j["p75"] = group.p75;
  return j;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string number_repr(double value) { return nlohmann::json(value).dump(); }

nlohmann::ordered_json evaluation_document(const std::vector<EvaluationReport>& reports) {
  ordered_json doc;
  doc["method_notes"] = method_notes();
  ordered_json list = ordered_json::array();
  for (const auto& report : reports) list.push_back(report_json(report));
  doc["reports"] = list;
  return doc;
}

std::string evaluation_json(const std::vector<EvaluationReport>& reports) {
  return evaluation_document(reports).dump(2) + "\n";
}

std::string evaluation_csv(const std::vector<EvaluationReport>& reports) {
  std::string out = "# aurc: uniform mean of risk over the N curve points; "
                    "c@k: accuracy over the ceil(k%*N) lowest-score items\n";
  out += "score,n_items,accuracy,auroc,auroc_ci_low,auroc_ci_median,auroc_ci_high,aurc";
  std::vector<std::string> cov_labels;
  if (!reports.empty()) {
    for (const auto& [label, value] : reports.front().coverage_accuracy) {
      cov_labels.push_back(label);
      out += "," + label;
    }
  }
  out += "\n";
  for (const auto& report : reports) {
    out += csv_escape(report.score_name);
    out += "," + std::to_string(report.n_items);
    out += "," + number_repr(report.accuracy);
    out += "," + number_repr(report.auroc);
    out += "," + number_repr(report.auroc_ci.low);
    out += "," + number_repr(report.auroc_ci.median);
    out += "," + number_repr(report.auroc_ci.high);
    out += "," + number_repr(report.aurc);
    for (const auto& label : cov_labels) {
      auto it = report.coverage_accuracy.find(label);
      out += ",";
      if (it != report.coverage_accuracy.end()) out += number_repr(it->second);
    }
    out += "\n";
  }
  return out;
}

std::string risk_coverage_csv(const EvaluationReport& report) {
  std::string out = "coverage,risk\n";
  for (const auto& point : report.curve) {
    out += number_repr(point.coverage) + "," + number_repr(point.risk) + "\n";
  }
  return out;
}

std::string roc_csv(const EvaluationReport& report) {
  std::string out = "fpr,tpr\n";
  for (const auto& [fpr, tpr] : report.roc) {
    out += number_repr(fpr) + "," + number_repr(tpr) + "\n";
  }
  return out;
}

std::string diagnostics_json(const StratifiedReport& stratified, const LowAuSlice& slice,
                             double jaccard, double gain, size_t n_models) {
  ordered_json doc;
  doc["method_notes"] = method_notes();

  ordered_json strat;
  strat["degenerate"] = stratified.degenerate;
  ordered_json buckets = ordered_json::array();
  for (const auto& bucket : stratified.buckets) {
    ordered_json b;
    b["bucket"] = to_string(bucket.bucket);
    b["au_lower"] = bucket.au_lower;
    b["au_upper"] = bucket.au_upper;
    b["correct"] = group_json(bucket.correct);
    b["incorrect"] = group_json(bucket.incorrect);
    buckets.push_back(b);
  }
  strat["buckets"] = buckets;
  doc["au_stratified_eu"] = strat;

  ordered_json low;
  low["au_cutoff"] = slice.au_cutoff;
  low["slice_size"] = slice.slice_size;
  low["correct"] = group_json(slice.correct);
  low["incorrect"] = group_json(slice.incorrect);
  low["one_sided"] = slice.one_sided;
  if (!slice.one_sided) {
    ordered_json sep;
    sep["statistic"] = slice.eu_separation.statistic;
    sep["z"] = slice.eu_separation.z;
    sep["p_value"] = slice.eu_separation.p_value;
    low["eu_separation"] = sep;
  }
  doc["low_au_slice"] = low;

  ordered_json red;
  red["n_models"] = n_models;
  red["jaccard"] = jaccard;
  red["oracle_gain"] = gain;
  doc["ensemble_redundancy"] = red;
  return doc.dump(2) + "\n";
}

std::string stratified_csv(const StratifiedReport& stratified) {
  std::string out = "bucket,correct,prompt_id,au,eu\n";
  for (const auto& [bucket, correct, prompt_id, au, eu] : stratified.rows) {
    out += std::string(to_string(bucket)) + "," + (correct ? "1" : "0") + "," +
           csv_escape(prompt_id) + "," + number_repr(au) + "," + number_repr(eu) + "\n";
  }
  return out;
}

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<ChartSeries>& series) {
  const double width = 640, height = 420;
  const double left = 60, right = 20, top = 40, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  static const char* colors[] = {"#1f6fb2", "#d26a2c", "#3d8c40", "#8f4fa8", "#b23b3b"};

  auto x_px = [&](double x) { return left + x * plot_w; };
  auto y_px = [&](double y) { return top + (1.0 - y) * plot_h; };
  auto fmt = [](double v) {
    std::string s = number_repr(v);
    return s;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) +
         "\" height=\"" + fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " +
         fmt(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt(width / 2) + "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">" + title + "</text>\n";

  // gridlines and tick labels at fifths
  for (int i = 0; i <= 5; ++i) {
    double t = i / 5.0;
    svg += "<line x1=\"" + fmt(x_px(t)) + "\" y1=\"" + fmt(top) + "\" x2=\"" +
           fmt(x_px(t)) + "\" y2=\"" + fmt(top + plot_h) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(y_px(t)) + "\" x2=\"" +
           fmt(left + plot_w) + "\" y2=\"" + fmt(y_px(t)) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt(x_px(t)) + "\" y=\"" + fmt(top + plot_h + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           fmt(t) + "</text>\n";
    svg += "<text x=\"" + fmt(left - 8) + "\" y=\"" + fmt(y_px(t) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           fmt(t) + "</text>\n";
  }
  svg += "<rect x=\"" + fmt(left) + "\" y=\"" + fmt(top) + "\" width=\"" + fmt(plot_w) +
         "\" height=\"" + fmt(plot_h) + "\" fill=\"none\" stroke=\"#444444\"/>\n";
  svg += "<text x=\"" + fmt(left + plot_w / 2) + "\" y=\"" + fmt(height - 10) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
         x_label + "</text>\n";
  svg += "<text x=\"16\" y=\"" + fmt(top + plot_h / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 16 " + fmt(top + plot_h / 2) + ")\">" + y_label +
         "</text>\n";

  for (size_t s = 0; s < series.size(); ++s) {
    const char* color = colors[s % 5];
    std::string points;
    for (const auto& [x, y] : series[s].points) {
      points += fmt(x_px(x)) + "," + fmt(y_px(y)) + " ";
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
    double ly = top + 16 + 16 * static_cast<double>(s);
    svg += "<line x1=\"" + fmt(left + plot_w - 130) + "\" y1=\"" + fmt(ly - 4) +
           "\" x2=\"" + fmt(left + plot_w - 110) + "\" y2=\"" + fmt(ly - 4) +
           "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fmt(left + plot_w - 104) + "\" y=\"" + fmt(ly) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + series[s].label +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

}  // namespace uq
