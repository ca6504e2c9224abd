#include "uqkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "uqkit/error.hpp"
#include "uqkit/stats.hpp"

namespace uq {

namespace {

void check_two_classes(const std::vector<LabeledScore>& items, const char* where) {
  size_t correct = 0;
  for (const auto& item : items) correct += item.correct ? 1 : 0;
  if (correct == 0 || correct == items.size()) {
    throw DegenerateLabels(std::string(where) + ": needs both correct and incorrect items");
  }
}

// Ascending score, prompt_id as the deterministic tie-break.
std::vector<size_t> certainty_order(const std::vector<LabeledScore>& items) {
  std::vector<size_t> order(items.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (items[a].score != items[b].score) return items[a].score < items[b].score;
    return items[a].prompt_id < items[b].prompt_id;
  });
  return order;
}

size_t keep_count(size_t n, double coverage) {
  if (coverage <= 0.0 || coverage > 1.0) {
    throw ConfigInvalid("coverage must lie in (0, 1]");
  }
  // The small epsilon keeps ceil from inventing an extra item when
  // coverage * n rounds a hair above an integer.
  auto k = static_cast<size_t>(std::ceil(coverage * static_cast<double>(n) - 1e-9));
  return std::clamp<size_t>(k, 1, n);
}

}  // namespace

double auroc(const std::vector<LabeledScore>& items) {
  if (items.empty()) throw DegenerateLabels("auroc over an empty set");
  check_two_classes(items, "auroc");

  std::vector<size_t> order(items.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return items[a].score < items[b].score; });

  size_t n = items.size();
  double rank_sum_incorrect = 0.0;
  size_t n_incorrect = 0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && items[order[j + 1]].score == items[order[i]].score) ++j;
    // Average ranks are multiples of one half, so they are exact doubles and
    // the all-tied and fully-separated cases come out to exactly 0.5 and 1.
    double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (size_t k = i; k <= j; ++k) {
      if (!items[order[k]].correct) {
        rank_sum_incorrect += avg_rank;
        ++n_incorrect;
      }
    }
    i = j + 1;
  }
  double n1 = static_cast<double>(n_incorrect);
  double n0 = static_cast<double>(n - n_incorrect);
  double u = rank_sum_incorrect - n1 * (n1 + 1.0) / 2.0;
  return u / (n1 * n0);
}

BootstrapCI bootstrap_auroc(const std::vector<LabeledScore>& items,
                            const BootstrapConfig& config) {
  if (config.iterations < 1) throw ConfigInvalid("bootstrap iterations must be >= 1");
  if (config.subsample_fraction <= 0.0 || config.subsample_fraction > 1.0) {
    throw ConfigInvalid("subsample fraction must lie in (0, 1]");
  }
  check_two_classes(items, "bootstrap_auroc");

  size_t n = items.size();
  size_t take = std::clamp<size_t>(
      static_cast<size_t>(std::llround(config.subsample_fraction * static_cast<double>(n))),
      2, n);

  std::vector<double> values;
  values.reserve(config.iterations);
  std::vector<size_t> indices(n);
  for (int it = 0; it < config.iterations; ++it) {
    std::mt19937_64 rng(mix_seed(config.seed + static_cast<std::uint64_t>(it)));
    std::iota(indices.begin(), indices.end(), size_t{0});
    // Partial Fisher-Yates: the first `take` slots become the subsample.
    for (size_t i = 0; i < take; ++i) {
      size_t j = i + static_cast<size_t>(rng() % (n - i));
      std::swap(indices[i], indices[j]);
    }
    std::vector<LabeledScore> sub;
    sub.reserve(take);
    for (size_t i = 0; i < take; ++i) sub.push_back(items[indices[i]]);
    try {
      values.push_back(auroc(sub));
    } catch (const DegenerateLabels&) {
      continue;  // single-class subsample; skip it
    }
  }
  if (values.size() * 2 < static_cast<size_t>(config.iterations)) {
    throw TooFewValidIterations("only " + std::to_string(values.size()) + " of " +
                                std::to_string(config.iterations) +
                                " bootstrap iterations had both classes");
  }
  std::sort(values.begin(), values.end());
  BootstrapCI ci;
  ci.valid_iterations = static_cast<int>(values.size());
  ci.median = quantile_sorted(values, 0.5);
  ci.low = quantile_sorted(values, config.ci_level / 2.0);
  ci.high = quantile_sorted(values, 1.0 - config.ci_level / 2.0);
  return ci;
}

std::vector<RiskCoveragePoint> risk_coverage(const std::vector<LabeledScore>& items) {
  if (items.empty()) throw DegenerateLabels("risk_coverage over an empty set");
  auto order = certainty_order(items);
  std::vector<RiskCoveragePoint> curve;
  curve.reserve(items.size());
  double n = static_cast<double>(items.size());
  double correct_so_far = 0.0;
  for (size_t k = 0; k < order.size(); ++k) {
    if (items[order[k]].correct) correct_so_far += 1.0;
    double kept = static_cast<double>(k + 1);
    curve.push_back({kept / n, 1.0 - correct_so_far / kept});
  }
  return curve;
}

double aurc(const std::vector<RiskCoveragePoint>& curve) {
  if (curve.empty()) throw DegenerateLabels("aurc over an empty curve");
  double sum = 0.0;
  for (const auto& point : curve) sum += point.risk;
  return sum / static_cast<double>(curve.size());
}

double selective_accuracy(const std::vector<LabeledScore>& items, double coverage) {
  if (items.empty()) throw DegenerateLabels("selective_accuracy over an empty set");
  auto order = certainty_order(items);
  size_t k = keep_count(items.size(), coverage);
  double correct = 0.0;
  for (size_t i = 0; i < k; ++i) correct += items[order[i]].correct ? 1.0 : 0.0;
  return correct / static_cast<double>(k);
}

std::vector<std::pair<double, double>> roc_points(const std::vector<LabeledScore>& items) {
  check_two_classes(items, "roc_points");
  // Descending score: high uncertainty should flag incorrect (positive) items.
  std::vector<size_t> order(items.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return items[a].score > items[b].score; });
  double n1 = 0.0, n0 = 0.0;
  for (const auto& item : items) (item.correct ? n0 : n1) += 1.0;

  std::vector<std::pair<double, double>> points;
  points.emplace_back(0.0, 0.0);
  double tp = 0.0, fp = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() &&
           items[order[j + 1]].score == items[order[i]].score) {
      ++j;
    }
    for (size_t k = i; k <= j; ++k) (items[order[k]].correct ? fp : tp) += 1.0;
    points.emplace_back(fp / n0, tp / n1);
    i = j + 1;
  }
  return points;
}

EvaluationReport evaluate(const std::string& score_name,
                          const std::vector<LabeledScore>& items,
                          const BootstrapConfig& bootstrap,
                          const std::vector<double>& coverages) {
  EvaluationReport report;
  report.score_name = score_name;
  report.n_items = items.size();
  double correct = 0.0;
  for (const auto& item : items) correct += item.correct ? 1.0 : 0.0;
  report.accuracy = items.empty() ? 0.0 : correct / static_cast<double>(items.size());
  report.auroc = auroc(items);
  report.auroc_ci = bootstrap_auroc(items, bootstrap);
  report.curve = risk_coverage(items);
  report.aurc = aurc(report.curve);
  for (double coverage : coverages) {
    auto label = "c@" + std::to_string(static_cast<int>(std::llround(coverage * 100)));
    report.coverage_accuracy[label] = selective_accuracy(items, coverage);
  }
  report.roc = roc_points(items);
  return report;
}

}  // namespace uq
