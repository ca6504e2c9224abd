#include "uqkit/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "uqkit/error.hpp"

namespace uq {

namespace {

GroupSummary summarize(std::vector<double> eu_values) {
  GroupSummary summary;
  summary.count = eu_values.size();
  if (eu_values.empty()) return summary;
  double sum = 0.0;
  for (double v : eu_values) sum += v;
  summary.mean_eu = sum / static_cast<double>(eu_values.size());
  std::sort(eu_values.begin(), eu_values.end());
  summary.p25 = quantile_sorted(eu_values, 0.25);
  summary.p50 = quantile_sorted(eu_values, 0.50);
  summary.p75 = quantile_sorted(eu_values, 0.75);
  return summary;
}

// Stable order for slicing: AU ascending, prompt_id breaking ties.
std::vector<size_t> au_order(const std::vector<DiagnosticItem>& items) {
  std::vector<size_t> order(items.size());
  for (size_t i = 0; i < items.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (items[a].au != items[b].au) return items[a].au < items[b].au;
    return items[a].prompt_id < items[b].prompt_id;
  });
  return order;
}

}  // namespace

const char* to_string(AuBucket bucket) {
  switch (bucket) {
    case AuBucket::low: return "low";
    case AuBucket::mid: return "mid";
    case AuBucket::high: return "high";
  }
  return "?";
}

StratifiedReport stratify_by_au(const std::vector<DiagnosticItem>& items) {
  if (items.size() < 3) throw TooFewItems("stratification needs at least 3 items");

  std::vector<double> au_sorted;
  au_sorted.reserve(items.size());
  for (const auto& item : items) au_sorted.push_back(item.au);
  std::sort(au_sorted.begin(), au_sorted.end());
  double b1 = percentile_nearest_rank(au_sorted, 1.0 / 3.0);
  double b2 = percentile_nearest_rank(au_sorted, 2.0 / 3.0);

  auto bucket_of = [&](double au) {
    if (au <= b1) return AuBucket::low;
    if (au <= b2) return AuBucket::mid;
    return AuBucket::high;
  };

  StratifiedReport report;
  report.degenerate = (b1 == b2);

  std::vector<double> eu[3][2];  // bucket x (incorrect, correct)
  for (const auto& item : items) {
    auto bucket = bucket_of(item.au);
    eu[static_cast<int>(bucket)][item.correct ? 1 : 0].push_back(item.eu);
    report.rows.emplace_back(bucket, item.correct, item.prompt_id, item.au, item.eu);
  }

  double lowers[3] = {au_sorted.front(), b1, b2};
  double uppers[3] = {b1, b2, au_sorted.back()};
  for (int b = 0; b < 3; ++b) {
    BucketSummary summary;
    summary.bucket = static_cast<AuBucket>(b);
    summary.au_lower = lowers[b];
    summary.au_upper = uppers[b];
    summary.incorrect = summarize(eu[b][0]);
    summary.correct = summarize(eu[b][1]);
    report.buckets.push_back(summary);
  }
  return report;
}

LowAuSlice low_au_slice(const std::vector<DiagnosticItem>& items, double fraction) {
  if (fraction <= 0.0 || fraction > 1.0) throw ConfigInvalid("fraction must lie in (0, 1]");
  auto order = au_order(items);
  size_t k = static_cast<size_t>(
      std::ceil(fraction * static_cast<double>(items.size()) - 1e-9));
  k = std::max<size_t>(k, 1);
  if (k < 2) throw SliceTooSmall("low-AU slice has fewer than 2 items; raise the fraction");

  LowAuSlice slice;
  slice.slice_size = k;
  slice.au_cutoff = items[order[k - 1]].au;
  std::vector<double> eu_correct, eu_incorrect;
  for (size_t i = 0; i < k; ++i) {
    const auto& item = items[order[i]];
    (item.correct ? eu_correct : eu_incorrect).push_back(item.eu);
  }
  slice.correct = summarize(eu_correct);
  slice.incorrect = summarize(eu_incorrect);
  if (eu_correct.empty() || eu_incorrect.empty()) {
    slice.one_sided = true;  // nothing to compare; leave the statistic at defaults
    return slice;
  }
  slice.eu_separation = rank_sum(eu_correct, eu_incorrect);
  return slice;
}

double jaccard_redundancy(const CorrectnessMatrix& matrix) {
  size_t n_models = matrix.model_ids.size();
  if (n_models < 2) throw SingleModel("redundancy needs at least 2 models");
  size_t n = matrix.prompt_ids.size();

  double pair_sum = 0.0;
  size_t pairs = 0;
  for (size_t a = 0; a < n_models; ++a) {
    for (size_t b = a + 1; b < n_models; ++b) {
      size_t inter = 0, uni = 0;
      for (size_t i = 0; i < n; ++i) {
        int ca = matrix.entries[i][a], cb = matrix.entries[i][b];
        inter += (ca == 1 && cb == 1) ? 1 : 0;
        uni += (ca == 1 || cb == 1) ? 1 : 0;
      }
      pair_sum += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
      ++pairs;
    }
  }
  return pair_sum / static_cast<double>(pairs);
}

double oracle_gain(const CorrectnessMatrix& matrix) {
  size_t n_models = matrix.model_ids.size();
  if (n_models < 2) throw SingleModel("oracle gain needs at least 2 models");
  size_t n = matrix.prompt_ids.size();
  if (n == 0) throw TooFewItems("oracle gain over an empty matrix");

  double oracle = 0.0;
  std::vector<double> per_model(n_models, 0.0);
  for (size_t i = 0; i < n; ++i) {
    bool any = false;
    for (size_t m = 0; m < n_models; ++m) {
      if (matrix.entries[i][m] == 1) {
        any = true;
        per_model[m] += 1.0;
      }
    }
    oracle += any ? 1.0 : 0.0;
  }
  double best = *std::max_element(per_model.begin(), per_model.end());
  return (oracle - best) / static_cast<double>(n);
}

}  // namespace uq
