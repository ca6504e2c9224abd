#pragma once

#include <string>
#include <vector>

#include "uqkit/stats.hpp"
#include "uqkit/types.hpp"

namespace uq {

// One evaluated prompt joined across stages: uncertainty scores plus the
// binary correctness of the reference model's first response.
struct DiagnosticItem {
  std::string prompt_id;
  double au = 0.0;
  double eu = 0.0;
  bool correct = false;
};

enum class AuBucket { low, mid, high };

const char* to_string(AuBucket bucket);

struct GroupSummary {
  size_t count = 0;
  double mean_eu = 0.0;
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
};

struct BucketSummary {
  AuBucket bucket = AuBucket::low;
  double au_lower = 0.0;  // boundary values actually used
  double au_upper = 0.0;
  GroupSummary correct;
  GroupSummary incorrect;
};

struct StratifiedReport {
  std::vector<BucketSummary> buckets;  // low, mid, high
  bool degenerate = false;  // all AU mass fell into one bucket (boundaries tied)
  // Raw rows for CSV export: (bucket, correct, prompt_id, au, eu).
  std::vector<std::tuple<AuBucket, bool, std::string, double, double>> rows;
};

// Splits items into AU terciles (boundaries at the 33.33 / 66.67 nearest-rank
// percentiles, inclusive on the upper edge) and summarizes EU per bucket and
// correctness group. Throws TooFewItems below 3 items.
StratifiedReport stratify_by_au(const std::vector<DiagnosticItem>& items);

struct LowAuSlice {
  double au_cutoff = 0.0;
  size_t slice_size = 0;
  GroupSummary correct;
  GroupSummary incorrect;
  RankSumResult eu_separation;  // EU of incorrect vs correct inside the slice
  bool one_sided = false;       // a correctness group was empty; statistic withheld
};

// Restricts attention to the `fraction` of items with the lowest AU (the
// reference model's most confident prompts) and asks whether EU still
// separates wrong from right there. Throws SliceTooSmall when the slice has
// fewer than 2 items.
LowAuSlice low_au_slice(const std::vector<DiagnosticItem>& items, double fraction = 0.05);

// Mean pairwise Jaccard overlap of the models' correct-answer sets. A pair
// with both sets empty counts as overlap 1 (nothing distinguishes the
// models). Throws SingleModel when the matrix has fewer than 2 columns.
double jaccard_redundancy(const CorrectnessMatrix& matrix);

// Oracle ensemble accuracy (any model correct) minus the best single model's
// accuracy: how much headroom cross-model disagreement actually carries.
double oracle_gain(const CorrectnessMatrix& matrix);

}  // namespace uq
