#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace uq {

// One evaluated prompt: an uncertainty score plus whether the reference
// model's first response was judged correct.
struct LabeledScore {
  std::string prompt_id;
  double score = 0.0;
  bool correct = false;
};

// Probability that a randomly chosen incorrect item scores higher than a
// randomly chosen correct one, ties counted half. Computed as a Mann-Whitney
// rank statistic with average ranks, so tie handling is exact. Throws
// DegenerateLabels when only one class is present.
double auroc(const std::vector<LabeledScore>& items);

struct BootstrapConfig {
  double subsample_fraction = 0.8;  // without replacement
  int iterations = 1000;
  double ci_level = 0.05;  // central interval mass left out (2.5% per tail)
  std::uint64_t seed = 0;
};

struct BootstrapCI {
  double median = 0.0;
  double low = 0.0;
  double high = 0.0;
  int valid_iterations = 0;
};

// Subsampled AUROC spread. Single-class subsamples are skipped; if fewer than
// half the iterations survive, throws TooFewValidIterations. Deterministic
// for a fixed seed.
BootstrapCI bootstrap_auroc(const std::vector<LabeledScore>& items,
                            const BootstrapConfig& config);

struct RiskCoveragePoint {
  double coverage = 0.0;  // k / N after keeping the k most certain items
  double risk = 0.0;      // 1 - accuracy among the kept items
};

// Curve over k = 1..N with items kept in ascending score order (ties broken
// by prompt_id so the curve is deterministic).
std::vector<RiskCoveragePoint> risk_coverage(const std::vector<LabeledScore>& items);

// Area under the risk-coverage curve: the uniform mean of risk over its N
// points. Lower is better.
double aurc(const std::vector<RiskCoveragePoint>& curve);

// Accuracy among the ceil(coverage * N) most certain items.
double selective_accuracy(const std::vector<LabeledScore>& items, double coverage);

// ROC staircase for plotting; (fpr, tpr) with incorrect as the positive class.
std::vector<std::pair<double, double>> roc_points(const std::vector<LabeledScore>& items);

struct EvaluationReport {
  std::string score_name;
  size_t n_items = 0;
  double accuracy = 0.0;
  double auroc = 0.0;
  BootstrapCI auroc_ci;
  double aurc = 0.0;
  std::map<std::string, double> coverage_accuracy;  // "c@90" -> accuracy
  std::vector<RiskCoveragePoint> curve;
  std::vector<std::pair<double, double>> roc;
};

// Runs the full metric battery for one named score.
EvaluationReport evaluate(const std::string& score_name,
                          const std::vector<LabeledScore>& items,
                          const BootstrapConfig& bootstrap,
                          const std::vector<double>& coverages = {0.9, 0.8});

}  // namespace uq
