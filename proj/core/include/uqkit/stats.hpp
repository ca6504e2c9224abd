#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace uq {

// splitmix64 step; used to derive independent per-iteration RNG seeds from a
// single run seed.
std::uint64_t mix_seed(std::uint64_t x);

// FNV-1a over bytes, as a hex string. Stable across platforms; used for cache
// keys and config hashes in manifests.
std::string fnv1a_hex(const std::string& bytes);

// Quantile of a sorted vector by linear interpolation between order
// statistics (q in [0, 1]).
double quantile_sorted(const std::vector<double>& sorted, double q);

// Nearest-rank percentile of a sorted vector: smallest element with at least
// q of the mass at or below it. Used for bucket boundaries so membership is
// invariant under monotone transforms.
double percentile_nearest_rank(const std::vector<double>& sorted, double q);

// Standard normal CDF.
double normal_cdf(double z);

// Regularized incomplete beta I_x(a, b) via continued fractions.
double incomplete_beta(double a, double b, double x);

// Two-sided p-value for a t statistic with df degrees of freedom.
double student_t_two_sided(double t, double df);

struct PearsonResult {
  double r = 0.0;
  double p_value = 1.0;  // two-sided, t distribution with n - 2 df
  size_t n = 0;
};

// Throws TooFewItems for n < 3 and ZeroVariance when either side is constant.
PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y);

struct RankSumResult {
  double statistic = 0.0;  // P(value from group b > value from group a), with ties split
  double z = 0.0;          // normal approximation, tie-corrected
  double p_value = 1.0;    // two-sided
};

// Two-sample Wilcoxon rank-sum comparison of b against a.
RankSumResult rank_sum(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace uq
