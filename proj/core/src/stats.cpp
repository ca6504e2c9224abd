#include "uqkit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "uqkit/error.hpp"

namespace uq {

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw TooFewItems("quantile of an empty vector");
  q = std::clamp(q, 0.0, 1.0);
  double pos = q * static_cast<double>(sorted.size() - 1);
  size_t lo = static_cast<size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

double percentile_nearest_rank(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw TooFewItems("percentile of an empty vector");
  q = std::clamp(q, 0.0, 1.0);
  size_t rank = static_cast<size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  if (rank == 0) rank = 1;
  return sorted[std::min(rank - 1, sorted.size() - 1)];
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

// Lentz's continued fraction for the incomplete beta function.
double beta_cf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double eps = 1e-15;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log(1.0 - x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(a, b, x) / a;
  }
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df) {
  if (df <= 0.0) throw ConfigInvalid("t distribution needs df > 0");
  if (!std::isfinite(t)) return 0.0;
  double x = df / (df + t * t);
  return incomplete_beta(df / 2.0, 0.5, x);
}

PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionMismatch("pearson over unequal lengths");
  size_t n = x.size();
  if (n < 3) throw TooFewItems("pearson needs at least 3 points");
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ZeroVariance("pearson with a constant input");
  PearsonResult result;
  result.n = n;
  result.r = sxy / std::sqrt(sxx * syy);
  result.r = std::clamp(result.r, -1.0, 1.0);
  double df = static_cast<double>(n - 2);
  if (std::abs(result.r) >= 1.0) {
    result.p_value = 0.0;
  } else {
    double t = result.r * std::sqrt(df / (1.0 - result.r * result.r));
    result.p_value = student_t_two_sided(t, df);
  }
  return result;
}

RankSumResult rank_sum(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw TooFewItems("rank-sum needs both groups non-empty");
  size_t na = a.size(), nb = b.size(), n = na + nb;
  struct Entry {
    double value;
    bool from_b;
  };
  std::vector<Entry> all;
  all.reserve(n);
  for (double v : a) all.push_back({v, false});
  for (double v : b) all.push_back({v, true});
  std::sort(all.begin(), all.end(),
            [](const Entry& x, const Entry& y) { return x.value < y.value; });

  // Average ranks over tie groups; collect tie sizes for the variance correction.
  std::vector<double> ranks(n);
  double tie_term = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && all[j + 1].value == all[i].value) ++j;
    double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (size_t k = i; k <= j; ++k) ranks[k] = avg;
    double t = static_cast<double>(j - i + 1);
    tie_term += t * (t * t - 1.0);
    i = j + 1;
  }

  double rb = 0.0;
  for (size_t k = 0; k < n; ++k) {
    if (all[k].from_b) rb += ranks[k];
  }
  double u = rb - static_cast<double>(nb) * (static_cast<double>(nb) + 1.0) / 2.0;

  RankSumResult result;
  result.statistic = u / (static_cast<double>(na) * static_cast<double>(nb));
  double mean_u = static_cast<double>(na) * static_cast<double>(nb) / 2.0;
  double nn = static_cast<double>(n);
  double var_u = static_cast<double>(na) * static_cast<double>(nb) / 12.0 *
                 (nn + 1.0 - tie_term / (nn * (nn - 1.0)));
  if (var_u <= 0.0) {
    result.z = 0.0;
    result.p_value = 1.0;  // everything tied
  } else {
    result.z = (u - mean_u) / std::sqrt(var_u);
    result.p_value = 2.0 * (1.0 - normal_cdf(std::abs(result.z)));
  }
  return result;
}

}  // namespace uq
