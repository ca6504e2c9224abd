#include "uqkit/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "uqkit/error.hpp"

namespace uq {

namespace {

// quadratic form a'Kb
double bilinear(const DiscreteDistribution& a, const DiscreteDistribution& b,
                const KernelMatrix& kernel) {
  double sum = 0.0;
  for (size_t i = 0; i < kernel.dim; ++i) {
    double row = 0.0;
    for (size_t j = 0; j < kernel.dim; ++j) {
      row += kernel.at(i, j) * b[j];
    }
    sum += a[i] * row;
  }
  return sum;
}

}  // namespace

double KernelMatrix::min_eigenvalue() const {
  // Cyclic Jacobi on a copy; dim stays in the low tens.
  std::vector<double> a = values;
  size_t n = dim;
  auto at = [&](size_t i, size_t j) -> double& { return a[i * n + j]; };
  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    if (off < 1e-24) break;
    for (size_t p = 0; p < n; ++p) {
      for (size_t q = p + 1; q < n; ++q) {
        if (std::abs(at(p, q)) < 1e-18) continue;
        double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (size_t k = 0; k < n; ++k) {
          double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (size_t k = 0; k < n; ++k) {
          double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  double min_ev = at(0, 0);
  for (size_t i = 1; i < n; ++i) min_ev = std::min(min_ev, at(i, i));
  return min_ev;
}

void check_distribution(const DiscreteDistribution& p, size_t dim) {
  if (p.size() != dim) {
    throw DimensionMismatch("distribution over " + std::to_string(p.size()) +
                            " outcomes, kernel over " + std::to_string(dim));
  }
  double sum = 0.0;
  for (double v : p) {
    if (v < 0.0) throw ConfigInvalid("distribution has a negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigInvalid("distribution sums to " + std::to_string(sum));
  }
}

void check_kernel(const KernelMatrix& kernel) {
  if (kernel.dim == 0 || kernel.values.size() != kernel.dim * kernel.dim) {
    throw DimensionMismatch("kernel storage does not match its dimension");
  }
  for (size_t i = 0; i < kernel.dim; ++i) {
    for (size_t j = 0; j < kernel.dim; ++j) {
      double v = kernel.at(i, j);
      if (v < 0.0 || v > 1.0) throw ConfigInvalid("kernel entry outside [0, 1]");
      if (std::abs(v - kernel.at(j, i)) > 1e-9) {
        throw ConfigInvalid("kernel is not symmetric");
      }
    }
  }
}

double one_sided_discrepancy(const DiscreteDistribution& p, const DiscreteDistribution& q,
                             const KernelMatrix& kernel) {
  check_kernel(kernel);
  check_distribution(p, kernel.dim);
  check_distribution(q, kernel.dim);
  return bilinear(p, p, kernel) - bilinear(p, q, kernel);
}

double mmd_squared(const DiscreteDistribution& p, const DiscreteDistribution& q,
                   const KernelMatrix& kernel) {
  check_kernel(kernel);
  check_distribution(p, kernel.dim);
  check_distribution(q, kernel.dim);
  DiscreteDistribution diff(p.size());
  for (size_t i = 0; i < p.size(); ++i) diff[i] = p[i] - q[i];
  double sum = 0.0;
  for (size_t i = 0; i < kernel.dim; ++i) {
    double row = 0.0;
    for (size_t j = 0; j < kernel.dim; ++j) row += kernel.at(i, j) * diff[j];
    sum += diff[i] * row;
  }
  return sum;
}

double total_variation(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  if (p.size() != q.size()) {
    throw DimensionMismatch("distributions over different outcome counts");
  }
  double sum = 0.0;
  for (size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - q[i]);
  return 0.5 * sum;
}

double embedding_gap(const DiscreteDistribution& p, const DiscreteDistribution& q,
                     const KernelMatrix& kernel) {
  check_kernel(kernel);
  check_distribution(p, kernel.dim);
  check_distribution(q, kernel.dim);
  double gap = 0.0;
  for (size_t i = 0; i < kernel.dim; ++i) {
    double row = 0.0;
    for (size_t j = 0; j < kernel.dim; ++j) row += kernel.at(i, j) * (p[j] - q[j]);
    gap = std::max(gap, std::abs(row));
  }
  return gap;
}

KernelMatrix random_psd_kernel(size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  size_t features = dim + 2;
  std::vector<double> f(dim * features);
  for (auto& v : f) v = unit(rng);

  KernelMatrix kernel;
  kernel.dim = dim;
  kernel.values.assign(dim * dim, 0.0);
  double max_entry = 0.0;
  for (size_t i = 0; i < dim; ++i) {
    for (size_t j = i; j < dim; ++j) {
      double dot = 0.0;
      for (size_t t = 0; t < features; ++t) dot += f[i * features + t] * f[j * features + t];
      kernel.values[i * dim + j] = dot;
      kernel.values[j * dim + i] = dot;
      max_entry = std::max(max_entry, dot);
    }
  }
  // Scaling by a positive constant keeps the Gram matrix PSD and puts every
  // entry in [0, 1]; the max lands on the diagonal since features are >= 0.
  for (auto& v : kernel.values) v /= max_entry;
  return kernel;
}

DiscreteDistribution random_distribution(size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DiscreteDistribution p(dim);
  double sum = 0.0;
  for (auto& v : p) {
    v = -std::log(1.0 - unit(rng));  // exponential draws give a Dirichlet(1) point
    sum += v;
  }
  for (auto& v : p) v /= sum;
  // Renormalize once more so the entries sum to 1 as tightly as doubles allow.
  double check = 0.0;
  for (double v : p) check += v;
  for (auto& v : p) v /= check;
  return p;
}

LemmaReport verify_lemma_bound(int trials, size_t max_dim, std::uint64_t seed,
                               double slack) {
  if (trials < 1 || max_dim < 2) throw ConfigInvalid("need trials >= 1 and max_dim >= 2");
  LemmaReport report;
  report.trials = trials;
  report.max_excess = -1.0;
  std::mt19937_64 rng(seed);
  for (int t = 0; t < trials; ++t) {
    size_t dim = 2 + rng() % (max_dim - 1);
    auto kernel = random_psd_kernel(dim, rng());
    auto p = random_distribution(dim, rng());
    auto q = random_distribution(dim, rng());
    double d = std::abs(one_sided_discrepancy(p, q, kernel));
    double tvd = total_variation(p, q);
    if (d > tvd + slack) ++report.violations;
    report.max_excess = std::max(report.max_excess, d - tvd);
    if (tvd > 0.0) report.max_ratio = std::max(report.max_ratio, d / tvd);
  }
  return report;
}

}  // namespace uq
