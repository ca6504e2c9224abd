#pragma once

#include <cstdint>
#include <vector>

namespace uq {

// Distribution over a finite outcome set: nonnegative entries summing to 1
// within 1e-9 (checked by the operations below).
using DiscreteDistribution = std::vector<double>;

// Symmetric kernel over the same outcome set, entries in [0, 1], row-major.
struct KernelMatrix {
  size_t dim = 0;
  std::vector<double> values;

  double at(size_t i, size_t j) const { return values[i * dim + j]; }

  // Smallest eigenvalue, for positive semidefiniteness checks (Jacobi sweeps;
  // the matrices here are tiny).
  double min_eigenvalue() const;
};

void check_distribution(const DiscreteDistribution& p, size_t dim);
void check_kernel(const KernelMatrix& kernel);

// One-sided kernel discrepancy  D(p||q) = p'Kp - p'Kq : the gap between
// within-p similarity and cross similarity. This is what the uncertainty
// estimators compute on empirical samples, with p the reference model's
// response distribution and q an auxiliary model's.
double one_sided_discrepancy(const DiscreteDistribution& p, const DiscreteDistribution& q,
                             const KernelMatrix& kernel);

// (p-q)'K(p-q). For symmetric kernels this equals D(p||q) + D(q||p).
double mmd_squared(const DiscreteDistribution& p, const DiscreteDistribution& q,
                   const KernelMatrix& kernel);

// Total variation distance, (1/2) * sum_i |p_i - q_i|.
double total_variation(const DiscreteDistribution& p, const DiscreteDistribution& q);

// Largest entry of |K(p-q)|. Zero iff the kernel mean embeddings of p and q
// coincide; used to exercise the fact that D = 0 with equal embedding norms
// forces equal embeddings.
double embedding_gap(const DiscreteDistribution& p, const DiscreteDistribution& q,
                     const KernelMatrix& kernel);

// Random positive semidefinite kernel with entries in [0, 1]: a Gram matrix
// of nonnegative feature vectors, rescaled by its largest entry.
KernelMatrix random_psd_kernel(size_t dim, std::uint64_t seed);

DiscreteDistribution random_distribution(size_t dim, std::uint64_t seed);

struct LemmaReport {
  int trials = 0;
  int violations = 0;
  double max_ratio = 0.0;   // max |D| / TVD over trials with TVD > 0
  double max_excess = 0.0;  // max (|D| - TVD), negative when the bound holds
};

// Samples random (p, q, kernel) triples and checks |D(p||q)| <= TVD(p, q) up
// to `slack`, which holds for any kernel bounded in [0, 1]. Violations are
// counted, not thrown; callers decide whether to raise LemmaViolation.
LemmaReport verify_lemma_bound(int trials, size_t max_dim, std::uint64_t seed,
                               double slack = 1e-9);

}  // namespace uq
