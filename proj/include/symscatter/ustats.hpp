// Projection decomposition of order-two difference kernels: plug-in
// estimates of the kernel mean, the first-order projections and the
// covariance components Gamma_1 / Gamma_2, the finite-sample variance
// identities for complete and circulant designs, and the induced covariance
// prediction for scatter estimates via an influence kernel.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "symscatter/linalg.hpp"
#include "symscatter/mscatter.hpp"
#include "symscatter/pairs.hpp"
#include "symscatter/rng.hpp"

namespace symscatter {

// r-variate kernel f evaluated on differences; used in symmetrized form
// f_s(x) = (f(x) + f(-x)) / 2. Kernels known to be even skip the mirrored
// evaluation.
struct DifferenceKernel {
  int r = 1;
  std::function<Vector(const Vector&)> f;
  bool even = false;

  Vector symmetrized(const Vector& x) const {
    if (even) return f(x);
    return 0.5 * (f(x) + f(Vector(-x)));
  }
};

DifferenceKernel scalar_kernel(std::function<double(const Vector&)> f,
                               bool even = false);
// Matrix-valued kernels are vectorized over the q(q+1)/2 upper-triangle
// coordinates in row-major order, off-diagonals unscaled.
DifferenceKernel matrix_kernel(int q, std::function<Matrix(const Vector&)> f,
                               bool even = false);

Vector vec_sym(const Matrix& m);
Matrix unvec_sym(const Vector& v, int q);
int sym_vec_size(int q);

// Named kernels for the command line: "norm", "capped-norm" (min(||z||, 2)),
// "first-coordinate", "outer" (vec of z z'), "tyler-influence" (vec of the
// spherical Tyler influence with J(0) := 0).
DifferenceKernel make_named_kernel(const std::string& name, int q);

struct Decomposition {
  Vector f0;          // complete U-statistic mean of f_s(X_i - X_j)
  Matrix f1_values;   // n x r plug-in projections, mean exactly zero
  Matrix gamma1;      // covariance of the f1 values (divisor n-1)
  Matrix gamma2;      // mean of f2 f2' over all pairs
};

// Plug-in projection decomposition over all n(n-1)/2 pairs:
//   f1(X_i) = (n-1)^-1 sum_{j != i} f_s(X_i - X_j) - f0,
//   f2(X_i, X_j) = f_s(X_i - X_j) - f0 - f1(X_i) - f1(X_j).
Decomposition decompose(const Dataset& data, const DifferenceKernel& kernel);

struct VariancePrediction {
  PairScheme scheme;
  int n = 0;
  Matrix predicted;  // for n * Var of the design's U-statistic
};

// Complete: 4 Gamma_1 + 2 (n-1)^-1 Gamma_2; Balanced(d): 4 Gamma_1 +
// d^-1 Gamma_2. RandomizedCycles has no finite-n identity here.
VariancePrediction predict_variance(const Decomposition& dec,
                                    const PairScheme& scheme, int n);

using DatasetSampler = std::function<Dataset(Rng&)>;

// Simulates reps independent datasets, computes the design U-statistic on
// each, and returns n * (sample covariance of U). RandomizedCycles designs
// redraw their permutations every replication.
Matrix empirical_u_variance(const DatasetSampler& sampler,
                            const DifferenceKernel& kernel,
                            const PairScheme& scheme, int n, int reps,
                            std::uint64_t seed);

// Covariance of the limit of sqrt(n) (estimate - target) for a difference
// design with d pairs per index: 4 Gamma_1 + d^-1 Gamma_2, the complete
// design being d = nullopt (infinity). dec must come from the influence
// kernel of the functional, which is known in closed form only at spherical
// references.
Matrix predict_scatter_covariance(const Decomposition& dec_of_influence,
                                  std::optional<int> d);

using InfluenceFn = std::function<Matrix(const Vector&)>;

// Projection decomposition of an influence kernel J (even, matrix-valued):
// plug-in estimates of H1(x) = E J(x - X) and the doubly centered residual,
// vectorized like matrix_kernel. The plug-in recenters by the empirical
// kernel mean.
Decomposition decompose_influence(const Dataset& data,
                                  const InfluenceFn& influence);

using VectorSampler = std::function<Vector(Rng&)>;

// Population-level moments of a difference kernel, estimated from
// independent triples (X1, X2, X3):
//   gamma    = Var(f(X1 - X2))
//   gamma_s  = Var(f_s(X1 - X2))
//   gamma1   = Cov(f_s(X1 - X2), f_s(X1 - X3))   (= Var(f1(X1)))
//   gamma2   = gamma_s - 2 gamma1
// Entrywise standard errors come from batch means (batches of equal size).
struct PopulationMoments {
  Vector f0;
  Matrix gamma, gamma_s, gamma1, gamma2;
  Matrix gamma1_se, gamma2_se, gamma_s_se, gamma_se;
};

PopulationMoments population_moments(const VectorSampler& sampler,
                                     const DifferenceKernel& kernel,
                                     long triples, std::uint64_t seed,
                                     int batches = 100);

}  // namespace symscatter
