// M-functionals of scatter on weighted samples: the rho-driven family and
// Tyler's distribution-free functional, both solved by fixed-point iteration
// with an affine-invariant stopping rule. Also existence-condition checking,
// the spherical influence functions, and the symmetrized estimators composed
// from pairwise-difference designs.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "symscatter/linalg.hpp"
#include "symscatter/pairs.hpp"

namespace symscatter {

// Driving function rho: [0, inf) -> R with psi(s) = s rho'(s) strictly
// increasing and q < psi(inf) < inf for the working dimension q.
class RhoSpec {
 public:
  virtual ~RhoSpec() = default;
  virtual double rho(double s) const = 0;
  virtual double rho_prime(double s) const = 0;
  virtual double rho_double_prime(double s) const = 0;
  virtual double psi_infinity() const = 0;

  double psi(double s) const { return s * rho_prime(s); }
};

// rho_nu(s) = (nu + q) log(s + nu), nu > 0; psi(inf) = nu + q.
class RhoNu final : public RhoSpec {
 public:
  RhoNu(double nu, int q);

  double rho(double s) const override;
  double rho_prime(double s) const override;
  double rho_double_prime(double s) const override;
  double psi_infinity() const override { return nu_ + q_; }

  double nu() const { return nu_; }

 private:
  double nu_;
  double q_;
};

// Points with nonnegative weights summing to one: the empirical measure a
// scatter solver consumes. Pairwise-difference samples use uniform weights.
struct WeightedSample {
  Matrix points;   // m x q
  Vector weights;  // m, >= 0, sums to 1 (tolerance 1e-12)

  WeightedSample(Matrix pts, Vector w);
  static WeightedSample uniform(Matrix pts);

  int size() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }
};

struct ScatterFunctional {
  enum class Kind { MType, Tyler };

  Kind kind = Kind::Tyler;
  std::shared_ptr<const RhoSpec> rho;  // MType only

  static ScatterFunctional tyler() { return {Kind::Tyler, nullptr}; }
  static ScatterFunctional m_type(std::shared_ptr<const RhoSpec> rho) {
    return {Kind::MType, std::move(rho)};
  }
};

struct SolverReport {
  SpdMatrix estimate;
  int iterations = 0;
  double residual = 0.0;  // || Sigma^-1/2 Psi(Sigma) Sigma^-1/2 - I ||_F
  bool converged = false;
};

inline constexpr double kDefaultTol = 1e-9;
inline constexpr int kDefaultMaxIter = 500;

// Weighted average of rho(y' Sigma^-1 y) - rho(y' y) plus log det Sigma.
double objective_l_rho(const SpdMatrix& sigma, const WeightedSample& sample,
                       const RhoSpec& rho);

// Fixed-point iteration Sigma <- Psi(Sigma) with step-halving whenever the
// objective would increase; Psi(Sigma) = sum_i w_i rho'(y_i' Sigma^-1 y_i)
// y_i y_i'. Stops once the whitened residual falls below tol. The objective
// trace, when requested, records the value at each accepted iterate.
SolverReport solve_m_estimator(const WeightedSample& sample, const RhoSpec& rho,
                               double tol = kDefaultTol,
                               int max_iter = kDefaultMaxIter,
                               std::vector<double>* objective_trace = nullptr);

// Tyler's functional: iterate Sigma <- T(Sigma) / det(T(Sigma))^{1/q} with
// T(Sigma) = q sum_i w_i y_i y_i' / (y_i' Sigma^-1 y_i). The estimate has
// determinant one. Zero points are rejected.
SolverReport solve_tyler(const WeightedSample& sample,
                         double tol = kDefaultTol,
                         int max_iter = kDefaultMaxIter);

struct SubspaceWitness {
  std::vector<int> spanning_points;  // indices into the sample (0-based)
  int dim = 0;
  double mass = 0.0;
  double bound = 0.0;
};

struct ExistenceVerdict {
  enum class Kind { Pass, HeuristicPass, Fail };

  Kind kind = Kind::Pass;
  std::optional<SubspaceWitness> witness;  // present iff Fail

  bool ok() const { return kind != Kind::Fail; }
};

// A unique minimizer exists iff every proper linear subspace W carries mass
// below (psi(inf) - q + dim W) / psi(inf) (M-type, dim W >= 0) respectively
// dim(W)/q (Tyler, dim W >= 1, and no mass at the origin). Samples of at
// most brute_force_cap points are checked exactly by enumerating subspaces
// spanned by point subsets; larger samples get cheap necessary checks only
// (mass at zero, overall rank, per-direction mass), reported as
// HeuristicPass when nothing is violated.
ExistenceVerdict check_existence(const WeightedSample& sample,
                                 const ScatterFunctional& functional,
                                 int brute_force_cap = 25);

// Influence function of the M-functional at a spherical reference with unit
// scatter:
//   J(y) = (q+2)/(q+2+2 kappa) rho'(||y||^2) (y y' - ||y||^2/q I)
//        + (1+kappa)^-1 (rho'(||y||^2) ||y||^2 / q - 1) I.
SymMatrix influence_spherical_m(const Vector& y, const RhoSpec& rho,
                                double kappa);

// kappa = q^-1 sum_i w_i rho''(||y_i||^2) ||y_i||^4.
double kappa_spherical(const WeightedSample& sample, const RhoSpec& rho);

// Influence function of Tyler's functional at a spherical reference:
// (q+2) (||y||^-2 y y' - q^-1 I); trace-free, scale-free, y != 0.
SymMatrix influence_spherical_tyler(const Vector& y);

// Scatter of the pairwise-difference sample of the given design. The
// evaluated losses are even in y, so the +/- symmetrization of the
// difference measure is realized implicitly.
SolverReport symmetrized_scatter(const Dataset& data, const PairScheme& scheme,
                                 const ScatterFunctional& functional,
                                 double tol = kDefaultTol,
                                 int max_iter = kDefaultMaxIter);

// Entrywise average of d single-cycle estimates, each on the differences
// along one independent random cycle. Not shape-normalized; throws
// NotConverged if any per-cycle solve fails.
SpdMatrix averaged_randomized_estimator(const Dataset& data, int d,
                                        const ScatterFunctional& functional,
                                        double tol, std::uint64_t seed,
                                        int max_iter = kDefaultMaxIter);

}  // namespace symscatter
