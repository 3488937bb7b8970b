#include "symscatter/mscatter.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace symscatter {

namespace {

// z = L^-1 points^T (q x m) and s_i = ||z_i||^2 = y_i' Sigma^-1 y_i.
// Solves in place so no m-sized temporaries are allocated per iteration.
void whiten(const Eigen::LLT<Matrix>& llt, const Matrix& points, Matrix& z,
            Vector& s) {
  z = points.transpose();
  llt.matrixL().solveInPlace(z);
  s = z.colwise().squaredNorm();
}

double log_det_from_llt(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
}

Matrix weighted_second_moment(const WeightedSample& sample) {
  const Matrix wy = sample.weights.asDiagonal() * sample.points;
  Matrix m = sample.points.transpose() * wy;
  return 0.5 * (m + m.transpose());
}

double objective_from_parts(const Vector& s, const Vector& s0,
                            const Vector& weights, const RhoSpec& rho,
                            double logdet) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    acc += weights(i) * (rho.rho(s(i)) - rho.rho(s0(i)));
  }
  return acc + logdet;
}

}  // namespace

RhoNu::RhoNu(double nu, int q) : nu_(nu), q_(static_cast<double>(q)) {
  if (nu <= 0.0) throw Error("RhoNu requires nu > 0");
  if (q < 1) throw Error("RhoNu requires q >= 1");
}

double RhoNu::rho(double s) const { return (nu_ + q_) * std::log(s + nu_); }
double RhoNu::rho_prime(double s) const { return (nu_ + q_) / (s + nu_); }
double RhoNu::rho_double_prime(double s) const {
  const double t = s + nu_;
  return -(nu_ + q_) / (t * t);
}

WeightedSample::WeightedSample(Matrix pts, Vector w)
    : points(std::move(pts)), weights(std::move(w)) {
  if (points.rows() != weights.size() || points.rows() < 1) {
    throw DimensionMismatch("WeightedSample: points/weights size mismatch");
  }
  if ((weights.array() < 0.0).any()) {
    throw Error("WeightedSample: negative weight");
  }
  if (std::abs(weights.sum() - 1.0) > 1e-12) {
    throw Error("WeightedSample: weights must sum to 1");
  }
}

WeightedSample WeightedSample::uniform(Matrix pts) {
  const Eigen::Index m = pts.rows();
  return WeightedSample(std::move(pts),
                        Vector::Constant(m, 1.0 / static_cast<double>(m)));
}

double objective_l_rho(const SpdMatrix& sigma, const WeightedSample& sample,
                       const RhoSpec& rho) {
  if (sigma.dim() != sample.dim()) {
    throw DimensionMismatch("objective_l_rho: dimension mismatch");
  }
  Matrix z;
  Vector s;
  whiten(sigma.llt(), sample.points, z, s);
  const Vector s0 = sample.points.rowwise().squaredNorm();
  return objective_from_parts(s, s0, sample.weights, rho, log_det(sigma));
}

SolverReport solve_m_estimator(const WeightedSample& sample, const RhoSpec& rho,
                               double tol, int max_iter,
                               std::vector<double>* objective_trace) {
  if (tol <= 0.0) throw Error("solve_m_estimator: tol must be > 0");
  const int q = sample.dim();
  const int m = sample.size();
  if (rho.psi_infinity() <= static_cast<double>(q)) {
    throw Error("solve_m_estimator: psi(inf) must exceed the dimension");
  }

  Matrix sigma = weighted_second_moment(sample);
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw DegenerateSample("solve_m_estimator: second moment is singular");
  }

  const Vector s0 = sample.points.rowwise().squaredNorm();
  Matrix z;
  Vector s;
  whiten(llt, sample.points, z, s);
  double obj = objective_from_parts(s, s0, sample.weights, rho,
                                    log_det_from_llt(llt));

  Vector c(m);
  Matrix zc(q, m), w(q, q), z_cand(q, m);
  Vector s_cand(m);
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;

  for (int iter = 0; iter <= max_iter; ++iter) {
    if (objective_trace) objective_trace->push_back(obj);
    for (int i = 0; i < m; ++i) {
      c(i) = sample.weights(i) * rho.rho_prime(s(i));
    }
    // Whitened fixed-point image W = L^-1 Psi(Sigma) L^-T.
    zc.noalias() = z * c.asDiagonal();
    w.noalias() = zc * z.transpose();
    w = symmetric_part(w);
    residual = (w - Matrix::Identity(q, q)).norm();
    if (residual <= tol) {
      converged = true;
      break;
    }
    if (iter == max_iter) break;

    const Matrix lw = llt.matrixL() * w;
    Matrix psi = lw * Matrix(llt.matrixL()).transpose();
    psi = symmetric_part(psi);

    // Step-halving: shrink toward the current iterate until the objective
    // stops increasing (up to roundoff slack).
    const double slack = 1e-12 * (1.0 + std::abs(obj));
    double t = 1.0;
    bool accepted = false;
    while (t > 1e-10) {
      Matrix cand = sigma + t * (psi - sigma);
      cand = symmetric_part(cand);
      Eigen::LLT<Matrix> llt_cand(cand);
      if (llt_cand.info() != Eigen::Success) {
        if (t < 1.0) {
          throw DegenerateSample("solve_m_estimator: iterate lost rank");
        }
        t *= 0.5;
        continue;
      }
      whiten(llt_cand, sample.points, z_cand, s_cand);
      const double obj_cand = objective_from_parts(
          s_cand, s0, sample.weights, rho, log_det_from_llt(llt_cand));
      if (obj_cand <= obj + slack) {
        sigma = std::move(cand);
        llt = std::move(llt_cand);
        z.swap(z_cand);
        s.swap(s_cand);
        obj = obj_cand;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // numerical stationarity
    ++iterations;
  }

  return {SpdMatrix(sigma), iterations, residual, converged};
}

SolverReport solve_tyler(const WeightedSample& sample, double tol,
                         int max_iter) {
  if (tol <= 0.0) throw Error("solve_tyler: tol must be > 0");
  const int q = sample.dim();
  const int m = sample.size();
  for (int i = 0; i < m; ++i) {
    if (sample.points.row(i).squaredNorm() == 0.0) {
      throw ZeroVectorInSample("solve_tyler: sample contains the zero vector");
    }
  }

  Matrix sigma = weighted_second_moment(sample);
  {
    Eigen::LLT<Matrix> llt0(sigma);
    if (llt0.info() != Eigen::Success) {
      throw DegenerateSample("solve_tyler: second moment is singular");
    }
    sigma *= std::exp(-log_det_from_llt(llt0) / static_cast<double>(q));
  }

  Matrix z(q, m), zc(q, m), w(q, q);
  Vector s(m), c(m);
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;

  for (int iter = 0; iter <= max_iter; ++iter) {
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) {
      throw DegenerateSample("solve_tyler: iterate lost rank");
    }
    whiten(llt, sample.points, z, s);
    for (int i = 0; i < m; ++i) {
      c(i) = static_cast<double>(q) * sample.weights(i) / s(i);
    }
    zc.noalias() = z * c.asDiagonal();
    w.noalias() = zc * z.transpose();
    w = symmetric_part(w);
    residual = (w - Matrix::Identity(q, q)).norm();
    if (residual <= tol) {
      // Exact det-1 renormalization of the accepted iterate.
      sigma *= std::exp(-log_det_from_llt(llt) / static_cast<double>(q));
      converged = true;
      break;
    }
    if (iter == max_iter) break;

    const Matrix lw = llt.matrixL() * w;
    Matrix t_of_sigma = lw * Matrix(llt.matrixL()).transpose();
    t_of_sigma = symmetric_part(t_of_sigma);
    Eigen::LLT<Matrix> llt_t(t_of_sigma);
    if (llt_t.info() != Eigen::Success) {
      throw DegenerateSample("solve_tyler: fixed-point image lost rank");
    }
    sigma = t_of_sigma *
            std::exp(-log_det_from_llt(llt_t) / static_cast<double>(q));
    ++iterations;
  }

  return {SpdMatrix(sigma), iterations, residual, converged};
}

namespace {

double existence_bound(const ScatterFunctional& functional, int q, int dim) {
  if (functional.kind == ScatterFunctional::Kind::Tyler) {
    return static_cast<double>(dim) / static_cast<double>(q);
  }
  const double psi_inf = functional.rho->psi_infinity();
  return (psi_inf - static_cast<double>(q) + static_cast<double>(dim)) /
         psi_inf;
}

// Mass of sample points within distance tol of span(basis), the zero vector
// included. basis has orthonormal columns.
double subspace_mass(const WeightedSample& sample, const Matrix& basis,
                     double tol) {
  double mass = 0.0;
  for (int i = 0; i < sample.size(); ++i) {
    const Vector y = sample.points.row(i).transpose();
    const Vector res = y - basis * (basis.transpose() * y);
    if (res.norm() <= tol * (1.0 + y.norm())) mass += sample.weights(i);
  }
  return mass;
}

struct SubspaceSearch {
  const WeightedSample& sample;
  const ScatterFunctional& functional;
  double tol;
  std::vector<int> chosen;
  std::optional<SubspaceWitness> witness;

  // DFS over independent point subsets; basis holds an orthonormal basis of
  // their span. Stops at the first violated bound.
  bool search(const Matrix& basis, int next) {
    const int q = sample.dim();
    const int dim = static_cast<int>(basis.cols());
    if (dim >= 1) {
      const double mass = subspace_mass(sample, basis, tol);
      const double bound = existence_bound(functional, q, dim);
      if (mass >= bound) {
        witness = SubspaceWitness{chosen, dim, mass, bound};
        return false;
      }
    }
    if (dim == q - 1) return true;
    for (int i = next; i < sample.size(); ++i) {
      const Vector y = sample.points.row(i).transpose();
      Vector res = y;
      if (dim > 0) res -= basis * (basis.transpose() * y);
      const double rn = res.norm();
      if (rn <= tol * (1.0 + y.norm())) continue;  // dependent, same span
      Matrix extended(q, dim + 1);
      if (dim > 0) extended.leftCols(dim) = basis;
      extended.col(dim) = res / rn;
      chosen.push_back(i);
      if (!search(extended, i + 1)) return false;
      chosen.pop_back();
    }
    return true;
  }
};

}  // namespace

ExistenceVerdict check_existence(const WeightedSample& sample,
                                 const ScatterFunctional& functional,
                                 int brute_force_cap) {
  const int q = sample.dim();
  const int m = sample.size();
  const double tol = 1e-9;
  const bool tyler = functional.kind == ScatterFunctional::Kind::Tyler;

  // Mass at the origin (a zero-dimensional subspace).
  double mass_zero = 0.0;
  for (int i = 0; i < m; ++i) {
    if (sample.points.row(i).norm() <= tol) mass_zero += sample.weights(i);
  }
  if (tyler) {
    if (mass_zero > 0.0) {
      return {ExistenceVerdict::Kind::Fail,
              SubspaceWitness{{}, 0, mass_zero, 0.0}};
    }
  } else if (mass_zero >= existence_bound(functional, q, 0)) {
    return {ExistenceVerdict::Kind::Fail,
            SubspaceWitness{{}, 0, mass_zero, existence_bound(functional, q, 0)}};
  }
  if (q == 1) return {ExistenceVerdict::Kind::Pass, std::nullopt};

  if (m <= brute_force_cap) {
    SubspaceSearch search{sample, functional, tol, {}, std::nullopt};
    if (!search.search(Matrix(q, 0), 0)) {
      return {ExistenceVerdict::Kind::Fail, search.witness};
    }
    return {ExistenceVerdict::Kind::Pass, std::nullopt};
  }

  // Heuristic necessary checks for large samples.
  // 1) The points must span R^q, otherwise all mass sits in a proper span.
  Eigen::ColPivHouseholderQR<Matrix> qr(sample.points.transpose());
  qr.setThreshold(1e-9);
  const int rank = static_cast<int>(qr.rank());
  if (rank < q) {
    return {ExistenceVerdict::Kind::Fail,
            SubspaceWitness{{}, rank, 1.0, existence_bound(functional, q, rank)}};
  }
  // 2) No single direction (one-dimensional subspace) may carry too much
  // mass. Directions are grouped after canonical sign normalization.
  struct Dir {
    Vector u;
    double w;
    int index;
  };
  std::vector<Dir> dirs;
  dirs.reserve(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    Vector u = sample.points.row(i).transpose();
    const double norm = u.norm();
    if (norm <= tol) continue;
    u /= norm;
    for (int k = 0; k < q; ++k) {
      if (std::abs(u(k)) > tol) {
        if (u(k) < 0.0) u = -u;
        break;
      }
    }
    dirs.push_back({std::move(u), sample.weights(i), i});
  }
  std::sort(dirs.begin(), dirs.end(), [](const Dir& a, const Dir& b) {
    for (Eigen::Index k = 0; k < a.u.size(); ++k) {
      if (a.u(k) != b.u(k)) return a.u(k) < b.u(k);
    }
    return false;
  });
  const double line_bound = existence_bound(functional, q, 1);
  size_t g = 0;
  while (g < dirs.size()) {
    size_t h = g + 1;
    double mass = dirs[g].w;
    while (h < dirs.size() && (dirs[h].u - dirs[g].u).norm() <= 10.0 * tol) {
      mass += dirs[h].w;
      ++h;
    }
    if (mass >= line_bound) {
      return {ExistenceVerdict::Kind::Fail,
              SubspaceWitness{{dirs[g].index}, 1, mass, line_bound}};
    }
    g = h;
  }
  return {ExistenceVerdict::Kind::HeuristicPass, std::nullopt};
}

SymMatrix influence_spherical_m(const Vector& y, const RhoSpec& rho,
                                double kappa) {
  if (kappa <= -1.0) throw Error("influence_spherical_m: kappa must be > -1");
  const auto q = y.size();
  const double qd = static_cast<double>(q);
  const double s = y.squaredNorm();
  const double rp = rho.rho_prime(s);
  const double a = (qd + 2.0) / (qd + 2.0 + 2.0 * kappa);
  const double b = 1.0 / (1.0 + kappa);
  Matrix j = a * rp * (y * y.transpose() - (s / qd) * Matrix::Identity(q, q));
  j += b * (rp * s / qd - 1.0) * Matrix::Identity(q, q);
  return SymMatrix(j);
}

double kappa_spherical(const WeightedSample& sample, const RhoSpec& rho) {
  const double qd = static_cast<double>(sample.dim());
  double acc = 0.0;
  for (int i = 0; i < sample.size(); ++i) {
    const double s = sample.points.row(i).squaredNorm();
    acc += sample.weights(i) * rho.rho_double_prime(s) * s * s;
  }
  return acc / qd;
}

SymMatrix influence_spherical_tyler(const Vector& y) {
  const double s = y.squaredNorm();
  if (s == 0.0) {
    throw ZeroVectorInSample("influence_spherical_tyler: y must be nonzero");
  }
  const auto q = y.size();
  const double qd = static_cast<double>(q);
  const Matrix j = (qd + 2.0) * ((y * y.transpose()) / s -
                                 Matrix::Identity(q, q) / qd);
  return SymMatrix(j);
}

namespace {

SolverReport solve_functional(const WeightedSample& sample,
                              const ScatterFunctional& functional, double tol,
                              int max_iter) {
  if (functional.kind == ScatterFunctional::Kind::Tyler) {
    return solve_tyler(sample, tol, max_iter);
  }
  if (!functional.rho) throw Error("MType functional requires a RhoSpec");
  return solve_m_estimator(sample, *functional.rho, tol, max_iter);
}

}  // namespace

SolverReport symmetrized_scatter(const Dataset& data, const PairScheme& scheme,
                                 const ScatterFunctional& functional,
                                 double tol, int max_iter) {
  WeightedSample sample = WeightedSample::uniform(pair_differences(data, scheme));
  const ExistenceVerdict verdict = check_existence(sample, functional);
  if (!verdict.ok()) {
    const auto& w = *verdict.witness;
    throw DegenerateSample(
        "symmetrized_scatter: existence condition violated (subspace dim " +
        std::to_string(w.dim) + " carries mass " + std::to_string(w.mass) +
        " >= " + std::to_string(w.bound) + ")");
  }
  return solve_functional(sample, functional, tol, max_iter);
}

SpdMatrix averaged_randomized_estimator(const Dataset& data, int d,
                                        const ScatterFunctional& functional,
                                        double tol, std::uint64_t seed,
                                        int max_iter) {
  if (d < 1) throw Error("averaged_randomized_estimator requires d >= 1");
  const int n = data.n();
  if (n < 3) throw Error("averaged_randomized_estimator requires n >= 3");
  const int q = data.q();
  Matrix acc = Matrix::Zero(q, q);
  for (const Permutation& p : draw_cycle_permutations(n, d, seed)) {
    Matrix diffs(n, q);
    Eigen::Index row = 0;
    for (const IndexPair& pr : cycle_pairs(p)) {
      diffs.row(row++) = data.rows.row(pr.j - 1) - data.rows.row(pr.i - 1);
    }
    const SolverReport report = solve_functional(
        WeightedSample::uniform(std::move(diffs)), functional, tol, max_iter);
    if (!report.converged) {
      throw NotConverged("averaged_randomized_estimator: cycle solve did not converge");
    }
    acc += report.estimate.mat();
  }
  return SpdMatrix(Matrix(acc / static_cast<double>(d)));
}

}  // namespace symscatter
