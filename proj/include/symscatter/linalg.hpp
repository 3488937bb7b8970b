// Dense symmetric / positive definite matrix primitives: Cholesky wrapper,
// log-determinant, shape normalization and the affine-invariant geodesic
// distance used to score scatter estimates.
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "symscatter/errors.hpp"

namespace symscatter {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Average of m and its transpose, evaluated into a fresh matrix so callers
// may safely assign the result back to m.
inline Matrix symmetric_part(const Matrix& m) {
  return 0.5 * (m + m.transpose());
}

// Square matrix with exact entrywise symmetry, enforced on construction by
// writing both triangles from the same averaged value.
class SymMatrix {
 public:
  explicit SymMatrix(const Matrix& m);

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& mat() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

// Symmetric positive definite matrix. Definiteness is checked on
// construction via Cholesky; the factorization is kept for reuse.
class SpdMatrix {
 public:
  explicit SpdMatrix(const SymMatrix& s);
  explicit SpdMatrix(const Matrix& m);  // symmetrizes first

  static SpdMatrix identity(Eigen::Index q);

  Eigen::Index dim() const { return sym_.dim(); }
  const Matrix& mat() const { return sym_.mat(); }
  const Eigen::LLT<Matrix>& llt() const { return llt_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return sym_(i, j); }

 private:
  SymMatrix sym_;
  Eigen::LLT<Matrix> llt_;
};

// Lower triangular factor L with L * L^T equal to m.
Matrix spd_factorize(const SpdMatrix& m);

double log_det(const SpdMatrix& m);

// det(result) == 1; result is a positive multiple of m.
SpdMatrix shape_normalize(const SpdMatrix& m);

// sqrt(sum_j log^2 lambda_j(a^-1 b)), computed through the symmetric pencil
// L^-1 b L^-T with a = L L^T. Zero iff a == b.
double geodesic_distance(const SpdMatrix& a, const SpdMatrix& b);

struct EigenSym {
  Vector values;   // descending
  Matrix vectors;  // orthonormal columns, matching order
};

EigenSym eigen_sym(const SymMatrix& m);

}  // namespace symscatter
