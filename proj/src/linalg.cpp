#include "symscatter/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace symscatter {

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw DimensionMismatch("SymMatrix requires a nonempty square matrix");
  }
  m_ = m;
  for (Eigen::Index i = 0; i < m_.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m_.cols(); ++j) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      m_(i, j) = v;
      m_(j, i) = v;
    }
  }
}

SpdMatrix::SpdMatrix(const SymMatrix& s) : sym_(s), llt_(s.mat()) {
  if (llt_.info() != Eigen::Success) {
    throw NotPositiveDefinite("matrix is not positive definite");
  }
}

SpdMatrix::SpdMatrix(const Matrix& m) : SpdMatrix(SymMatrix(m)) {}

SpdMatrix SpdMatrix::identity(Eigen::Index q) {
  return SpdMatrix(Matrix(Matrix::Identity(q, q)));
}

Matrix spd_factorize(const SpdMatrix& m) { return m.llt().matrixL(); }

double log_det(const SpdMatrix& m) {
  // det = prod diag(L)^2
  return 2.0 * Matrix(m.llt().matrixL()).diagonal().array().log().sum();
}

SpdMatrix shape_normalize(const SpdMatrix& m) {
  const double q = static_cast<double>(m.dim());
  const double c = std::exp(-log_det(m) / q);
  return SpdMatrix(Matrix(c * m.mat()));
}

double geodesic_distance(const SpdMatrix& a, const SpdMatrix& b) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch("geodesic_distance: dimension mismatch");
  }
  const auto& L = a.llt().matrixL();
  const Matrix half = L.solve(b.mat());                  // L^-1 B
  const Matrix pencil = L.solve(half.transpose());       // L^-1 B L^-T
  Eigen::SelfAdjointEigenSolver<Matrix> es(
      0.5 * (pencil + pencil.transpose()), Eigen::EigenvaluesOnly);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
    const double lambda = es.eigenvalues()(j);
    if (lambda <= 0.0) {
      throw NotPositiveDefinite("geodesic_distance: pencil not positive");
    }
    const double l = std::log(lambda);
    sum += l * l;
  }
  return std::sqrt(sum);
}

EigenSym eigen_sym(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.mat());
  const Eigen::Index q = m.dim();
  EigenSym out;
  out.values = es.eigenvalues().reverse();
  out.vectors.resize(q, q);
  for (Eigen::Index j = 0; j < q; ++j) {
    out.vectors.col(j) = es.eigenvectors().col(q - 1 - j);
  }
  return out;
}

}  // namespace symscatter
