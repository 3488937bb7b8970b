// Shared test utilities: deterministic random matrices, chi-square tail
// probabilities for goodness-of-fit checks, and simple quadrature. These are
// oracle-side helpers, independent of the library's solvers.
#pragma once

#include <Eigen/SVD>

#include <cmath>
#include <functional>
#include <vector>

#include "symscatter/linalg.hpp"
#include "symscatter/rng.hpp"

namespace test_support {

using symscatter::Matrix;
using symscatter::Rng;
using symscatter::Vector;

inline Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

inline Matrix random_spd(int q, Rng& rng) {
  const Matrix a = random_matrix(q, q, rng);
  return a * a.transpose() + Matrix::Identity(q, q);
}

// Nonsingular matrix with singular values clipped to [1/sqrt(c), sqrt(c)],
// so the condition number is at most c.
inline Matrix random_conditioned(int q, double max_condition, Rng& rng) {
  const Matrix a = random_matrix(q, q, rng);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vector s = svd.singularValues();
  const double hi = std::sqrt(max_condition);
  const double lo = 1.0 / hi;
  for (int i = 0; i < q; ++i) s(i) = std::min(std::max(s(i), lo), hi);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

// Regularized lower incomplete gamma P(a, x), series + continued fraction.
inline double gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - gln);
  }
  // continued fraction for Q(a, x)
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  const double q = std::exp(-x + a * std::log(x) - gln) * h;
  return 1.0 - q;
}

// Upper tail of the chi-square distribution with k degrees of freedom.
inline double chi_square_tail(double stat, double k) {
  return 1.0 - gamma_p(0.5 * k, 0.5 * stat);
}

// Composite Simpson rule on [a, b].
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, int intervals) {
  if (intervals % 2 != 0) ++intervals;
  const double h = (b - a) / intervals;
  double acc = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) {
    acc += f(a + i * h) * ((i % 2 == 0) ? 2.0 : 4.0);
  }
  return acc * h / 3.0;
}

inline double sample_mean(const std::vector<double>& v) {
  double acc = 0.0;
  for (const double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
  const double mean = sample_mean(v);
  double acc = 0.0;
  for (const double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace test_support
