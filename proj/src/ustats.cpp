#include "symscatter/ustats.hpp"

#include <cmath>
#include <utility>

namespace symscatter {

DifferenceKernel scalar_kernel(std::function<double(const Vector&)> f,
                               bool even) {
  DifferenceKernel k;
  k.r = 1;
  k.even = even;
  k.f = [fn = std::move(f)](const Vector& x) {
    Vector v(1);
    v(0) = fn(x);
    return v;
  };
  return k;
}

int sym_vec_size(int q) { return q * (q + 1) / 2; }

Vector vec_sym(const Matrix& m) {
  const int q = static_cast<int>(m.rows());
  Vector v(sym_vec_size(q));
  int k = 0;
  for (int i = 0; i < q; ++i) {
    for (int j = i; j < q; ++j) v(k++) = m(i, j);
  }
  return v;
}

Matrix unvec_sym(const Vector& v, int q) {
  Matrix m(q, q);
  int k = 0;
  for (int i = 0; i < q; ++i) {
    for (int j = i; j < q; ++j) {
      m(i, j) = v(k);
      m(j, i) = v(k);
      ++k;
    }
  }
  return m;
}

DifferenceKernel matrix_kernel(int q, std::function<Matrix(const Vector&)> f,
                               bool even) {
  DifferenceKernel k;
  k.r = sym_vec_size(q);
  k.even = even;
  k.f = [fn = std::move(f)](const Vector& x) { return vec_sym(fn(x)); };
  return k;
}

DifferenceKernel make_named_kernel(const std::string& name, int q) {
  if (name == "norm") {
    return scalar_kernel([](const Vector& z) { return z.norm(); }, true);
  }
  if (name == "capped-norm") {
    return scalar_kernel(
        [](const Vector& z) { return std::min(z.norm(), 2.0); }, true);
  }
  if (name == "first-coordinate") {
    return scalar_kernel([](const Vector& z) { return z(0); }, false);
  }
  if (name == "outer") {
    return matrix_kernel(
        q, [](const Vector& z) { return Matrix(z * z.transpose()); }, true);
  }
  if (name == "tyler-influence") {
    return matrix_kernel(
        q,
        [q](const Vector& z) {
          if (z.squaredNorm() == 0.0) return Matrix(Matrix::Zero(q, q));
          return influence_spherical_tyler(z).mat();
        },
        true);
  }
  throw Error("unknown kernel: " + name);
}

Decomposition decompose(const Dataset& data, const DifferenceKernel& kernel) {
  const int n = data.n();
  if (n < 3) throw Error("decompose requires n >= 3");
  const int r = kernel.r;
  const double pairs = static_cast<double>(n) * (n - 1) / 2.0;

  Matrix row_sums = Matrix::Zero(n, r);
  Vector f0 = Vector::Zero(r);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Vector v = kernel.symmetrized(
          Vector(data.rows.row(i) - data.rows.row(j)));
      f0 += v;
      row_sums.row(i) += v.transpose();
      row_sums.row(j) += v.transpose();
    }
  }
  f0 /= pairs;

  Matrix f1(n, r);
  for (int i = 0; i < n; ++i) {
    f1.row(i) = row_sums.row(i) / static_cast<double>(n - 1) - f0.transpose();
  }
  Matrix gamma1 = f1.transpose() * f1 / static_cast<double>(n - 1);
  gamma1 = symmetric_part(gamma1);

  Matrix gamma2 = Matrix::Zero(r, r);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Vector v = kernel.symmetrized(
          Vector(data.rows.row(i) - data.rows.row(j)));
      const Vector f2 = v - f0 - f1.row(i).transpose() - f1.row(j).transpose();
      gamma2 += f2 * f2.transpose();
    }
  }
  gamma2 /= pairs;
  gamma2 = symmetric_part(gamma2);

  return {std::move(f0), std::move(f1), std::move(gamma1), std::move(gamma2)};
}

VariancePrediction predict_variance(const Decomposition& dec,
                                    const PairScheme& scheme, int n) {
  validate_scheme(scheme, n);
  switch (scheme.kind) {
    case PairScheme::Kind::Complete:
      return {scheme, n,
              Matrix(4.0 * dec.gamma1 +
                     2.0 / static_cast<double>(n - 1) * dec.gamma2)};
    case PairScheme::Kind::Balanced:
      return {scheme, n,
              Matrix(4.0 * dec.gamma1 +
                     dec.gamma2 / static_cast<double>(scheme.d))};
    case PairScheme::Kind::RandomizedCycles:
      throw UnsupportedScheme(
          "predict_variance: no finite-n identity for randomized cycles");
  }
  throw Error("predict_variance: unreachable");
}

Matrix empirical_u_variance(const DatasetSampler& sampler,
                            const DifferenceKernel& kernel,
                            const PairScheme& scheme, int n, int reps,
                            std::uint64_t seed) {
  if (reps < 100) throw Error("empirical_u_variance requires reps >= 100");
  const int r = kernel.r;
  Matrix u_values(reps, r);
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(rep));
    const Dataset data = sampler(rng);
    if (data.n() != n) throw Error("empirical_u_variance: sampler size mismatch");
    PairScheme effective = scheme;
    if (scheme.kind == PairScheme::Kind::RandomizedCycles) {
      effective.seed = Rng::derive(seed, static_cast<std::uint64_t>(rep), 1)
                           .next_u64();
    }
    Vector acc = Vector::Zero(r);
    long count = 0;
    for_each_pair(effective, n, [&](int i, int j) {
      acc += kernel.symmetrized(
          Vector(data.rows.row(i - 1) - data.rows.row(j - 1)));
      ++count;
    });
    u_values.row(rep) = acc.transpose() / static_cast<double>(count);
  }
  const Eigen::RowVectorXd mean = u_values.colwise().mean();
  const Matrix centered = u_values.rowwise() - mean;
  Matrix cov = centered.transpose() * centered / static_cast<double>(reps - 1);
  return static_cast<double>(n) * 0.5 * (cov + cov.transpose());
}

Matrix predict_scatter_covariance(const Decomposition& dec_of_influence,
                                  std::optional<int> d) {
  Matrix out = 4.0 * dec_of_influence.gamma1;
  if (d) {
    if (*d < 1) throw Error("predict_scatter_covariance: d must be >= 1");
    out += dec_of_influence.gamma2 / static_cast<double>(*d);
  }
  return out;
}

Decomposition decompose_influence(const Dataset& data,
                                  const InfluenceFn& influence) {
  const int q = data.q();
  return decompose(data, matrix_kernel(q, influence, /*even=*/true));
}

PopulationMoments population_moments(const VectorSampler& sampler,
                                     const DifferenceKernel& kernel,
                                     long triples, std::uint64_t seed,
                                     int batches) {
  if (triples < batches || batches < 2) {
    throw Error("population_moments: need triples >= batches >= 2");
  }
  const int r = kernel.r;
  const long per_batch = triples / batches;

  // Batch accumulators of the raw moments; the full-sample estimates reuse
  // the batch sums.
  Matrix b_f0(batches, r);
  std::vector<Matrix> b_raw2(batches), b_sym2(batches), b_cross(batches);
  Matrix b_f0_raw(batches, r);

  for (int b = 0; b < batches; ++b) {
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(b));
    Vector f0_acc = Vector::Zero(r), f0_raw_acc = Vector::Zero(r);
    Matrix raw2 = Matrix::Zero(r, r), sym2 = Matrix::Zero(r, r),
           cross = Matrix::Zero(r, r);
    for (long t = 0; t < per_batch; ++t) {
      const Vector x1 = sampler(rng);
      const Vector x2 = sampler(rng);
      const Vector x3 = sampler(rng);
      const Vector raw = kernel.f(Vector(x1 - x2));
      const Vector as = kernel.symmetrized(Vector(x1 - x2));
      const Vector bs = kernel.symmetrized(Vector(x1 - x3));
      f0_acc += as;
      f0_raw_acc += raw;
      raw2 += raw * raw.transpose();
      sym2 += as * as.transpose();
      cross += 0.5 * (as * bs.transpose() + bs * as.transpose());
    }
    const double div = static_cast<double>(per_batch);
    b_f0.row(b) = f0_acc.transpose() / div;
    b_f0_raw.row(b) = f0_raw_acc.transpose() / div;
    b_raw2[static_cast<size_t>(b)] = raw2 / div;
    b_sym2[static_cast<size_t>(b)] = sym2 / div;
    b_cross[static_cast<size_t>(b)] = cross / div;
  }

  auto batch_stats = [&](const std::function<Matrix(int)>& value, Matrix& mean,
                         Matrix& se) {
    mean = Matrix::Zero(r, r);
    for (int b = 0; b < batches; ++b) mean += value(b);
    mean /= static_cast<double>(batches);
    Matrix var = Matrix::Zero(r, r);
    for (int b = 0; b < batches; ++b) {
      const Matrix d = value(b) - mean;
      var += d.cwiseProduct(d);
    }
    var /= static_cast<double>(batches - 1);
    se = (var / static_cast<double>(batches)).cwiseSqrt();
  };

  PopulationMoments out;
  out.f0 = b_f0.colwise().mean().transpose();

  auto gamma_of = [&](int b) {
    return Matrix(b_raw2[static_cast<size_t>(b)] -
                  b_f0_raw.row(b).transpose() * b_f0_raw.row(b));
  };
  auto gamma_s_of = [&](int b) {
    return Matrix(b_sym2[static_cast<size_t>(b)] -
                  b_f0.row(b).transpose() * b_f0.row(b));
  };
  auto gamma1_of = [&](int b) {
    return Matrix(b_cross[static_cast<size_t>(b)] -
                  b_f0.row(b).transpose() * b_f0.row(b));
  };
  auto gamma2_of = [&](int b) {
    return Matrix(gamma_s_of(b) - 2.0 * gamma1_of(b));
  };

  batch_stats(gamma_of, out.gamma, out.gamma_se);
  batch_stats(gamma_s_of, out.gamma_s, out.gamma_s_se);
  batch_stats(gamma1_of, out.gamma1, out.gamma1_se);
  batch_stats(gamma2_of, out.gamma2, out.gamma2_se);
  return out;
}

}  // namespace symscatter
