#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <vector>

#include "support.hpp"
#include "symscatter/ustats.hpp"

using namespace symscatter;
using test_support::random_matrix;

namespace {

Dataset gaussian_dataset(int n, int q, std::uint64_t seed) {
  Rng rng(seed);
  return Dataset(random_matrix(n, q, rng));
}

// U-statistic of the design: mean of the symmetrized kernel over its pairs.
Vector u_statistic(const Dataset& data, const DifferenceKernel& kernel,
                   const PairScheme& scheme) {
  Vector acc = Vector::Zero(kernel.r);
  long count = 0;
  for_each_pair(scheme, data.n(), [&](int i, int j) {
    acc += kernel.symmetrized(Vector(data.rows.row(j - 1) - data.rows.row(i - 1)));
    ++count;
  });
  return acc / static_cast<double>(count);
}

}  // namespace

TEST_CASE("decompose degenerate kernels") {
  const Dataset data = gaussian_dataset(10, 2, 50);

  SUBCASE("constant kernel") {
    const auto kernel =
        scalar_kernel([](const Vector&) { return 3.25; }, true);
    const Decomposition dec = decompose(data, kernel);
    CHECK(dec.f0(0) == doctest::Approx(3.25));
    CHECK(dec.f1_values.norm() <= 1e-13);
    CHECK(dec.gamma1.norm() <= 1e-13);
    CHECK(dec.gamma2.norm() <= 1e-13);
  }

  SUBCASE("odd kernels are annihilated by symmetrization") {
    const auto kernel = make_named_kernel("first-coordinate", 2);
    const Decomposition dec = decompose(data, kernel);
    CHECK(dec.f0.norm() <= 1e-14);
    CHECK(dec.f1_values.norm() <= 1e-14);
    CHECK(dec.gamma1.norm() <= 1e-14);
    CHECK(dec.gamma2.norm() <= 1e-14);
  }

  SUBCASE("requires at least three observations") {
    Matrix two(2, 2);
    two << 0.0, 1.0, 2.0, 3.0;
    CHECK_THROWS_AS(decompose(Dataset(two), make_named_kernel("norm", 2)),
                    Error);
  }
}

TEST_CASE("decompose against a brute-force double loop") {
  const int n = 8;
  const Dataset data = gaussian_dataset(n, 2, 51);
  const auto kernel = make_named_kernel("capped-norm", 2);
  const Decomposition dec = decompose(data, kernel);

  // oracle: direct double loops over ordered pairs
  double f0 = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      f0 += std::min((data.rows.row(i) - data.rows.row(j)).norm(), 2.0);
    }
  }
  f0 /= n * (n - 1);
  CHECK(dec.f0(0) == doctest::Approx(f0).epsilon(1e-12));

  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      row += std::min((data.rows.row(i) - data.rows.row(j)).norm(), 2.0);
    }
    const double f1 = row / (n - 1) - f0;
    CHECK(dec.f1_values(i, 0) == doctest::Approx(f1).epsilon(1e-12));
  }

  // centering by construction
  CHECK(std::abs(dec.f1_values.col(0).mean()) <= 1e-13);
}

TEST_CASE("plug-in reconstruction identity for complete and circulant designs") {
  for (const int n : {9, 18, 30}) {
    const Dataset data = gaussian_dataset(n, 3, 52 + n);
    for (const char* name : {"capped-norm", "outer"}) {
      const auto kernel = make_named_kernel(name, 3);
      const Decomposition dec = decompose(data, kernel);
      const Vector mean_f1 =
          dec.f1_values.colwise().mean().transpose();

      for (const PairScheme& scheme :
           {PairScheme::complete(), PairScheme::balanced(3)}) {
        const Vector u = u_statistic(data, kernel, scheme);
        // M term: design average of the doubly centered residuals
        Vector m_term = Vector::Zero(kernel.r);
        long count = 0;
        for_each_pair(scheme, n, [&](int i, int j) {
          const Vector fs = kernel.symmetrized(
              Vector(data.rows.row(j - 1) - data.rows.row(i - 1)));
          m_term += fs - dec.f0 - dec.f1_values.row(i - 1).transpose() -
                    dec.f1_values.row(j - 1).transpose();
          ++count;
        });
        m_term /= static_cast<double>(count);
        const Vector reconstructed = dec.f0 + 2.0 * mean_f1 + m_term;
        CHECK((u - reconstructed).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }
}

TEST_CASE("gamma matrices are PSD and invariant under relabeling") {
  const Dataset data = gaussian_dataset(14, 2, 53);
  const auto kernel = make_named_kernel("outer", 2);
  const Decomposition dec = decompose(data, kernel);

  for (const Matrix* g : {&dec.gamma1, &dec.gamma2}) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(*g);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }

  // reverse the observation order
  Matrix reversed = data.rows.colwise().reverse();
  const Decomposition dec2 = decompose(Dataset(reversed), kernel);
  CHECK((dec.gamma1 - dec2.gamma1).norm() <= 1e-12 * (1.0 + dec.gamma1.norm()));
  CHECK((dec.gamma2 - dec2.gamma2).norm() <= 1e-12 * (1.0 + dec.gamma2.norm()));
  CHECK((dec.f0 - dec2.f0).norm() <= 1e-13);
}

TEST_CASE("predict_variance") {
  Decomposition dec;
  dec.gamma1 = Matrix::Identity(2, 2) * 0.7;
  dec.gamma2 = Matrix::Zero(2, 2);

  SUBCASE("degenerate second component gives 4 gamma1 for every design") {
    CHECK(predict_variance(dec, PairScheme::complete(), 21)
              .predicted.isApprox(2.8 * Matrix::Identity(2, 2)));
    CHECK(predict_variance(dec, PairScheme::balanced(5), 21)
              .predicted.isApprox(2.8 * Matrix::Identity(2, 2)));
  }

  SUBCASE("d = (n-1)/2 with odd n equals the complete identity") {
    dec.gamma2 = Matrix::Identity(2, 2) * 1.3;
    const int n = 21;
    const Matrix a =
        predict_variance(dec, PairScheme::balanced((n - 1) / 2), n).predicted;
    const Matrix b = predict_variance(dec, PairScheme::complete(), n).predicted;
    CHECK(a == b);
  }

  SUBCASE("randomized cycles unsupported") {
    CHECK_THROWS_AS(
        predict_variance(dec, PairScheme::randomized_cycles(2, 1), 21),
        UnsupportedScheme);
  }
}

TEST_CASE("empirical_u_variance") {
  const int n = 11;
  const DatasetSampler sampler = [n](Rng& rng) {
    return Dataset(random_matrix(n, 2, rng));
  };

  SUBCASE("constant kernel has zero variance") {
    const auto kernel = scalar_kernel([](const Vector&) { return 1.0; }, true);
    const Matrix v = empirical_u_variance(sampler, kernel,
                                          PairScheme::complete(), n, 200, 60);
    CHECK(v.norm() <= 1e-24);
  }

  SUBCASE("complete and balanced((n-1)/2) coincide on the same draws") {
    const auto kernel = make_named_kernel("capped-norm", 2);
    const Matrix a = empirical_u_variance(sampler, kernel,
                                          PairScheme::complete(), n, 300, 61);
    const Matrix b = empirical_u_variance(
        sampler, kernel, PairScheme::balanced((n - 1) / 2), n, 300, 61);
    CHECK((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
  }

  SUBCASE("matches the finite-sample identity within 3 standard errors") {
    const auto kernel = make_named_kernel("capped-norm", 2);
    const VectorSampler point_sampler = [](Rng& rng) {
      Vector v(2);
      v(0) = rng.normal();
      v(1) = rng.normal();
      return v;
    };
    const PopulationMoments pop =
        population_moments(point_sampler, kernel, 400000, 62);

    const int reps = 4000;
    for (const int d : {1, 5}) {
      const Matrix emp = empirical_u_variance(
          sampler, kernel, PairScheme::balanced(d), n, reps, 63);
      const double pred = 4.0 * pop.gamma1(0, 0) + pop.gamma2(0, 0) / d;
      // combined uncertainty: empirical variance of a variance estimate
      // (approx sqrt(2/reps) relative for near-Gaussian U) plus the batch
      // SEs of the population moments
      const double se_emp = emp(0, 0) * std::sqrt(2.0 / reps);
      const double se_pred = std::sqrt(
          std::pow(4.0 * pop.gamma1_se(0, 0), 2) +
          std::pow(pop.gamma2_se(0, 0) / d, 2));
      const double se = std::sqrt(se_emp * se_emp + se_pred * se_pred);
      CHECK(std::abs(emp(0, 0) - pred) <= 3.0 * se);
    }
  }
}

TEST_CASE("population variance decomposition identities") {
  // gamma_s = 2 gamma1 + gamma2 with gamma2 estimated independently via the
  // plug-in decomposition, and gamma >= gamma_s in the Loewner order.
  const auto kernel = make_named_kernel("capped-norm", 2);
  const VectorSampler point_sampler = [](Rng& rng) {
    Vector v(2);
    v(0) = rng.exponential() - 1.0;  // asymmetric distribution
    v(1) = 0.5 * rng.normal();
    return v;
  };
  const PopulationMoments pop =
      population_moments(point_sampler, kernel, 600000, 64);

  SUBCASE("gamma2 from independent plug-in replications") {
    const int n_dec = 250, reps = 40;
    std::vector<double> gamma2_hats;
    for (int r = 0; r < reps; ++r) {
      Rng rng = Rng::derive(65, static_cast<std::uint64_t>(r));
      Matrix rows(n_dec, 2);
      for (int i = 0; i < n_dec; ++i) rows.row(i) = point_sampler(rng).transpose();
      gamma2_hats.push_back(decompose(Dataset(rows), kernel).gamma2(0, 0));
    }
    const double mean = test_support::sample_mean(gamma2_hats);
    const double se_plug =
        test_support::sample_sd(gamma2_hats) / std::sqrt(double(reps));
    const double identity_value = pop.gamma_s(0, 0) - 2.0 * pop.gamma1(0, 0);
    const double se = std::sqrt(
        se_plug * se_plug + std::pow(pop.gamma_s_se(0, 0), 2) +
        std::pow(2.0 * pop.gamma1_se(0, 0), 2));
    CHECK(std::abs(mean - identity_value) <= 3.0 * se);
  }

  SUBCASE("symmetrization cannot increase the variance (Loewner order)") {
    // r = 2 asymmetric kernel; min eigenvalue of gamma - gamma_s must not
    // be significantly negative. The eigenvalue perturbation is bounded by
    // the Frobenius norm of the entrywise uncertainty.
    DifferenceKernel vec2;
    vec2.r = 2;
    vec2.even = false;
    vec2.f = [](const Vector& z) {
      Vector v(2);
      v(0) = std::min(z.norm(), 2.0);
      v(1) = std::max(z(0), 0.0);
      return v;
    };
    const PopulationMoments p =
        population_moments(point_sampler, vec2, 400000, 71);
    const Matrix diff = p.gamma - p.gamma_s;
    Eigen::SelfAdjointEigenSolver<Matrix> es(diff);
    double se_fro = 0.0;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        se_fro += std::pow(p.gamma_se(a, b), 2) + std::pow(p.gamma_s_se(a, b), 2);
      }
    }
    se_fro = std::sqrt(se_fro);
    CHECK(es.eigenvalues().minCoeff() >= -3.0 * se_fro);
  }

  SUBCASE("asymmetric kernel makes the ordering strict on some entry") {
    // raw variance strictly exceeds the symmetrized one for an odd part
    const auto odd_kernel =
        scalar_kernel([](const Vector& z) { return z(0) + std::min(z.norm(), 1.0); },
                      false);
    const PopulationMoments p2 =
        population_moments(point_sampler, odd_kernel, 200000, 66);
    CHECK(p2.gamma(0, 0) - p2.gamma_s(0, 0) >
          3.0 * std::sqrt(std::pow(p2.gamma_se(0, 0), 2) +
                          std::pow(p2.gamma_s_se(0, 0), 2)));
  }
}

TEST_CASE("predict_scatter_covariance") {
  Decomposition dec;
  dec.gamma1 = Matrix::Identity(3, 3);
  dec.gamma2 = 2.0 * Matrix::Identity(3, 3);
  CHECK(predict_scatter_covariance(dec, std::nullopt)
            .isApprox(4.0 * Matrix::Identity(3, 3)));
  CHECK(predict_scatter_covariance(dec, 1)
            .isApprox(6.0 * Matrix::Identity(3, 3)));
  CHECK(predict_scatter_covariance(dec, 4)
            .isApprox(4.5 * Matrix::Identity(3, 3)));
}

TEST_CASE("decompose_influence") {
  SUBCASE("zero influence gives a zero decomposition") {
    const Dataset data = gaussian_dataset(8, 2, 67);
    const Decomposition dec = decompose_influence(
        data, [](const Vector&) { return Matrix(Matrix::Zero(2, 2)); });
    CHECK(dec.f0.norm() == 0.0);
    CHECK(dec.gamma1.norm() == 0.0);
    CHECK(dec.gamma2.norm() == 0.0);
  }

  SUBCASE("doubly centered residuals average to zero over all pairs") {
    const Dataset data = gaussian_dataset(12, 2, 68);
    const InfluenceFn influence = [](const Vector& z) {
      if (z.squaredNorm() == 0.0) return Matrix(Matrix::Zero(2, 2));
      return influence_spherical_tyler(z).mat();
    };
    const Decomposition dec = decompose_influence(data, influence);
    Vector acc = Vector::Zero(3);
    long count = 0;
    for (int i = 0; i < data.n(); ++i) {
      for (int j = i + 1; j < data.n(); ++j) {
        const Vector fs = vec_sym(
            influence(Vector(data.rows.row(i) - data.rows.row(j))));
        acc += fs - dec.f0 - dec.f1_values.row(i).transpose() -
               dec.f1_values.row(j).transpose();
        ++count;
      }
    }
    CHECK((acc / count).norm() <= 1e-10);
  }

  SUBCASE("projection terms decorrelate from the design residual as n grows") {
    const InfluenceFn influence = [](const Vector& z) {
      if (z.squaredNorm() == 0.0) return Matrix(Matrix::Zero(2, 2));
      return influence_spherical_tyler(z).mat();
    };
    std::vector<double> abs_corr;
    for (const int n : {50, 200, 800}) {
      const int reps = (n >= 800) ? 60 : 120;
      std::vector<double> a_vals, b_vals;
      for (int r = 0; r < reps; ++r) {
        Rng rng = Rng::derive(69, static_cast<std::uint64_t>(n),
                              static_cast<std::uint64_t>(r));
        const Dataset data(random_matrix(n, 2, rng));
        const Decomposition dec = decompose_influence(data, influence);
        // scalar projections of the linear term and the circulant residual
        const Vector mean_f1 = dec.f1_values.colwise().mean().transpose();
        Vector m_term = Vector::Zero(3);
        for_each_balanced_pair(n, 2, [&](int i, int j) {
          const Vector fs = vec_sym(influence(
              Vector(data.rows.row(i - 1) - data.rows.row(j - 1))));
          m_term += fs - dec.f0 - dec.f1_values.row(i - 1).transpose() -
                    dec.f1_values.row(j - 1).transpose();
        });
        m_term /= static_cast<double>(2 * n);
        a_vals.push_back(2.0 * mean_f1.sum());
        b_vals.push_back(m_term.sum());
      }
      const double ma = test_support::sample_mean(a_vals);
      const double mb = test_support::sample_mean(b_vals);
      double num = 0.0, va = 0.0, vb = 0.0;
      for (size_t k = 0; k < a_vals.size(); ++k) {
        num += (a_vals[k] - ma) * (b_vals[k] - mb);
        va += (a_vals[k] - ma) * (a_vals[k] - ma);
        vb += (b_vals[k] - mb) * (b_vals[k] - mb);
      }
      abs_corr.push_back(std::abs(num / std::sqrt(va * vb)));
    }
    CHECK(abs_corr.back() <= 0.35);
    CHECK(abs_corr.back() <= abs_corr.front() + 0.15);
  }
}

TEST_CASE("vec_sym round trip") {
  Rng rng(70);
  Matrix m = random_matrix(4, 4, rng);
  m = symmetric_part(m);
  CHECK(unvec_sym(vec_sym(m), 4) == m);
  CHECK(sym_vec_size(4) == 10);
}
