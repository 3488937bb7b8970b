// Python bindings for the main operations: scatter estimation on raw data or
// pairwise-difference designs, shape and geodesic-distance utilities, pair
// design enumeration, kernel decompositions and the experiment harness.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <string>

#include "symscatter/mscatter.hpp"
#include "symscatter/pairs.hpp"
#include "symscatter/sim.hpp"
#include "symscatter/ustats.hpp"

namespace py = pybind11;
using namespace symscatter;

namespace {

PairScheme scheme_from(const std::string& name, int d, std::uint64_t seed) {
  if (name == "complete") return PairScheme::complete();
  if (name == "balanced") return PairScheme::balanced(d);
  if (name == "randomized") return PairScheme::randomized_cycles(d, seed);
  throw Error("scheme must be complete, balanced or randomized");
}

ScatterFunctional functional_from(const std::string& name, double nu, int q) {
  if (name == "tyler") return ScatterFunctional::tyler();
  if (name == "m") return ScatterFunctional::m_type(std::make_shared<RhoNu>(nu, q));
  throw Error("functional must be 'tyler' or 'm'");
}

py::dict report_to_dict(const SolverReport& report) {
  py::dict out;
  out["estimate"] = report.estimate.mat();
  out["shape"] = shape_normalize(report.estimate).mat();
  out["iterations"] = report.iterations;
  out["residual"] = report.residual;
  out["converged"] = report.converged;
  return out;
}

DistributionSpec distribution_from(const std::string& kind, int df,
                                   const std::optional<Matrix>& sigma) {
  if (kind == "iid-exponential") return DistributionSpec::iid_exponential();
  if (kind == "iid-gaussian") return DistributionSpec::iid_gaussian();
  if (kind == "elliptical-t") {
    if (!sigma) throw Error("elliptical-t requires sigma");
    return DistributionSpec::elliptical_t(df, *sigma);
  }
  throw Error("unknown distribution kind: " + kind);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Symmetrized scatter estimation via pairwise-difference designs";

  py::register_exception<Error>(m, "SymscatterError");

  m.def(
      "tyler_scatter",
      [](const Matrix& points, double tol, int max_iter) {
        return report_to_dict(
            solve_tyler(WeightedSample::uniform(points), tol, max_iter));
      },
      py::arg("points"), py::arg("tol") = kDefaultTol,
      py::arg("max_iter") = kDefaultMaxIter,
      "Tyler's scatter estimate (determinant one) of a centered sample.");

  m.def(
      "m_scatter",
      [](const Matrix& points, double nu, double tol, int max_iter) {
        const RhoNu rho(nu, static_cast<int>(points.cols()));
        return report_to_dict(solve_m_estimator(WeightedSample::uniform(points),
                                                rho, tol, max_iter));
      },
      py::arg("points"), py::arg("nu") = 1.0, py::arg("tol") = kDefaultTol,
      py::arg("max_iter") = kDefaultMaxIter,
      "M-estimate of scatter with rho(s) = (nu+q) log(s+nu).");

  m.def(
      "symmetrized_scatter",
      [](const Matrix& data, const std::string& functional, double nu,
         const std::string& scheme, int d, std::uint64_t seed, double tol,
         int max_iter) {
        const Dataset ds{Matrix(data)};
        return report_to_dict(symmetrized_scatter(
            ds, scheme_from(scheme, d, seed),
            functional_from(functional, nu, ds.q()), tol, max_iter));
      },
      py::arg("data"), py::arg("functional") = "tyler", py::arg("nu") = 1.0,
      py::arg("scheme") = "complete", py::arg("d") = 0, py::arg("seed") = 0,
      py::arg("tol") = kDefaultTol, py::arg("max_iter") = kDefaultMaxIter,
      "Scatter of the pairwise differences of the rows of `data`.");

  m.def(
      "averaged_randomized_scatter",
      [](const Matrix& data, int d, const std::string& functional, double nu,
         double tol, std::uint64_t seed) {
        const Dataset ds{Matrix(data)};
        return averaged_randomized_estimator(
                   ds, d, functional_from(functional, nu, ds.q()), tol, seed)
            .mat();
      },
      py::arg("data"), py::arg("d"), py::arg("functional") = "tyler",
      py::arg("nu") = 1.0, py::arg("tol") = kDefaultTol, py::arg("seed") = 0,
      "Average of d single-cycle scatter estimates on random cycles.");

  m.def(
      "shape",
      [](const Matrix& m_in) { return shape_normalize(SpdMatrix(m_in)).mat(); },
      py::arg("matrix"), "Determinant-one multiple of a positive definite matrix.");

  m.def(
      "log_det", [](const Matrix& m_in) { return log_det(SpdMatrix(m_in)); },
      py::arg("matrix"));

  m.def(
      "geodesic_distance",
      [](const Matrix& a, const Matrix& b) {
        return geodesic_distance(SpdMatrix(a), SpdMatrix(b));
      },
      py::arg("a"), py::arg("b"),
      "sqrt(sum of squared log eigenvalues of a^-1 b).");

  m.def(
      "pairs",
      [](int n, const std::string& scheme, int d, std::uint64_t seed) {
        const auto list = scheme_pairs(scheme_from(scheme, d, seed), n);
        Eigen::Matrix<long, Eigen::Dynamic, 2> out(list.size(), 2);
        for (size_t k = 0; k < list.size(); ++k) {
          out(static_cast<Eigen::Index>(k), 0) = list[k].i;
          out(static_cast<Eigen::Index>(k), 1) = list[k].j;
        }
        return out;
      },
      py::arg("n"), py::arg("scheme") = "complete", py::arg("d") = 0,
      py::arg("seed") = 0, "Index pairs (1-based) of a design.");

  m.def(
      "sample_permutation",
      [](int n, std::uint64_t seed) {
        Rng rng(seed);
        return sample_permutation(n, rng).images();
      },
      py::arg("n"), py::arg("seed") = 0,
      "Uniform random permutation of {1, ..., n}.");

  m.def(
      "decompose",
      [](const Matrix& data, const std::string& kernel) {
        const Dataset ds{Matrix(data)};
        const auto dec = decompose(ds, make_named_kernel(kernel, ds.q()));
        py::dict out;
        out["f0"] = dec.f0;
        out["f1_values"] = dec.f1_values;
        out["gamma1"] = dec.gamma1;
        out["gamma2"] = dec.gamma2;
        return out;
      },
      py::arg("data"), py::arg("kernel") = "capped-norm",
      "Plug-in projection decomposition of a named difference kernel.");

  m.def(
      "predict_u_variance",
      [](const Matrix& gamma1, const Matrix& gamma2, const std::string& scheme,
         int n, int d) {
        Decomposition dec;
        dec.gamma1 = gamma1;
        dec.gamma2 = gamma2;
        return predict_variance(dec, scheme_from(scheme, d, 0), n).predicted;
      },
      py::arg("gamma1"), py::arg("gamma2"), py::arg("scheme"), py::arg("n"),
      py::arg("d") = 0, "n * Var of the design U-statistic.");

  m.def(
      "generate_data",
      [](const std::string& kind, int n, int q, std::uint64_t seed, int df,
         const std::optional<Matrix>& sigma) {
        Rng rng(seed);
        return generate_data(distribution_from(kind, df, sigma), n, q, rng).rows;
      },
      py::arg("kind"), py::arg("n"), py::arg("q"), py::arg("seed") = 0,
      py::arg("df") = 0, py::arg("sigma") = std::nullopt,
      "Draw a dataset: iid-exponential, iid-gaussian or elliptical-t.");

  m.def(
      "run_experiment",
      [](const std::string& config_json, int threads) {
        const auto cfg = parse_experiment_config(Json::parse(config_json));
        const auto result = run_experiment(cfg, threads);
        py::list rows;
        for (const auto& row : result.rows) {
          py::dict r;
          r["rep"] = row.rep;
          r["d"] = row.d;
          r["scheme"] = row.scheme;
          r["approx_error"] = row.approx_error;
          r["est_error"] = row.est_error;
          r["full_error"] = row.full_error;
          r["failed"] = row.failed;
          rows.append(std::move(r));
        }
        py::dict out;
        out["rows"] = std::move(rows);
        out["summary_json"] = result.summary.dump();
        return out;
      },
      py::arg("config_json"), py::arg("threads") = 1,
      "Run the Monte-Carlo harness from a JSON config string.");
}
