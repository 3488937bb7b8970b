// Command line front end: estimate scatter matrices from CSV datasets, run
// the Monte-Carlo experiment harness, decompose difference kernels, and dump
// pair designs. Errors are reported as JSON on stderr; exit code 2 flags a
// usage error, 1 a runtime failure.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "symscatter/mscatter.hpp"
#include "symscatter/pairs.hpp"
#include "symscatter/sim.hpp"
#include "symscatter/ustats.hpp"

namespace {

using symscatter::Json;
using symscatter::Matrix;

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_to_json(const symscatter::Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

symscatter::Dataset load_dataset(const std::string& path, bool header) {
  std::ifstream in(path);
  if (!in) throw symscatter::Error("cannot open dataset file: " + path);
  return symscatter::read_dataset_csv(in, header);
}

symscatter::ScatterFunctional make_functional(const std::string& name,
                                              double nu, int q) {
  if (name == "tyler") return symscatter::ScatterFunctional::tyler();
  if (name == "m") {
    return symscatter::ScatterFunctional::m_type(
        std::make_shared<symscatter::RhoNu>(nu, q));
  }
  throw symscatter::Error("functional must be 'tyler' or 'm'");
}

struct EstimateArgs {
  std::string input;
  bool header = false;
  std::string functional = "tyler";
  double nu = 1.0;
  std::string scheme = "complete";
  int d = 0;
  std::uint64_t seed = 0;
  double tol = symscatter::kDefaultTol;
  int max_iter = symscatter::kDefaultMaxIter;
};

int run_estimate(const EstimateArgs& args) {
  const symscatter::Dataset data = load_dataset(args.input, args.header);
  const auto functional = make_functional(args.functional, args.nu, data.q());

  Json out;
  out["n"] = data.n();
  out["q"] = data.q();
  out["functional"] = args.functional;
  out["scheme"] = args.scheme;

  if (args.scheme == "randomized") {
    if (args.d < 1) throw symscatter::Error("randomized scheme needs --d >= 1");
    out["d"] = args.d;
    const symscatter::SpdMatrix avg = symscatter::averaged_randomized_estimator(
        data, args.d, functional, args.tol, args.seed, args.max_iter);
    out["cycles"] = args.d;
    out["estimate"] = matrix_to_json(avg.mat());
    out["shape"] = matrix_to_json(symscatter::shape_normalize(avg).mat());
    out["converged"] = true;
  } else {
    symscatter::PairScheme scheme = symscatter::PairScheme::complete();
    if (args.scheme == "balanced") {
      scheme = symscatter::PairScheme::balanced(args.d);
      out["d"] = args.d;
    } else if (args.scheme != "complete") {
      throw symscatter::Error("scheme must be complete, balanced or randomized");
    }
    const symscatter::SolverReport report = symscatter::symmetrized_scatter(
        data, scheme, functional, args.tol, args.max_iter);
    out["estimate"] = matrix_to_json(report.estimate.mat());
    out["shape"] =
        matrix_to_json(symscatter::shape_normalize(report.estimate).mat());
    out["iterations"] = report.iterations;
    out["residual"] = report.residual;
    out["converged"] = report.converged;
    if (!report.converged) {
      std::cout << out.dump(2) << std::endl;
      throw symscatter::NotConverged("solver did not reach tolerance");
    }
  }
  std::cout << out.dump(2) << std::endl;
  return 0;
}

struct SimulateArgs {
  std::string config_path;
  std::string rows_path;
  std::string summary_path;
  bool timing = false;
  int threads = 1;
};

int run_simulate(const SimulateArgs& args) {
  std::ifstream in(args.config_path);
  if (!in) throw symscatter::Error("cannot open config file: " + args.config_path);
  Json config_json;
  try {
    config_json = Json::parse(in);
  } catch (const std::exception& e) {
    throw symscatter::Error(std::string("config is not valid JSON: ") + e.what());
  }
  const auto config = symscatter::parse_experiment_config(config_json);
  const auto result = symscatter::run_experiment(config, args.threads);

  std::ofstream rows_out(args.rows_path);
  if (!rows_out) throw symscatter::Error("cannot write " + args.rows_path);
  symscatter::write_rows_csv(rows_out, result.rows, args.timing);

  std::ofstream summary_out(args.summary_path);
  if (!summary_out) throw symscatter::Error("cannot write " + args.summary_path);
  summary_out << result.summary.dump(2) << '\n';
  return 0;
}

struct DecomposeArgs {
  std::string input;
  bool header = false;
  std::string kernel = "capped-norm";
  std::vector<int> d_values;
};

int run_decompose(const DecomposeArgs& args) {
  const symscatter::Dataset data = load_dataset(args.input, args.header);
  const auto kernel = symscatter::make_named_kernel(args.kernel, data.q());
  const auto dec = symscatter::decompose(data, kernel);

  Json out;
  out["n"] = data.n();
  out["q"] = data.q();
  out["kernel"] = args.kernel;
  out["r"] = kernel.r;
  out["f0"] = vector_to_json(dec.f0);
  out["gamma1"] = matrix_to_json(dec.gamma1);
  out["gamma2"] = matrix_to_json(dec.gamma2);

  Json predictions;
  predictions["complete"] = matrix_to_json(
      symscatter::predict_variance(dec, symscatter::PairScheme::complete(),
                                   data.n())
          .predicted);
  if (!args.d_values.empty()) {
    Json balanced;
    for (const int d : args.d_values) {
      balanced[std::to_string(d)] = matrix_to_json(
          symscatter::predict_variance(
              dec, symscatter::PairScheme::balanced(d), data.n())
              .predicted);
    }
    predictions["balanced"] = std::move(balanced);
  }
  out["predictions"] = std::move(predictions);
  std::cout << out.dump(2) << std::endl;
  return 0;
}

struct PairsArgs {
  int n = 0;
  int d = 0;
  std::string scheme = "complete";
  std::uint64_t seed = 0;
  std::string out_path;
};

int run_pairs(const PairsArgs& args) {
  symscatter::PairScheme scheme = symscatter::PairScheme::complete();
  if (args.scheme == "balanced") {
    scheme = symscatter::PairScheme::balanced(args.d);
  } else if (args.scheme == "randomized") {
    scheme = symscatter::PairScheme::randomized_cycles(args.d, args.seed);
  } else if (args.scheme != "complete") {
    throw symscatter::Error("scheme must be complete, balanced or randomized");
  }

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!args.out_path.empty()) {
    file.open(args.out_path);
    if (!file) throw symscatter::Error("cannot write " + args.out_path);
    out = &file;
  }
  *out << "i,j\n";
  symscatter::for_each_pair(scheme, args.n, [&](int i, int j) {
    *out << i << ',' << j << '\n';
  });
  return 0;
}

void print_error(const std::string& type, const std::string& message) {
  Json err;
  err["error"] = message;
  err["type"] = type;
  std::cerr << err.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symmetrized scatter estimation via pairwise-difference designs"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* estimate = app.add_subcommand(
      "estimate", "Estimate a scatter matrix from a CSV dataset");
  estimate->add_option("--input", est.input, "dataset CSV path")->required();
  estimate->add_flag("--header", est.header, "dataset CSV has a header row");
  estimate->add_option("--functional", est.functional, "tyler | m");
  estimate->add_option("--nu", est.nu, "nu for the m functional");
  estimate->add_option("--scheme", est.scheme,
                       "complete | balanced | randomized");
  estimate->add_option("--d", est.d, "pairs per index");
  estimate->add_option("--seed", est.seed, "seed for randomized scheme");
  estimate->add_option("--tol", est.tol, "solver tolerance");
  estimate->add_option("--max-iter", est.max_iter, "iteration cap");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand(
      "simulate", "Run a Monte-Carlo experiment from a JSON config");
  simulate->add_option("--config", sim.config_path, "config JSON path")
      ->required();
  simulate->add_option("--rows", sim.rows_path, "output rows CSV path")
      ->required();
  simulate->add_option("--summary", sim.summary_path, "output summary JSON path")
      ->required();
  simulate->add_flag("--timing", sim.timing,
                     "write measured runtimes (breaks byte-reproducibility)");
  simulate->add_option("--threads", sim.threads, "worker threads");

  DecomposeArgs dec;
  auto* decompose = app.add_subcommand(
      "decompose", "Projection decomposition of a difference kernel");
  decompose->add_option("--input", dec.input, "dataset CSV path")->required();
  decompose->add_flag("--header", dec.header, "dataset CSV has a header row");
  decompose->add_option("--kernel", dec.kernel,
                        "norm | capped-norm | first-coordinate | outer | "
                        "tyler-influence");
  decompose->add_option("--d", dec.d_values,
                        "balanced d values to include in the predictions");

  PairsArgs pairs;
  auto* pairs_cmd =
      app.add_subcommand("pairs", "Dump a design's index pairs as CSV");
  pairs_cmd->add_option("--n", pairs.n, "sample size")->required();
  pairs_cmd->add_option("--d", pairs.d, "pairs per index");
  pairs_cmd->add_option("--scheme", pairs.scheme,
                        "complete | balanced | randomized");
  pairs_cmd->add_option("--seed", pairs.seed, "seed for randomized scheme");
  pairs_cmd->add_option("--out", pairs.out_path, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (estimate->parsed()) return run_estimate(est);
    if (simulate->parsed()) return run_simulate(sim);
    if (decompose->parsed()) return run_decompose(dec);
    if (pairs_cmd->parsed()) return run_pairs(pairs);
  } catch (const symscatter::Error& e) {
    print_error("runtime", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
