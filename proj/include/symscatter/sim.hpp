// Monte-Carlo experiment harness: data generation, estimator comparison
// across pair designs and d, relative approximation / estimation errors,
// CSV rows and JSON summaries. Fully deterministic given (config, seed):
// every replication derives its own random streams from the seed and its
// index, so results do not depend on scheduling or worker count.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "symscatter/linalg.hpp"
#include "symscatter/mscatter.hpp"
#include "symscatter/pairs.hpp"
#include "symscatter/rng.hpp"

namespace symscatter {

using Json = nlohmann::ordered_json;

struct DistributionSpec {
  enum class Kind { IidExponential, IidGaussian, EllipticalT };

  Kind kind = Kind::IidGaussian;
  int df = 0;                            // EllipticalT
  std::optional<Matrix> sigma_star;      // EllipticalT scatter

  static DistributionSpec iid_exponential() {
    return {Kind::IidExponential, 0, std::nullopt};
  }
  static DistributionSpec iid_gaussian() {
    return {Kind::IidGaussian, 0, std::nullopt};
  }
  static DistributionSpec elliptical_t(int df, Matrix sigma_star) {
    return {Kind::EllipticalT, df, std::move(sigma_star)};
  }
};

Dataset generate_data(const DistributionSpec& spec, int n, int q, Rng& rng);

struct ExperimentConfig {
  int n = 0;
  int q = 0;
  DistributionSpec distribution;
  ScatterFunctional::Kind functional = ScatterFunctional::Kind::MType;
  double rho_nu = 1.0;
  std::vector<int> d_values;
  bool scheme_balanced = true;
  bool scheme_randomized = false;
  int reps = 1;
  std::uint64_t seed = 0;
  double tol = kDefaultTol;

  void validate() const;
  ScatterFunctional make_functional() const;
  // True shape matrix of the symmetrized distribution: the identity for the
  // iid component specs, shape(sigma_star) for elliptical ones.
  SpdMatrix true_shape() const;
};

// Strict parser: unknown keys are rejected.
ExperimentConfig parse_experiment_config(const Json& j);

struct ExperimentRow {
  int rep = 0;
  int d = 0;
  std::string scheme;          // "balanced" | "randomized"
  double approx_error = 0.0;   // D(H_{n,d}, H_n)
  double est_error = 0.0;      // D(H_{n,d}, H)
  double full_error = 0.0;     // D(H_n, H)
  double runtime_ms = 0.0;
  bool failed = false;         // solver failure; error fields are NaN
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  std::vector<double> full_errors;  // per replication, NaN when failed
  Json summary;
};

ExperimentResult run_experiment(const ExperimentConfig& config,
                                int threads = 1);

// Per (d, scheme): median / quartiles / Tukey whiskers (1.5 IQR) of the two
// relative error ratios. Quantiles use linear interpolation between order
// statistics (type 7). Failed rows are excluded and counted.
Json summarize(const std::vector<ExperimentRow>& rows,
               const std::vector<double>& full_errors);

double quantile_type7(std::vector<double> values, double p);

// Header: rep,d,scheme,approx_error,est_error,full_error,runtime_ms.
// Timings vary between runs, so they are written as 0 unless requested;
// everything else is reproducible byte for byte.
void write_rows_csv(std::ostream& out, const std::vector<ExperimentRow>& rows,
                    bool include_timing = false);
std::vector<ExperimentRow> read_rows_csv(std::istream& in);

// Plain numeric CSV, one observation per row.
Dataset read_dataset_csv(std::istream& in, bool has_header);

}  // namespace symscatter
