#include "symscatter/sim.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace symscatter {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

Dataset generate_data(const DistributionSpec& spec, int n, int q, Rng& rng) {
  if (n < 2 || q < 1) throw Error("generate_data requires n >= 2, q >= 1");
  Matrix rows(n, q);
  switch (spec.kind) {
    case DistributionSpec::Kind::IidExponential:
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < q; ++j) rows(i, j) = rng.exponential();
      }
      break;
    case DistributionSpec::Kind::IidGaussian:
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < q; ++j) rows(i, j) = rng.normal();
      }
      break;
    case DistributionSpec::Kind::EllipticalT: {
      if (spec.df < 1) throw Error("elliptical-t requires df >= 1");
      if (!spec.sigma_star || spec.sigma_star->rows() != q) {
        throw Error("elliptical-t requires a q x q sigma");
      }
      const SpdMatrix sigma(*spec.sigma_star);
      const Matrix l = spd_factorize(sigma);
      Vector g(q);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < q; ++j) g(j) = rng.normal();
        double chi2 = 0.0;
        for (int k = 0; k < spec.df; ++k) {
          const double z = rng.normal();
          chi2 += z * z;
        }
        rows.row(i) =
            (l * g * std::sqrt(static_cast<double>(spec.df) / chi2)).transpose();
      }
      break;
    }
  }
  return Dataset(std::move(rows));
}

void ExperimentConfig::validate() const {
  if (n < 2 || q < 1) throw Error("config: n >= 2 and q >= 1 required");
  if (reps < 1) throw Error("config: reps >= 1 required");
  if (tol <= 0.0) throw Error("config: tol > 0 required");
  if (functional == ScatterFunctional::Kind::MType && rho_nu <= 0.0) {
    throw Error("config: rho_nu > 0 required for the m functional");
  }
  for (const int d : d_values) {
    if (d < 1 || 2 * d > n - 1) {
      throw Error("config: d_values must satisfy 1 <= d <= (n-1)/2");
    }
  }
}

ScatterFunctional ExperimentConfig::make_functional() const {
  if (functional == ScatterFunctional::Kind::Tyler) {
    return ScatterFunctional::tyler();
  }
  return ScatterFunctional::m_type(std::make_shared<RhoNu>(rho_nu, q));
}

SpdMatrix ExperimentConfig::true_shape() const {
  if (distribution.kind == DistributionSpec::Kind::EllipticalT) {
    return shape_normalize(SpdMatrix(*distribution.sigma_star));
  }
  return SpdMatrix::identity(q);
}

ExperimentConfig parse_experiment_config(const Json& j) {
  static const std::vector<std::string> known = {
      "n", "q", "distribution", "functional", "rho_nu",
      "d_values", "schemes", "reps", "seed", "tol"};
  if (!j.is_object()) throw Error("config: expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw Error("config: unknown key '" + it.key() + "'");
    }
  }
  auto require = [&j](const char* key) -> const Json& {
    if (!j.contains(key)) throw Error(std::string("config: missing key '") + key + "'");
    return j.at(key);
  };

  ExperimentConfig cfg;
  cfg.n = require("n").get<int>();
  cfg.q = require("q").get<int>();

  const Json& dist = require("distribution");
  if (!dist.is_object() || !dist.contains("kind")) {
    throw Error("config: distribution needs a 'kind'");
  }
  for (auto it = dist.begin(); it != dist.end(); ++it) {
    const std::string& k = it.key();
    if (k != "kind" && k != "df" && k != "sigma") {
      throw Error("config: unknown distribution key '" + k + "'");
    }
  }
  const std::string kind = dist.at("kind").get<std::string>();
  if (kind == "iid-exponential") {
    cfg.distribution = DistributionSpec::iid_exponential();
  } else if (kind == "iid-gaussian") {
    cfg.distribution = DistributionSpec::iid_gaussian();
  } else if (kind == "elliptical-t") {
    if (!dist.contains("df") || !dist.contains("sigma")) {
      throw Error("config: elliptical-t needs 'df' and 'sigma'");
    }
    const auto rows = dist.at("sigma").get<std::vector<std::vector<double>>>();
    Matrix sigma(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) {
        throw Error("config: sigma must be square");
      }
      for (size_t jcol = 0; jcol < rows[i].size(); ++jcol) {
        sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(jcol)) =
            rows[i][jcol];
      }
    }
    cfg.distribution = DistributionSpec::elliptical_t(dist.at("df").get<int>(),
                                                      std::move(sigma));
  } else {
    throw Error("config: unknown distribution kind '" + kind + "'");
  }

  const std::string fn = require("functional").get<std::string>();
  if (fn == "tyler") {
    cfg.functional = ScatterFunctional::Kind::Tyler;
  } else if (fn == "m") {
    cfg.functional = ScatterFunctional::Kind::MType;
  } else {
    throw Error("config: functional must be 'tyler' or 'm'");
  }
  if (j.contains("rho_nu")) cfg.rho_nu = j.at("rho_nu").get<double>();

  cfg.d_values = require("d_values").get<std::vector<int>>();
  cfg.scheme_balanced = false;
  cfg.scheme_randomized = false;
  for (const auto& s : require("schemes").get<std::vector<std::string>>()) {
    if (s == "balanced") {
      cfg.scheme_balanced = true;
    } else if (s == "randomized") {
      cfg.scheme_randomized = true;
    } else {
      throw Error("config: unknown scheme '" + s + "'");
    }
  }
  cfg.reps = require("reps").get<int>();
  cfg.seed = require("seed").get<std::uint64_t>();
  if (j.contains("tol")) cfg.tol = j.at("tol").get<double>();
  cfg.validate();
  return cfg;
}

namespace {

struct RepOutput {
  std::vector<ExperimentRow> rows;
  double full_error = kNaN;
};

double elapsed_ms(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

RepOutput run_replication(const ExperimentConfig& cfg, int rep,
                          const SpdMatrix& h_true) {
  const ScatterFunctional functional = cfg.make_functional();
  Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(rep));
  const Dataset data = generate_data(cfg.distribution, cfg.n, cfg.q, rng);

  RepOutput out;
  std::optional<SpdMatrix> h_full;
  try {
    const SolverReport full =
        symmetrized_scatter(data, PairScheme::complete(), functional, cfg.tol);
    if (full.converged) {
      h_full = shape_normalize(full.estimate);
      out.full_error = geodesic_distance(*h_full, h_true);
    }
  } catch (const Error&) {
    // leave h_full unset; all rows of this replication are flagged
  }

  auto push_row = [&](int d, const char* scheme_name,
                      const std::optional<SpdMatrix>& h_d, double ms) {
    ExperimentRow row;
    row.rep = rep;
    row.d = d;
    row.scheme = scheme_name;
    row.runtime_ms = ms;
    if (h_full && h_d) {
      row.approx_error = geodesic_distance(*h_d, *h_full);
      row.est_error = geodesic_distance(*h_d, h_true);
      row.full_error = out.full_error;
      // Geodesic distance is a metric, so the three errors of a row must
      // satisfy the triangle inequality up to numerical noise.
      const double slack =
          1e-6 * (1.0 + row.est_error + row.full_error + row.approx_error);
      if (std::abs(row.est_error - row.full_error) >
          row.approx_error + slack) {
        throw Error("run_experiment: triangle sanity check failed");
      }
    } else {
      row.approx_error = kNaN;
      row.est_error = kNaN;
      row.full_error = out.full_error;
      row.failed = true;
    }
    out.rows.push_back(std::move(row));
  };

  for (const int d : cfg.d_values) {
    if (cfg.scheme_balanced) {
      const auto t0 = std::chrono::steady_clock::now();
      std::optional<SpdMatrix> h_d;
      try {
        const SolverReport rpt = symmetrized_scatter(
            data, PairScheme::balanced(d), functional, cfg.tol);
        if (rpt.converged) h_d = shape_normalize(rpt.estimate);
      } catch (const Error&) {
      }
      push_row(d, "balanced", h_d, elapsed_ms(t0));
    }
    if (cfg.scheme_randomized) {
      const auto t0 = std::chrono::steady_clock::now();
      std::optional<SpdMatrix> h_d;
      try {
        const std::uint64_t perm_seed =
            Rng::derive(cfg.seed, static_cast<std::uint64_t>(rep),
                        0x72616e64ULL + static_cast<std::uint64_t>(d))
                .next_u64();
        const SpdMatrix avg = averaged_randomized_estimator(
            data, d, functional, cfg.tol, perm_seed);
        h_d = shape_normalize(avg);
      } catch (const Error&) {
      }
      push_row(d, "randomized", h_d, elapsed_ms(t0));
    }
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  const SpdMatrix h_true = cfg.true_shape();

  std::vector<RepOutput> outputs(static_cast<size_t>(cfg.reps));
  if (threads < 1) threads = 1;
  threads = std::min(threads, cfg.reps);

  if (threads == 1) {
    for (int rep = 0; rep < cfg.reps; ++rep) {
      outputs[static_cast<size_t>(rep)] = run_replication(cfg, rep, h_true);
    }
  } else {
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (;;) {
        const int rep = next.fetch_add(1);
        if (rep >= cfg.reps) return;
        outputs[static_cast<size_t>(rep)] = run_replication(cfg, rep, h_true);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentResult result;
  result.full_errors.reserve(static_cast<size_t>(cfg.reps));
  for (auto& out : outputs) {
    result.full_errors.push_back(out.full_error);
    for (auto& row : out.rows) result.rows.push_back(std::move(row));
  }
  result.summary = summarize(result.rows, result.full_errors);
  return result;
}

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw Error("quantile of empty data");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

namespace {

Json ratio_stats(std::vector<double> values) {
  const double q1 = quantile_type7(values, 0.25);
  const double q3 = quantile_type7(values, 0.75);
  const double iqr = q3 - q1;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const double v : values) {
    if (v >= q1 - 1.5 * iqr) lo = std::min(lo, v);
    if (v <= q3 + 1.5 * iqr) hi = std::max(hi, v);
  }
  return Json{{"median", quantile_type7(values, 0.5)},
              {"q1", q1},
              {"q3", q3},
              {"whisker_low", lo},
              {"whisker_high", hi}};
}

}  // namespace

Json summarize(const std::vector<ExperimentRow>& rows,
               const std::vector<double>& full_errors) {
  if (rows.empty() && full_errors.empty()) {
    throw Error("summarize: no rows");
  }
  Json summary;
  std::vector<double> fulls;
  for (const double f : full_errors) {
    if (std::isfinite(f)) fulls.push_back(f);
  }
  summary["replications"] = full_errors.size();
  summary["full_error_median"] =
      fulls.empty() ? Json() : Json(quantile_type7(fulls, 0.5));

  // group rows by (scheme, d), keeping first-appearance order
  std::vector<std::pair<std::string, int>> keys;
  long excluded = 0;
  for (const auto& row : rows) {
    const std::pair<std::string, int> key{row.scheme, row.d};
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      keys.push_back(key);
    }
    if (row.failed || !std::isfinite(row.full_error) || row.full_error == 0.0) {
      ++excluded;
    }
  }
  summary["excluded_rows"] = excluded;

  Json groups = Json::array();
  for (const auto& [scheme, d] : keys) {
    std::vector<double> approx_ratio, est_ratio;
    long used = 0;
    for (const auto& row : rows) {
      if (row.scheme != scheme || row.d != d) continue;
      if (row.failed || !std::isfinite(row.full_error) || row.full_error == 0.0) {
        continue;
      }
      approx_ratio.push_back(row.approx_error / row.full_error);
      est_ratio.push_back(row.est_error / row.full_error);
      ++used;
    }
    Json group;
    group["scheme"] = scheme;
    group["d"] = d;
    group["rows"] = used;
    if (used > 0) {
      group["approx_ratio"] = ratio_stats(approx_ratio);
      group["est_ratio"] = ratio_stats(est_ratio);
    }
    groups.push_back(std::move(group));
  }
  summary["groups"] = std::move(groups);
  return summary;
}

void write_rows_csv(std::ostream& out, const std::vector<ExperimentRow>& rows,
                    bool include_timing) {
  out << "rep,d,scheme,approx_error,est_error,full_error,runtime_ms\n";
  for (const auto& row : rows) {
    out << row.rep << ',' << row.d << ',' << row.scheme << ','
        << format_double(row.approx_error) << ','
        << format_double(row.est_error) << ','
        << format_double(row.full_error) << ','
        << format_double(include_timing ? row.runtime_ms : 0.0) << '\n';
  }
}

namespace {

double parse_double(const std::string& s) {
  if (s == "nan" || s == "-nan") return kNaN;
  double value = 0.0;
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw Error("invalid numeric field: '" + s + "'");
  }
  return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

std::vector<ExperimentRow> read_rows_csv(std::istream& in) {
  std::vector<ExperimentRow> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      continue;  // header
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != 7) throw Error("rows CSV: expected 7 fields");
    ExperimentRow row;
    row.rep = static_cast<int>(parse_double(fields[0]));
    row.d = static_cast<int>(parse_double(fields[1]));
    row.scheme = fields[2];
    row.approx_error = parse_double(fields[3]);
    row.est_error = parse_double(fields[4]);
    row.full_error = parse_double(fields[5]);
    row.runtime_ms = parse_double(fields[6]);
    row.failed = !std::isfinite(row.approx_error);
    rows.push_back(std::move(row));
  }
  return rows;
}

Dataset read_dataset_csv(std::istream& in, bool has_header) {
  std::vector<std::vector<double>> rows;
  std::string line;
  bool skip = has_header;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (skip) {
      skip = false;
      continue;
    }
    const auto fields = split_csv_line(line);
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_double(f));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error("dataset CSV: ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error("dataset CSV: no data rows");
  Matrix m(rows.size(), rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return Dataset(std::move(m));
}

}  // namespace symscatter
