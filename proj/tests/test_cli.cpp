// End-to-end checks of the command line tool. The binary path comes from the
// SYMSCATTER_CLI environment variable set by CTest.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

std::string cli_path() {
  const char* path = std::getenv("SYMSCATTER_CLI");
  REQUIRE_MESSAGE(path != nullptr, "SYMSCATTER_CLI must point at the binary");
  return path;
}

std::string temp_dir() {
  const char* dir = std::getenv("SYMSCATTER_TEST_DIR");
  return dir ? dir : ".";
}

int run(const std::string& args, const std::string& stdout_path,
        const std::string& stderr_path = "/dev/null") {
  const std::string cmd =
      cli_path() + " " + args + " > " + stdout_path + " 2> " + stderr_path;
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("pairs subcommand emits the circulant design") {
  const std::string out = temp_dir() + "/pairs.csv";
  REQUIRE(run("pairs --n 5 --d 2 --scheme balanced", out) == 0);
  CHECK(slurp(out) ==
        "i,j\n1,2\n1,3\n2,3\n2,4\n3,4\n3,5\n4,5\n4,1\n5,1\n5,2\n");
}

TEST_CASE("estimate prints a determinant-one Tyler matrix") {
  const std::string data = temp_dir() + "/data42.csv";
  write_file(data, "1.0,0.4\n-0.2,1.1\n0.7,-0.9\n-1.4,0.3\n");
  const std::string out = temp_dir() + "/estimate.json";
  REQUIRE(run("estimate --input " + data + " --functional tyler", out) == 0);
  const auto j = nlohmann::json::parse(slurp(out));
  CHECK(j.at("converged").get<bool>());
  const auto m = j.at("estimate").get<std::vector<std::vector<double>>>();
  const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  CHECK(std::abs(det - 1.0) <= 1e-10);
}

TEST_CASE("simulate is byte-reproducible") {
  const std::string config = temp_dir() + "/config.json";
  write_file(config, R"({
    "n": 24, "q": 2,
    "distribution": {"kind": "iid-gaussian"},
    "functional": "m", "rho_nu": 1.0,
    "d_values": [2], "schemes": ["balanced", "randomized"],
    "reps": 3, "seed": 77, "tol": 1e-8
  })");
  const std::string rows1 = temp_dir() + "/rows1.csv";
  const std::string rows2 = temp_dir() + "/rows2.csv";
  const std::string summary1 = temp_dir() + "/summary1.json";
  const std::string summary2 = temp_dir() + "/summary2.json";
  REQUIRE(run("simulate --config " + config + " --rows " + rows1 +
                  " --summary " + summary1,
              "/dev/null") == 0);
  REQUIRE(run("simulate --config " + config + " --rows " + rows2 +
                  " --summary " + summary2,
              "/dev/null") == 0);
  const std::string csv = slurp(rows1);
  CHECK(csv == slurp(rows2));
  CHECK(slurp(summary1) == slurp(summary2));
  CHECK(csv.rfind("rep,d,scheme,approx_error,est_error,full_error,runtime_ms\n",
                  0) == 0);
  // 3 reps x 1 d x 2 schemes rows + header
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);

  SUBCASE("summary is valid JSON with the expected groups") {
    const auto s = nlohmann::json::parse(slurp(summary1));
    CHECK(s.at("groups").size() == 2);
    CHECK(s.at("excluded_rows").get<int>() == 0);
  }
}

TEST_CASE("decompose emits predictions") {
  const std::string data = temp_dir() + "/data_dec.csv";
  std::ostringstream content;
  for (int i = 0; i < 12; ++i) {
    content << 0.1 * i << ',' << (i % 3 == 0 ? -1.0 : 0.5) * i << '\n';
  }
  write_file(data, content.str());
  const std::string out = temp_dir() + "/dec.json";
  REQUIRE(run("decompose --input " + data + " --kernel capped-norm --d 2", out) ==
          0);
  const auto j = nlohmann::json::parse(slurp(out));
  CHECK(j.at("r").get<int>() == 1);
  CHECK(j.at("predictions").contains("complete"));
  CHECK(j.at("predictions").at("balanced").contains("2"));
}

TEST_CASE("exit codes and error JSON") {
  SUBCASE("usage error is exit 2") {
    const std::string err = temp_dir() + "/err1.json";
    CHECK(run("estimate --no-such-flag", "/dev/null", err) == 2);
    const auto j = nlohmann::json::parse(slurp(err));
    CHECK(j.at("type").get<std::string>() == "usage");
  }
  SUBCASE("runtime error is exit 1") {
    const std::string err = temp_dir() + "/err2.json";
    CHECK(run("estimate --input /nonexistent.csv", "/dev/null", err) == 1);
    const auto j = nlohmann::json::parse(slurp(err));
    CHECK(j.at("type").get<std::string>() == "runtime");
    CHECK(j.contains("error"));
  }
  SUBCASE("bad config content is exit 1") {
    const std::string config = temp_dir() + "/bad_config.json";
    write_file(config, R"({"n": 10, "q": 2, "unknown_key": true})");
    const std::string err = temp_dir() + "/err3.json";
    CHECK(run("simulate --config " + config + " --rows /dev/null --summary /dev/null",
              "/dev/null", err) == 1);
  }
}
