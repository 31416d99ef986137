#include "support.hpp"
#include "tsinfer/cli.hpp"
#include "tsinfer/io.hpp"
#include "tsinfer/toys.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

using namespace tsinfer;
using namespace tsinfer::cli;
using testing::TempDir;
using testing::vec;
using json = nlohmann::json;

namespace {

void write_file(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Noise-free logistic growth with r = 0.5, K = 10.
void write_logistic_data(const std::filesystem::path& p) {
  const Vector t = Vector::LinSpaced(25, 0, 24);
  const Matrix y = toys::LogisticModel().simulate(vec({0.5, 10}), t);
  std::ostringstream s;
  s << "time,population\n";
  for (Index i = 0; i < t.size(); ++i)
    s << io::format_double(t(i)) << ',' << io::format_double(y(i, 0)) << '\n';
  write_file(p, s.str());
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run optimise(const std::filesystem::path& config, CliOptions options = {}) {
  std::ostringstream out, err;
  options.quiet = true;
  const int code = cmd_optimise(config, options, out, err);
  return {code, out.str(), err.str()};
}

Run sample(const std::filesystem::path& config, CliOptions options = {}) {
  std::ostringstream out, err;
  options.quiet = true;
  const int code = cmd_sample(config, options, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("optimise recovers logistic parameters") {
  TempDir dir;
  write_logistic_data(dir / "data.csv");
  write_file(dir / "fit.ini",
             "[problem]\nmodel = logistic\ndata = data.csv\n\n"
             "[method]\nname = cmaes\nx0 = 1, 5\nsigma0 = 0.5\n\n"
             "[run]\niterations = 500\nseed = 3\n");
  CliOptions o;
  o.out_dir = dir / "a";
  const auto r = optimise(dir / "fit.ini", o);
  REQUIRE(r.code == kExitSuccess);
  const json j = read_json(dir / "a" / "result.json");
  CHECK(std::abs(j["best_parameters"]["r"].get<double>() - 0.5) < 1e-3);
  CHECK(std::abs(j["best_parameters"]["K"].get<double>() - 10) < 1e-3);
  CHECK(j["method"] == "cmaes");
  CHECK(j["seed"] == 3);
  CHECK(j["objective"] == "minimise");
  CHECK(j["generator"] == RandomSource::kAlgorithm);
  CHECK(j.contains("tool_version"));
  CHECK(j.contains("hyperparameters"));
  CHECK(std::filesystem::exists(dir / "a" / "log.csv"));

  SUBCASE("same seed, same output apart from the timestamp") {
    o.out_dir = dir / "b";
    o.workers = 3;
    REQUIRE(optimise(dir / "fit.ini", o).code == kExitSuccess);
    json a = read_json(dir / "a" / "result.json");
    json b = read_json(dir / "b" / "result.json");
    a.erase("timestamp");
    b.erase("timestamp");
    CHECK(a == b);
  }
  SUBCASE("zero iterations echo x0") {
    o.out_dir = dir / "c";
    o.iterations = 0;
    REQUIRE(optimise(dir / "fit.ini", o).code == kExitSuccess);
    const json c = read_json(dir / "c" / "result.json");
    CHECK(c["best_parameters"]["r"] == 1.0);
    CHECK(c["best_parameters"]["K"] == 5.0);
    CHECK(c["iterations"] == 0);
  }
  SUBCASE("method override") {
    for (const char* m : {"xnes", "snes", "pso"}) {
      o.out_dir = dir / m;
      o.method = m;
      o.iterations = 20;
      REQUIRE(optimise(dir / "fit.ini", o).code == kExitSuccess);
      CHECK(read_json(dir / m / "result.json")["method"] == m);
    }
  }
}

TEST_CASE("configuration errors exit with code 2") {
  TempDir dir;
  SUBCASE("missing config names the path") {
    const auto r = optimise(dir / "absent.ini");
    CHECK(r.code == kExitConfigError);
    CHECK(r.err.find("absent.ini") != std::string::npos);
  }
  SUBCASE("missing data file names the path") {
    write_file(dir / "c.ini",
               "[problem]\nmodel = logistic\ndata = missing.csv\n[method]\nx0 = 1, 1\n");
    const auto r = optimise(dir / "c.ini");
    CHECK(r.code == kExitConfigError);
    CHECK(r.err.find("missing.csv") != std::string::npos);
  }
  SUBCASE("malformed data names file and line") {
    write_file(dir / "bad.csv", "time,y\n0,1\n1,oops\n");
    write_file(dir / "c.ini",
               "[problem]\nmodel = logistic\ndata = bad.csv\n[method]\nx0 = 1, 1\n");
    const auto r = optimise(dir / "c.ini");
    CHECK(r.code == kExitConfigError);
    CHECK(r.err.find("bad.csv:3:") != std::string::npos);
  }
  SUBCASE("unknown keys, sections and methods") {
    write_file(dir / "a.ini", "[problem]\nmodel = sphere\ndimension = 2\ncolour = red\n");
    CHECK(optimise(dir / "a.ini").code == kExitConfigError);
    write_file(dir / "b.ini", "[problme]\nmodel = sphere\n");
    CHECK(optimise(dir / "b.ini").code == kExitConfigError);
    write_file(dir / "c.ini",
               "[problem]\nmodel = sphere\ndimension = 2\n[method]\nname = lbfgs\nx0 = 1, 1\n");
    const auto r = optimise(dir / "c.ini");
    CHECK(r.code == kExitConfigError);
    CHECK(r.err.find("lbfgs") != std::string::npos);
  }
  SUBCASE("x0 of the wrong size") {
    write_file(dir / "a.ini",
               "[problem]\nmodel = sphere\ndimension = 3\n[method]\nx0 = 1, 1\n");
    CHECK(optimise(dir / "a.ini").code == kExitConfigError);
  }
  SUBCASE("zero-density starting point") {
    write_file(dir / "a.ini",
               "[problem]\nmodel = gaussian\nmean = 0\ncovariance = 1\n"
               "[prior]\ntype = uniform\nlower = -1\nupper = 1\n"
               "[method]\nname = metropolis\nx0 = 5\n");
    const auto r = sample(dir / "a.ini");
    CHECK(r.code == kExitConfigError);
    CHECK(r.err.find("chain") != std::string::npos);
  }
}

TEST_CASE("failed evaluations beyond the cap exit with code 3") {
  TempDir dir;
  write_file(dir / "data.csv", "time,y\n0,1\n1,2\n");
  write_file(dir / "fail.ini",
             "[problem]\nmodel = command\ncommand = exit 1\nparameters = 1\ndata = data.csv\n"
             "[method]\nname = cmaes\nx0 = 1\n"
             "[run]\niterations = 50\nmax_failures = 5\n");
  CliOptions o;
  o.out_dir = dir / "out";
  const auto r = optimise(dir / "fail.ini", o);
  CHECK(r.code == kExitFailureCap);
  CHECK(r.err.find("max_failures") != std::string::npos);
}

TEST_CASE("external command model through the CLI") {
  TempDir dir;
  write_file(dir / "data.csv", "time,y\n1,2\n2,4\n3,6\n");
  write_file(dir / "model.sh",
             "read a\nawk -v a=\"$a\" '{ printf \"%.17g\\n\", a * $1 }' \"$TSINFER_TIMES_FILE\"\n");
  write_file(dir / "cmd.ini",
             "[problem]\nmodel = command\ncommand = sh model.sh\nparameters = 1\n"
             "data = data.csv\n"
             "[method]\nname = cmaes\nx0 = 0.5\n"
             "[run]\niterations = 60\n");
  CliOptions o;
  o.out_dir = dir / "out";
  REQUIRE(optimise(dir / "cmd.ini", o).code == kExitSuccess);
  const json j = read_json(dir / "out" / "result.json");
  CHECK(std::abs(j["best_parameters"]["x1"].get<double>() - 2.0) < 1e-4);
  CHECK(j["failed_evaluations"] == 0);
}

TEST_CASE("mcmc sampling") {
  TempDir dir;
  write_file(dir / "mc.ini",
             "[problem]\nmodel = gaussian\nmean = 1, 2\ncovariance = 1, 0.5, 0.5, 2\n"
             "[method]\nname = adaptive\nx0 = -2, 0; 3, 3; 0, 5\n"
             "[run]\nchains = 3\niterations = 20000\nseed = 4\n");
  CliOptions o;
  o.out_dir = dir / "a";
  REQUIRE(sample(dir / "mc.ini", o).code == kExitSuccess);
  const json j = read_json(dir / "a" / "summary.json");
  CHECK(j["rhat"]["x1"].get<double>() < 1.05);
  CHECK(j["rhat"]["x2"].get<double>() < 1.05);
  CHECK(j["burn_in"] == 10000);
  CHECK(std::abs(j["posterior_mean"]["x1"].get<double>() - 1) < 0.1);
  CHECK(std::abs(j["posterior_mean"]["x2"].get<double>() - 2) < 0.15);
  for (int c = 1; c <= 3; ++c) {
    const auto f = io::read_matrix_csv(dir / "a" / ("chain_" + std::to_string(c) + ".csv"));
    CHECK(f.values.rows() == 20001);
    CHECK(f.header == std::vector<std::string>{"x1", "x2"});
  }
  CHECK(io::read_matrix_csv(dir / "a" / "chain_2.csv").values.row(0) == vec({3, 3}).transpose());

  SUBCASE("deterministic chain files") {
    o.out_dir = dir / "b";
    o.workers = 2;
    REQUIRE(sample(dir / "mc.ini", o).code == kExitSuccess);
    for (int c = 1; c <= 3; ++c) {
      const std::string name = "chain_" + std::to_string(c) + ".csv";
      CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
    }
  }
  SUBCASE("one chain reports rhat as unavailable") {
    write_file(dir / "one.ini",
               "[problem]\nmodel = gaussian\nmean = 0\ncovariance = 1\n"
               "[method]\nname = metropolis\nx0 = 0\n[run]\niterations = 200\n");
    o.out_dir = dir / "c";
    o.chains = 1;
    REQUIRE(sample(dir / "one.ini", o).code == kExitSuccess);
    const json c = read_json(dir / "c" / "summary.json");
    CHECK(c["rhat"].is_string());
    CHECK(c["rhat"].get<std::string>().find("unavailable") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "c" / "chain_1.csv"));
    CHECK_FALSE(std::filesystem::exists(dir / "c" / "chain_2.csv"));
  }
  SUBCASE("wrong number of starts") {
    o.chains = 2;
    CHECK(sample(dir / "mc.ini", o).code == kExitConfigError);
  }
}

TEST_CASE("nested sampling estimates the benchmark evidence") {
  TempDir dir;
  write_file(dir / "ns.ini",
             "[problem]\nmodel = gaussian\nmean = 0, 0\ncovariance = 1, 1\n"
             "[prior]\ntype = uniform\nlower = -5, -5\nupper = 5, 5\n"
             "[method]\nname = nested_ellipsoid\nlive_points = 400\n"
             "[run]\nseed = 1\n");
  CliOptions o;
  o.out_dir = dir / "out";
  REQUIRE(sample(dir / "ns.ini", o).code == kExitSuccess);
  const json j = read_json(dir / "out" / "summary.json");
  CHECK(std::abs(j["log_evidence"].get<double>() + std::log(100.0)) < 0.2);
  CHECK(j["log_evidence_error"].get<double>() > 0);
  const auto post = io::read_matrix_csv(dir / "out" / "posterior_samples.csv");
  CHECK(post.values.rows() == 1000);
  const auto weighted = io::read_matrix_csv(dir / "out" / "weighted_samples.csv");
  CHECK(weighted.header.back() == "log_likelihood");
  CHECK(weighted.values.col(2).sum() == doctest::Approx(1.0));
}

}  // TEST_SUITE
