#include "tsinfer/cli.hpp"

#include "tsinfer/densities.hpp"
#include "tsinfer/diagnostics.hpp"
#include "tsinfer/io.hpp"
#include "tsinfer/measures.hpp"
#include "tsinfer/optimisers.hpp"
#include "tsinfer/samplers.hpp"
#include "tsinfer/toys.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace tsinfer::cli {

namespace {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;
using json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const std::map<std::string, std::set<std::string>> kKeys = {
    {"problem",
     {"model", "data", "measure", "sigma", "command", "parameters", "initial_value",
      "mean", "covariance", "warp", "variance", "separation", "weight", "dimension",
      "parameter_names"}},
    {"prior", {"type", "lower", "upper", "mean", "covariance"}},
    {"method",
     {"name", "x0", "sigma0", "population_size", "proposal_covariance", "temperatures",
      "warm_up", "live_points", "enlargement", "rejection_iterations", "refit_interval",
      "posterior_samples", "remainder_fraction"}},
    {"run",
     {"iterations", "chains", "seed", "workers", "burn_in", "max_failures",
      "unchanged_iterations", "unchanged_threshold", "target_score", "out"}},
};

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t") - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, sep)) parts.push_back(trim(part));
  return parts;
}

class Config {
 public:
  explicit Config(const fs::path& path) : dir_(fs::absolute(path).parent_path()) {
    if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
    try {
      pt::read_ini(path.string(), tree_);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError(e.what());
    }
    for (const auto& [section, body] : tree_) {
      const auto known = kKeys.find(section);
      if (known == kKeys.end())
        throw ConfigError("unknown config section [" + section + "]");
      for (const auto& [key, value] : body)
        if (!known->second.count(key))
          throw ConfigError("unknown key '" + key + "' in [" + section + "]");
    }
  }

  const fs::path& dir() const { return dir_; }
  bool has_section(const std::string& s) const { return tree_.count(s) > 0; }

  std::optional<std::string> text(const std::string& section, const std::string& key) const {
    const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(section + "/" + key, '/'));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  std::string require(const std::string& section, const std::string& key) const {
    auto v = text(section, key);
    if (!v || v->empty()) throw ConfigError("missing key '" + key + "' in [" + section + "]");
    return *v;
  }

  std::optional<double> number(const std::string& section, const std::string& key) const {
    const auto v = text(section, key);
    if (!v) return std::nullopt;
    return parse_number(*v, section, key);
  }

  std::optional<Index> integer(const std::string& section, const std::string& key) const {
    const auto v = number(section, key);
    if (!v) return std::nullopt;
    if (*v != std::floor(*v) || std::abs(*v) > 1e15)
      throw ConfigError("[" + section + "] " + key + " must be an integer");
    return static_cast<Index>(*v);
  }

  std::optional<Vector> vector(const std::string& section, const std::string& key) const {
    const auto v = text(section, key);
    if (!v) return std::nullopt;
    return parse_vector(*v, section, key);
  }

  // n values give a diagonal matrix, n² values a full row-major matrix.
  std::optional<Matrix> matrix(const std::string& section, const std::string& key,
                               Index n) const {
    const auto v = vector(section, key);
    if (!v) return std::nullopt;
    if (v->size() == n) return Matrix(v->asDiagonal());
    if (v->size() == n * n)
      return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                            Eigen::RowMajor>>(v->data(), n, n);
    throw ConfigError("[" + section + "] " + key + " needs " + std::to_string(n) + " or " +
                      std::to_string(n * n) + " values");
  }

  static double parse_number(const std::string& s, const std::string& section,
                             const std::string& key) {
    double x = 0.0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    if (begin != end && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, x);
    if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(x))
      throw ConfigError("[" + section + "] " + key + ": invalid number '" + s + "'");
    return x;
  }

  static Vector parse_vector(const std::string& s, const std::string& section,
                             const std::string& key) {
    const auto parts = split(s, ',');
    Vector v(static_cast<Index>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i)
      v(static_cast<Index>(i)) = parse_number(parts[i], section, key);
    if (v.size() == 0) throw ConfigError("[" + section + "] " + key + " is empty");
    return v;
  }

 private:
  fs::path dir_;
  pt::ptree tree_;
};

// Counts model failures (exceptions and non-finite output) for the failure cap.
class CountingModel : public ForwardModel {
 public:
  CountingModel(std::shared_ptr<const ForwardModel> inner,
                std::shared_ptr<std::atomic<Index>> failures)
      : inner_(std::move(inner)), failures_(std::move(failures)) {}

  Index n_parameters() const override { return inner_->n_parameters(); }
  Index n_outputs() const override { return inner_->n_outputs(); }
  bool thread_safe() const override { return inner_->thread_safe(); }

  Matrix simulate(const Vector& parameters, const Vector& times) const override {
    try {
      Matrix y = inner_->simulate(parameters, times);
      if (!all_finite(y)) ++*failures_;
      return y;
    } catch (...) {
      ++*failures_;
      throw;
    }
  }

 private:
  std::shared_ptr<const ForwardModel> inner_;
  std::shared_ptr<std::atomic<Index>> failures_;
};

struct Setup {
  std::shared_ptr<const ErrorMeasure> measure;
  std::shared_ptr<const LogPDF> density;
  std::shared_ptr<const LogPrior> prior;
  std::vector<std::string> names;
  std::shared_ptr<std::atomic<Index>> failures = std::make_shared<std::atomic<Index>>(0);
  Index max_failures = std::numeric_limits<Index>::max();

  Index n_parameters() const {
    return measure ? measure->n_parameters() : density->n_parameters();
  }
  bool capped() const { return failures->load() > max_failures; }
};

std::vector<std::string> default_names(Index n) {
  std::vector<std::string> names;
  for (Index i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

fs::path resolve(const Config& config, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : config.dir() / path;
}

std::shared_ptr<const LogPrior> build_prior(const Config& config) {
  if (!config.has_section("prior")) return nullptr;
  const std::string type = config.require("prior", "type");
  if (type == "uniform") {
    const auto lower = config.vector("prior", "lower");
    const auto upper = config.vector("prior", "upper");
    if (!lower || !upper) throw ConfigError("uniform [prior] needs 'lower' and 'upper'");
    return std::make_shared<UniformLogPrior>(*lower, *upper);
  }
  if (type == "gaussian") {
    const auto mean = config.vector("prior", "mean");
    if (!mean) throw ConfigError("missing key 'mean' in [prior]");
    const auto cov = config.matrix("prior", "covariance", mean->size());
    if (!cov) throw ConfigError("missing key 'covariance' in [prior]");
    return std::make_shared<GaussianLogPrior>(*mean, *cov);
  }
  throw ConfigError("unknown prior type '" + type + "' (uniform, gaussian)");
}

Setup build_setup(const Config& config) {
  Setup s;
  if (const auto cap = config.integer("run", "max_failures")) {
    if (*cap < 0) throw ConfigError("[run] max_failures must be >= 0");
    s.max_failures = *cap;
  }
  const std::string model = config.require("problem", "model");

  if (model == "rosenbrock") {
    s.measure = std::make_shared<toys::RosenbrockError>();
  } else if (model == "sphere") {
    const Index n = config.integer("problem", "dimension").value_or(2);
    if (n < 1) throw ConfigError("[problem] dimension must be >= 1");
    s.measure = std::make_shared<toys::SphereError>(n);
  } else if (model == "gaussian") {
    const auto mean = config.vector("problem", "mean");
    if (!mean) throw ConfigError("missing key 'mean' in [problem]");
    const Matrix cov = config.matrix("problem", "covariance", mean->size())
                           .value_or(Matrix::Identity(mean->size(), mean->size()));
    s.density = std::make_shared<toys::GaussianLogPDF>(*mean, cov);
  } else if (model == "twisted_gaussian") {
    s.density = std::make_shared<toys::TwistedGaussianLogPDF>(
        config.number("problem", "warp").value_or(0.1),
        config.number("problem", "variance").value_or(100.0));
  } else if (model == "bimodal") {
    s.density = std::make_shared<toys::BimodalLogPDF>(
        config.number("problem", "separation").value_or(10.0),
        config.number("problem", "weight").value_or(0.5));
  } else if (model == "logistic" || model == "constant" || model == "command") {
    const fs::path data_path = resolve(config, config.require("problem", "data"));
    if (!fs::exists(data_path)) throw ConfigError("data file not found: " + data_path.string());
    const io::TimeSeriesData data = io::read_timeseries_csv(data_path);
    const Index n_outputs = data.observations.cols();

    std::shared_ptr<const ForwardModel> inner;
    if (model == "logistic") {
      inner = std::make_shared<toys::LogisticModel>(
          config.number("problem", "initial_value").value_or(1.0));
      s.names = {"r", "K"};
    } else if (model == "constant") {
      inner = std::make_shared<toys::ConstantModel>(n_outputs);
      for (const auto& name : data.output_names) s.names.push_back("c_" + name);
    } else {
      const auto n = config.integer("problem", "parameters");
      if (!n) throw ConfigError("missing key 'parameters' in [problem]");
      const std::string command = "cd " + io::shell_quote(config.dir().string()) + " && " +
                                  config.require("problem", "command");
      inner = std::make_shared<io::ExternalCommandModel>(command, *n, n_outputs, data.times,
                                                         fs::temp_directory_path());
      s.names = default_names(*n);
    }
    auto counted = std::make_shared<CountingModel>(inner, s.failures);
    auto problem =
        std::make_shared<TimeSeriesProblem>(counted, data.times, data.observations);

    const std::string measure = config.text("problem", "measure").value_or("sum_of_squares");
    if (measure == "sum_of_squares") {
      s.measure = std::make_shared<SumOfSquaresError>(problem);
    } else if (measure == "mean_squared") {
      s.measure = std::make_shared<MeanSquaredError>(problem);
    } else if (measure == "root_mean_squared") {
      s.measure = std::make_shared<RootMeanSquaredError>(problem);
    } else if (measure == "gaussian_known_sigma") {
      const auto sigma = config.vector("problem", "sigma");
      if (!sigma) throw ConfigError("missing key 'sigma' in [problem]");
      const Vector sig = sigma->size() == 1 ? Vector::Constant(n_outputs, (*sigma)(0)) : *sigma;
      s.density = std::make_shared<GaussianLogLikelihoodKnownSigma>(problem, sig);
    } else if (measure == "gaussian") {
      s.density = std::make_shared<GaussianLogLikelihood>(problem);
      for (const auto& name : data.output_names) s.names.push_back("sigma_" + name);
    } else {
      throw ConfigError("unknown measure '" + measure +
                        "' (sum_of_squares, mean_squared, root_mean_squared, "
                        "gaussian_known_sigma, gaussian)");
    }
  } else {
    throw ConfigError("unknown model '" + model +
                      "' (logistic, constant, command, rosenbrock, sphere, gaussian, "
                      "twisted_gaussian, bimodal)");
  }

  const Index n = s.n_parameters();
  if (const auto names = config.text("problem", "parameter_names")) s.names = split(*names, ',');
  if (s.names.empty()) s.names = default_names(n);
  if (static_cast<Index>(s.names.size()) != n)
    throw ConfigError("expected " + std::to_string(n) + " parameter names, got " +
                      std::to_string(s.names.size()));

  s.prior = build_prior(config);
  if (s.prior && s.prior->n_parameters() != n)
    throw ConfigError("prior has " + std::to_string(s.prior->n_parameters()) +
                      " dimensions, problem has " + std::to_string(n));
  return s;
}

std::uint64_t seed_of(const Config& config, const CliOptions& options) {
  if (options.seed) return *options.seed;
  const auto v = config.text("run", "seed");
  if (!v) return 0;
  std::uint64_t seed = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), seed);
  if (ec != std::errc() || ptr != v->data() + v->size())
    throw ConfigError("[run] seed must be a non-negative integer");
  return seed;
}

int workers_of(const Config& config, const CliOptions& options) {
  const Index w = options.workers ? *options.workers : config.integer("run", "workers").value_or(1);
  if (w < 1) throw ConfigError("workers must be >= 1");
  return static_cast<int>(w);
}

fs::path out_dir_of(const Config& config, const CliOptions& options) {
  fs::path dir = options.out_dir ? *options.out_dir
                                 : fs::path(config.text("run", "out").value_or("."));
  fs::create_directories(dir);
  return dir;
}

std::string method_of(const Config& config, const CliOptions& options,
                      const std::string& fallback) {
  if (options.method) return *options.method;
  return config.text("method", "name").value_or(fallback);
}

Vector x0_of(const Config& config, Index n) {
  const auto x0 = config.vector("method", "x0");
  if (!x0) throw ConfigError("missing key 'x0' in [method]");
  if (x0->size() != n)
    throw ConfigError("x0 has " + std::to_string(x0->size()) + " values, problem has " +
                      std::to_string(n) + " parameters");
  return *x0;
}

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

json metadata(const std::string& method, const Hyperparameters& hyper, std::uint64_t seed) {
  json j;
  j["tool"] = "tsinfer";
  j["tool_version"] = TSINFER_VERSION;
  j["method"] = method;
  j["hyperparameters"] = hyper;
  j["seed"] = seed;
  j["generator"] = RandomSource::kAlgorithm;
  return j;
}

json named(const std::vector<std::string>& names, const Vector& v) {
  json j = json::object();
  for (Index i = 0; i < v.size(); ++i) j[names[static_cast<std::size_t>(i)]] = v(i);
  return j;
}

void write_json(const fs::path& path, json j) {
  j["timestamp"] = timestamp();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
  } catch (const io::ParseError& e) {
    err << "data error: " << e.what() << '\n';
  } catch (const ContractViolation& e) {
    err << "invalid setup: " << e.what() << '\n';
  } catch (const fs::filesystem_error& e) {
    err << "file error: " << e.what() << '\n';
  }
  return kExitConfigError;
}

int report_cap(const Setup& setup, std::ostream& err) {
  err << "stopped: " << setup.failures->load() << " failed model evaluations exceed "
      << "max_failures = " << setup.max_failures << '\n';
  return kExitFailureCap;
}

int run_optimise(const Config& config, const CliOptions& options, std::ostream& out,
                 std::ostream& err) {
  Setup setup = build_setup(config);
  const std::string method_name = method_of(config, options, "cmaes");
  OptimisationSettings settings;
  try {
    settings.method = parse_optimiser_method(method_name);
  } catch (const ContractViolation&) {
    throw ConfigError("unknown optimiser '" + method_name + "' (cmaes, xnes, snes, pso)");
  }
  settings.seed = seed_of(config, options);
  settings.workers = workers_of(config, options);
  settings.population_size = config.integer("method", "population_size");

  ScoreFunction score = [&] {
    if (setup.measure) {
      if (setup.prior) throw ConfigError("a [prior] needs a likelihood measure");
      return ScoreFunction::minimise(setup.measure);
    }
    if (setup.prior)
      return ScoreFunction::maximise(std::make_shared<LogPosterior>(setup.density, setup.prior));
    return ScoreFunction::maximise(setup.density);
  }();

  const Index n = setup.n_parameters();
  const Vector x0 = x0_of(config, n);
  Vector sigma0 = x0.cwiseAbs().cwiseMax(1.0) / 10.0;
  if (const auto s = config.vector("method", "sigma0")) {
    if (s->size() == 1)
      sigma0.setConstant((*s)(0));
    else if (s->size() == n)
      sigma0 = *s;
    else
      throw ConfigError("sigma0 needs 1 or " + std::to_string(n) + " values");
  }

  StoppingCriteria criteria;
  criteria.max_iterations =
      options.iterations ? *options.iterations : config.integer("run", "iterations").value_or(1000);
  if (const auto u = config.integer("run", "unchanged_iterations"))
    criteria.max_unchanged = StoppingCriteria::Unchanged{
        *u, config.number("run", "unchanged_threshold").value_or(1e-11)};
  criteria.target_score = config.number("run", "target_score");
  criteria.callback = [&setup](const IterationRecord&) { return setup.capped(); };

  if (!options.quiet) {
    out << "optimising with " << to_string(settings.method) << ", seed " << settings.seed << '\n';
    settings.sink = [&out](const IterationRecord& r) {
      if (r.iteration % 100 == 0)
        out << "  iteration " << r.iteration << "  evaluations " << r.evaluations
            << "  best " << io::format_double(r.best_score) << '\n';
    };
  }

  const OptimisationResult result = run_optimisation(score, x0, sigma0, criteria, settings);
  const fs::path dir = out_dir_of(config, options);

  json j = metadata(result.method, result.hyperparameters, result.seed);
  j["objective"] = score.maximising() ? "maximise" : "minimise";
  j["best_parameters"] = named(setup.names, result.best_position);
  j["best_score"] = result.best_score;
  j["stop_reason"] = result.stop_reason;
  j["iterations"] = result.iterations;
  j["evaluations"] = result.evaluations;
  j["failed_evaluations"] = result.failed_evaluations;
  write_json(dir / "result.json", j);

  Matrix log(static_cast<Index>(result.log.size()), 4);
  for (std::size_t i = 0; i < result.log.size(); ++i) {
    const auto& r = result.log[i];
    log.row(static_cast<Index>(i)) << static_cast<double>(r.iteration),
        static_cast<double>(r.evaluations), r.best_score, r.seconds;
  }
  io::write_matrix_csv(dir / "log.csv", {"iteration", "evaluations", "best_score", "seconds"},
                       log);

  if (!options.quiet) {
    out << "stop reason: " << result.stop_reason << '\n'
        << "best score: " << io::format_double(result.best_score) << '\n';
    for (Index i = 0; i < n; ++i)
      out << "  " << setup.names[static_cast<std::size_t>(i)] << " = "
          << io::format_double(result.best_position(i)) << '\n';
    out << "wrote " << (dir / "result.json").string() << '\n';
  }
  if (setup.capped()) return report_cap(setup, err);
  return kExitSuccess;
}

int run_nested_cmd(const Config& config, const CliOptions& options, const Setup& setup,
                   NestedMethod method, std::ostream& out, std::ostream& err) {
  if (!setup.density) throw ConfigError("nested sampling needs a likelihood");
  if (!setup.prior) throw ConfigError("nested sampling needs a [prior]");
  NestedSettings settings;
  settings.method = method;
  settings.seed = seed_of(config, options);
  settings.live_points = config.integer("method", "live_points").value_or(settings.live_points);
  settings.max_iterations = options.iterations
                                ? *options.iterations
                                : config.integer("run", "iterations").value_or(settings.max_iterations);
  settings.remainder_fraction =
      config.number("method", "remainder_fraction").value_or(settings.remainder_fraction);
  settings.rejection_iterations =
      config.integer("method", "rejection_iterations").value_or(settings.rejection_iterations);
  settings.refit_interval =
      config.integer("method", "refit_interval").value_or(settings.refit_interval);
  settings.enlargement = config.number("method", "enlargement").value_or(settings.enlargement);
  settings.posterior_samples =
      config.integer("method", "posterior_samples").value_or(settings.posterior_samples);

  if (!options.quiet)
    out << "nested sampling with " << to_string(method) << ", seed " << settings.seed << '\n';
  NestedSampler sampler(setup.prior, settings);
  Index evaluations = 0;
  while (!sampler.finished()) {
    const Vector x = sampler.ask();
    double l;
    try {
      l = (*setup.density)(x);
      if (std::isnan(l)) l = -std::numeric_limits<double>::infinity();
    } catch (const EvaluationError&) {
      l = -std::numeric_limits<double>::infinity();
    }
    ++evaluations;
    sampler.tell(l);
    if (setup.capped()) return report_cap(setup, err);
    if (!options.quiet && sampler.iterations() > 0 && sampler.iterations() % 1000 == 0 &&
        evaluations > settings.live_points)
      out << "  iteration " << sampler.iterations() << "  log Z so far "
          << io::format_double(sampler.log_evidence_accumulated()) << '\n';
  }
  RandomSource rng = RandomSource(settings.seed).split(0x9e3779b97f4a7c15ULL);
  NestedResult result = nested_evidence(sampler, settings.posterior_samples, rng);
  result.evaluations = evaluations;

  const fs::path dir = out_dir_of(config, options);
  json j = metadata(result.method, result.hyperparameters, result.seed);
  j["log_evidence"] = result.log_evidence;
  j["log_evidence_error"] = result.log_evidence_error;
  j["information"] = result.information;
  j["stop_reason"] = result.stop_reason;
  j["iterations"] = result.iterations;
  j["evaluations"] = result.evaluations;
  j["posterior_mean"] = named(setup.names, result.posterior_samples.colwise().mean().transpose());
  write_json(dir / "summary.json", j);

  io::write_matrix_csv(dir / "posterior_samples.csv", setup.names, result.posterior_samples);
  Matrix weighted(result.weighted_points.rows(), result.weighted_points.cols() + 2);
  weighted << result.weighted_points, result.weights, result.log_likelihoods;
  auto header = setup.names;
  header.push_back("weight");
  header.push_back("log_likelihood");
  io::write_matrix_csv(dir / "weighted_samples.csv", header, weighted);

  if (!options.quiet)
    out << "log Z = " << io::format_double(result.log_evidence) << " +/- "
        << io::format_double(result.log_evidence_error) << '\n'
        << "wrote " << (dir / "summary.json").string() << '\n';
  return kExitSuccess;
}

int run_sample(const Config& config, const CliOptions& options, std::ostream& out,
               std::ostream& err) {
  Setup setup = build_setup(config);
  if (!setup.density)
    throw ConfigError(
        "sampling needs a log-density: use a target model or measure = gaussian / "
        "gaussian_known_sigma");
  const std::string method_name = method_of(config, options, "adaptive");
  if (method_name.rfind("nested", 0) == 0 || method_name == "rejection" ||
      method_name == "ellipsoid") {
    NestedMethod method;
    try {
      method = parse_nested_method(method_name);
    } catch (const ContractViolation&) {
      throw ConfigError("unknown nested method '" + method_name + "'");
    }
    return run_nested_cmd(config, options, setup, method, out, err);
  }

  McmcSettings settings;
  try {
    settings.method = parse_mcmc_method(method_name);
  } catch (const ContractViolation&) {
    throw ConfigError("unknown sampler '" + method_name +
                      "' (metropolis, adaptive, population, nested_rejection, "
                      "nested_ellipsoid)");
  }
  settings.seed = seed_of(config, options);
  settings.workers = workers_of(config, options);
  settings.prior = setup.prior;
  settings.temperatures = config.integer("method", "temperatures").value_or(10);
  settings.adaptive.warm_up = config.integer("method", "warm_up").value_or(100);
  const Index n = setup.n_parameters();
  settings.proposal_covariance = config.matrix("method", "proposal_covariance", n);
  if (settings.method == McmcMethod::kPopulation && !setup.prior)
    throw ConfigError("population MCMC needs a [prior]");

  std::shared_ptr<const LogPDF> target = setup.density;
  if (setup.prior) target = std::make_shared<LogPosterior>(setup.density, setup.prior);

  const Index chains =
      options.chains ? *options.chains : config.integer("run", "chains").value_or(3);
  if (chains < 1) throw ConfigError("chains must be >= 1");
  const Index iterations =
      options.iterations ? *options.iterations : config.integer("run", "iterations").value_or(10000);

  // x0 rows separated by ';': one shared start or one per chain.
  std::vector<Vector> x0;
  for (const auto& row : split(config.require("method", "x0"), ';')) {
    x0.push_back(Config::parse_vector(row, "method", "x0"));
    if (x0.back().size() != n)
      throw ConfigError("x0 has " + std::to_string(x0.back().size()) +
                        " values, problem has " + std::to_string(n) + " parameters");
  }
  if (x0.size() == 1) x0.assign(static_cast<std::size_t>(chains), x0.front());
  if (static_cast<Index>(x0.size()) != chains)
    throw ConfigError("x0 gives " + std::to_string(x0.size()) + " starts for " +
                      std::to_string(chains) + " chains");

  settings.callback = [&setup](const McmcIterationRecord&) { return setup.capped(); };
  if (!options.quiet) {
    out << "sampling with " << to_string(settings.method) << ", " << chains
        << " chain(s), seed " << settings.seed << '\n';
    settings.sink = [&out](const McmcIterationRecord& r) {
      if (r.iteration % 1000 == 0) {
        out << "  iteration " << r.iteration << "  acceptance";
        for (double a : r.acceptance_rates) out << ' ' << io::format_double(a);
        out << '\n';
      }
    };
  }

  const McmcResult result = run_mcmc(*target, x0, iterations, settings);
  const fs::path dir = out_dir_of(config, options);
  for (std::size_t j = 0; j < result.chains.size(); ++j)
    io::write_matrix_csv(dir / ("chain_" + std::to_string(j + 1) + ".csv"), setup.names,
                         result.chains[j]);

  const Index rows = result.chains.front().rows();
  const Index burn_in = config.integer("run", "burn_in").value_or(rows / 2);
  if (burn_in < 0 || burn_in >= rows) throw ConfigError("burn_in must lie in [0, samples)");
  std::vector<Matrix> kept;
  for (const auto& c : result.chains) kept.push_back(c.bottomRows(rows - burn_in));
  const Index n_kept = rows - burn_in;

  json j = metadata(result.method, result.hyperparameters, result.seed);
  j["chains"] = result.chains.size();
  j["iterations"] = result.iterations;
  j["evaluations"] = result.evaluations;
  j["stop_reason"] = result.stop_reason;
  j["burn_in"] = burn_in;
  j["acceptance_rates"] = result.acceptance_rates;
  if (kept.size() < 2 || n_kept < 2)
    j["rhat"] = "unavailable (requires >= 2 chains)";
  else
    j["rhat"] = named(setup.names, rhat(kept));
  if (n_kept < 10) {
    j["ess"] = "unavailable (requires >= 10 post-burn-in samples)";
  } else {
    Vector ess = Vector::Zero(n);
    for (const auto& c : kept) ess += effective_sample_sizes(c);
    j["ess"] = named(setup.names, ess);
  }
  Matrix pooled(n_kept * static_cast<Index>(kept.size()), n);
  for (std::size_t c = 0; c < kept.size(); ++c)
    pooled.middleRows(static_cast<Index>(c) * n_kept, n_kept) = kept[c];
  j["posterior_mean"] = named(setup.names, pooled.colwise().mean().transpose());
  write_json(dir / "summary.json", j);

  std::vector<std::string> header = {"iteration", "evaluations"};
  for (std::size_t c = 1; c <= result.chains.size(); ++c)
    header.push_back("acceptance_" + std::to_string(c));
  header.push_back("seconds");
  Matrix log(static_cast<Index>(result.log.size()), static_cast<Index>(header.size()));
  for (std::size_t i = 0; i < result.log.size(); ++i) {
    const auto& r = result.log[i];
    const auto row = static_cast<Index>(i);
    log(row, 0) = static_cast<double>(r.iteration);
    log(row, 1) = static_cast<double>(r.evaluations);
    for (std::size_t c = 0; c < r.acceptance_rates.size(); ++c)
      log(row, static_cast<Index>(c) + 2) = r.acceptance_rates[c];
    log(row, log.cols() - 1) = r.seconds;
  }
  io::write_matrix_csv(dir / "log.csv", header, log);

  if (!options.quiet) {
    out << "stop reason: " << result.stop_reason << '\n';
    if (j["rhat"].is_object()) out << "rhat: " << j["rhat"].dump() << '\n';
    out << "wrote " << result.chains.size() << " chain file(s) and summary.json to "
        << dir.string() << '\n';
  }
  if (setup.capped()) return report_cap(setup, err);
  return kExitSuccess;
}

}  // namespace

int cmd_optimise(const fs::path& config, const CliOptions& options, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, [&] { return run_optimise(Config(config), options, out, err); });
}

int cmd_sample(const fs::path& config, const CliOptions& options, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] { return run_sample(Config(config), options, out, err); });
}

}  // namespace tsinfer::cli
