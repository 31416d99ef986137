#pragma once

#include "tsinfer/core.hpp"
#include "tsinfer/log_pdf.hpp"
#include "tsinfer/measures.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tsinfer {

using Hyperparameters = std::map<std::string, double>;

/// Ask-and-tell minimiser. Each iteration is one ask() returning a
/// population, followed by one tell() with a score per proposal, in order.
class Optimiser {
 public:
  Optimiser(Vector x0, Vector sigma0, std::uint64_t seed);
  virtual ~Optimiser() = default;

  std::vector<Vector> ask();
  void tell(std::span<const double> scores);

  Index dimension() const { return x0_.size(); }
  Index iterations() const { return iterations_; }
  /// Best evaluated point so far; x0 before the first tell.
  const Vector& best_position() const { return best_position_; }
  /// +infinity before the first tell.
  double best_score() const { return best_score_; }

  virtual std::string name() const = 0;
  virtual Index population_size() const = 0;
  virtual Hyperparameters hyperparameters() const = 0;

 protected:
  virtual std::vector<Vector> propose() = 0;
  /// Scores are sanitised (NaN becomes +infinity) before this is called.
  virtual void update(const std::vector<Vector>& proposals,
                      std::span<const double> scores) = 0;

  Vector x0_;
  Vector sigma0_;
  RandomSource rng_;

 private:
  bool expecting_tell_ = false;
  std::vector<Vector> pending_;
  Index iterations_ = 0;
  Vector best_position_;
  double best_score_;
};

/// Indices of `scores` sorted best (lowest) first; ties keep proposal order.
std::vector<Index> rank_order(std::span<const double> scores);

/// Default population for the evolution strategies: 4 + floor(3 ln n).
Index default_population_size(Index n);

/// Log-rank utilities used by xNES and SNES, best rank first; sums to zero.
Vector rank_utilities(Index population_size);

/// CMA-ES with rank-mu and rank-one covariance updates and cumulative
/// step-size adaptation.
class Cmaes : public Optimiser {
 public:
  Cmaes(Vector x0, Vector sigma0, std::uint64_t seed,
        std::optional<Index> population_size = std::nullopt);

  std::string name() const override { return "cmaes"; }
  Index population_size() const override { return lambda_; }
  Hyperparameters hyperparameters() const override;

  const Vector& mean() const { return mean_; }
  double step_size() const { return sigma_; }
  const Matrix& covariance() const { return cov_; }

 protected:
  std::vector<Vector> propose() override;
  void update(const std::vector<Vector>& proposals,
              std::span<const double> scores) override;

 private:
  void decompose();

  Index lambda_;
  Index mu_;
  Vector weights_;
  double mueff_, cc_, cs_, c1_, cmu_, damps_, chi_n_;

  Vector mean_;
  double sigma_;
  Matrix cov_;
  Matrix basis_;      // eigenvectors of cov_
  Vector axis_;       // sqrt of eigenvalues
  Vector path_sigma_;
  Vector path_c_;
};

/// Exponential natural evolution strategy with a full shape matrix.
class Xnes : public Optimiser {
 public:
  Xnes(Vector x0, Vector sigma0, std::uint64_t seed,
       std::optional<Index> population_size = std::nullopt);

  std::string name() const override { return "xnes"; }
  Index population_size() const override { return lambda_; }
  Hyperparameters hyperparameters() const override;

  const Vector& mean() const { return mean_; }
  /// A = sigma * B, the current search distribution is N(mean, A Aᵀ).
  Matrix shape() const { return scale_ * basis_; }

 protected:
  std::vector<Vector> propose() override;
  void update(const std::vector<Vector>& proposals,
              std::span<const double> scores) override;

 private:
  Index lambda_;
  Vector utilities_;
  double eta_mean_ = 1.0;
  double eta_scale_;
  double eta_shape_;

  Vector mean_;
  double scale_;
  Matrix basis_;
  std::vector<Vector> samples_;
};

/// Separable natural evolution strategy (per-coordinate std).
class Snes : public Optimiser {
 public:
  Snes(Vector x0, Vector sigma0, std::uint64_t seed,
       std::optional<Index> population_size = std::nullopt);

  std::string name() const override { return "snes"; }
  Index population_size() const override { return lambda_; }
  Hyperparameters hyperparameters() const override;

  const Vector& mean() const { return mean_; }
  const Vector& stds() const { return stds_; }

 protected:
  std::vector<Vector> propose() override;
  void update(const std::vector<Vector>& proposals,
              std::span<const double> scores) override;

 private:
  Index lambda_;
  Vector utilities_;
  double eta_mean_ = 1.0;
  double eta_std_;

  Vector mean_;
  Vector stds_;
  std::vector<Vector> samples_;
};

/// Global-best particle swarm with constriction coefficients.
class Pso : public Optimiser {
 public:
  Pso(Vector x0, Vector sigma0, std::uint64_t seed,
      std::optional<Index> swarm_size = std::nullopt);

  std::string name() const override { return "pso"; }
  Index population_size() const override { return n_particles_; }
  Hyperparameters hyperparameters() const override;

  static Index default_swarm_size(Index n);

 protected:
  std::vector<Vector> propose() override;
  void update(const std::vector<Vector>& proposals,
              std::span<const double> scores) override;

 private:
  Index n_particles_;
  double inertia_ = 0.729;
  double cognitive_ = 1.494;
  double social_ = 1.494;
  Vector max_velocity_;

  bool initialised_ = false;
  std::vector<Vector> positions_;
  std::vector<Vector> velocities_;
  std::vector<Vector> personal_best_;
  std::vector<double> personal_best_score_;
  Vector global_best_;
  double global_best_score_;
};

enum class OptimiserMethod { kCmaes, kXnes, kSnes, kPso };

std::string to_string(OptimiserMethod method);
/// Accepts "cmaes", "xnes", "snes", "pso" (case-insensitive).
OptimiserMethod parse_optimiser_method(const std::string& name);

std::unique_ptr<Optimiser> make_optimiser(
    OptimiserMethod method, const Vector& x0, const Vector& sigma0,
    std::uint64_t seed, std::optional<Index> population_size = std::nullopt);

/// What the optimisation controller evaluates. Error measures are minimised;
/// log-densities are maximised by minimising their negation.
class ScoreFunction {
 public:
  using Function = std::function<double(const Vector&)>;

  static ScoreFunction minimise(std::shared_ptr<const ErrorMeasure> measure);
  static ScoreFunction maximise(std::shared_ptr<const LogPDF> density);
  static ScoreFunction minimise(Function f, Index n_parameters,
                                bool thread_safe = true);

  Index n_parameters() const { return n_parameters_; }
  bool maximising() const { return maximising_; }
  bool thread_safe() const { return thread_safe_; }

  /// Raw value in the user's sign convention.
  double operator()(const Vector& p) const { return function_(p); }
  /// Value to minimise: negated for densities; NaN and evaluation errors
  /// become +infinity.
  double minimisation_value(const Vector& p, bool* failed = nullptr) const;
  /// Converts an internal (minimised) value back to the user's sign.
  double to_user(double internal) const {
    return maximising_ ? -internal : internal;
  }

 private:
  ScoreFunction(Function f, Index n, bool maximising, bool thread_safe)
      : function_(std::move(f)),
        n_parameters_(n),
        maximising_(maximising),
        thread_safe_(thread_safe) {}

  Function function_;
  Index n_parameters_;
  bool maximising_;
  bool thread_safe_;
};

struct IterationRecord {
  Index iteration = 0;
  Index evaluations = 0;
  double best_score = 0.0;  // user sign convention
  double seconds = 0.0;
};

using OptimisationSink = std::function<void(const IterationRecord&)>;

struct StoppingCriteria {
  struct Unchanged {
    Index iterations;
    double threshold;
  };

  std::optional<Index> max_iterations;
  std::optional<Unchanged> max_unchanged;
  /// Stop once the best score reaches this value (<= for minimisation,
  /// >= for maximisation).
  std::optional<double> target_score;
  /// User stopping rule, checked after every iteration.
  std::function<bool(const IterationRecord&)> callback;

  /// Throws ContractViolation if no criterion is set.
  void validate() const;
};

struct OptimisationSettings {
  OptimiserMethod method = OptimiserMethod::kCmaes;
  std::optional<Index> population_size;
  std::uint64_t seed = 0;
  int workers = 1;
  OptimisationSink sink;
};

struct OptimisationResult {
  Vector best_position;
  double best_score = 0.0;  // user sign convention
  Index iterations = 0;
  Index evaluations = 0;
  Index failed_evaluations = 0;
  std::string stop_reason;
  std::vector<IterationRecord> log;
  std::string method;
  Hyperparameters hyperparameters;
  std::uint64_t seed = 0;
};

/// Runs ask -> evaluate -> tell until a stopping criterion fires. With a
/// zero iteration budget, x0 is evaluated once and returned.
OptimisationResult run_optimisation(const ScoreFunction& score, const Vector& x0,
                                    const Vector& sigma0,
                                    const StoppingCriteria& criteria,
                                    const OptimisationSettings& settings = {});

OptimisationResult run_optimisation(const ScoreFunction& score, const Vector& x0,
                                    double sigma0,
                                    const StoppingCriteria& criteria,
                                    const OptimisationSettings& settings = {});

/// Minimises an arbitrary scalar function.
std::pair<Vector, double> fmin(const std::function<double(const Vector&)>& f,
                               const Vector& x0, const Vector& sigma0,
                               const StoppingCriteria& criteria,
                               const OptimisationSettings& settings = {});

using CurveFunction = std::function<Matrix(const Vector& times, const Vector& parameters)>;

struct CurveFitResult {
  Vector parameters;
  double sum_of_squares;
};

/// Least-squares fit of function(times, p) to observations. Time points may
/// be given in any order.
CurveFitResult curve_fit(const CurveFunction& function, const Vector& times,
                         const Matrix& observations, const Vector& x0,
                         const Vector& sigma0, const StoppingCriteria& criteria,
                         const OptimisationSettings& settings = {});

}  // namespace tsinfer
