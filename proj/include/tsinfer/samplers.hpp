#pragma once

#include "tsinfer/core.hpp"
#include "tsinfer/log_pdf.hpp"
#include "tsinfer/optimisers.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsinfer {

// ---------------------------------------------------------------------------
// MCMC
// ---------------------------------------------------------------------------

/// Ask-and-tell Markov chain. The first ask() returns x0 so its density can be
/// evaluated; every later ask() returns a proposal and the following tell()
/// accepts or rejects it.
class McmcSampler {
 public:
  McmcSampler(Vector x0, std::uint64_t seed);
  virtual ~McmcSampler() = default;

  Vector ask();
  /// Returns true if the proposal was accepted (true for the initial point).
  bool tell(double log_density);

  bool initialised() const { return initialised_; }
  Index dimension() const { return x0_.size(); }
  Index iterations() const { return iterations_; }
  Index acceptances() const { return acceptances_; }
  double acceptance_rate() const {
    return iterations_ > 0 ? static_cast<double>(acceptances_) /
                                 static_cast<double>(iterations_)
                           : 0.0;
  }

  /// The point the chain currently sits at and its cached log-density.
  virtual const Vector& current() const { return current_; }
  virtual double current_log_density() const { return current_log_density_; }

  virtual std::string name() const = 0;
  virtual Hyperparameters hyperparameters() const = 0;

 protected:
  virtual void initialise(double log_density);
  virtual Vector propose() = 0;
  /// Performs the accept/reject decision and any state update.
  virtual bool step(const Vector& proposal, double log_density) = 0;

  Vector x0_;
  RandomSource rng_;
  Vector current_;
  double current_log_density_ = 0.0;

 private:
  bool initialised_ = false;
  bool expecting_tell_ = false;
  Vector pending_;
  Index iterations_ = 0;
  Index acceptances_ = 0;
};

/// Metropolis acceptance probability min(1, exp(proposed - current)); zero
/// for a -infinity proposal.
double metropolis_acceptance(double current_log_density,
                             double proposed_log_density);

/// Single chain with the Metropolis accept rule. Subclasses supply the
/// (symmetric) proposal and may adapt after each step.
class MetropolisChain : public McmcSampler {
 public:
  using McmcSampler::McmcSampler;

 protected:
  bool step(const Vector& proposal, double log_density) override;
  virtual void after_step(double /*acceptance_probability*/) {}
};

/// Random-walk Metropolis with a fixed Gaussian proposal covariance.
class RandomWalkMetropolis : public MetropolisChain {
 public:
  RandomWalkMetropolis(Vector x0, std::uint64_t seed, Matrix proposal_covariance);

  std::string name() const override { return "metropolis"; }
  Hyperparameters hyperparameters() const override { return {}; }

  const Matrix& proposal_covariance() const { return covariance_; }

 protected:
  Vector propose() override;

 private:
  Matrix covariance_;
  Matrix cholesky_;
};

struct AdaptiveCovarianceOptions {
  Index warm_up = 100;
  double eta = 0.6;
  double target_acceptance = 0.234;
  /// Forces gamma_t to this value (0 disables adaptation); testing hook.
  std::optional<double> fixed_gamma;
};

/// Metropolis with a globally scaled proposal covariance learned from the
/// chain history under diminishing adaptation gamma_t = (t + 1)^-eta.
class AdaptiveCovarianceMcmc : public MetropolisChain {
 public:
  AdaptiveCovarianceMcmc(Vector x0, std::uint64_t seed, Matrix initial_covariance,
                         AdaptiveCovarianceOptions options = {});

  std::string name() const override { return "adaptive"; }
  Hyperparameters hyperparameters() const override;

  const Vector& running_mean() const { return mean_; }
  const Matrix& running_covariance() const { return covariance_; }
  double scale() const { return std::exp(log_scale_); }

 protected:
  Vector propose() override;
  void after_step(double acceptance_probability) override;

 private:
  AdaptiveCovarianceOptions options_;
  Matrix initial_covariance_;
  Matrix initial_cholesky_;
  Vector mean_;
  Matrix covariance_;
  double log_scale_ = 0.0;
};

/// Tempered chains with inverse temperatures 0 = beta_1 < ... < beta_K = 1.
/// Each iteration updates one uniformly chosen chain under
/// beta * loglik + logprior, then proposes one swap between a uniformly chosen
/// adjacent pair. current() is the beta = 1 chain.
class PopulationMcmc : public McmcSampler {
 public:
  PopulationMcmc(Vector x0, std::uint64_t seed, std::shared_ptr<const LogPDF> prior,
                 Matrix proposal_covariance, Vector inverse_temperatures);
  PopulationMcmc(Vector x0, std::uint64_t seed, std::shared_ptr<const LogPDF> prior,
                 Matrix proposal_covariance, Index n_temperatures = 10);

  std::string name() const override { return "population"; }
  Hyperparameters hyperparameters() const override;

  const Vector& current() const override { return points_.back(); }
  double current_log_density() const override { return log_densities_.back(); }

  const Vector& inverse_temperatures() const { return betas_; }
  const std::vector<Vector>& chain_points() const { return points_; }
  Index swap_proposals() const { return swap_proposals_; }
  Index swap_acceptances() const { return swap_acceptances_; }

  /// Log of the exchange acceptance ratio for chains i and i + 1.
  static double swap_log_ratio(double beta_i, double beta_j, double loglik_i,
                               double loglik_j);

 protected:
  void initialise(double log_density) override;
  Vector propose() override;
  bool step(const Vector& proposal, double log_density) override;

 private:
  double tempered(Index chain, double loglik, double log_prior) const;

  std::shared_ptr<const LogPDF> prior_;
  Matrix cholesky_;
  Vector betas_;
  std::vector<Vector> points_;
  std::vector<double> log_densities_;
  std::vector<double> log_priors_;
  Index chosen_ = 0;
  Index swap_proposals_ = 0;
  Index swap_acceptances_ = 0;
};

/// Evenly spaced inverse temperatures on [0, 1].
Vector uniform_temperature_ladder(Index n_temperatures);

enum class McmcMethod { kMetropolis, kAdaptiveCovariance, kPopulation };

std::string to_string(McmcMethod method);
/// Accepts "metropolis", "adaptive", "population".
McmcMethod parse_mcmc_method(const std::string& name);

struct McmcIterationRecord {
  Index iteration = 0;
  Index evaluations = 0;
  std::vector<double> acceptance_rates;
  double seconds = 0.0;
};

struct McmcSettings {
  McmcMethod method = McmcMethod::kAdaptiveCovariance;
  /// Defaults to diag((max(|x0|, 1) / 10)²).
  std::optional<Matrix> proposal_covariance;
  /// Required by population MCMC.
  std::shared_ptr<const LogPDF> prior;
  Index temperatures = 10;
  AdaptiveCovarianceOptions adaptive;
  std::uint64_t seed = 0;
  int workers = 1;
  std::function<void(const McmcIterationRecord&)> sink;
  /// Checked after every iteration; returning true stops the run.
  std::function<bool(const McmcIterationRecord&)> callback;
};

struct McmcResult {
  /// One matrix per chain, rows are x0 followed by one row per iteration.
  std::vector<Matrix> chains;
  std::vector<double> acceptance_rates;
  std::vector<McmcIterationRecord> log;
  Index iterations = 0;
  Index evaluations = 0;
  std::string stop_reason;
  std::string method;
  Hyperparameters hyperparameters;
  std::uint64_t seed = 0;
};

/// Chain j draws from seed XOR (j + 1).
std::unique_ptr<McmcSampler> make_mcmc_sampler(const McmcSettings& settings,
                                               const Vector& x0, std::uint64_t seed);

/// Runs one independent chain per x0. Evaluations within an iteration may run
/// in parallel; results are merged by chain index.
McmcResult run_mcmc(const LogPDF& density, const std::vector<Vector>& x0,
                    Index iterations, const McmcSettings& settings);

// ---------------------------------------------------------------------------
// Nested sampling
// ---------------------------------------------------------------------------

class NestedSamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NestedMethod { kRejection, kEllipsoid };

std::string to_string(NestedMethod method);
/// Accepts "nested_rejection"/"rejection" and "nested_ellipsoid"/"ellipsoid".
NestedMethod parse_nested_method(const std::string& name);

struct NestedSettings {
  NestedMethod method = NestedMethod::kRejection;
  Index live_points = 400;
  Index max_iterations = 100000;
  /// Stop once the live-point evidence remainder falls below this fraction
  /// of the accumulated evidence.
  double remainder_fraction = 1e-3;
  Index max_draws_per_iteration = 1000000;
  // Ellipsoidal variant.
  Index rejection_iterations = 1000;
  Index refit_interval = 100;
  double enlargement = 1.1;
  Index posterior_samples = 1000;
  std::uint64_t seed = 0;
};

/// Bounding ellipsoid {x : (x - centre)ᵀ shape⁻¹ (x - centre) <= 1}.
struct Ellipsoid {
  Vector centre;
  Matrix shape;
  Matrix cholesky;  // of shape

  bool contains(const Vector& x) const;
  Vector sample(RandomSource& rng) const;
  double log_volume() const;
};

/// Khachiyan's algorithm for the minimum-volume enclosing ellipsoid of the
/// columns of `points`, widened if needed so every point lies inside, with a
/// 1e-12 identity jitter for degenerate point sets.
Ellipsoid minimum_volume_ellipsoid(const Matrix& points, double tolerance = 1e-3,
                                   Index max_iterations = 10000);

struct DiscardedPoint {
  Vector point;
  double log_likelihood;
  double log_weight;  // log of prior mass X_{i-1} - X_i
};

/// Ask-and-tell nested sampler. The first live_points asks are draws from the
/// prior; afterwards each ask proposes a replacement for the worst live point
/// and tell() accepts it if its likelihood is at least the current threshold.
class NestedSampler {
 public:
  NestedSampler(std::shared_ptr<const LogPrior> prior, NestedSettings settings);

  Vector ask();
  void tell(double log_likelihood);

  /// Max iterations reached or the remainder criterion satisfied.
  bool finished() const;
  std::string stop_reason() const;

  Index iterations() const { return iteration_; }
  Index live_points() const { return settings_.live_points; }
  double log_evidence_accumulated() const { return log_z_; }
  /// log X_i = -i / N.
  double log_prior_volume() const;
  double threshold() const;
  const std::vector<DiscardedPoint>& discarded() const { return discarded_; }
  const std::vector<Vector>& live() const { return live_; }
  const std::vector<double>& live_log_likelihoods() const { return live_ll_; }
  /// Accumulated log-evidence after each iteration.
  const std::vector<double>& log_evidence_trace() const { return trace_; }
  const NestedSettings& settings() const { return settings_; }
  std::string name() const { return to_string(settings_.method); }

 private:
  Vector propose_constrained();
  void fit_ellipsoid();
  void update_finished();

  std::shared_ptr<const LogPrior> prior_;
  NestedSettings settings_;
  RandomSource rng_;
  bool expecting_tell_ = false;
  Vector pending_;
  std::vector<Vector> live_;
  std::vector<double> live_ll_;
  Index worst_ = 0;
  Index iteration_ = 0;
  Index draws_ = 0;
  double log_z_;
  std::vector<DiscardedPoint> discarded_;
  std::vector<double> trace_;
  std::optional<Ellipsoid> ellipsoid_;
  Index last_fit_ = -1;
  bool finished_ = false;
};

struct NestedResult {
  double log_evidence = 0.0;
  double log_evidence_error = 0.0;
  double information = 0.0;
  /// Discarded points followed by the final live points, with normalised
  /// posterior weights.
  Matrix weighted_points;
  Vector weights;
  Vector log_likelihoods;
  Matrix posterior_samples;
  Index iterations = 0;
  Index evaluations = 0;
  std::string stop_reason;
  std::string method;
  Hyperparameters hyperparameters;
  std::uint64_t seed = 0;
};

/// Final evidence (accumulated plus live-point remainder), its standard error
/// sqrt(H / N), posterior weights, and `n_samples` weighted posterior draws.
NestedResult nested_evidence(const NestedSampler& sampler, Index n_samples,
                             RandomSource& rng);

NestedResult run_nested(const LogPDF& log_likelihood,
                        std::shared_ptr<const LogPrior> prior,
                        const NestedSettings& settings);

double log_sum_exp(double a, double b);

}  // namespace tsinfer
