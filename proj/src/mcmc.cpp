#include "tsinfer/samplers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace tsinfer {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix checked_cholesky(const Matrix& covariance, Index n) {
  if (covariance.rows() != n || covariance.cols() != n)
    throw ContractViolation("proposal covariance must be " + std::to_string(n) +
                            "x" + std::to_string(n));
  Eigen::LLT<Matrix> llt(covariance);
  if (llt.info() != Eigen::Success)
    throw ContractViolation("proposal covariance must be positive definite");
  return llt.matrixL();
}

// Cholesky factor, with a 1e-9 identity jitter only when the plain
// factorisation fails.
Matrix jittered_cholesky(const Matrix& covariance) {
  Eigen::LLT<Matrix> llt(covariance);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const Index n = covariance.rows();
  double jitter = 1e-9;
  for (int attempt = 0; attempt < 20; ++attempt, jitter *= 10) {
    llt.compute(covariance + jitter * Matrix::Identity(n, n));
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw ContractViolation("proposal covariance could not be factorised");
}

double sanitise(double log_density) {
  return std::isnan(log_density) ? -kInf : log_density;
}

}  // namespace

McmcSampler::McmcSampler(Vector x0, std::uint64_t seed)
    : x0_(std::move(x0)), rng_(seed), current_(x0_) {
  if (x0_.size() == 0) throw ContractViolation("x0 must be non-empty");
  if (!x0_.allFinite()) throw ContractViolation("x0 must be finite");
}

Vector McmcSampler::ask() {
  if (expecting_tell_) throw ContractViolation("ask() called twice without tell()");
  pending_ = initialised_ ? propose() : x0_;
  expecting_tell_ = true;
  return pending_;
}

bool McmcSampler::tell(double log_density) {
  if (!expecting_tell_) throw ContractViolation("tell() called without ask()");
  if (!initialised_) {
    if (!std::isfinite(log_density))
      throw ContractViolation("initial point has non-finite log-density " +
                              std::to_string(log_density));
    initialise(log_density);
    initialised_ = true;
    expecting_tell_ = false;
    return true;
  }
  if (log_density == kInf)
    throw ContractViolation("log-density returned +infinity");
  const bool accepted = step(pending_, sanitise(log_density));
  ++iterations_;
  if (accepted) ++acceptances_;
  expecting_tell_ = false;
  return accepted;
}

void McmcSampler::initialise(double log_density) {
  current_ = x0_;
  current_log_density_ = log_density;
}

double metropolis_acceptance(double current, double proposed) {
  if (proposed == -kInf || std::isnan(proposed)) return 0.0;
  const double r = proposed - current;
  return r >= 0 ? 1.0 : std::exp(r);
}

bool MetropolisChain::step(const Vector& proposal, double log_density) {
  const double u = rng_.uniform();
  const double alpha = metropolis_acceptance(current_log_density_, log_density);
  const bool accept = log_density != -kInf &&
                      std::log(u) < log_density - current_log_density_;
  if (accept) {
    current_ = proposal;
    current_log_density_ = log_density;
  }
  after_step(alpha);
  return accept;
}

RandomWalkMetropolis::RandomWalkMetropolis(Vector x0, std::uint64_t seed,
                                           Matrix proposal_covariance)
    : MetropolisChain(std::move(x0), seed),
      covariance_(std::move(proposal_covariance)),
      cholesky_(checked_cholesky(covariance_, dimension())) {}

Vector RandomWalkMetropolis::propose() {
  return current_ + cholesky_ * rng_.normal(dimension());
}

AdaptiveCovarianceMcmc::AdaptiveCovarianceMcmc(Vector x0, std::uint64_t seed,
                                               Matrix initial_covariance,
                                               AdaptiveCovarianceOptions options)
    : MetropolisChain(std::move(x0), seed),
      options_(options),
      initial_covariance_(std::move(initial_covariance)),
      initial_cholesky_(checked_cholesky(initial_covariance_, dimension())),
      mean_(x0_),
      covariance_(initial_covariance_) {
  if (!(options_.eta > 0.5 && options_.eta <= 1.0))
    throw ContractViolation("adaptation exponent must lie in (0.5, 1]");
  if (options_.warm_up < 0) throw ContractViolation("warm-up must be >= 0");
}

Hyperparameters AdaptiveCovarianceMcmc::hyperparameters() const {
  return {{"warm_up", static_cast<double>(options_.warm_up)},
          {"eta", options_.eta},
          {"target_acceptance", options_.target_acceptance}};
}

Vector AdaptiveCovarianceMcmc::propose() {
  if (iterations() < options_.warm_up)
    return current_ + initial_cholesky_ * rng_.normal(dimension());
  const Matrix l = jittered_cholesky(std::exp(log_scale_) * covariance_);
  return current_ + l * rng_.normal(dimension());
}

void AdaptiveCovarianceMcmc::after_step(double acceptance_probability) {
  // iterations() has not been incremented yet for this step.
  const Index t = iterations() + 1;
  if (t <= options_.warm_up) return;
  const double gamma =
      options_.fixed_gamma.value_or(std::pow(static_cast<double>(t + 1), -options_.eta));
  if (gamma == 0.0) return;
  mean_ += gamma * (current_ - mean_);
  const Vector d = current_ - mean_;
  covariance_ += gamma * (d * d.transpose() - covariance_);
  covariance_ = 0.5 * (covariance_ + covariance_.transpose());
  log_scale_ += gamma * (acceptance_probability - options_.target_acceptance);
  // Divergence guard: keep the global scale within [1e-6, 1e6].
  log_scale_ = std::clamp(log_scale_, std::log(1e-6), std::log(1e6));
}

Vector uniform_temperature_ladder(Index n) {
  if (n < 2) throw ContractViolation("population MCMC needs at least 2 temperatures");
  return Vector::LinSpaced(n, 0.0, 1.0);
}

PopulationMcmc::PopulationMcmc(Vector x0, std::uint64_t seed,
                               std::shared_ptr<const LogPDF> prior,
                               Matrix proposal_covariance, Vector betas)
    : McmcSampler(std::move(x0), seed),
      prior_(std::move(prior)),
      cholesky_(checked_cholesky(proposal_covariance, dimension())),
      betas_(std::move(betas)) {
  if (!prior_) throw ContractViolation("population MCMC requires a prior");
  if (prior_->n_parameters() != dimension())
    throw ContractViolation("prior dimension does not match x0");
  if (betas_.size() < 2)
    throw ContractViolation("population MCMC needs at least 2 temperatures");
  if ((betas_.array() < 0).any() || (betas_.array() > 1).any() ||
      betas_(betas_.size() - 1) != 1.0)
    throw ContractViolation("inverse temperatures must lie in [0, 1] and end at 1");
}

PopulationMcmc::PopulationMcmc(Vector x0, std::uint64_t seed,
                               std::shared_ptr<const LogPDF> prior,
                               Matrix proposal_covariance, Index n_temperatures)
    : PopulationMcmc(std::move(x0), seed, std::move(prior),
                     std::move(proposal_covariance),
                     uniform_temperature_ladder(n_temperatures)) {}

Hyperparameters PopulationMcmc::hyperparameters() const {
  return {{"temperatures", static_cast<double>(betas_.size())}};
}

void PopulationMcmc::initialise(double log_density) {
  McmcSampler::initialise(log_density);
  const double lp = (*prior_)(x0_);
  if (!std::isfinite(lp))
    throw ContractViolation("initial point lies outside the prior support");
  const auto k = static_cast<std::size_t>(betas_.size());
  points_.assign(k, x0_);
  log_densities_.assign(k, log_density);
  log_priors_.assign(k, lp);
}

double PopulationMcmc::tempered(Index chain, double loglik, double log_prior) const {
  if (log_prior == -kInf) return -kInf;
  const double beta = betas_(chain);
  if (beta == 0.0) return log_prior;
  if (loglik == -kInf) return -kInf;
  return beta * loglik + log_prior;
}

double PopulationMcmc::swap_log_ratio(double beta_i, double beta_j,
                                      double loglik_i, double loglik_j) {
  if (beta_i == beta_j) return 0.0;
  const double r = (beta_i - beta_j) * (loglik_j - loglik_i);
  return std::isnan(r) ? -kInf : r;
}

Vector PopulationMcmc::propose() {
  chosen_ = static_cast<Index>(rng_.uniform_index(static_cast<std::uint64_t>(betas_.size())));
  return points_[static_cast<std::size_t>(chosen_)] + cholesky_ * rng_.normal(dimension());
}

bool PopulationMcmc::step(const Vector& proposal, double log_density) {
  const auto c = static_cast<std::size_t>(chosen_);
  const double lp_new = (*prior_)(proposal);
  const double ll_new = log_density - lp_new;
  const double ll_old = log_densities_[c] - log_priors_[c];
  const double t_new = tempered(chosen_, log_density == -kInf ? -kInf : ll_new, lp_new);
  const double t_old = tempered(chosen_, ll_old, log_priors_[c]);

  const double u = rng_.uniform();
  const bool accept = t_new != -kInf && std::log(u) < t_new - t_old;
  if (accept) {
    points_[c] = proposal;
    log_densities_[c] = log_density;
    log_priors_[c] = lp_new;
  }

  const auto i = static_cast<std::size_t>(
      rng_.uniform_index(static_cast<std::uint64_t>(betas_.size() - 1)));
  const double ll_i = log_densities_[i] - log_priors_[i];
  const double ll_j = log_densities_[i + 1] - log_priors_[i + 1];
  const double log_ratio = swap_log_ratio(betas_(static_cast<Index>(i)),
                                          betas_(static_cast<Index>(i + 1)), ll_i, ll_j);
  ++swap_proposals_;
  if (std::log(rng_.uniform()) < log_ratio) {
    std::swap(points_[i], points_[i + 1]);
    std::swap(log_densities_[i], log_densities_[i + 1]);
    std::swap(log_priors_[i], log_priors_[i + 1]);
    ++swap_acceptances_;
  }
  current_ = points_.back();
  current_log_density_ = log_densities_.back();
  return accept;
}

std::string to_string(McmcMethod method) {
  switch (method) {
    case McmcMethod::kMetropolis: return "metropolis";
    case McmcMethod::kAdaptiveCovariance: return "adaptive";
    case McmcMethod::kPopulation: return "population";
  }
  return "unknown";
}

McmcMethod parse_mcmc_method(const std::string& name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (s == "metropolis" || s == "rwm") return McmcMethod::kMetropolis;
  if (s == "adaptive" || s == "adaptive_covariance") return McmcMethod::kAdaptiveCovariance;
  if (s == "population") return McmcMethod::kPopulation;
  throw ContractViolation("unknown MCMC method '" + name + "'");
}

}  // namespace tsinfer
