#include "tsinfer/densities.hpp"

#include <limits>

namespace tsinfer {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_dimension(Index expected, const Vector& p) {
  if (p.size() != expected)
    throw ContractViolation("expected " + std::to_string(expected) +
                            " parameters, got " + std::to_string(p.size()));
}

// Per-output Gaussian log-likelihood from a residual matrix.
double gaussian_sum(const Matrix& r, const Eigen::Ref<const Vector>& sigma) {
  const double n = static_cast<double>(r.rows());
  double total = 0.0;
  for (Index j = 0; j < r.cols(); ++j) {
    const double s2 = sigma(j) * sigma(j);
    total += -0.5 * n * (kLog2Pi + std::log(s2)) -
             r.col(j).squaredNorm() / (2.0 * s2);
  }
  return std::isnan(total) ? -kInf : total;
}

}  // namespace

double gaussian_log_likelihood_known_sigma(const TimeSeriesProblem& problem,
                                           const Vector& sigma,
                                           const Vector& parameters) {
  if (sigma.size() != problem.n_outputs())
    throw ContractViolation("need one sigma per output");
  if (!(sigma.array() > 0).all())
    throw ContractViolation("sigma must be positive");
  try {
    return gaussian_sum(residuals(problem, parameters), sigma);
  } catch (const EvaluationError&) {
    return -kInf;
  }
}

double gaussian_log_likelihood_unknown_sigma(const TimeSeriesProblem& problem,
                                             const Vector& parameters_with_sigma) {
  const Index np = problem.n_parameters();
  const Index no = problem.n_outputs();
  check_dimension(np + no, parameters_with_sigma);
  const auto sigma = parameters_with_sigma.tail(no);
  if (!(sigma.array() > 0).all()) return -kInf;
  try {
    return gaussian_sum(residuals(problem, parameters_with_sigma.head(np)),
                        sigma);
  } catch (const EvaluationError&) {
    return -kInf;
  }
}

GaussianLogLikelihoodKnownSigma::GaussianLogLikelihoodKnownSigma(
    std::shared_ptr<const TimeSeriesProblem> problem, Vector sigma)
    : problem_(std::move(problem)), sigma_(std::move(sigma)) {
  if (!problem_) throw ContractViolation("likelihood requires a problem");
  if (sigma_.size() != problem_->n_outputs())
    throw ContractViolation("need one sigma per output");
  if (!(sigma_.array() > 0).all() || !sigma_.allFinite())
    throw ContractViolation("sigma must be positive and finite");
}

GaussianLogLikelihoodKnownSigma::GaussianLogLikelihoodKnownSigma(
    std::shared_ptr<const TimeSeriesProblem> problem, double sigma)
    : GaussianLogLikelihoodKnownSigma(
          problem, Vector::Constant(problem ? problem->n_outputs() : 1, sigma)) {}

double GaussianLogLikelihoodKnownSigma::operator()(const Vector& p) const {
  return gaussian_log_likelihood_known_sigma(*problem_, sigma_, p);
}

GaussianLogLikelihood::GaussianLogLikelihood(
    std::shared_ptr<const TimeSeriesProblem> problem)
    : problem_(std::move(problem)) {
  if (!problem_) throw ContractViolation("likelihood requires a problem");
}

double GaussianLogLikelihood::operator()(const Vector& p) const {
  return gaussian_log_likelihood_unknown_sigma(*problem_, p);
}

UniformLogPrior::UniformLogPrior(Vector lower, Vector upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || lower_.size() == 0)
    throw ContractViolation("uniform prior bounds must be non-empty and match");
  if (!lower_.allFinite() || !upper_.allFinite() ||
      !(lower_.array() < upper_.array()).all())
    throw ContractViolation("uniform prior needs finite lower < upper");
  log_density_ = -(upper_ - lower_).array().log().sum();
}

bool UniformLogPrior::contains(const Vector& p) const {
  return (p.array() >= lower_.array()).all() &&
         (p.array() < upper_.array()).all();
}

double UniformLogPrior::operator()(const Vector& p) const {
  check_dimension(n_parameters(), p);
  return contains(p) ? log_density_ : -kInf;
}

Vector UniformLogPrior::sample(RandomSource& rng) const {
  Vector x(n_parameters());
  for (Index i = 0; i < x.size(); ++i) {
    x(i) = rng.uniform(lower_(i), upper_(i));
    // Rounding in low + (high - low) * u can land on the open upper bound.
    if (x(i) >= upper_(i)) x(i) = std::nextafter(upper_(i), lower_(i));
  }
  return x;
}

GaussianLogPrior::GaussianLogPrior(Vector mean, Matrix covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  if (covariance_.rows() != mean_.size() || covariance_.cols() != mean_.size())
    throw ContractViolation("covariance shape must match mean");
  if (!covariance_.isApprox(covariance_.transpose(), 1e-12))
    throw ContractViolation("covariance must be symmetric");
  llt_.compute(covariance_);
  if (llt_.info() != Eigen::Success ||
      !(llt_.matrixLLT().diagonal().array() > 0).all())
    throw ContractViolation("covariance must be positive definite");
}

double GaussianLogPrior::operator()(const Vector& p) const {
  check_dimension(n_parameters(), p);
  const double v = gaussian_log_density(p, mean_, llt_);
  return std::isnan(v) ? -kInf : v;
}

Vector GaussianLogPrior::sample(RandomSource& rng) const {
  return mean_ + llt_.matrixL() * rng.normal(n_parameters());
}

ComposedLogPrior::ComposedLogPrior(
    std::vector<std::shared_ptr<const LogPrior>> priors)
    : priors_(std::move(priors)) {
  if (priors_.empty()) throw ContractViolation("composed prior is empty");
  for (const auto& p : priors_) {
    if (!p) throw ContractViolation("composed prior has a null component");
    n_parameters_ += p->n_parameters();
  }
}

bool ComposedLogPrior::thread_safe() const {
  for (const auto& p : priors_)
    if (!p->thread_safe()) return false;
  return true;
}

double ComposedLogPrior::operator()(const Vector& p) const {
  return composed_log_prior(priors_, p);
}

Vector ComposedLogPrior::sample(RandomSource& rng) const {
  Vector x(n_parameters_);
  Index offset = 0;
  for (const auto& prior : priors_) {
    const Index n = prior->n_parameters();
    x.segment(offset, n) = prior->sample(rng);
    offset += n;
  }
  return x;
}

double composed_log_prior(
    const std::vector<std::shared_ptr<const LogPrior>>& priors,
    const Vector& parameters) {
  Index total = 0;
  for (const auto& p : priors) total += p->n_parameters();
  check_dimension(total, parameters);
  double sum = 0.0;
  Index offset = 0;
  for (const auto& prior : priors) {
    const Index n = prior->n_parameters();
    const double v = (*prior)(parameters.segment(offset, n));
    if (v == -kInf) return -kInf;
    sum += v;
    offset += n;
  }
  return sum;
}

LogPosterior::LogPosterior(std::shared_ptr<const LogPDF> likelihood,
                           std::shared_ptr<const LogPDF> prior)
    : likelihood_(std::move(likelihood)), prior_(std::move(prior)) {
  if (!likelihood_ || !prior_)
    throw ContractViolation("posterior requires a likelihood and a prior");
  if (likelihood_->n_parameters() != prior_->n_parameters())
    throw ContractViolation("likelihood and prior dimensions differ");
}

double LogPosterior::operator()(const Vector& p) const {
  const double lp = (*prior_)(p);
  if (lp == -kInf || std::isnan(lp)) return -kInf;
  const double ll = (*likelihood_)(p);
  if (ll == -kInf || std::isnan(ll)) return -kInf;
  return lp + ll;
}

double log_posterior(const LogPosterior& posterior, const Vector& parameters) {
  return posterior(parameters);
}

}  // namespace tsinfer
