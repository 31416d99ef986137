#pragma once

#include "tsinfer/core.hpp"
#include "tsinfer/log_pdf.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

namespace tsinfer {

/// log N(x | mean, LLᵀ) given the Cholesky factor of the covariance.
template <typename DerivedX, typename DerivedM, typename Scalar>
Scalar gaussian_log_density(const Eigen::MatrixBase<DerivedX>& x,
                            const Eigen::MatrixBase<DerivedM>& mean,
                            const Eigen::LLT<MatrixX<Scalar>>& llt) {
  const VectorX<Scalar> z = llt.matrixL().solve((x - mean).eval());
  const MatrixX<Scalar>& l = llt.matrixLLT();
  const Scalar log_det = 2 * l.diagonal().array().log().sum();
  const auto d = static_cast<Scalar>(x.size());
  return -Scalar(0.5) * (d * std::log(2 * std::numbers::pi_v<Scalar>) +
                         log_det + z.squaredNorm());
}

/// Sum over outputs of the i.i.d. Gaussian log-density of the residuals,
/// one noise level per output. Returns -infinity if the model fails.
double gaussian_log_likelihood_known_sigma(const TimeSeriesProblem& problem,
                                           const Vector& sigma,
                                           const Vector& parameters);

/// As above, with one sigma per output appended to the model parameters.
/// Any sigma <= 0 gives -infinity.
double gaussian_log_likelihood_unknown_sigma(const TimeSeriesProblem& problem,
                                             const Vector& parameters_with_sigma);

class GaussianLogLikelihoodKnownSigma : public LogPDF {
 public:
  GaussianLogLikelihoodKnownSigma(
      std::shared_ptr<const TimeSeriesProblem> problem, Vector sigma);
  GaussianLogLikelihoodKnownSigma(
      std::shared_ptr<const TimeSeriesProblem> problem, double sigma);

  Index n_parameters() const override { return problem_->n_parameters(); }
  bool thread_safe() const override { return problem_->thread_safe(); }
  double operator()(const Vector& p) const override;

  const Vector& sigma() const { return sigma_; }

 private:
  std::shared_ptr<const TimeSeriesProblem> problem_;
  Vector sigma_;
};

/// Noise levels are inferred jointly: the parameter vector is the model
/// parameters followed by one sigma per output, in output order.
class GaussianLogLikelihood : public LogPDF {
 public:
  explicit GaussianLogLikelihood(
      std::shared_ptr<const TimeSeriesProblem> problem);

  Index n_parameters() const override {
    return problem_->n_parameters() + problem_->n_outputs();
  }
  bool thread_safe() const override { return problem_->thread_safe(); }
  double operator()(const Vector& p) const override;

 private:
  std::shared_ptr<const TimeSeriesProblem> problem_;
};

/// Uniform density on the box [lower, upper). Normalised.
class UniformLogPrior : public LogPrior {
 public:
  UniformLogPrior(Vector lower, Vector upper);

  Index n_parameters() const override { return lower_.size(); }
  double operator()(const Vector& p) const override;
  Vector sample(RandomSource& rng) const override;

  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  bool contains(const Vector& p) const;

 private:
  Vector lower_;
  Vector upper_;
  double log_density_;
};

/// Multivariate normal prior. Normalised.
class GaussianLogPrior : public LogPrior {
 public:
  GaussianLogPrior(Vector mean, Matrix covariance);

  Index n_parameters() const override { return mean_.size(); }
  double operator()(const Vector& p) const override;
  Vector sample(RandomSource& rng) const override;

  const Vector& mean() const { return mean_; }
  const Matrix& covariance() const { return covariance_; }

 private:
  Vector mean_;
  Matrix covariance_;
  Eigen::LLT<Matrix> llt_;
};

/// Independent priors over consecutive slices of the parameter vector.
class ComposedLogPrior : public LogPrior {
 public:
  explicit ComposedLogPrior(std::vector<std::shared_ptr<const LogPrior>> priors);

  Index n_parameters() const override { return n_parameters_; }
  bool thread_safe() const override;
  double operator()(const Vector& p) const override;
  Vector sample(RandomSource& rng) const override;

 private:
  std::vector<std::shared_ptr<const LogPrior>> priors_;
  Index n_parameters_ = 0;
};

double composed_log_prior(const std::vector<std::shared_ptr<const LogPrior>>& priors,
                          const Vector& parameters);

/// likelihood + prior. The likelihood is not evaluated where the prior is
/// zero.
class LogPosterior : public LogPDF {
 public:
  LogPosterior(std::shared_ptr<const LogPDF> likelihood,
               std::shared_ptr<const LogPDF> prior);

  Index n_parameters() const override { return prior_->n_parameters(); }
  bool thread_safe() const override {
    return likelihood_->thread_safe() && prior_->thread_safe();
  }
  double operator()(const Vector& p) const override;

  const LogPDF& likelihood() const { return *likelihood_; }
  const LogPDF& prior() const { return *prior_; }
  const std::shared_ptr<const LogPDF>& prior_ptr() const { return prior_; }

 private:
  std::shared_ptr<const LogPDF> likelihood_;
  std::shared_ptr<const LogPDF> prior_;
};

double log_posterior(const LogPosterior& posterior, const Vector& parameters);

}  // namespace tsinfer
