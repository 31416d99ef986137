#include "tsinfer/toys.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace tsinfer::toys {

LogisticModel::LogisticModel(double y0) : y0_(y0) {
  if (!(y0 > 0) || !std::isfinite(y0))
    throw ContractViolation("logistic initial value must be positive");
}

Matrix LogisticModel::simulate(const Vector& p, const Vector& times) const {
  const double r = p(0);
  const double k = p(1);
  Matrix y(times.size(), 1);
  for (Index i = 0; i < times.size(); ++i) {
    if (times(i) == 0.0)
      y(i, 0) = y0_;
    else
      y(i, 0) = k / (1.0 + (k / y0_ - 1.0) * std::exp(-r * times(i)));
  }
  return y;
}

Matrix ConstantModel::simulate(const Vector& p, const Vector& times) const {
  Matrix y(times.size(), n_outputs_);
  y.rowwise() = p.transpose();
  return y;
}

double rosenbrock(const Vector& p) {
  if (p.size() != 2) throw ContractViolation("rosenbrock is 2-dimensional");
  const double a = 1.0 - p(0);
  const double b = p(1) - p(0) * p(0);
  return a * a + 100.0 * b * b;
}

GaussianLogPDF::GaussianLogPDF(Vector mean, Matrix covariance)
    : prior_(std::move(mean), std::move(covariance)) {}

TwistedGaussianLogPDF::TwistedGaussianLogPDF(double warp, double variance)
    : warp_(warp), variance_(variance) {
  if (!(variance > 0)) throw ContractViolation("variance must be positive");
}

double TwistedGaussianLogPDF::operator()(const Vector& p) const {
  if (p.size() != 2) throw ContractViolation("twisted gaussian is 2-D");
  const double y1 = p(0);
  const double y2 = p(1) + warp_ * p(0) * p(0) - variance_ * warp_;
  const double v = -std::log(2.0 * std::numbers::pi) -
                   0.5 * std::log(variance_) - 0.5 * y1 * y1 / variance_ -
                   0.5 * y2 * y2;
  return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
}

BimodalLogPDF::BimodalLogPDF(double separation, double weight)
    : half_(0.5 * separation), weight_(weight) {
  if (!(weight >= 0 && weight <= 1))
    throw ContractViolation("mixture weight must lie in [0, 1]");
}

double BimodalLogPDF::operator()(const Vector& p) const {
  if (p.size() != 1) throw ContractViolation("bimodal target is 1-D");
  const double x = p(0);
  const double a = std::log(weight_) - 0.5 * (x + half_) * (x + half_);
  const double b = std::log(1.0 - weight_) - 0.5 * (x - half_) * (x - half_);
  const double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m)) -
         0.5 * std::log(2.0 * std::numbers::pi);
}

double BimodalLogPDF::cdf(double x) const {
  const auto phi = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  return weight_ * phi(x + half_) + (1.0 - weight_) * phi(x - half_);
}

SyntheticDataset generate_synthetic_data(
    std::shared_ptr<const ForwardModel> model, const Vector& true_parameters,
    const Vector& times, double noise_sigma, RandomSource& rng) {
  if (!(noise_sigma >= 0)) throw ContractViolation("noise sigma must be >= 0");
  Matrix y = simulate(*model, true_parameters, times);
  if (noise_sigma > 0) {
    for (Index j = 0; j < y.cols(); ++j)
      for (Index i = 0; i < y.rows(); ++i) y(i, j) += noise_sigma * rng.normal();
  }
  auto problem = std::make_shared<const TimeSeriesProblem>(std::move(model),
                                                           times, std::move(y));
  return {std::move(problem), true_parameters, noise_sigma};
}

}  // namespace tsinfer::toys
