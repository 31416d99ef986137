#pragma once

#include "tsinfer/core.hpp"
#include "tsinfer/densities.hpp"
#include "tsinfer/measures.hpp"

#include <memory>

namespace tsinfer::toys {

/// Closed-form logistic growth y(t) = K / (1 + (K/y0 - 1) exp(-r t)) with
/// parameters (r, K) and a fixed initial value y0.
class LogisticModel : public ForwardModel {
 public:
  explicit LogisticModel(double y0 = 1.0);

  Index n_parameters() const override { return 2; }
  Matrix simulate(const Vector& parameters, const Vector& times) const override;

  double initial_value() const { return y0_; }

 private:
  double y0_;
};

/// Outputs a constant per output; the parameters are the constants.
class ConstantModel : public ForwardModel {
 public:
  explicit ConstantModel(Index n_outputs = 1) : n_outputs_(n_outputs) {}

  Index n_parameters() const override { return n_outputs_; }
  Index n_outputs() const override { return n_outputs_; }
  Matrix simulate(const Vector& parameters, const Vector& times) const override;

 private:
  Index n_outputs_;
};

double rosenbrock(const Vector& p);

/// (1 - x)² + 100 (y - x²)², minimum 0 at (1, 1).
class RosenbrockError : public ErrorMeasure {
 public:
  Index n_parameters() const override { return 2; }
  double operator()(const Vector& p) const override { return rosenbrock(p); }
};

/// ‖x‖².
class SphereError : public ErrorMeasure {
 public:
  explicit SphereError(Index n) : n_(n) {}
  Index n_parameters() const override { return n_; }
  double operator()(const Vector& p) const override { return p.squaredNorm(); }

 private:
  Index n_;
};

/// Normalised multivariate normal target.
class GaussianLogPDF : public LogPDF {
 public:
  GaussianLogPDF(Vector mean, Matrix covariance);

  Index n_parameters() const override { return prior_.n_parameters(); }
  double operator()(const Vector& p) const override { return prior_(p); }

  const Vector& mean() const { return prior_.mean(); }
  const Matrix& covariance() const { return prior_.covariance(); }

 private:
  GaussianLogPrior prior_;
};

/// Banana-shaped 2-D target: (x₁, x₂ + b·x₁² − V·b) is normal with
/// variances (V, 1). Mean is the origin; b = 0 gives N(0, diag(V, 1)).
class TwistedGaussianLogPDF : public LogPDF {
 public:
  explicit TwistedGaussianLogPDF(double warp = 0.1, double variance = 100.0);

  Index n_parameters() const override { return 2; }
  double operator()(const Vector& p) const override;

  double warp() const { return warp_; }
  double variance() const { return variance_; }

 private:
  double warp_;
  double variance_;
};

/// 1-D mixture of two unit-variance normals at ±separation/2, with weight
/// `weight` on the negative mode.
class BimodalLogPDF : public LogPDF {
 public:
  explicit BimodalLogPDF(double separation = 10.0, double weight = 0.5);

  Index n_parameters() const override { return 1; }
  double operator()(const Vector& p) const override;

  double cdf(double x) const;

 private:
  double half_;
  double weight_;
};

struct SyntheticDataset {
  std::shared_ptr<const TimeSeriesProblem> problem;
  Vector true_parameters;
  double noise_sigma;
};

/// Simulates at the true parameters and adds i.i.d. N(0, sigma²) noise.
SyntheticDataset generate_synthetic_data(
    std::shared_ptr<const ForwardModel> model, const Vector& true_parameters,
    const Vector& times, double noise_sigma, RandomSource& rng);

}  // namespace tsinfer::toys
