#include "tsinfer/optimisers.hpp"

#include <cmath>

namespace tsinfer {

namespace {

double nes_shape_rate(Index n) {
  const double nd = static_cast<double>(n);
  return (9.0 + 3.0 * std::log(nd)) / (5.0 * nd * std::sqrt(nd));
}

// exp of a symmetric matrix through its eigendecomposition.
Matrix symmetric_expm(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
  return eig.eigenvectors() * eig.eigenvalues().array().exp().matrix().asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

Xnes::Xnes(Vector x0, Vector sigma0, std::uint64_t seed,
           std::optional<Index> population_size)
    : Optimiser(std::move(x0), std::move(sigma0), seed) {
  const Index n = dimension();
  lambda_ = population_size.value_or(default_population_size(n));
  if (lambda_ < 2) throw ContractViolation("xNES needs a population >= 2");
  utilities_ = rank_utilities(lambda_);
  eta_scale_ = nes_shape_rate(n);
  eta_shape_ = eta_scale_;

  mean_ = x0_;
  // A = diag(sigma0) = scale * B with det(B) = 1.
  scale_ = std::exp(sigma0_.array().log().mean());
  basis_ = (sigma0_ / scale_).asDiagonal();
}

Hyperparameters Xnes::hyperparameters() const {
  return {{"population_size", static_cast<double>(lambda_)},
          {"eta_mean", eta_mean_},
          {"eta_scale", eta_scale_},
          {"eta_shape", eta_shape_}};
}

std::vector<Vector> Xnes::propose() {
  samples_.clear();
  std::vector<Vector> xs;
  for (Index k = 0; k < lambda_; ++k) {
    samples_.push_back(rng_.normal(dimension()));
    xs.push_back(mean_ + scale_ * (basis_ * samples_.back()));
  }
  return xs;
}

void Xnes::update(const std::vector<Vector>&, std::span<const double> scores) {
  const Index n = dimension();
  const auto order = rank_order(scores);
  Vector grad_mean = Vector::Zero(n);
  Matrix grad_m = Matrix::Zero(n, n);
  const Matrix identity = Matrix::Identity(n, n);
  for (Index i = 0; i < lambda_; ++i) {
    const Vector& z = samples_[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    grad_mean += utilities_(i) * z;
    grad_m += utilities_(i) * (z * z.transpose() - identity);
  }
  const double grad_scale = grad_m.trace() / static_cast<double>(n);
  const Matrix grad_shape = grad_m - grad_scale * identity;

  mean_ += eta_mean_ * scale_ * (basis_ * grad_mean);
  scale_ *= std::exp(0.5 * eta_scale_ * grad_scale);
  basis_ = basis_ * symmetric_expm(0.5 * eta_shape_ * grad_shape);
}

Snes::Snes(Vector x0, Vector sigma0, std::uint64_t seed,
           std::optional<Index> population_size)
    : Optimiser(std::move(x0), std::move(sigma0), seed) {
  const Index n = dimension();
  lambda_ = population_size.value_or(default_population_size(n));
  if (lambda_ < 2) throw ContractViolation("SNES needs a population >= 2");
  utilities_ = rank_utilities(lambda_);
  eta_std_ = nes_shape_rate(n);
  mean_ = x0_;
  stds_ = sigma0_;
}

Hyperparameters Snes::hyperparameters() const {
  return {{"population_size", static_cast<double>(lambda_)},
          {"eta_mean", eta_mean_},
          {"eta_std", eta_std_}};
}

std::vector<Vector> Snes::propose() {
  samples_.clear();
  std::vector<Vector> xs;
  for (Index k = 0; k < lambda_; ++k) {
    samples_.push_back(rng_.normal(dimension()));
    xs.push_back(mean_ + stds_.cwiseProduct(samples_.back()));
  }
  return xs;
}

void Snes::update(const std::vector<Vector>&, std::span<const double> scores) {
  const Index n = dimension();
  const auto order = rank_order(scores);
  Vector grad_mean = Vector::Zero(n);
  Vector grad_std = Vector::Zero(n);
  for (Index i = 0; i < lambda_; ++i) {
    const Vector& z = samples_[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    grad_mean += utilities_(i) * z;
    grad_std += utilities_(i) * (z.array().square() - 1.0).matrix();
  }
  mean_ += eta_mean_ * stds_.cwiseProduct(grad_mean);
  stds_ = stds_.cwiseProduct((0.5 * eta_std_ * grad_std).array().exp().matrix());
}

}  // namespace tsinfer
