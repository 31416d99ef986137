#include "tsinfer/optimisers.hpp"

#include <algorithm>
#include <cmath>

namespace tsinfer {

Cmaes::Cmaes(Vector x0, Vector sigma0, std::uint64_t seed,
             std::optional<Index> population_size)
    : Optimiser(std::move(x0), std::move(sigma0), seed) {
  const Index n = dimension();
  const double nd = static_cast<double>(n);
  lambda_ = population_size.value_or(default_population_size(n));
  if (lambda_ < 2) throw ContractViolation("CMA-ES needs a population >= 2");
  mu_ = lambda_ / 2;

  weights_.resize(mu_);
  for (Index i = 0; i < mu_; ++i)
    weights_(i) = std::log(static_cast<double>(mu_) + 0.5) -
                  std::log(static_cast<double>(i + 1));
  weights_ /= weights_.sum();
  mueff_ = 1.0 / weights_.squaredNorm();

  cc_ = (4.0 + mueff_ / nd) / (nd + 4.0 + 2.0 * mueff_ / nd);
  cs_ = (mueff_ + 2.0) / (nd + mueff_ + 5.0);
  c1_ = 2.0 / ((nd + 1.3) * (nd + 1.3) + mueff_);
  cmu_ = std::min(1.0 - c1_, 2.0 * (mueff_ - 2.0 + 1.0 / mueff_) /
                                 ((nd + 2.0) * (nd + 2.0) + mueff_));
  damps_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff_ - 1.0) / (nd + 1.0)) - 1.0) +
           cs_;
  chi_n_ = std::sqrt(nd) * (1.0 - 1.0 / (4.0 * nd) + 1.0 / (21.0 * nd * nd));

  // Per-coordinate sigma0 enters as a diagonal covariance relative to the
  // largest entry.
  mean_ = x0_;
  sigma_ = sigma0_.maxCoeff();
  cov_ = (sigma0_ / sigma_).array().square().matrix().asDiagonal();
  path_sigma_ = Vector::Zero(n);
  path_c_ = Vector::Zero(n);
  decompose();
}

Hyperparameters Cmaes::hyperparameters() const {
  return {{"population_size", static_cast<double>(lambda_)},
          {"parents", static_cast<double>(mu_)},
          {"mueff", mueff_},
          {"cc", cc_},
          {"cs", cs_},
          {"c1", c1_},
          {"cmu", cmu_},
          {"damps", damps_}};
}

void Cmaes::decompose() {
  cov_ = 0.5 * (cov_ + cov_.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov_);
  Vector ev = eig.eigenvalues();
  const double floor = std::max(ev.maxCoeff(), 1e-300) * 1e-20;
  bool clamped = false;
  for (Index i = 0; i < ev.size(); ++i) {
    if (!(ev(i) > floor)) {
      ev(i) = floor;
      clamped = true;
    }
  }
  basis_ = eig.eigenvectors();
  axis_ = ev.array().sqrt();
  if (clamped) cov_ = basis_ * ev.asDiagonal() * basis_.transpose();
}

std::vector<Vector> Cmaes::propose() {
  std::vector<Vector> xs;
  xs.reserve(static_cast<std::size_t>(lambda_));
  for (Index k = 0; k < lambda_; ++k) {
    const Vector z = rng_.normal(dimension());
    xs.push_back(mean_ + sigma_ * (basis_ * axis_.cwiseProduct(z)));
  }
  return xs;
}

void Cmaes::update(const std::vector<Vector>& xs, std::span<const double> scores) {
  const Index n = dimension();
  const auto order = rank_order(scores);

  const Vector old_mean = mean_;
  Matrix steps(n, mu_);
  for (Index i = 0; i < mu_; ++i)
    steps.col(i) = (xs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] -
                    old_mean) / sigma_;
  const Vector y_w = steps * weights_;
  mean_ = old_mean + sigma_ * y_w;

  // C^{-1/2} y_w
  const Vector inv_sqrt_y =
      basis_ * (basis_.transpose() * y_w).cwiseQuotient(axis_);
  path_sigma_ = (1.0 - cs_) * path_sigma_ +
                std::sqrt(cs_ * (2.0 - cs_) * mueff_) * inv_sqrt_y;

  const double generation = static_cast<double>(iterations() + 1);
  const double ps_norm = path_sigma_.norm();
  const bool hsig =
      ps_norm / std::sqrt(1.0 - std::pow(1.0 - cs_, 2.0 * generation)) / chi_n_ <
      1.4 + 2.0 / (static_cast<double>(n) + 1.0);

  path_c_ = (1.0 - cc_) * path_c_ +
            (hsig ? std::sqrt(cc_ * (2.0 - cc_) * mueff_) : 0.0) * y_w;

  const double delta = hsig ? 0.0 : cc_ * (2.0 - cc_);
  cov_ = (1.0 - c1_ - cmu_) * cov_ +
         c1_ * (path_c_ * path_c_.transpose() + delta * cov_) +
         cmu_ * steps * weights_.asDiagonal() * steps.transpose();

  sigma_ *= std::exp((cs_ / damps_) * (ps_norm / chi_n_ - 1.0));
  decompose();
}

}  // namespace tsinfer
