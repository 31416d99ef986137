#include "tsinfer/optimisers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tsinfer {

Index Pso::default_swarm_size(Index n) {
  return 10 + static_cast<Index>(std::floor(2.0 * std::sqrt(static_cast<double>(n))));
}

Pso::Pso(Vector x0, Vector sigma0, std::uint64_t seed,
         std::optional<Index> swarm_size)
    : Optimiser(std::move(x0), std::move(sigma0), seed),
      global_best_score_(std::numeric_limits<double>::infinity()) {
  n_particles_ = swarm_size.value_or(default_swarm_size(dimension()));
  if (n_particles_ < 1) throw ContractViolation("PSO needs at least one particle");
  // Velocities are limited to the width of the initial box x0 ± 3 sigma0.
  max_velocity_ = 6.0 * sigma0_;
}

Hyperparameters Pso::hyperparameters() const {
  return {{"swarm_size", static_cast<double>(n_particles_)},
          {"inertia", inertia_},
          {"cognitive", cognitive_},
          {"social", social_}};
}

std::vector<Vector> Pso::propose() {
  const Index n = dimension();
  if (!initialised_) {
    for (Index k = 0; k < n_particles_; ++k) {
      Vector x(n), v(n);
      for (Index j = 0; j < n; ++j) {
        x(j) = rng_.uniform(x0_(j) - 3.0 * sigma0_(j), x0_(j) + 3.0 * sigma0_(j));
        v(j) = rng_.uniform(-sigma0_(j), sigma0_(j));
      }
      positions_.push_back(std::move(x));
      velocities_.push_back(std::move(v));
    }
    personal_best_ = positions_;
    personal_best_score_.assign(static_cast<std::size_t>(n_particles_),
                                std::numeric_limits<double>::infinity());
    global_best_ = positions_.front();
    initialised_ = true;
    return positions_;
  }
  for (std::size_t k = 0; k < positions_.size(); ++k) {
    Vector& x = positions_[k];
    Vector& v = velocities_[k];
    for (Index j = 0; j < n; ++j) {
      const double r1 = rng_.uniform();
      const double r2 = rng_.uniform();
      double vj = inertia_ * v(j) + cognitive_ * r1 * (personal_best_[k](j) - x(j)) +
                  social_ * r2 * (global_best_(j) - x(j));
      vj = std::clamp(vj, -max_velocity_(j), max_velocity_(j));
      v(j) = vj;
      x(j) += vj;
    }
  }
  return positions_;
}

void Pso::update(const std::vector<Vector>& xs, std::span<const double> scores) {
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (scores[k] < personal_best_score_[k]) {
      personal_best_score_[k] = scores[k];
      personal_best_[k] = xs[k];
    }
    if (scores[k] < global_best_score_) {
      global_best_score_ = scores[k];
      global_best_ = xs[k];
    }
  }
}

}  // namespace tsinfer
