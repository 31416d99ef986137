#include "tsinfer/optimisers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

namespace tsinfer {

Optimiser::Optimiser(Vector x0, Vector sigma0, std::uint64_t seed)
    : x0_(std::move(x0)),
      sigma0_(std::move(sigma0)),
      rng_(seed),
      best_position_(x0_),
      best_score_(std::numeric_limits<double>::infinity()) {
  if (x0_.size() == 0) throw ContractViolation("x0 must be non-empty");
  if (!x0_.allFinite()) throw ContractViolation("x0 must be finite");
  if (sigma0_.size() != x0_.size())
    throw ContractViolation("sigma0 must match x0 in length");
  if (!sigma0_.allFinite() || !(sigma0_.array() > 0).all())
    throw ContractViolation("sigma0 must be positive and finite");
}

std::vector<Vector> Optimiser::ask() {
  if (expecting_tell_)
    throw ContractViolation("ask() called twice without tell()");
  pending_ = propose();
  expecting_tell_ = true;
  return pending_;
}

void Optimiser::tell(std::span<const double> scores) {
  if (!expecting_tell_) throw ContractViolation("tell() called without ask()");
  if (scores.size() != pending_.size())
    throw ContractViolation("tell() expects " + std::to_string(pending_.size()) +
                            " scores, got " + std::to_string(scores.size()));
  std::vector<double> clean(scores.begin(), scores.end());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (std::isnan(clean[i])) clean[i] = std::numeric_limits<double>::infinity();
    if (clean[i] < best_score_) {
      best_score_ = clean[i];
      best_position_ = pending_[i];
    }
  }
  update(pending_, clean);
  expecting_tell_ = false;
  ++iterations_;
}

std::vector<Index> rank_order(std::span<const double> scores) {
  std::vector<Index> order(scores.size());
  std::iota(order.begin(), order.end(), Index{0});
  const auto key = [&](Index i) {
    const double s = scores[static_cast<std::size_t>(i)];
    return std::isnan(s) ? std::numeric_limits<double>::infinity() : s;
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return key(a) < key(b); });
  return order;
}

Index default_population_size(Index n) {
  return 4 + static_cast<Index>(std::floor(3.0 * std::log(static_cast<double>(n))));
}

Vector rank_utilities(Index lambda) {
  Vector u(lambda);
  const double top = std::log(static_cast<double>(lambda) / 2.0 + 1.0);
  for (Index i = 0; i < lambda; ++i)
    u(i) = std::max(0.0, top - std::log(static_cast<double>(i + 1)));
  u /= u.sum();
  u.array() -= 1.0 / static_cast<double>(lambda);
  return u;
}

std::string to_string(OptimiserMethod method) {
  switch (method) {
    case OptimiserMethod::kCmaes: return "cmaes";
    case OptimiserMethod::kXnes: return "xnes";
    case OptimiserMethod::kSnes: return "snes";
    case OptimiserMethod::kPso: return "pso";
  }
  return "unknown";
}

OptimiserMethod parse_optimiser_method(const std::string& name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  s.erase(std::remove(s.begin(), s.end(), '-'), s.end());
  if (s == "cmaes") return OptimiserMethod::kCmaes;
  if (s == "xnes") return OptimiserMethod::kXnes;
  if (s == "snes") return OptimiserMethod::kSnes;
  if (s == "pso") return OptimiserMethod::kPso;
  throw ContractViolation("unknown optimiser method '" + name + "'");
}

std::unique_ptr<Optimiser> make_optimiser(OptimiserMethod method,
                                          const Vector& x0, const Vector& sigma0,
                                          std::uint64_t seed,
                                          std::optional<Index> population_size) {
  switch (method) {
    case OptimiserMethod::kCmaes:
      return std::make_unique<Cmaes>(x0, sigma0, seed, population_size);
    case OptimiserMethod::kXnes:
      return std::make_unique<Xnes>(x0, sigma0, seed, population_size);
    case OptimiserMethod::kSnes:
      return std::make_unique<Snes>(x0, sigma0, seed, population_size);
    case OptimiserMethod::kPso:
      return std::make_unique<Pso>(x0, sigma0, seed, population_size);
  }
  throw ContractViolation("unknown optimiser method");
}

}  // namespace tsinfer
