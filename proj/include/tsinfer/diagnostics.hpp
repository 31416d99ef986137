#pragma once

#include "tsinfer/core.hpp"

#include <functional>
#include <vector>

namespace tsinfer {

/// Gelman-Rubin potential scale reduction per dimension, without chain
/// splitting or rank normalisation. Each chain is (samples x dimensions).
/// Constant, equal chains give 1; constant chains that differ give +infinity.
Vector rhat(const std::vector<Matrix>& chains);

/// Biased autocorrelation estimate rho_0..rho_max_lag of a 1-D chain. A
/// zero-variance chain gives 1 followed by zeros.
Vector autocorrelation(const Eigen::Ref<const Vector>& chain, Index max_lag);

/// n / (1 + 2 sum rho_k), truncated at the first non-positive sum of an
/// adjacent pair of autocorrelations and clipped to [1, n].
double effective_sample_size(const Eigen::Ref<const Vector>& chain);

/// effective_sample_size for every column of a chain.
Vector effective_sample_sizes(const Matrix& chain);

/// Keeps every `factor`-th row after dropping the first `burn_in` rows.
Matrix thin(const Matrix& chain, Index factor, Index burn_in = 0);

using Cdf = std::function<double(double)>;

struct DistributionCheck {
  bool passed = true;
  Vector statistics;  // Kolmogorov-Smirnov D per dimension
  Vector p_values;
};

/// Asymptotic Kolmogorov distribution tail Q(lambda) = P(K > lambda).
double kolmogorov_tail(double lambda);

/// One-sample KS test of each column of `samples` against its reference CDF;
/// fails if any p-value is below alpha. Deterministic.
DistributionCheck distribution_check(const Matrix& samples,
                                     const std::vector<Cdf>& references,
                                     double alpha = 1e-3);

/// Standard normal CDF, shifted and scaled.
Cdf normal_cdf(double mean = 0.0, double sd = 1.0);

}  // namespace tsinfer
