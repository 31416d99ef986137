#include "tsinfer/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tsinfer {

Vector rhat(const std::vector<Matrix>& chains) {
  const Index m = static_cast<Index>(chains.size());
  if (m < 2) throw ContractViolation("rhat needs at least 2 chains");
  const Index n = chains.front().rows();
  const Index d = chains.front().cols();
  if (n < 2) throw ContractViolation("rhat needs at least 2 samples per chain");
  for (const auto& c : chains)
    if (c.rows() != n || c.cols() != d)
      throw ContractViolation("rhat needs chains of equal shape");

  const double nd = static_cast<double>(n);
  const double md = static_cast<double>(m);
  Vector out(d);
  for (Index k = 0; k < d; ++k) {
    Vector means(m);
    double w = 0.0;
    for (Index j = 0; j < m; ++j) {
      const auto col = chains[static_cast<std::size_t>(j)].col(k);
      means(j) = col.mean();
      w += (col.array() - means(j)).square().sum() / (nd - 1.0);
    }
    w /= md;
    const double b = nd * (means.array() - means.mean()).square().sum() / (md - 1.0);
    if (w == 0.0) {
      out(k) = b == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
      continue;
    }
    out(k) = std::sqrt(((nd - 1.0) / nd * w + b / nd) / w);
  }
  return out;
}

namespace {

// Lag-k autocovariance (biased, divided by n) of a centred series.
double autocovariance(const Vector& centred, Index lag) {
  const Index n = centred.size();
  return centred.head(n - lag).dot(centred.tail(n - lag)) / static_cast<double>(n);
}

}  // namespace

Vector autocorrelation(const Eigen::Ref<const Vector>& chain, Index max_lag) {
  const Index n = chain.size();
  if (max_lag < 0 || max_lag >= n)
    throw ContractViolation("max_lag must lie in [0, n)");
  const Vector centred = chain.array() - chain.mean();
  const double c0 = autocovariance(centred, 0);
  Vector rho = Vector::Zero(max_lag + 1);
  rho(0) = 1.0;
  if (c0 == 0.0) return rho;
  for (Index k = 1; k <= max_lag; ++k) rho(k) = autocovariance(centred, k) / c0;
  return rho;
}

double effective_sample_size(const Eigen::Ref<const Vector>& chain) {
  const Index n = chain.size();
  if (n < 10) throw ContractViolation("ESS needs at least 10 samples");
  const double nd = static_cast<double>(n);
  const Vector centred = chain.array() - chain.mean();
  const double c0 = autocovariance(centred, 0);
  if (c0 == 0.0) return nd;

  // Geyer's initial positive sequence over pairs (rho_2m + rho_2m+1).
  double tau = -1.0;
  for (Index lag = 0; lag + 1 < n; lag += 2) {
    const double pair =
        (autocovariance(centred, lag) + autocovariance(centred, lag + 1)) / c0;
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  return std::clamp(nd / tau, 1.0, nd);
}

Vector effective_sample_sizes(const Matrix& chain) {
  Vector out(chain.cols());
  for (Index k = 0; k < chain.cols(); ++k) out(k) = effective_sample_size(chain.col(k));
  return out;
}

Matrix thin(const Matrix& chain, Index factor, Index burn_in) {
  if (factor < 1) throw ContractViolation("thinning factor must be >= 1");
  if (burn_in < 0 || burn_in > chain.rows())
    throw ContractViolation("burn-in must lie within the chain");
  const Index kept = (chain.rows() - burn_in + factor - 1) / factor;
  Matrix out(kept, chain.cols());
  for (Index i = 0; i < kept; ++i) out.row(i) = chain.row(burn_in + i * factor);
  return out;
}

double kolmogorov_tail(double lambda) {
  if (lambda <= 0.0) return 1.0;
  // The alternating series converges slowly for small lambda, where the
  // tail is 1 to double precision anyway.
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = sign * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

DistributionCheck distribution_check(const Matrix& samples,
                                     const std::vector<Cdf>& references,
                                     double alpha) {
  DistributionCheck out;
  const Index d = static_cast<Index>(references.size());
  out.statistics = Vector::Zero(d);
  out.p_values = Vector::Ones(d);
  if (d == 0) return out;
  if (samples.cols() != d)
    throw ContractViolation("need one reference CDF per sample column");
  const Index n = samples.rows();
  if (n < 500) throw ContractViolation("distribution_check needs >= 500 samples");
  const double nd = static_cast<double>(n);

  for (Index k = 0; k < d; ++k) {
    std::vector<double> xs(samples.col(k).data(), samples.col(k).data() + n);
    std::sort(xs.begin(), xs.end());
    double dmax = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double f = references[static_cast<std::size_t>(k)](xs[static_cast<std::size_t>(i)]);
      dmax = std::max({dmax, static_cast<double>(i + 1) / nd - f,
                       f - static_cast<double>(i) / nd});
    }
    const double sqrt_n = std::sqrt(nd);
    out.statistics(k) = dmax;
    out.p_values(k) = kolmogorov_tail((sqrt_n + 0.12 + 0.11 / sqrt_n) * dmax);
    if (out.p_values(k) < alpha) out.passed = false;
  }
  return out;
}

Cdf normal_cdf(double mean, double sd) {
  return [mean, sd](double x) {
    return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
  };
}

}  // namespace tsinfer
