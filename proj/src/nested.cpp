#include "tsinfer/samplers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>

namespace tsinfer {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kJitter = 1e-12;

Eigen::LLT<Matrix> jittered_llt(const Matrix& m) {
  const Index d = m.rows();
  Eigen::LLT<Matrix> llt(m + kJitter * Matrix::Identity(d, d));
  double jitter = kJitter;
  while (llt.info() != Eigen::Success && jitter < 1.0) {
    jitter *= 100.0;
    llt.compute(m + jitter * Matrix::Identity(d, d));
  }
  if (llt.info() != Eigen::Success)
    throw NestedSamplingError("ellipsoid shape matrix could not be factorised");
  return llt;
}

}  // namespace

double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

bool Ellipsoid::contains(const Vector& x) const {
  const Vector z = cholesky.triangularView<Eigen::Lower>().solve(x - centre);
  return z.squaredNorm() <= 1.0;
}

Vector Ellipsoid::sample(RandomSource& rng) const {
  const Index d = centre.size();
  Vector z = rng.normal(d);
  const double norm = z.norm();
  const double radius = std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
  z *= radius / norm;
  return centre + cholesky * z;
}

double Ellipsoid::log_volume() const {
  const double d = static_cast<double>(centre.size());
  const double log_unit_ball =
      0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d + 1.0);
  return log_unit_ball + cholesky.diagonal().array().log().sum();
}

Ellipsoid minimum_volume_ellipsoid(const Matrix& points, double tolerance,
                                   Index max_iterations) {
  const Index d = points.rows();
  const Index n = points.cols();
  if (d == 0 || n == 0) throw ContractViolation("ellipsoid fit needs points");
  const double dd = static_cast<double>(d);

  Matrix q(d + 1, n);
  q.topRows(d) = points;
  q.row(d).setOnes();
  Vector u = Vector::Constant(n, 1.0 / static_cast<double>(n));

  for (Index it = 0; it < max_iterations; ++it) {
    const Matrix x = q * u.asDiagonal() * q.transpose();
    const auto llt = jittered_llt(x);
    const Matrix y = llt.solve(q);
    const Vector m = (q.array() * y.array()).colwise().sum().transpose();
    Index j;
    const double max_m = m.maxCoeff(&j);
    if (!(max_m > dd + 1.0) || (max_m - dd - 1.0) / (dd + 1.0) < tolerance) break;
    const double step = (max_m - dd - 1.0) / ((dd + 1.0) * (max_m - 1.0));
    u *= (1.0 - step);
    u(j) += step;
  }

  Ellipsoid e;
  e.centre = points * u;
  e.shape = dd * (points * u.asDiagonal() * points.transpose() -
                  e.centre * e.centre.transpose());
  e.shape = 0.5 * (e.shape + e.shape.transpose());
  auto llt = jittered_llt(e.shape);
  double worst = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Vector z = llt.matrixL().solve(points.col(i) - e.centre);
    worst = std::max(worst, z.squaredNorm());
  }
  if (worst > 1.0) e.shape *= worst;
  e.shape += kJitter * Matrix::Identity(d, d);
  e.cholesky = jittered_llt(e.shape).matrixL();
  return e;
}

std::string to_string(NestedMethod method) {
  return method == NestedMethod::kRejection ? "nested_rejection" : "nested_ellipsoid";
}

NestedMethod parse_nested_method(const std::string& name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (s == "nested_rejection" || s == "rejection") return NestedMethod::kRejection;
  if (s == "nested_ellipsoid" || s == "ellipsoid" || s == "nested_ellipsoidal")
    return NestedMethod::kEllipsoid;
  throw ContractViolation("unknown nested sampling method '" + name + "'");
}

NestedSampler::NestedSampler(std::shared_ptr<const LogPrior> prior,
                             NestedSettings settings)
    : prior_(std::move(prior)),
      settings_(settings),
      rng_(settings.seed),
      log_z_(-kInf) {
  if (!prior_) throw ContractViolation("nested sampling requires a samplable prior");
  if (settings_.live_points < 2) throw ContractViolation("need at least 2 live points");
  if (settings_.max_iterations < 0) throw ContractViolation("max_iterations must be >= 0");
  if (!(settings_.enlargement >= 1.0))
    throw ContractViolation("enlargement must be >= 1");
  if (settings_.refit_interval < 1) throw ContractViolation("refit interval must be >= 1");
  if (settings_.max_draws_per_iteration < 1)
    throw ContractViolation("draw cap must be >= 1");
}

double NestedSampler::log_prior_volume() const {
  return -static_cast<double>(iteration_) / static_cast<double>(settings_.live_points);
}

double NestedSampler::threshold() const {
  return live_ll_.empty() ? -kInf : live_ll_[static_cast<std::size_t>(worst_)];
}

bool NestedSampler::finished() const { return finished_; }

void NestedSampler::update_finished() {
  if (static_cast<Index>(live_.size()) < settings_.live_points) return;
  if (iteration_ >= settings_.max_iterations) {
    finished_ = true;
    return;
  }
  if (log_z_ == -kInf) return;
  double live_log_sum = -kInf;
  for (double l : live_ll_) live_log_sum = log_sum_exp(live_log_sum, l);
  const double remainder = live_log_sum -
                           std::log(static_cast<double>(settings_.live_points)) +
                           log_prior_volume();
  finished_ = remainder < std::log(settings_.remainder_fraction) + log_z_;
}

std::string NestedSampler::stop_reason() const {
  if (!finished()) return "running";
  return iteration_ >= settings_.max_iterations ? "max_iterations" : "remainder";
}

void NestedSampler::fit_ellipsoid() {
  const Index d = prior_->n_parameters();
  Matrix pts(d, settings_.live_points);
  for (Index i = 0; i < settings_.live_points; ++i)
    pts.col(i) = live_[static_cast<std::size_t>(i)];
  Ellipsoid e = minimum_volume_ellipsoid(pts);
  e.shape *= settings_.enlargement * settings_.enlargement;
  e.cholesky *= settings_.enlargement;
  ellipsoid_ = std::move(e);
  last_fit_ = iteration_;
}

Vector NestedSampler::propose_constrained() {
  const bool use_ellipsoid = settings_.method == NestedMethod::kEllipsoid &&
                             iteration_ >= settings_.rejection_iterations;
  if (!use_ellipsoid) return prior_->sample(rng_);
  if (!ellipsoid_ || iteration_ - last_fit_ >= settings_.refit_interval) fit_ellipsoid();
  for (;;) {
    Vector x = ellipsoid_->sample(rng_);
    if ((*prior_)(x) != -kInf) return x;
    if (++draws_ >= settings_.max_draws_per_iteration)
      throw NestedSamplingError(
          "no draw inside the prior support after " + std::to_string(draws_) +
          " ellipsoid draws at iteration " + std::to_string(iteration_));
  }
}

Vector NestedSampler::ask() {
  if (expecting_tell_) throw ContractViolation("ask() called twice without tell()");
  if (finished_) throw ContractViolation("ask() called after the run finished");
  if (static_cast<Index>(live_.size()) < settings_.live_points)
    pending_ = prior_->sample(rng_);
  else
    pending_ = propose_constrained();
  expecting_tell_ = true;
  return pending_;
}

void NestedSampler::tell(double log_likelihood) {
  if (!expecting_tell_) throw ContractViolation("tell() called without ask()");
  if (finished_) throw ContractViolation("tell() called after the run finished");
  expecting_tell_ = false;
  if (std::isnan(log_likelihood)) log_likelihood = -kInf;
  if (log_likelihood == kInf)
    throw ContractViolation("log-likelihood returned +infinity");

  const auto find_worst = [this] {
    worst_ = static_cast<Index>(
        std::min_element(live_ll_.begin(), live_ll_.end()) - live_ll_.begin());
  };

  if (static_cast<Index>(live_.size()) < settings_.live_points) {
    live_.push_back(pending_);
    live_ll_.push_back(log_likelihood);
    if (static_cast<Index>(live_.size()) == settings_.live_points) {
      find_worst();
      update_finished();
    }
    return;
  }

  const auto w = static_cast<std::size_t>(worst_);
  const double l_min = live_ll_[w];
  // Ties are accepted so that likelihood plateaus do not stall the run.
  if (!(log_likelihood >= l_min)) {
    if (++draws_ >= settings_.max_draws_per_iteration)
      throw NestedSamplingError(
          "rejection sampling exceeded " + std::to_string(draws_) +
          " draws at iteration " + std::to_string(iteration_) +
          " (likelihood threshold " + std::to_string(l_min) + ")");
    return;
  }

  const double n = static_cast<double>(settings_.live_points);
  const Index i = iteration_ + 1;
  // log(X_{i-1} - X_i) with X_i = exp(-i / N).
  const double log_w = -static_cast<double>(i - 1) / n + std::log(-std::expm1(-1.0 / n));
  discarded_.push_back({live_[w], l_min, log_w});
  if (l_min != -kInf) log_z_ = log_sum_exp(log_z_, l_min + log_w);
  trace_.push_back(log_z_);

  live_[w] = pending_;
  live_ll_[w] = log_likelihood;
  iteration_ = i;
  draws_ = 0;
  find_worst();
  update_finished();
}

NestedResult nested_evidence(const NestedSampler& sampler, Index n_samples,
                             RandomSource& rng) {
  const auto& discarded = sampler.discarded();
  const auto& live = sampler.live();
  const auto& live_ll = sampler.live_log_likelihoods();
  const Index n_live = static_cast<Index>(live.size());
  const Index total = static_cast<Index>(discarded.size()) + n_live;
  if (n_live == 0) throw ContractViolation("nested sampler has no live points");
  const Index d = live.front().size();

  NestedResult r;
  r.weighted_points.resize(total, d);
  r.log_likelihoods.resize(total);
  Vector log_mass(total);
  Index k = 0;
  for (const auto& rec : discarded) {
    r.weighted_points.row(k) = rec.point.transpose();
    r.log_likelihoods(k) = rec.log_likelihood;
    log_mass(k) = rec.log_weight;
    ++k;
  }
  const double live_log_w =
      sampler.log_prior_volume() - std::log(static_cast<double>(n_live));
  for (Index i = 0; i < n_live; ++i, ++k) {
    r.weighted_points.row(k) = live[static_cast<std::size_t>(i)].transpose();
    r.log_likelihoods(k) = live_ll[static_cast<std::size_t>(i)];
    log_mass(k) = live_log_w;
  }

  double log_z = -kInf;
  for (Index i = 0; i < total; ++i)
    if (r.log_likelihoods(i) != -kInf)
      log_z = log_sum_exp(log_z, r.log_likelihoods(i) + log_mass(i));
  r.log_evidence = log_z;

  r.weights = Vector::Zero(total);
  double h = 0.0;
  if (log_z != -kInf) {
    for (Index i = 0; i < total; ++i) {
      if (r.log_likelihoods(i) == -kInf) continue;
      const double p = std::exp(r.log_likelihoods(i) + log_mass(i) - log_z);
      r.weights(i) = p;
      h += p * (r.log_likelihoods(i) - log_z);
    }
    r.weights /= r.weights.sum();
  }
  r.information = std::max(0.0, h);
  r.log_evidence_error =
      std::sqrt(r.information / static_cast<double>(sampler.live_points()));

  r.posterior_samples = Matrix::Zero(std::max<Index>(n_samples, 0), d);
  if (n_samples > 0 && log_z != -kInf) {
    Vector cumulative(total);
    double acc = 0.0;
    for (Index i = 0; i < total; ++i) cumulative(i) = (acc += r.weights(i));
    for (Index s = 0; s < n_samples; ++s) {
      const double u = rng.uniform() * acc;
      const double* begin = cumulative.data();
      Index idx = static_cast<Index>(std::upper_bound(begin, begin + total, u) - begin);
      idx = std::min(idx, total - 1);
      r.posterior_samples.row(s) = r.weighted_points.row(idx);
    }
  }
  r.iterations = sampler.iterations();
  r.stop_reason = sampler.stop_reason();
  r.method = sampler.name();
  const auto& st = sampler.settings();
  r.hyperparameters = {{"live_points", static_cast<double>(st.live_points)},
                       {"max_iterations", static_cast<double>(st.max_iterations)},
                       {"remainder_fraction", st.remainder_fraction}};
  if (st.method == NestedMethod::kEllipsoid) {
    r.hyperparameters["rejection_iterations"] = static_cast<double>(st.rejection_iterations);
    r.hyperparameters["refit_interval"] = static_cast<double>(st.refit_interval);
    r.hyperparameters["enlargement"] = st.enlargement;
  }
  r.seed = st.seed;
  return r;
}

NestedResult run_nested(const LogPDF& log_likelihood,
                        std::shared_ptr<const LogPrior> prior,
                        const NestedSettings& settings) {
  if (!prior) throw ContractViolation("nested sampling requires a samplable prior");
  if (prior->n_parameters() != log_likelihood.n_parameters())
    throw ContractViolation("prior and likelihood dimensions differ");
  NestedSampler sampler(prior, settings);
  Index evaluations = 0;
  while (!sampler.finished()) {
    const Vector x = sampler.ask();
    double l;
    try {
      l = log_likelihood(x);
    } catch (const EvaluationError&) {
      l = -kInf;
    }
    ++evaluations;
    sampler.tell(l);
  }
  RandomSource rng = RandomSource(settings.seed).split(0x9e3779b97f4a7c15ULL);
  NestedResult result = nested_evidence(sampler, settings.posterior_samples, rng);
  result.evaluations = evaluations;
  return result;
}

}  // namespace tsinfer
