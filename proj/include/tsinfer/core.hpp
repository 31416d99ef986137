#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>

namespace tsinfer {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// A point in parameter space. This is the unit exchanged through ask/tell.
using Vector = VectorX<double>;
using Matrix = MatrixX<double>;
using Index = Eigen::Index;

/// A caller broke a documented precondition (dimension mismatch, call order,
/// invalid construction argument).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A forward model failed to produce a usable output for a parameter vector.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, Vector parameters);

  const Vector& parameters() const noexcept { return parameters_; }

 private:
  Vector parameters_;
};

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

/// Formats a vector as "[a, b, c]" with round-trip precision.
std::string format_vector(const Vector& v);

/// User-supplied simulation. Implementations must be deterministic.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  virtual Index n_parameters() const = 0;
  virtual Index n_outputs() const { return 1; }

  /// Returns one row per time and n_outputs() columns.
  virtual Matrix simulate(const Vector& parameters,
                          const Vector& times) const = 0;

  /// Models that cannot be called concurrently on distinct parameter vectors
  /// return false; controllers then evaluate serially.
  virtual bool thread_safe() const { return true; }
};

/// Checked call into a model: validates dimensions and times, converts any
/// model-internal failure or non-finite output into an EvaluationError that
/// carries the parameters.
Matrix simulate(const ForwardModel& model, const Vector& parameters,
                const Vector& times);

/// Throws ContractViolation unless times are finite and strictly increasing.
void validate_times(const Vector& times);

/// A forward model plus the data it should reproduce. Data are validated once,
/// here, rather than on every evaluation.
class TimeSeriesProblem {
 public:
  TimeSeriesProblem(std::shared_ptr<const ForwardModel> model, Vector times,
                    Matrix observations);

  /// Single-output convenience.
  TimeSeriesProblem(std::shared_ptr<const ForwardModel> model, Vector times,
                    const Vector& observations);

  const ForwardModel& model() const { return *model_; }
  const std::shared_ptr<const ForwardModel>& model_ptr() const { return model_; }
  const Vector& times() const { return times_; }
  const Matrix& observations() const { return observations_; }

  Index n_parameters() const { return model_->n_parameters(); }
  Index n_outputs() const { return model_->n_outputs(); }
  Index n_times() const { return times_.size(); }
  bool thread_safe() const { return model_->thread_safe(); }

  Matrix evaluate(const Vector& parameters) const;

 private:
  std::shared_ptr<const ForwardModel> model_;
  Vector times_;
  Matrix observations_;
};

/// simulate(...) - observations.
Matrix residuals(const TimeSeriesProblem& problem, const Vector& parameters);

/// Seedable random stream. The generator is mt19937_64 and every derived
/// variate is computed here from raw 64-bit draws, so a given seed yields the
/// same sequence on every platform and standard library.
class RandomSource {
 public:
  static constexpr const char* kAlgorithm =
      "mt19937_64/uniform53/marsaglia-polar";

  explicit RandomSource(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double low, double high) {
    return low + (high - low) * uniform();
  }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  double normal();

  Vector normal(Index n) {
    Vector z(n);
    for (Index i = 0; i < n; ++i) z(i) = normal();
    return z;
  }

  /// Independent stream for worker or chain `index`.
  RandomSource split(std::uint64_t index) const {
    return RandomSource(seed_ ^ index);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tsinfer
