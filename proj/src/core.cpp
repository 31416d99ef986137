#include "tsinfer/core.hpp"

#include <cmath>
#include <cstdio>

namespace tsinfer {

EvaluationError::EvaluationError(const std::string& what, Vector parameters)
    : std::runtime_error(what + " at parameters " + format_vector(parameters)),
      parameters_(std::move(parameters)) {}

std::string format_vector(const Vector& v) {
  std::string out = "[";
  char buf[32];
  for (Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", v(i));
    if (i > 0) out += ", ";
    out += buf;
  }
  return out + "]";
}

void validate_times(const Vector& times) {
  for (Index i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times(i)))
      throw ContractViolation("time " + std::to_string(i) + " is not finite");
    if (i > 0 && !(times(i) > times(i - 1)))
      throw ContractViolation("times must be strictly increasing (index " +
                              std::to_string(i) + ")");
  }
}

namespace {

// simulate() without the times check; problems validate their times once.
Matrix run_model(const ForwardModel& model, const Vector& parameters,
                 const Vector& times) {
  if (parameters.size() != model.n_parameters())
    throw ContractViolation("model expects " +
                            std::to_string(model.n_parameters()) +
                            " parameters, got " +
                            std::to_string(parameters.size()));
  Matrix out;
  try {
    out = model.simulate(parameters, times);
  } catch (const ContractViolation&) {
    throw;
  } catch (const EvaluationError&) {
    throw;
  } catch (const std::exception& e) {
    throw EvaluationError(std::string("model failed: ") + e.what(), parameters);
  }
  if (out.rows() != times.size() || out.cols() != model.n_outputs())
    throw ContractViolation(
        "model output has shape " + std::to_string(out.rows()) + "x" +
        std::to_string(out.cols()) + ", expected " +
        std::to_string(times.size()) + "x" +
        std::to_string(model.n_outputs()));
  if (!out.allFinite())
    throw EvaluationError("model produced non-finite output", parameters);
  return out;
}

}  // namespace

Matrix simulate(const ForwardModel& model, const Vector& parameters,
                const Vector& times) {
  validate_times(times);
  return run_model(model, parameters, times);
}

TimeSeriesProblem::TimeSeriesProblem(std::shared_ptr<const ForwardModel> model,
                                     Vector times, Matrix observations)
    : model_(std::move(model)),
      times_(std::move(times)),
      observations_(std::move(observations)) {
  if (!model_) throw ContractViolation("problem requires a model");
  validate_times(times_);
  if (observations_.rows() != times_.size())
    throw ContractViolation("observations need one row per time");
  if (observations_.cols() != model_->n_outputs())
    throw ContractViolation("observation columns (" +
                            std::to_string(observations_.cols()) +
                            ") must equal model outputs (" +
                            std::to_string(model_->n_outputs()) + ")");
  if (!observations_.allFinite())
    throw ContractViolation("observations contain NaN or infinity");
}

TimeSeriesProblem::TimeSeriesProblem(std::shared_ptr<const ForwardModel> model,
                                     Vector times, const Vector& observations)
    : TimeSeriesProblem(std::move(model), std::move(times),
                        Matrix(observations)) {}

Matrix TimeSeriesProblem::evaluate(const Vector& parameters) const {
  return run_model(*model_, parameters, times_);
}

Matrix residuals(const TimeSeriesProblem& problem, const Vector& parameters) {
  return problem.evaluate(parameters) - problem.observations();
}

std::uint64_t RandomSource::uniform_index(std::uint64_t n) {
  if (n == 0) throw ContractViolation("uniform_index needs n > 0");
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double RandomSource::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

}  // namespace tsinfer
