#include "tsinfer/measures.hpp"

#include <cmath>
#include <limits>

namespace tsinfer {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double sum_of_squares_error(const TimeSeriesProblem& problem,
                            const Vector& parameters) {
  try {
    const double e = residuals(problem, parameters).squaredNorm();
    return std::isnan(e) ? kInf : e;
  } catch (const EvaluationError&) {
    return kInf;
  }
}

double mean_squared_error(const TimeSeriesProblem& problem,
                          const Vector& parameters) {
  const double n =
      static_cast<double>(problem.n_times() * problem.n_outputs());
  return sum_of_squares_error(problem, parameters) / n;
}

double root_mean_squared_error(const TimeSeriesProblem& problem,
                               const Vector& parameters) {
  return std::sqrt(mean_squared_error(problem, parameters));
}

double probability_based_error(const LogPDF& density, const Vector& parameters) {
  const double logp = density(parameters);
  if (std::isnan(logp) || logp == -kInf) return kInf;
  return -logp;
}

ProblemErrorMeasure::ProblemErrorMeasure(
    std::shared_ptr<const TimeSeriesProblem> problem)
    : problem_(std::move(problem)) {
  if (!problem_) throw ContractViolation("measure requires a problem");
  if (problem_->n_times() == 0)
    throw ContractViolation("measure requires at least one time point");
}

ProbabilityBasedError::ProbabilityBasedError(
    std::shared_ptr<const LogPDF> density)
    : density_(std::move(density)) {
  if (!density_) throw ContractViolation("measure requires a density");
}

}  // namespace tsinfer
