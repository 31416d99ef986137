#pragma once

#include "tsinfer/core.hpp"
#include "tsinfer/log_pdf.hpp"

#include <memory>

namespace tsinfer {

/// Scalar function to minimise. Returns a finite value or +infinity, never
/// NaN. Multi-output problems sum over outputs with equal weight.
class ErrorMeasure {
 public:
  virtual ~ErrorMeasure() = default;

  virtual Index n_parameters() const = 0;
  virtual double operator()(const Vector& parameters) const = 0;
  virtual bool thread_safe() const { return true; }
};

double sum_of_squares_error(const TimeSeriesProblem& problem,
                            const Vector& parameters);
double mean_squared_error(const TimeSeriesProblem& problem,
                          const Vector& parameters);
double root_mean_squared_error(const TimeSeriesProblem& problem,
                               const Vector& parameters);
/// -density(parameters); maps -infinity to +infinity.
double probability_based_error(const LogPDF& density, const Vector& parameters);

/// Shared base for measures defined on a time-series problem.
class ProblemErrorMeasure : public ErrorMeasure {
 public:
  explicit ProblemErrorMeasure(std::shared_ptr<const TimeSeriesProblem> problem);

  Index n_parameters() const override { return problem_->n_parameters(); }
  bool thread_safe() const override { return problem_->thread_safe(); }
  const TimeSeriesProblem& problem() const { return *problem_; }

 protected:
  std::shared_ptr<const TimeSeriesProblem> problem_;
};

class SumOfSquaresError : public ProblemErrorMeasure {
 public:
  using ProblemErrorMeasure::ProblemErrorMeasure;
  double operator()(const Vector& p) const override {
    return sum_of_squares_error(*problem_, p);
  }
};

class MeanSquaredError : public ProblemErrorMeasure {
 public:
  using ProblemErrorMeasure::ProblemErrorMeasure;
  double operator()(const Vector& p) const override {
    return mean_squared_error(*problem_, p);
  }
};

class RootMeanSquaredError : public ProblemErrorMeasure {
 public:
  using ProblemErrorMeasure::ProblemErrorMeasure;
  double operator()(const Vector& p) const override {
    return root_mean_squared_error(*problem_, p);
  }
};

/// Turns any log-density into an error, so optimisers perform maximum
/// likelihood (or MAP) estimation by minimising it.
class ProbabilityBasedError : public ErrorMeasure {
 public:
  explicit ProbabilityBasedError(std::shared_ptr<const LogPDF> density);

  Index n_parameters() const override { return density_->n_parameters(); }
  bool thread_safe() const override { return density_->thread_safe(); }
  double operator()(const Vector& p) const override {
    return probability_based_error(*density_, p);
  }

 private:
  std::shared_ptr<const LogPDF> density_;
};

}  // namespace tsinfer
