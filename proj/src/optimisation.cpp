#include "tsinfer/optimisers.hpp"
#include "tsinfer/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace tsinfer {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class FunctionModel : public ForwardModel {
 public:
  FunctionModel(CurveFunction f, Index n_parameters, Index n_outputs)
      : f_(std::move(f)), n_parameters_(n_parameters), n_outputs_(n_outputs) {}

  Index n_parameters() const override { return n_parameters_; }
  Index n_outputs() const override { return n_outputs_; }
  Matrix simulate(const Vector& p, const Vector& times) const override {
    return f_(times, p);
  }

 private:
  CurveFunction f_;
  Index n_parameters_;
  Index n_outputs_;
};

}  // namespace

ScoreFunction ScoreFunction::minimise(std::shared_ptr<const ErrorMeasure> measure) {
  if (!measure) throw ContractViolation("null error measure");
  const Index n = measure->n_parameters();
  const bool safe = measure->thread_safe();
  return ScoreFunction([m = std::move(measure)](const Vector& p) { return (*m)(p); },
                       n, false, safe);
}

ScoreFunction ScoreFunction::maximise(std::shared_ptr<const LogPDF> density) {
  if (!density) throw ContractViolation("null log-density");
  const Index n = density->n_parameters();
  const bool safe = density->thread_safe();
  return ScoreFunction([d = std::move(density)](const Vector& p) { return (*d)(p); },
                       n, true, safe);
}

ScoreFunction ScoreFunction::minimise(Function f, Index n_parameters,
                                      bool thread_safe) {
  if (!f) throw ContractViolation("null score function");
  return ScoreFunction(std::move(f), n_parameters, false, thread_safe);
}

double ScoreFunction::minimisation_value(const Vector& p, bool* failed) const {
  double v;
  try {
    v = function_(p);
  } catch (const EvaluationError&) {
    if (failed) *failed = true;
    return kInf;
  }
  if (std::isnan(v)) return kInf;
  return maximising_ ? -v : v;
}

void StoppingCriteria::validate() const {
  if (!max_iterations && !max_unchanged && !target_score && !callback)
    throw ContractViolation("at least one stopping criterion must be set");
  if (max_iterations && *max_iterations < 0)
    throw ContractViolation("max_iterations must be >= 0");
  if (max_unchanged && max_unchanged->iterations < 1)
    throw ContractViolation("unchanged-iteration count must be >= 1");
}

OptimisationResult run_optimisation(const ScoreFunction& score, const Vector& x0,
                                    const Vector& sigma0,
                                    const StoppingCriteria& criteria,
                                    const OptimisationSettings& settings) {
  criteria.validate();
  if (x0.size() != score.n_parameters())
    throw ContractViolation("x0 has " + std::to_string(x0.size()) +
                            " entries, score function expects " +
                            std::to_string(score.n_parameters()));
  if (settings.workers < 1) throw ContractViolation("workers must be >= 1");

  auto optimiser = make_optimiser(settings.method, x0, sigma0, settings.seed,
                                  settings.population_size);
  OptimisationResult result;
  result.method = optimiser->name();
  result.hyperparameters = optimiser->hyperparameters();
  result.seed = settings.seed;

  if (criteria.max_iterations && *criteria.max_iterations == 0) {
    bool failed = false;
    const double v = score.minimisation_value(x0, &failed);
    result.best_position = x0;
    result.best_score = score.to_user(v);
    result.evaluations = 1;
    result.failed_evaluations = failed ? 1 : 0;
    result.stop_reason = "max_iterations";
    return result;
  }

  const int workers = score.thread_safe() ? settings.workers : 1;
  WorkerPool pool(workers);
  const auto start = std::chrono::steady_clock::now();

  double previous_best = kInf;
  Index unchanged = 0;
  for (;;) {
    const std::vector<Vector> xs = optimiser->ask();
    std::vector<double> values(xs.size());
    std::vector<char> failed(xs.size(), 0);
    pool.run(xs.size(), [&](std::size_t i) {
      bool f = false;
      values[i] = score.minimisation_value(xs[i], &f);
      failed[i] = f ? 1 : 0;
    });
    optimiser->tell(values);
    result.evaluations += static_cast<Index>(xs.size());
    result.failed_evaluations += std::accumulate(failed.begin(), failed.end(), Index{0});

    const double best = optimiser->best_score();
    if (previous_best - best > (criteria.max_unchanged ? criteria.max_unchanged->threshold : 0.0) ||
        (previous_best == kInf && best < kInf))
      unchanged = 0;
    else
      ++unchanged;
    previous_best = best;

    IterationRecord record;
    record.iteration = optimiser->iterations();
    record.evaluations = result.evaluations;
    record.best_score = score.to_user(best);
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(record);
    if (settings.sink) settings.sink(record);

    if (criteria.target_score && best <= (score.maximising() ? -*criteria.target_score
                                                             : *criteria.target_score)) {
      result.stop_reason = "target_score";
      break;
    }
    if (criteria.max_iterations && optimiser->iterations() >= *criteria.max_iterations) {
      result.stop_reason = "max_iterations";
      break;
    }
    if (criteria.max_unchanged && unchanged >= criteria.max_unchanged->iterations) {
      result.stop_reason = "max_unchanged_iterations";
      break;
    }
    if (criteria.callback && criteria.callback(record)) {
      result.stop_reason = "callback";
      break;
    }
  }

  result.best_position = optimiser->best_position();
  result.best_score = score.to_user(optimiser->best_score());
  result.iterations = optimiser->iterations();
  return result;
}

OptimisationResult run_optimisation(const ScoreFunction& score, const Vector& x0,
                                    double sigma0,
                                    const StoppingCriteria& criteria,
                                    const OptimisationSettings& settings) {
  return run_optimisation(score, x0, Vector::Constant(x0.size(), sigma0), criteria,
                          settings);
}

std::pair<Vector, double> fmin(const std::function<double(const Vector&)>& f,
                               const Vector& x0, const Vector& sigma0,
                               const StoppingCriteria& criteria,
                               const OptimisationSettings& settings) {
  const auto result = run_optimisation(ScoreFunction::minimise(f, x0.size()), x0,
                                       sigma0, criteria, settings);
  return {result.best_position, result.best_score};
}

CurveFitResult curve_fit(const CurveFunction& function, const Vector& times,
                         const Matrix& observations, const Vector& x0,
                         const Vector& sigma0, const StoppingCriteria& criteria,
                         const OptimisationSettings& settings) {
  if (observations.rows() != times.size())
    throw ContractViolation("curve_fit needs one observation row per time");
  std::vector<Index> order(static_cast<std::size_t>(times.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return times(a) < times(b); });
  Vector sorted_times(times.size());
  Matrix sorted_obs(observations.rows(), observations.cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    sorted_times(static_cast<Index>(i)) = times(order[i]);
    sorted_obs.row(static_cast<Index>(i)) = observations.row(order[i]);
  }
  auto model =
      std::make_shared<const FunctionModel>(function, x0.size(), observations.cols());
  auto problem = std::make_shared<const TimeSeriesProblem>(model, sorted_times,
                                                           std::move(sorted_obs));
  const auto result = run_optimisation(
      ScoreFunction::minimise(std::make_shared<const SumOfSquaresError>(problem)), x0,
      sigma0, criteria, settings);
  return {result.best_position, result.best_score};
}

}  // namespace tsinfer
