#include "tsinfer/parallel.hpp"
#include "tsinfer/samplers.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace tsinfer {

std::unique_ptr<McmcSampler> make_mcmc_sampler(const McmcSettings& settings,
                                               const Vector& x0, std::uint64_t seed) {
  Matrix cov;
  if (settings.proposal_covariance) {
    cov = *settings.proposal_covariance;
  } else {
    const Vector s = x0.cwiseAbs().cwiseMax(1.0) / 10.0;
    cov = s.array().square().matrix().asDiagonal();
  }
  switch (settings.method) {
    case McmcMethod::kMetropolis:
      return std::make_unique<RandomWalkMetropolis>(x0, seed, cov);
    case McmcMethod::kAdaptiveCovariance:
      return std::make_unique<AdaptiveCovarianceMcmc>(x0, seed, cov, settings.adaptive);
    case McmcMethod::kPopulation:
      return std::make_unique<PopulationMcmc>(x0, seed, settings.prior, cov,
                                              settings.temperatures);
  }
  throw ContractViolation("unknown MCMC method");
}

McmcResult run_mcmc(const LogPDF& density, const std::vector<Vector>& x0,
                    Index iterations, const McmcSettings& settings) {
  if (x0.empty()) throw ContractViolation("run_mcmc needs at least one chain");
  if (iterations < 0) throw ContractViolation("iterations must be >= 0");
  if (settings.workers < 1) throw ContractViolation("workers must be >= 1");
  for (std::size_t j = 0; j < x0.size(); ++j)
    if (x0[j].size() != density.n_parameters())
      throw ContractViolation("x0 for chain " + std::to_string(j) +
                              " has the wrong dimension");

  const std::size_t n_chains = x0.size();
  std::vector<std::unique_ptr<McmcSampler>> samplers;
  for (std::size_t j = 0; j < n_chains; ++j)
    samplers.push_back(make_mcmc_sampler(settings, x0[j], settings.seed ^ (j + 1)));

  const auto evaluate = [&density](const Vector& p) {
    try {
      const double v = density(p);
      return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
    } catch (const EvaluationError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  McmcResult result;
  result.method = samplers.front()->name();
  result.hyperparameters = samplers.front()->hyperparameters();
  result.seed = settings.seed;
  const Index n = density.n_parameters();
  for (std::size_t j = 0; j < n_chains; ++j) {
    result.chains.emplace_back(iterations + 1, n);
  }

  WorkerPool pool(density.thread_safe() ? settings.workers : 1);
  std::vector<Vector> proposals(n_chains);
  std::vector<double> values(n_chains);
  const auto evaluate_all = [&] {
    for (std::size_t j = 0; j < n_chains; ++j) proposals[j] = samplers[j]->ask();
    pool.run(n_chains, [&](std::size_t j) { values[j] = evaluate(proposals[j]); });
    result.evaluations += static_cast<Index>(n_chains);
  };

  evaluate_all();
  for (std::size_t j = 0; j < n_chains; ++j) {
    if (!std::isfinite(values[j]))
      throw ContractViolation("x0 for chain " + std::to_string(j) +
                              " has zero density (log-density " +
                              std::to_string(values[j]) + ")");
    samplers[j]->tell(values[j]);
    result.chains[j].row(0) = samplers[j]->current().transpose();
  }

  const auto start = std::chrono::steady_clock::now();
  result.stop_reason = "max_iterations";
  Index done = 0;
  for (Index it = 1; it <= iterations; ++it) {
    evaluate_all();
    McmcIterationRecord record;
    record.iteration = it;
    for (std::size_t j = 0; j < n_chains; ++j) {
      samplers[j]->tell(values[j]);
      result.chains[j].row(it) = samplers[j]->current().transpose();
      record.acceptance_rates.push_back(samplers[j]->acceptance_rate());
    }
    done = it;
    record.evaluations = result.evaluations;
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(record);
    if (settings.sink) settings.sink(record);
    if (settings.callback && settings.callback(record)) {
      result.stop_reason = "callback";
      break;
    }
  }
  if (done < iterations)
    for (auto& c : result.chains) c.conservativeResize(done + 1, Eigen::NoChange);

  result.iterations = done;
  for (const auto& s : samplers) result.acceptance_rates.push_back(s->acceptance_rate());
  return result;
}

}  // namespace tsinfer
