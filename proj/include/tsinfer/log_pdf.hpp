#pragma once

#include "tsinfer/core.hpp"

namespace tsinfer {

/// Natural log of an unnormalised density over parameter space. Evaluations
/// never return NaN or +infinity; -infinity means zero density.
class LogPDF {
 public:
  virtual ~LogPDF() = default;

  virtual Index n_parameters() const = 0;
  virtual double operator()(const Vector& parameters) const = 0;
  virtual bool thread_safe() const { return true; }
};

/// A log-density that is normalised and can be sampled directly. Nested
/// samplers only accept priors of this kind.
class LogPrior : public LogPDF {
 public:
  virtual Vector sample(RandomSource& rng) const = 0;
};

}  // namespace tsinfer
