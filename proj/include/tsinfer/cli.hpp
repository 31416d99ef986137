#pragma once

#include "tsinfer/core.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace tsinfer::cli {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitFailureCap = 3;

/// Command-line overrides; anything unset falls back to the config file.
struct CliOptions {
  std::optional<std::string> method;
  std::optional<Index> iterations;
  std::optional<Index> chains;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::filesystem::path> out_dir;
  bool quiet = false;
};

/// Runs an optimiser as described by an INI config and writes result.json
/// and log.csv to the output directory.
int cmd_optimise(const std::filesystem::path& config, const CliOptions& options,
                 std::ostream& out, std::ostream& err);

/// Runs an MCMC or nested sampler. MCMC writes chain_<j>.csv (j from 1),
/// log.csv and summary.json; nested methods write summary.json,
/// posterior_samples.csv and weighted_samples.csv.
int cmd_sample(const std::filesystem::path& config, const CliOptions& options,
               std::ostream& out, std::ostream& err);

}  // namespace tsinfer::cli
