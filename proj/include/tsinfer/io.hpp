#pragma once

#include "tsinfer/core.hpp"

#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsinfer::io {

/// Malformed input file. line() is 1-based (the header is line 1), or 0 when
/// the problem is not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct TimeSeriesData {
  Vector times;
  Matrix observations;
  std::vector<std::string> output_names;
};

/// Comma-separated, header row required with `time` first and one column per
/// output; LF or CRLF line endings. Times must be finite and strictly
/// increasing, values finite, rows complete.
TimeSeriesData parse_timeseries_csv(std::istream& in,
                                    const std::string& source = "<stream>");
TimeSeriesData read_timeseries_csv(const std::filesystem::path& path);

/// %.17g, which round-trips every double.
std::string format_double(double x);

void write_matrix_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& header, const Matrix& m);

struct MatrixFile {
  std::vector<std::string> header;
  Matrix values;
};

MatrixFile read_matrix_csv(const std::filesystem::path& path);

/// Single-quotes `s` for /bin/sh.
std::string shell_quote(const std::string& s);

/// Forward model run as a child process. For each evaluation the parameters
/// are written to the child's stdin one per line; the child prints one CSV
/// row of outputs per time point. The times are available to the child in
/// the file named by the TSINFER_TIMES_FILE environment variable, one per
/// line.
class ExternalCommandModel : public ForwardModel {
 public:
  ExternalCommandModel(std::string command, Index n_parameters, Index n_outputs,
                       const Vector& times, std::filesystem::path work_dir);
  ~ExternalCommandModel() override;

  Index n_parameters() const override { return n_parameters_; }
  Index n_outputs() const override { return n_outputs_; }
  Matrix simulate(const Vector& parameters, const Vector& times) const override;

 private:
  std::string command_;
  Index n_parameters_;
  Index n_outputs_;
  std::filesystem::path work_dir_;
  std::filesystem::path times_file_;
};

}  // namespace tsinfer::io
