#include "tsinfer/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <unistd.h>

namespace tsinfer::io {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_row(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(
        start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

double parse_number(const std::string& cell, const std::string& source,
                    std::size_t line) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (cell.empty() || ec != std::errc() || ptr != end)
    throw ParseError(source, line, "invalid number '" + cell + "'");
  if (!std::isfinite(v)) throw ParseError(source, line, "non-finite value '" + cell + "'");
  return v;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

ParseError::ParseError(const std::string& source, std::size_t line,
                       const std::string& what)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : "") + ": " +
                         what),
      line_(line) {}

TimeSeriesData parse_timeseries_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(source, 0, "empty file, header required");
  ++line_no;
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  auto header = split_row(line);
  for (auto& h : header) h = unquote(h);
  if (header.empty() || header.front() != "time")
    throw ParseError(source, 1, "first column must be named 'time'");
  if (header.size() < 2) throw ParseError(source, 1, "need at least one output column");

  const std::size_t cols = header.size();
  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto cells = split_row(line);
    if (cells.size() != cols)
      throw ParseError(source, line_no,
                       "expected " + std::to_string(cols) + " columns, found " +
                           std::to_string(cells.size()));
    const double t = parse_number(cells[0], source, line_no);
    if (!times.empty() && !(t > times.back()))
      throw ParseError(source, line_no, "times must be strictly increasing");
    times.push_back(t);
    std::vector<double> row;
    for (std::size_t j = 1; j < cols; ++j) row.push_back(parse_number(cells[j], source, line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(source, 0, "no data rows");

  TimeSeriesData data;
  data.times = Eigen::Map<const Vector>(times.data(), static_cast<Index>(times.size()));
  data.observations.resize(static_cast<Index>(rows.size()), static_cast<Index>(cols - 1));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j + 1 < cols; ++j)
      data.observations(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  data.output_names.assign(header.begin() + 1, header.end());
  return data;
}

TimeSeriesData read_timeseries_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  return parse_timeseries_csv(in, path.string());
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_matrix_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& header, const Matrix& m) {
  if (static_cast<Index>(header.size()) != m.cols())
    throw ContractViolation("header size must match matrix columns");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

MatrixFile read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  std::string line;
  MatrixFile f;
  if (!std::getline(in, line)) throw ParseError(path.string(), 0, "empty file");
  f.header = split_row(line);
  std::vector<double> values;
  std::size_t line_no = 1;
  Index rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto cells = split_row(line);
    if (cells.size() != f.header.size())
      throw ParseError(path.string(), line_no, "ragged row");
    for (const auto& c : cells) values.push_back(parse_number(c, path.string(), line_no));
    ++rows;
  }
  const auto cols = static_cast<Index>(f.header.size());
  f.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                            Eigen::RowMajor>>(values.data(), rows, cols);
  return f;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

namespace {

std::filesystem::path make_temp_file(const std::filesystem::path& dir,
                                     const std::string& contents) {
  std::string pattern = (dir / "tsinfer-XXXXXX").string();
  const int fd = ::mkstemp(pattern.data());
  if (fd < 0) throw std::runtime_error("cannot create temporary file in " + dir.string());
  ::close(fd);
  std::ofstream out(pattern, std::ios::binary);
  out << contents;
  return pattern;
}

}  // namespace

ExternalCommandModel::ExternalCommandModel(std::string command, Index n_parameters,
                                           Index n_outputs, const Vector& times,
                                           std::filesystem::path work_dir)
    : command_(std::move(command)),
      n_parameters_(n_parameters),
      n_outputs_(n_outputs),
      work_dir_(std::move(work_dir)) {
  if (command_.empty()) throw ContractViolation("external model command is empty");
  if (n_parameters_ < 1 || n_outputs_ < 1)
    throw ContractViolation("external model needs >= 1 parameter and output");
  std::ostringstream ts;
  for (Index i = 0; i < times.size(); ++i) ts << format_double(times(i)) << '\n';
  times_file_ = make_temp_file(work_dir_, ts.str());
}

ExternalCommandModel::~ExternalCommandModel() {
  std::error_code ec;
  std::filesystem::remove(times_file_, ec);
}

Matrix ExternalCommandModel::simulate(const Vector& parameters,
                                      const Vector& times) const {
  std::ostringstream params;
  for (Index i = 0; i < parameters.size(); ++i) params << format_double(parameters(i)) << '\n';
  const auto input = make_temp_file(work_dir_, params.str());
  struct Cleanup {
    std::filesystem::path p;
    ~Cleanup() {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
  } cleanup{input};

  const std::string cmd = "export TSINFER_TIMES_FILE=" + shell_quote(times_file_.string()) +
                          "; (" + command_ + ") < " + shell_quote(input.string());
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(::popen(cmd.c_str(), "r"), ::pclose);
  if (!pipe) throw EvaluationError("cannot start external model", parameters);
  std::string output;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof(buf), pipe.get())) > 0) output.append(buf, got);
  const int status = ::pclose(pipe.release());
  if (status != 0)
    throw EvaluationError("external model exited with status " + std::to_string(status),
                          parameters);

  Matrix y(times.size(), n_outputs_);
  std::istringstream in(output);
  std::string line;
  Index row = 0;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    const auto cells = split_row(line);
    if (row >= times.size() || static_cast<Index>(cells.size()) != n_outputs_)
      throw EvaluationError("external model produced malformed output", parameters);
    for (Index j = 0; j < n_outputs_; ++j) {
      const auto& c = cells[static_cast<std::size_t>(j)];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc() || ptr != c.data() + c.size())
        throw EvaluationError("external model produced non-numeric output", parameters);
      y(row, j) = v;
    }
    ++row;
  }
  if (row != times.size())
    throw EvaluationError("external model produced " + std::to_string(row) +
                              " rows, expected " + std::to_string(times.size()),
                          parameters);
  return y;
}

}  // namespace tsinfer::io
