#pragma once

#include "tsinfer/core.hpp"
#include "tsinfer/log_pdf.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

namespace testing {

using tsinfer::Index;
using tsinfer::Matrix;
using tsinfer::Vector;

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// LogPDF from a lambda, counting calls.
class FunctionLogPDF : public tsinfer::LogPDF {
 public:
  FunctionLogPDF(Index n, std::function<double(const Vector&)> f) : n_(n), f_(std::move(f)) {}
  Index n_parameters() const override { return n_; }
  double operator()(const Vector& p) const override {
    ++calls;
    return f_(p);
  }
  mutable std::atomic<long> calls{0};

 private:
  Index n_;
  std::function<double(const Vector&)> f_;
};

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("tsinfer-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
