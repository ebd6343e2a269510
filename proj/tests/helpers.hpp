#pragma once

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pilid/dataset.hpp"

namespace testing {

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("pilid_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
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

inline std::vector<double> uniform(std::size_t n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline pilid::Matrix random_matrix(std::size_t rows, std::size_t cols, double lo, double hi, std::uint64_t seed) {
  pilid::Matrix m(rows, cols);
  m.storage() = uniform(rows * cols, lo, hi, seed);
  return m;
}

inline pilid::Dataset numeric_dataset(const pilid::Matrix& rows, std::vector<double> targets,
                                      pilid::Task task = pilid::Task::kRegression) {
  std::vector<pilid::FeatureSpec> kinds(rows.cols());
  for (std::size_t j = 0; j < kinds.size(); ++j) kinds[j].name = "f" + std::to_string(j);
  auto specs = pilid::compute_specs(rows, kinds);
  return pilid::Dataset(rows, std::move(targets), std::move(specs), task);
}

inline double rel_error(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace testing
