#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pilid {

enum class Task { kRegression, kBinaryClassification };
enum class FeatureKind { kNumerical, kCategorical };

std::string_view task_name(Task task);
Task parse_task(std::string_view text);  // "reg"/"regression", "clf"/"classification"

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kNumerical;
  double alpha = 0.0;          // observed min (numerical)
  double beta = 0.0;           // observed max (numerical)
  std::vector<double> levels;  // sorted distinct values (categorical)
};

// Row-major N x m matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Immutable after construction.
class Dataset {
 public:
  Dataset(Matrix rows, std::vector<double> targets, std::vector<FeatureSpec> specs, Task task);

  std::size_t size() const { return rows_.rows(); }
  std::size_t num_features() const { return rows_.cols(); }
  const Matrix& rows() const { return rows_; }
  std::span<const double> row(std::size_t i) const { return rows_.row(i); }
  const std::vector<double>& targets() const { return targets_; }
  const std::vector<FeatureSpec>& specs() const { return specs_; }
  Task task() const { return task_; }

  // New dataset holding the given rows (in the given order) with the given specs.
  Dataset subset(std::span<const std::size_t> indices, std::vector<FeatureSpec> specs) const;
  std::vector<double> feature_means() const;

 private:
  Matrix rows_;
  std::vector<double> targets_;
  std::vector<FeatureSpec> specs_;
  Task task_;
};

struct CsvOptions {
  // A column is categorical when it holds only integer values and at most
  // this many distinct ones.
  std::size_t categorical_threshold = 20;
  std::map<std::string, FeatureKind> kind_overrides;
};

// Recomputes alpha/beta/levels from `rows`, keeping the kinds in `kinds_from`.
std::vector<FeatureSpec> compute_specs(const Matrix& rows, const std::vector<FeatureSpec>& kinds_from);

Dataset load_csv(const std::filesystem::path& path, const std::string& target_column, Task task,
                 const CsvOptions& options = {});

// Reads the named feature columns (in that order) from a CSV, ignoring any
// others. Used for prediction on files that may lack a target column.
Matrix load_feature_columns(const std::filesystem::path& path, const std::vector<std::string>& columns);

void write_csv(const std::filesystem::path& path, const Dataset& data, const std::string& target_column = "y");

// Shuffled partition; feature statistics of both halves come from the train half.
std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed);

// Index slices of one epoch: a fresh permutation per (seed, epoch).
std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                              std::uint64_t epoch);

}  // namespace pilid
