#include "pilid/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "pilid/error.hpp"

namespace pilid {

std::string_view task_name(Task task) {
  return task == Task::kRegression ? "regression" : "classification";
}

Task parse_task(std::string_view text) {
  if (text == "reg" || text == "regression") return Task::kRegression;
  if (text == "clf" || text == "classification") return Task::kBinaryClassification;
  throw Error("unknown task '" + std::string(text) + "' (expected reg or clf)");
}

Dataset::Dataset(Matrix rows, std::vector<double> targets, std::vector<FeatureSpec> specs, Task task)
    : rows_(std::move(rows)), targets_(std::move(targets)), specs_(std::move(specs)), task_(task) {
  if (rows_.rows() == 0 || rows_.cols() == 0) throw Error("dataset must have at least one row and one feature");
  if (targets_.size() != rows_.rows()) throw DimensionError("target count does not match row count");
  if (specs_.size() != rows_.cols()) throw DimensionError("feature spec count does not match column count");
  for (double v : rows_.storage()) {
    if (!std::isfinite(v)) throw Error("dataset contains a non-finite feature value");
  }
  for (double y : targets_) {
    if (!std::isfinite(y)) throw Error("dataset contains a non-finite target");
    if (task_ == Task::kBinaryClassification && y != 0.0 && y != 1.0) {
      throw Error("classification targets must be 0 or 1");
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices, std::vector<FeatureSpec> specs) const {
  Matrix rows(indices.size(), num_features());
  std::vector<double> targets(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), rows.row(i).begin());
    targets[i] = targets_[indices[i]];
  }
  return Dataset(std::move(rows), std::move(targets), std::move(specs), task_);
}

std::vector<double> Dataset::feature_means() const {
  std::vector<double> means(num_features(), 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    const auto r = row(i);
    for (std::size_t j = 0; j < r.size(); ++j) means[j] += r[j];
  }
  for (double& m : means) m /= static_cast<double>(size());
  return means;
}

std::vector<FeatureSpec> compute_specs(const Matrix& rows, const std::vector<FeatureSpec>& kinds_from) {
  if (kinds_from.size() != rows.cols()) throw DimensionError("spec count does not match column count");
  if (rows.rows() == 0) throw Error("cannot compute feature statistics of zero rows");
  std::vector<FeatureSpec> specs = kinds_from;
  for (std::size_t j = 0; j < rows.cols(); ++j) {
    FeatureSpec& spec = specs[j];
    spec.levels.clear();
    double lo = rows(0, j);
    double hi = lo;
    std::set<double> distinct;
    for (std::size_t i = 0; i < rows.rows(); ++i) {
      const double v = rows(i, j);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      if (spec.kind == FeatureKind::kCategorical) distinct.insert(v);
    }
    spec.alpha = lo;
    spec.beta = hi;
    spec.levels.assign(distinct.begin(), distinct.end());
  }
  return specs;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

struct RawCsv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// Parses every cell as a real. Row numbers in messages are 1-based file lines.
RawCsv read_raw_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  RawCsv csv;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("'" + path.string() + "' is empty (expected a header row)");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  if (!line.empty() && line.back() == '\r') line.pop_back();
  for (auto& name : split_line(line)) csv.header.push_back(trim(name));

  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != csv.header.size()) {
      throw ParseError("row " + std::to_string(line_number) + ": expected " + std::to_string(csv.header.size()) +
                       " cells, found " + std::to_string(cells.size()));
    }
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string cell = trim(cells[c]);
      if (cell.empty()) {
        throw ParseError("row " + std::to_string(line_number) + ", column '" + csv.header[c] +
                         "': missing value (missing values are not supported)");
      }
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (*first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, values[c]);
      if (ec != std::errc() || ptr != last || !std::isfinite(values[c])) {
        throw ParseError("row " + std::to_string(line_number) + ", column '" + csv.header[c] +
                         "': cannot parse '" + cell + "' as a real number");
      }
    }
    csv.rows.push_back(std::move(values));
  }
  return csv;
}

bool all_integers(const std::set<double>& values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == std::floor(v); });
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const std::string& target_column, Task task,
                 const CsvOptions& options) {
  if (!std::filesystem::exists(path)) throw Error("file not found: '" + path.string() + "'");
  RawCsv csv = read_raw_csv(path);
  const auto target_it = std::find(csv.header.begin(), csv.header.end(), target_column);
  if (target_it == csv.header.end()) {
    throw Error("target column '" + target_column + "' not found in '" + path.string() + "'");
  }
  if (csv.rows.size() < 2) throw Error("'" + path.string() + "' needs at least 2 data rows");
  if (csv.header.size() < 2) throw Error("'" + path.string() + "' has no feature columns");
  const std::size_t target_index = static_cast<std::size_t>(target_it - csv.header.begin());

  const std::size_t n = csv.rows.size();
  const std::size_t m = csv.header.size() - 1;
  Matrix rows(n, m);
  std::vector<double> targets(n);
  std::vector<FeatureSpec> specs(m);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t out = 0;
    for (std::size_t c = 0; c < csv.header.size(); ++c) {
      if (c == target_index) {
        targets[i] = csv.rows[i][c];
        if (task == Task::kBinaryClassification && targets[i] != 0.0 && targets[i] != 1.0) {
          throw ParseError("row " + std::to_string(i + 2) + ": classification target must be 0 or 1");
        }
      } else {
        rows(i, out++) = csv.rows[i][c];
      }
    }
  }

  std::size_t out = 0;
  for (std::size_t c = 0; c < csv.header.size(); ++c) {
    if (c == target_index) continue;
    FeatureSpec& spec = specs[out];
    spec.name = csv.header[c];
    std::set<double> distinct;
    for (std::size_t i = 0; i < n; ++i) {
      distinct.insert(rows(i, out));
      if (distinct.size() > options.categorical_threshold) break;
    }
    const bool categorical = distinct.size() <= options.categorical_threshold && all_integers(distinct);
    spec.kind = categorical ? FeatureKind::kCategorical : FeatureKind::kNumerical;
    if (auto it = options.kind_overrides.find(spec.name); it != options.kind_overrides.end()) spec.kind = it->second;
    ++out;
  }
  specs = compute_specs(rows, specs);
  return Dataset(std::move(rows), std::move(targets), std::move(specs), task);
}

Matrix load_feature_columns(const std::filesystem::path& path, const std::vector<std::string>& columns) {
  if (!std::filesystem::exists(path)) throw Error("file not found: '" + path.string() + "'");
  RawCsv csv = read_raw_csv(path);
  std::vector<std::size_t> source(columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const auto it = std::find(csv.header.begin(), csv.header.end(), columns[j]);
    if (it == csv.header.end()) {
      throw Error("schema mismatch: column '" + columns[j] + "' is missing from '" + path.string() + "'");
    }
    source[j] = static_cast<std::size_t>(it - csv.header.begin());
  }
  Matrix rows(csv.rows.size(), columns.size());
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) rows(i, j) = csv.rows[i][source[j]];
  }
  return rows;
}

void write_csv(const std::filesystem::path& path, const Dataset& data, const std::string& target_column) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  for (const auto& spec : data.specs()) out << spec.name << ',';
  out << target_column << '\n';
  char buffer[64];
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.row(i)) {
      std::snprintf(buffer, sizeof buffer, "%.17g,", v);
      out << buffer;
    }
    std::snprintf(buffer, sizeof buffer, "%.17g\n", data.targets()[i]);
    out << buffer;
  }
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error("train fraction must lie strictly between 0 and 1");
  }
  const std::size_t n = data.size();
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train == n) throw Error("split would leave one side empty");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::span<const std::size_t> all(order);
  const auto train_idx = all.first(n_train);
  const auto test_idx = all.subspan(n_train);

  Dataset train = data.subset(train_idx, data.specs());
  auto specs = compute_specs(train.rows(), data.specs());
  return {data.subset(train_idx, specs), data.subset(test_idx, specs)};
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                              std::uint64_t epoch) {
  if (batch_size < 1) throw Error("batch size must be at least 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32), 0x62617463u};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::size_t>> out;
  out.reserve((n + batch_size - 1) / batch_size);
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

}  // namespace pilid
