#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pilid/pilib.hpp"
#include "pilid/synth.hpp"
#include "pilid/trainer.hpp"

namespace pilid {

double mse(std::span<const double> pred, std::span<const double> truth);
// Mann-Whitney statistic with average ranks for ties.
double auc(std::span<const double> scores, std::span<const double> labels);

enum class ModelKind { kPilid, kMlp, kPilib };
std::string_view model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

struct ExperimentConfig {
  SyntheticSpec synth;
  // When set, trials split this CSV instead of generating synthetic data.
  std::optional<std::filesystem::path> data_path;
  std::string target_column = "y";
  std::vector<std::size_t> gammas{5};
  std::string mlp = "32-32-1";
  ModelKind model = ModelKind::kPilid;
  TrainConfig train;
  PilibConfig pilib;
  double train_fraction = 0.8;
  std::uint64_t seed_base = 0;

  std::string fingerprint() const;
};

struct TrialReport {
  std::string metric;  // "mse" or "auc"
  std::vector<std::uint64_t> seeds;
  std::vector<double> values;
  double mean = 0.0;
  double std = 0.0;
  bool std_defined = true;  // false for a single trial (std reported as 0)
  std::string fingerprint;
};

// Held-out metric of one trial at the given seed (data, split and training).
double run_trial(const ExperimentConfig& config, std::uint64_t seed);
// Trial t uses seed seed_base + t; results are ordered by trial index.
TrialReport run_trials(const ExperimentConfig& config, std::size_t n_trials);
TrialReport summarize(std::string metric, std::vector<std::uint64_t> seeds, std::vector<double> values,
                      std::string fingerprint);

void write_report(const std::filesystem::path& path, const TrialReport& report);

}  // namespace pilid
