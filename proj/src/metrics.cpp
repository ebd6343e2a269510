#include "pilid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pilid/error.hpp"

namespace pilid {

double mse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw DimensionError("mse: prediction and truth lengths differ");
  if (pred.empty()) throw Error("mse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return sum / static_cast<double>(pred.size());
}

double auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw DimensionError("auc: score and label lengths differ");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positives = 0.0;
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) {
      const double y = labels[order[k]];
      if (y != 0.0 && y != 1.0) throw Error("auc: labels must be 0 or 1");
      if (y == 1.0) {
        positives += 1.0;
        rank_sum += rank;
      }
    }
    i = j;
  }
  const double negatives = static_cast<double>(scores.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) throw Error("auc: both classes must be present");
  return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kPilid: return "pilid";
    case ModelKind::kMlp: return "mlp";
    case ModelKind::kPilib: return "pilib";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "pilid") return ModelKind::kPilid;
  if (text == "mlp") return ModelKind::kMlp;
  if (text == "pilib") return ModelKind::kPilib;
  throw Error("unknown model kind '" + std::string(text) + "' (expected pilid, mlp or pilib)");
}

std::string ExperimentConfig::fingerprint() const {
  std::ostringstream out;
  out.precision(17);
  out << "model=" << model_kind_name(model) << ";mlp=" << mlp << ";gammas=";
  for (std::size_t i = 0; i < gammas.size(); ++i) out << (i ? "," : "") << gammas[i];
  if (data_path) {
    out << ";data=" << data_path->string() << ";target=" << target_column;
  } else {
    out << ";synth_m=" << synth.m << ";synth_n=" << synth.n << ";noise=" << synth.noise_std
        << ";task=" << task_name(synth.task);
    if (synth.n_interactions) out << ";interactions=" << *synth.n_interactions;
  }
  TrainConfig effective = train;
  if (model == ModelKind::kMlp) effective.linear_component = false;
  out << ";split=" << train_fraction << ";seed_base=" << seed_base << ";" << effective.fingerprint();
  if (model == ModelKind::kPilib) out << ";blocks=" << pilib.blocks << ";K=" << pilib.max_order;
  return out.str();
}

double run_trial(const ExperimentConfig& config, std::uint64_t seed) {
  std::optional<Dataset> full;
  if (config.data_path) {
    full = load_csv(*config.data_path, config.target_column, config.synth.task);
  } else {
    SyntheticSpec spec = config.synth;
    spec.seed = seed;
    full = generate(spec).data;
  }
  auto [train_set, test_set] = split(*full, config.train_fraction, seed);
  TrainConfig tc = config.train;
  tc.seed = seed;
  if (config.model == ModelKind::kMlp) tc.linear_component = false;
  const auto widths = parse_mlp_widths(config.mlp, train_set.num_features());

  std::vector<double> pred;
  if (config.model == ModelKind::kPilib) {
    const auto result = train_pilib(train_set, config.gammas, widths, config.pilib, tc);
    pred = predict(result.model, test_set.rows());
  } else {
    const auto result = train(train_set, config.gammas, widths, tc);
    pred = predict(result.model, test_set.rows());
  }
  return train_set.task() == Task::kRegression ? mse(pred, test_set.targets()) : auc(pred, test_set.targets());
}

TrialReport summarize(std::string metric, std::vector<std::uint64_t> seeds, std::vector<double> values,
                      std::string fingerprint) {
  if (values.empty()) throw Error("no trial values to summarize");
  TrialReport r;
  r.metric = std::move(metric);
  r.seeds = std::move(seeds);
  r.values = std::move(values);
  r.fingerprint = std::move(fingerprint);
  const double n = static_cast<double>(r.values.size());
  r.mean = std::accumulate(r.values.begin(), r.values.end(), 0.0) / n;
  if (r.values.size() == 1) {
    r.std = 0.0;
    r.std_defined = false;
  } else {
    double ss = 0.0;
    for (double v : r.values) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / (n - 1.0));
  }
  if (!std::isfinite(r.mean)) throw Error("trial mean is not finite");
  return r;
}

TrialReport run_trials(const ExperimentConfig& config, std::size_t n_trials) {
  if (n_trials < 1) throw Error("number of trials must be at least 1");
  std::vector<std::uint64_t> seeds;
  std::vector<double> values;
  for (std::size_t t = 0; t < n_trials; ++t) {
    const std::uint64_t seed = config.seed_base + t;
    seeds.push_back(seed);
    values.push_back(run_trial(config, seed));
  }
  const Task task = config.synth.task;
  return summarize(task == Task::kRegression ? "mse" : "auc", std::move(seeds), std::move(values),
                   config.fingerprint());
}

void write_report(const std::filesystem::path& path, const TrialReport& report) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write report '" + path.string() + "'");
  out.precision(17);
  out << "trial,seed," << report.metric << "\n";
  for (std::size_t t = 0; t < report.values.size(); ++t) {
    out << t << "," << report.seeds[t] << "," << report.values[t] << "\n";
  }
  out << "mean,," << report.mean << "\n";
  out << "std,," << report.std << (report.std_defined ? "" : ",undefined") << "\n";
  out << "config,,\"" << report.fingerprint << "\"\n";
  if (!out) throw Error("failed writing report '" + path.string() + "'");
}

}  // namespace pilid
