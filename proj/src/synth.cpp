#include "pilid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include "pilid/error.hpp"
#include "pilid/loss.hpp"

namespace pilid {

namespace {

// Independent streams so that e.g. dropping the interactions leaves the
// features and noise unchanged.
enum Stream : std::uint64_t { kFeatures = 1, kCoefficients, kInteractions, kNoise, kLabels };

std::mt19937_64 stream(std::uint64_t seed, Stream s) {
  std::seed_seq seq{seed, static_cast<std::uint64_t>(s), std::uint64_t{0x5eed}};
  return std::mt19937_64(seq);
}

double horner(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
  return v;
}

std::pair<double, double> moments(std::span<const double> v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / static_cast<double>(v.size()))};
}

}  // namespace

void SyntheticSpec::validate() const {
  if (m < 1) throw Error("synthetic m must be at least 1");
  if (n < 1) throw Error("synthetic n must be at least 1");
  if (!(noise_std >= 0.0)) throw Error("noise_std must be non-negative");
  if (!(logit_scale > 0.0)) throw Error("logit_scale must be positive");
  if (!poly_coeffs.empty()) {
    if (poly_coeffs.size() != m) throw DimensionError("poly_coeffs needs one row per feature");
    for (const auto& row : poly_coeffs) {
      if (row.size() != kPolyDegree + 1) throw DimensionError("each polynomial needs 11 coefficients");
    }
  }
  if (interactions) {
    for (const auto& it : *interactions) {
      if (it.a >= m || it.b >= m || it.a == it.b) throw Error("interaction needs two distinct features < m");
    }
  } else if (n_interactions && m < 2 && *n_interactions > 0) {
    throw Error("interactions need at least two features");
  } else if (n_interactions && *n_interactions > m * (m - 1) / 2) {
    throw Error("more interactions requested than feature pairs");
  }
}

double TruthCurve::evaluate(double x) const {
  if (x <= xs.front()) return values.front();
  if (x >= xs.back()) return values.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - xs.begin());
  const double t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
  return values[k - 1] + t * (values[k] - values[k - 1]);
}

double Marginal::operator()(double x) const { return (horner(coefficients, x) - mean) / scale; }

Marginal make_marginal(std::vector<double> coefficients) {
  Marginal u;
  u.coefficients = std::move(coefficients);
  for (std::size_t k = 0; k < u.coefficients.size(); ++k) u.mean += u.coefficients[k] / static_cast<double>(k + 1);
  constexpr std::size_t kGrid = 10001;
  double lo = INFINITY;
  double hi = -INFINITY;
  for (std::size_t i = 0; i < kGrid; ++i) {
    const double v = horner(u.coefficients, static_cast<double>(i) / (kGrid - 1));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  u.scale = hi - lo > 0.0 ? hi - lo : 1.0;
  return u;
}

SyntheticData generate(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t m = spec.m;
  const std::size_t n = spec.n;

  std::vector<std::vector<double>> coeffs = spec.poly_coeffs;
  if (coeffs.empty()) {
    auto rng = stream(spec.seed, kCoefficients);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    coeffs.assign(m, std::vector<double>(kPolyDegree + 1));
    for (auto& row : coeffs) {
      for (double& c : row) c = unit(rng);
    }
  }
  std::vector<Marginal> marginals;
  for (const auto& row : coeffs) marginals.push_back(make_marginal(row));

  std::vector<PlantedInteraction> interactions;
  if (spec.interactions) {
    interactions = *spec.interactions;
  } else {
    const std::size_t count = spec.n_interactions.value_or(m / 5);
    auto rng = stream(spec.seed, kInteractions);
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::set<std::pair<std::size_t, std::size_t>> used;
    while (interactions.size() < count) {
      std::size_t a = pick(rng);
      std::size_t b = pick(rng);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      if (!used.insert({a, b}).second) continue;
      interactions.push_back({a, b, unit(rng)});
    }
  }

  Matrix rows(n, m);
  {
    auto rng = stream(spec.seed, kFeatures);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (double& v : rows.storage()) v = unit(rng);
  }
  std::vector<double> utility(n);
  {
    auto rng = stream(spec.seed, kNoise);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      double main = 0.0;
      for (std::size_t j = 0; j < m; ++j) main += marginals[j](rows(i, j));
      double inter = 0.0;
      for (const auto& it : interactions) inter += it.coefficient * rows(i, it.a) * rows(i, it.b);
      const double eps = noise(rng) * spec.noise_std;
      utility[i] = main + eps + inter;
    }
  }

  const auto [mean, stddev] = moments(utility);
  std::vector<double> targets(n);
  if (spec.task == Task::kRegression) {
    for (std::size_t i = 0; i < n; ++i) targets[i] = stddev > 0.0 ? (utility[i] - mean) / stddev : utility[i] - mean;
  } else {
    auto rng = stream(spec.seed, kLabels);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double z = stddev > 0.0 ? (utility[i] - mean) / stddev : 0.0;
      targets[i] = unit(rng) < sigmoid(spec.logit_scale * z) ? 1.0 : 0.0;
    }
  }

  std::vector<FeatureSpec> kinds(m);
  for (std::size_t j = 0; j < m; ++j) kinds[j].name = "x" + std::to_string(j + 1);
  auto specs = compute_specs(rows, kinds);

  std::vector<TruthCurve> truth(m);
  for (std::size_t j = 0; j < m; ++j) {
    truth[j].feature = j;
    truth[j].xs.resize(kTruthPoints);
    truth[j].values.resize(kTruthPoints);
    for (std::size_t k = 0; k < kTruthPoints; ++k) {
      const double x = static_cast<double>(k) / (kTruthPoints - 1);
      truth[j].xs[k] = x;
      truth[j].values[k] = marginals[j](x);
    }
  }

  return {Dataset(std::move(rows), std::move(targets), std::move(specs), spec.task), std::move(truth),
          std::move(coeffs), std::move(interactions), std::move(utility)};
}

RecoveryScore shape_recovery_score(const FeatureShape& learned, const TruthCurve& truth) {
  if (learned.xs.empty() || learned.xs.size() != learned.us.size()) throw Error("learned shape is empty");
  if (truth.xs.empty() || truth.xs.size() != truth.values.size()) throw Error("true curve is empty");
  if (learned.xs.back() < truth.xs.front() || learned.xs.front() > truth.xs.back()) {
    throw Error("learned and true curves do not overlap");
  }
  const std::size_t k = learned.xs.size();
  std::vector<double> a(k);
  std::vector<double> b(k);
  const double t0 = truth.evaluate(learned.xs.front());
  for (std::size_t i = 0; i < k; ++i) {
    a[i] = learned.us[i] - learned.us.front();
    b[i] = truth.evaluate(learned.xs[i]) - t0;
  }
  const auto [ma, sa] = moments(a);
  const auto [mb, sb] = moments(b);
  if (!(sa > 0.0) || !(sb > 0.0)) return {0.0, true};
  double cov = 0.0;
  for (std::size_t i = 0; i < k; ++i) cov += (a[i] - ma) * (b[i] - mb);
  cov /= static_cast<double>(k);
  return {std::clamp(cov / (sa * sb), -1.0, 1.0), false};
}

}  // namespace pilid
