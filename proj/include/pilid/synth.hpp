#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pilid/dataset.hpp"
#include "pilid/pl_component.hpp"

namespace pilid {

inline constexpr std::size_t kPolyDegree = 10;
inline constexpr std::size_t kTruthPoints = 101;

struct PlantedInteraction {
  std::size_t a = 0;
  std::size_t b = 0;
  double coefficient = 0.0;
};

struct SyntheticSpec {
  std::size_t m = 10;
  std::size_t n = 20000;
  // m x 11 raw coefficients (constant term first). Drawn U[-1, 1] when empty.
  std::vector<std::vector<double>> poly_coeffs;
  // Explicit pairs; when unset, n_interactions random distinct pairs are drawn.
  std::optional<std::vector<PlantedInteraction>> interactions;
  std::optional<std::size_t> n_interactions;  // default floor(m / 5)
  double noise_std = 0.1;
  Task task = Task::kRegression;
  std::uint64_t seed = 1;
  // Classification only: labels ~ Bernoulli(sigmoid(logit_scale * z)) with z
  // the standardized utility.
  double logit_scale = 2.5;

  void validate() const;
};

// u_j on a 101-point grid over [0, 1], in the units of the raw utility.
struct TruthCurve {
  std::size_t feature = 0;
  std::vector<double> xs;
  std::vector<double> values;

  double evaluate(double x) const;  // linear interpolation, clamped
};

struct SyntheticData {
  Dataset data;
  std::vector<TruthCurve> truth;
  std::vector<std::vector<double>> coefficients;  // raw, before centering and scaling
  std::vector<PlantedInteraction> interactions;
  std::vector<double> utility;  // before standardization / labelling
};

// Centered, unit-range marginal of raw coefficients c (c[k] multiplies x^k).
struct Marginal {
  std::vector<double> coefficients;
  double mean = 0.0;   // exact integral over [0, 1]
  double scale = 1.0;  // range of the centered polynomial on [0, 1]; 1 when flat

  double operator()(double x) const;
};
Marginal make_marginal(std::vector<double> coefficients);

SyntheticData generate(const SyntheticSpec& spec);

struct RecoveryScore {
  double value = 0.0;
  bool degenerate = false;  // one of the curves is constant; value is 0
};

// Pearson correlation of learned and true curves sampled at the learned
// characteristic points, both anchored at 0 at the first point.
RecoveryScore shape_recovery_score(const FeatureShape& learned, const TruthCurve& truth);

}  // namespace pilid
