#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pilid/dataset.hpp"
#include "pilid/encoding.hpp"
#include "pilid/mlp.hpp"
#include "pilid/pl_component.hpp"
#include "pilid/trainer.hpp"

namespace pilid {

// Gated-block variant: the deep part is B same-sized MLP blocks, each seeing
// the raw features through a per-block gate row. Gates are deterministic:
//
//   train: clip(sigmoid(log_alpha / T) * 1.2 - 0.1, 0, 1)
//   eval:  1 if log_alpha >= 0 else 0   (train value >= 0.5, ties active)
//
// Gradients pass straight through the clip so closed gates can reopen.

enum class GateMode { kTrain, kEval };

inline constexpr double kGateStretchLow = -0.1;
inline constexpr double kGateStretchHigh = 1.1;

struct PilibGates {
  Matrix log_alpha;  // B x m
  double temperature = 1.0;
  std::size_t max_order = 3;  // K
  double lambda0 = 0.01;
  bool frozen = false;        // set after phase 1; forward then uses eval gates

  std::size_t blocks() const { return log_alpha.rows(); }
  friend bool operator==(const PilibGates&, const PilibGates&) = default;
};

Matrix gate_values(const PilibGates& gates, GateMode mode);
// k_i = sum_j G_ij per block.
std::vector<double> estimated_orders(const PilibGates& gates, GateMode mode);

// max{max_i k_i - K, 0} + lambda0 * sum_i (k_i - 2) / #{i : k_i != 0}.
// The second term is 0 when no block is active.
double lk_penalty(std::span<const double> orders, std::size_t max_order, double lambda0);
// d(lk_penalty)/d(k_i); the active-block count is treated as constant.
std::vector<double> lk_penalty_grad(std::span<const double> orders, std::size_t max_order, double lambda0);

struct PilibConfig {
  std::size_t blocks = 20;
  std::size_t max_order = 3;
  double lambda0 = 0.01;
  double gate_init = 1.0;
  double temperature_start = 1.0;
  double temperature_decay = 0.9;
  double temperature_floor = 0.05;
  std::size_t phase1_min_epochs = 1;
  std::size_t phase1_max_epochs = 200;

  void validate() const;
};

struct PilibModel {
  Task task = Task::kRegression;
  std::vector<FeatureSpec> specs;
  std::vector<double> feature_means;
  CharacteristicPoints points;
  PiecewiseLinearParams pl;
  std::vector<MlpParams> blocks;
  PilibGates gates;
  std::string fingerprint;

  std::size_t num_features() const { return points.num_features(); }
  GateMode default_mode() const { return gates.frozen ? GateMode::kEval : GateMode::kTrain; }
  void check_consistent() const;
  // Feature indices whose eval gate is open in block i.
  std::vector<std::size_t> active_features(std::size_t block) const;
};

// Output of block i on x with its gate row applied.
double block_output(const PilibModel& model, std::size_t block, std::span<const double> x, GateMode mode);

Prediction pilib_forward(const PilibModel& model, std::span<const double> x, GateMode mode = GateMode::kEval);
std::vector<double> predict(const PilibModel& model, const Matrix& rows, GateMode mode = GateMode::kEval);

enum class PilibPhase { kGateSearch, kFrozenGates };

struct PilibGradients {
  PiecewiseLinearParams pl;
  std::vector<MlpParams> blocks;
  Matrix log_alpha;

  static PilibGradients zeros_like(const PilibModel& model);
};

ParamSlots pilib_slots(PilibModel& model, PilibPhase phase);
ParamSlots pilib_grad_slots(PilibGradients& grad, PilibPhase phase);

// Phase 1: data loss + L_K' on train-mode orders + lambda*Omega(linear w),
// gates trainable. Phase 2: data loss + lambda*Omega(all weights), gates
// fixed at their eval values.
double pilib_objective(const PilibModel& model, const Matrix& rows, const Matrix& encoded,
                       std::span<const double> targets, std::span<const std::size_t> indices,
                       const TrainConfig& config, PilibPhase phase, PilibGradients* grad = nullptr);

struct PilibResult {
  PilibModel model;
  std::vector<double> phase1_trace;
  std::vector<double> phase2_trace;
  std::vector<double> orders;                          // eval-mode k per block
  std::vector<std::vector<std::size_t>> active_sets;  // per block
  bool capped = false;  // phase 1 hit its epoch cap with max order > K
  std::size_t phase1_epochs = 0;
};

// block_widths = {input, hidden...}; config.epochs is the phase-2 length.
PilibModel initialize_pilib(const Dataset& data, std::span<const std::size_t> gammas,
                            std::span<const std::size_t> block_widths, const PilibConfig& pilib,
                            const TrainConfig& config);
PilibResult train_pilib(const Dataset& data, std::span<const std::size_t> gammas,
                        std::span<const std::size_t> block_widths, const PilibConfig& pilib,
                        const TrainConfig& config);

struct InteractionSurface {
  std::size_t feature_a = 0;
  std::size_t feature_b = 0;
  std::vector<double> xs_a;
  std::vector<double> xs_b;
  Matrix values;  // xs_a.size() x xs_b.size()
  std::vector<std::size_t> blocks;  // blocks whose active set is a non-empty subset of {a, b}
};

// Sum of the contributing blocks over a resolution x resolution grid spanning
// each feature's scale; every other feature sits at its training mean.
InteractionSurface interaction_surface(const PilibModel& model, std::size_t feature_a, std::size_t feature_b,
                                       std::size_t resolution);

}  // namespace pilid
