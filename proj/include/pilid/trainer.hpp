#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pilid/adam.hpp"
#include "pilid/dataset.hpp"
#include "pilid/encoding.hpp"
#include "pilid/loss.hpp"
#include "pilid/mlp.hpp"
#include "pilid/pl_component.hpp"

namespace pilid {

enum class LinearInit { kLeastSquares, kGaussian };

std::string_view linear_init_name(LinearInit init);
LinearInit parse_linear_init(std::string_view text);

struct TrainConfig {
  double learning_rate = 0.005;
  std::size_t epochs = 100;
  std::size_t batch_size = 256;
  double lambda = 1e-4;
  Regularizer reg = Regularizer::kL2;
  double sigma = 0.05;
  double ridge = kDefaultRidge;
  std::uint64_t seed = 1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  Activation activation = Activation::kRelu;
  LinearInit linear_init = LinearInit::kLeastSquares;
  // false trains the MLP alone (the plain-MLP baseline).
  bool linear_component = true;

  void validate() const;
  AdamConfig adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_epsilon}; }
  std::string fingerprint() const;
};

struct PilidModel {
  Task task = Task::kRegression;
  std::vector<FeatureSpec> specs;
  std::vector<double> feature_means;  // training means, used for interaction slices
  CharacteristicPoints points;
  PiecewiseLinearParams pl;
  MlpParams mlp;
  bool linear_component = true;
  std::string fingerprint;

  std::size_t num_features() const { return points.num_features(); }
  void check_consistent() const;
  ParamSlots slots();
};

struct Prediction {
  double score = 0.0;       // additive score (logit for classification)
  double prediction = 0.0;  // score, or sigmoid(score) for classification
};

Prediction model_forward(const PilidModel& model, std::span<const double> x);
std::vector<double> predict(const PilidModel& model, const Matrix& rows);

struct PilidGradients {
  PiecewiseLinearParams pl;
  MlpParams mlp;

  static PilidGradients zeros_like(const PilidModel& model);
  ParamSlots slots(bool linear_component);
};

// Mean data loss over `indices` plus lambda * Omega; fills grad when non-null.
// `encoded` must be encode_matrix(rows, model.points).
double objective(const PilidModel& model, const Matrix& rows, const Matrix& encoded, std::span<const double> targets,
                 std::span<const std::size_t> indices, const TrainConfig& config, PilidGradients* grad = nullptr);

// Convenience form of the loss over a dataset subset.
double loss(const PilidModel& model, const Dataset& data, std::span<const std::size_t> indices,
            const TrainConfig& config);

struct TrainResult {
  PilidModel model;
  std::vector<double> loss_trace;  // mean batch objective per epoch
  std::uint64_t adam_steps = 0;
};

// Builds points, encodes, initializes (least squares for the linear part,
// Gaussian for the MLP) and runs Adam over both components jointly.
// mlp_widths = {input, hidden...} as returned by parse_mlp_widths.
PilidModel initialize_model(const Dataset& data, std::span<const std::size_t> gammas,
                            std::span<const std::size_t> mlp_widths, const TrainConfig& config);
TrainResult train(const Dataset& data, std::span<const std::size_t> gammas, std::span<const std::size_t> mlp_widths,
                  const TrainConfig& config);

// Rows are processed in fixed-size chunks whose partial gradients are summed
// in chunk order, so results do not depend on the worker count.
inline constexpr std::size_t kGradientChunk = 32;

}  // namespace pilid
