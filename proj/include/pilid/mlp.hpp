#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "pilid/dataset.hpp"
#include "pilid/params.hpp"

namespace pilid {

enum class Activation { kRelu, kTanh };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view text);

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weight;  // outputs x inputs, row-major
  std::vector<double> bias;    // outputs

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// h^0 = x, h^l = act(W^l h^{l-1} + b^l), output = head_weight . h^L + head_bias.
struct MlpParams {
  std::vector<DenseLayer> layers;
  std::vector<double> head_weight;
  double head_bias = 0.0;
  Activation activation = Activation::kRelu;

  std::size_t input_width() const;
  std::size_t last_width() const;
  // Same architecture, every value zero.
  MlpParams zeros_like() const;
  std::size_t parameter_count() const;
  ParamSlots slots();

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

// Parses "h1-h2-...-1". The trailing 1 is the output head. A leading entry
// equal to input_width names the input layer; otherwise every entry before
// the head is a hidden width. Returns {input_width, hidden...}.
std::vector<std::size_t> parse_mlp_widths(std::string_view spec, std::size_t input_width);

// widths = {input, hidden...}. Weights i.i.d. N(0, sigma^2), biases zero.
MlpParams init_gaussian(std::span<const std::size_t> widths, double sigma, std::uint64_t seed,
                        Activation activation = Activation::kRelu);

// Activations of a forward pass over a batch of rows.
struct MlpCache {
  std::size_t batch = 0;
  std::vector<Matrix> activations;  // h^0 .. h^L, each batch x p_l
  std::vector<double> outputs;      // batch
};

// inputs is batch x input_width, row-major.
void mlp_forward_batch(const MlpParams& params, std::span<const double> inputs, std::size_t batch, MlpCache& cache);

// Accumulates sum_s upstream[s] * d(output_s)/d(params) into grad. When
// input_grad is non-null it is resized to batch x input_width and filled.
void mlp_backward_batch(const MlpParams& params, const MlpCache& cache, std::span<const double> upstream,
                        MlpParams& grad, Matrix* input_grad = nullptr);

struct MlpForward {
  double output = 0.0;
  MlpCache cache;
};

struct MlpGradients {
  MlpParams params;
  std::vector<double> input;
};

MlpForward mlp_forward(std::span<const double> x, const MlpParams& params);
MlpGradients mlp_backward(const MlpCache& cache, const MlpParams& params, double upstream);

}  // namespace pilid
