#include "pilid/mlp.hpp"

#include <charconv>
#include <cmath>
#include <random>
#include <string>

#include "pilid/error.hpp"
#include "pilid/simd.hpp"

namespace pilid {

std::string_view activation_name(Activation a) { return a == Activation::kRelu ? "relu" : "tanh"; }

Activation parse_activation(std::string_view text) {
  if (text == "relu") return Activation::kRelu;
  if (text == "tanh") return Activation::kTanh;
  throw Error("unknown activation '" + std::string(text) + "' (expected relu or tanh)");
}

std::size_t MlpParams::input_width() const { return layers.empty() ? head_weight.size() : layers.front().inputs; }

std::size_t MlpParams::last_width() const { return head_weight.size(); }

MlpParams MlpParams::zeros_like() const {
  MlpParams z;
  z.activation = activation;
  for (const auto& layer : layers) {
    z.layers.push_back({layer.inputs, layer.outputs, std::vector<double>(layer.weight.size(), 0.0),
                        std::vector<double>(layer.bias.size(), 0.0)});
  }
  z.head_weight.assign(head_weight.size(), 0.0);
  return z;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = head_weight.size() + 1;
  for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
  return n;
}

ParamSlots MlpParams::slots() {
  ParamSlots out;
  for (auto& layer : layers) {
    out.push_back({layer.weight, true});
    out.push_back({layer.bias, false});
  }
  out.push_back({head_weight, true});
  out.push_back({std::span<double>(&head_bias, 1), false});
  return out;
}

std::vector<std::size_t> parse_mlp_widths(std::string_view spec, std::size_t input_width) {
  std::vector<std::size_t> parts;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const std::size_t dash = std::min(spec.find('-', start), spec.size());
    const std::string_view token = spec.substr(start, dash - start);
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size() || value == 0) {
      throw Error("bad MLP architecture '" + std::string(spec) + "' (expected widths like 100-200-1)");
    }
    parts.push_back(value);
    start = dash + 1;
  }
  if (parts.back() != 1) throw Error("MLP architecture '" + std::string(spec) + "' must end with output width 1");
  parts.pop_back();
  if (!parts.empty() && parts.front() == input_width) parts.erase(parts.begin());
  parts.insert(parts.begin(), input_width);
  return parts;
}

MlpParams init_gaussian(std::span<const std::size_t> widths, double sigma, std::uint64_t seed,
                        Activation activation) {
  if (!(sigma > 0.0)) throw Error("sigma must be positive");
  if (widths.empty() || widths.front() == 0) throw Error("MLP needs a positive input width");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  MlpParams params;
  params.activation = activation;
  for (std::size_t l = 1; l < widths.size(); ++l) {
    if (widths[l] == 0) throw Error("MLP layer widths must be positive");
    DenseLayer layer{widths[l - 1], widths[l], std::vector<double>(widths[l] * widths[l - 1]),
                     std::vector<double>(widths[l], 0.0)};
    for (double& w : layer.weight) w = normal(rng);
    params.layers.push_back(std::move(layer));
  }
  params.head_weight.resize(widths.back());
  for (double& w : params.head_weight) w = normal(rng);
  params.head_bias = 0.0;
  return params;
}

namespace {

inline double activate(double z, Activation a) { return a == Activation::kRelu ? (z > 0.0 ? z : 0.0) : std::tanh(z); }

// Derivative expressed through the activation output; relu'(0) = 0.
inline double activation_slope(double h, Activation a) {
  return a == Activation::kRelu ? (h > 0.0 ? 1.0 : 0.0) : 1.0 - h * h;
}

}  // namespace

void mlp_forward_batch(const MlpParams& params, std::span<const double> inputs, std::size_t batch, MlpCache& cache) {
  const std::size_t m = params.input_width();
  if (inputs.size() != batch * m) throw DimensionError("MLP input has the wrong width");
  for (double v : inputs) {
    if (!std::isfinite(v)) throw Error("MLP input contains a non-finite value");
  }
  cache.batch = batch;
  cache.activations.resize(params.layers.size() + 1);
  if (cache.activations[0].rows() != batch || cache.activations[0].cols() != m) cache.activations[0] = Matrix(batch, m);
  std::copy(inputs.begin(), inputs.end(), cache.activations[0].storage().begin());

  const auto& k = simd::kernels();
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const DenseLayer& layer = params.layers[l];
    const Matrix& in = cache.activations[l];
    Matrix& out = cache.activations[l + 1];
    if (out.rows() != batch || out.cols() != layer.outputs) out = Matrix(batch, layer.outputs);
    // Row-outer keeps one weight row hot across the whole batch.
    for (std::size_t i = 0; i < layer.outputs; ++i) {
      const double* w = layer.weight.data() + i * layer.inputs;
      const double b = layer.bias[i];
      for (std::size_t s = 0; s < batch; ++s) {
        out(s, i) = activate(k.dot(w, in.row(s).data(), layer.inputs) + b, params.activation);
      }
    }
  }
  const Matrix& last = cache.activations.back();
  cache.outputs.resize(batch);
  for (std::size_t s = 0; s < batch; ++s) {
    cache.outputs[s] = k.dot(params.head_weight.data(), last.row(s).data(), params.head_weight.size()) +
                       params.head_bias;
  }
}

void mlp_backward_batch(const MlpParams& params, const MlpCache& cache, std::span<const double> upstream,
                        MlpParams& grad, Matrix* input_grad) {
  const std::size_t batch = cache.batch;
  if (upstream.size() != batch) throw DimensionError("upstream gradient count does not match the batch");
  if (cache.activations.size() != params.layers.size() + 1 || grad.layers.size() != params.layers.size() ||
      grad.head_weight.size() != params.head_weight.size()) {
    throw DimensionError("MLP cache or gradient does not match the parameters");
  }
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    if (cache.activations[l + 1].cols() != params.layers[l].outputs ||
        grad.layers[l].weight.size() != params.layers[l].weight.size()) {
      throw DimensionError("MLP cache or gradient does not match the parameters");
    }
  }

  const auto& k = simd::kernels();
  const Matrix& last = cache.activations.back();
  const std::size_t p_last = params.head_weight.size();

  // delta holds d(loss)/d(pre-activation) of the current layer.
  Matrix delta(batch, p_last);
  for (std::size_t s = 0; s < batch; ++s) {
    const double u = upstream[s];
    grad.head_bias += u;
    k.axpy(u, last.row(s).data(), grad.head_weight.data(), p_last);
    for (std::size_t i = 0; i < p_last; ++i) {
      delta(s, i) = u * params.head_weight[i];
    }
  }
  if (params.layers.empty()) {
    if (input_grad != nullptr) *input_grad = std::move(delta);
    return;
  }
  for (std::size_t s = 0; s < batch; ++s) {
    for (std::size_t i = 0; i < p_last; ++i) delta(s, i) *= activation_slope(last(s, i), params.activation);
  }

  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const DenseLayer& layer = params.layers[l];
    DenseLayer& g = grad.layers[l];
    const Matrix& in = cache.activations[l];
    const bool need_prev = l > 0 || input_grad != nullptr;
    Matrix prev(need_prev ? batch : 0, need_prev ? layer.inputs : 0);
    for (std::size_t i = 0; i < layer.outputs; ++i) {
      const double* w = layer.weight.data() + i * layer.inputs;
      double* gw = g.weight.data() + i * layer.inputs;
      double gb = 0.0;
      for (std::size_t s = 0; s < batch; ++s) {
        const double d = delta(s, i);
        if (d == 0.0) continue;
        gb += d;
        k.axpy(d, in.row(s).data(), gw, layer.inputs);
        if (need_prev) k.axpy(d, w, prev.row(s).data(), layer.inputs);
      }
      g.bias[i] += gb;
    }
    if (l == 0) {
      if (input_grad != nullptr) *input_grad = std::move(prev);
      break;
    }
    for (std::size_t s = 0; s < batch; ++s) {
      for (std::size_t j = 0; j < layer.inputs; ++j) prev(s, j) *= activation_slope(in(s, j), params.activation);
    }
    delta = std::move(prev);
  }
}

MlpForward mlp_forward(std::span<const double> x, const MlpParams& params) {
  if (x.size() != params.input_width()) {
    throw DimensionError("MLP expects " + std::to_string(params.input_width()) + " inputs, got " +
                         std::to_string(x.size()));
  }
  MlpForward out;
  mlp_forward_batch(params, x, 1, out.cache);
  out.output = out.cache.outputs[0];
  return out;
}

MlpGradients mlp_backward(const MlpCache& cache, const MlpParams& params, double upstream) {
  if (cache.batch != 1) throw DimensionError("single-sample backward needs a single-sample cache");
  MlpGradients grads;
  grads.params = params.zeros_like();
  Matrix input;
  const double u[1] = {upstream};
  mlp_backward_batch(params, cache, u, grads.params, &input);
  grads.input = input.storage();
  return grads;
}

}  // namespace pilid
