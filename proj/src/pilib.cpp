#include "pilid/pilib.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "pilid/error.hpp"
#include "pilid/parallel.hpp"
#include "pilid/simd.hpp"

namespace pilid {

namespace {

constexpr double kStretch = kGateStretchHigh - kGateStretchLow;

double train_gate(double log_alpha, double temperature) {
  return std::clamp(sigmoid(log_alpha / temperature) * kStretch + kGateStretchLow, 0.0, 1.0);
}

// Slope of the unclipped stretched sigmoid (straight-through at the clip).
double train_gate_slope(double log_alpha, double temperature) {
  const double s = sigmoid(log_alpha / temperature);
  return kStretch * s * (1.0 - s) / temperature;
}

}  // namespace

Matrix gate_values(const PilibGates& gates, GateMode mode) {
  Matrix g(gates.log_alpha.rows(), gates.log_alpha.cols());
  for (std::size_t i = 0; i < g.rows(); ++i) {
    for (std::size_t j = 0; j < g.cols(); ++j) {
      const double la = gates.log_alpha(i, j);
      g(i, j) = mode == GateMode::kEval ? (la >= 0.0 ? 1.0 : 0.0) : train_gate(la, gates.temperature);
    }
  }
  return g;
}

std::vector<double> estimated_orders(const PilibGates& gates, GateMode mode) {
  const Matrix g = gate_values(gates, mode);
  std::vector<double> orders(g.rows(), 0.0);
  for (std::size_t i = 0; i < g.rows(); ++i) {
    for (double v : g.row(i)) orders[i] += v;
  }
  return orders;
}

double lk_penalty(std::span<const double> orders, std::size_t max_order, double lambda0) {
  if (orders.empty()) return 0.0;
  const double k_max = *std::max_element(orders.begin(), orders.end());
  double value = std::max(k_max - static_cast<double>(max_order), 0.0);
  std::size_t active = 0;
  double excess = 0.0;
  for (double k : orders) {
    excess += k - 2.0;
    if (k != 0.0) ++active;
  }
  if (active > 0) value += lambda0 * excess / static_cast<double>(active);
  return value;
}

std::vector<double> lk_penalty_grad(std::span<const double> orders, std::size_t max_order, double lambda0) {
  std::vector<double> grad(orders.size(), 0.0);
  if (orders.empty()) return grad;
  const auto it = std::max_element(orders.begin(), orders.end());
  if (*it - static_cast<double>(max_order) > 0.0) grad[static_cast<std::size_t>(it - orders.begin())] += 1.0;
  const auto active = static_cast<std::size_t>(std::count_if(orders.begin(), orders.end(), [](double k) { return k != 0.0; }));
  if (active > 0) {
    for (double& g : grad) g += lambda0 / static_cast<double>(active);
  }
  return grad;
}

void PilibConfig::validate() const {
  if (blocks < 1) throw Error("number of blocks must be at least 1");
  if (max_order < 1) throw Error("maximum interaction order must be at least 1");
  if (!(lambda0 >= 0.0)) throw Error("lambda0 must be non-negative");
  if (!(temperature_start > 0.0) || !(temperature_floor > 0.0) || !(temperature_decay > 0.0)) {
    throw Error("gate temperatures must be positive");
  }
  if (phase1_max_epochs < 1) throw Error("phase-1 epoch cap must be at least 1");
}

void PilibModel::check_consistent() const {
  if (pl.w.size() != points.width() || pl.omega.size() != points.num_features()) {
    throw DimensionError("linear parameters do not match the characteristic points");
  }
  if (blocks.empty()) throw DimensionError("PiLiB model has no blocks");
  if (gates.log_alpha.rows() != blocks.size() || gates.log_alpha.cols() != num_features()) {
    throw DimensionError("gate matrix does not match blocks x features");
  }
  for (const auto& block : blocks) {
    if (block.input_width() != num_features()) throw DimensionError("block input width does not match features");
    if (block.parameter_count() != blocks.front().parameter_count()) throw DimensionError("blocks differ in size");
  }
}

std::vector<std::size_t> PilibModel::active_features(std::size_t block) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < gates.log_alpha.cols(); ++j) {
    if (gates.log_alpha(block, j) >= 0.0) out.push_back(j);
  }
  return out;
}

double block_output(const PilibModel& model, std::size_t block, std::span<const double> x, GateMode mode) {
  if (block >= model.blocks.size()) throw DimensionError("block index out of range");
  if (x.size() != model.num_features()) throw DimensionError("input width does not match the model");
  const Matrix g = gate_values(model.gates, mode);
  std::vector<double> masked(x.begin(), x.end());
  for (std::size_t j = 0; j < masked.size(); ++j) masked[j] *= g(block, j);
  return mlp_forward(masked, model.blocks[block]).output;
}

Prediction pilib_forward(const PilibModel& model, std::span<const double> x, GateMode mode) {
  if (x.size() != model.num_features()) {
    throw DimensionError("expected " + std::to_string(model.num_features()) + " features, got " +
                         std::to_string(x.size()));
  }
  const Matrix g = gate_values(model.gates, mode);
  double score = linear_forward(encode(x, model.points), model.pl, model.points);
  std::vector<double> masked(x.size());
  for (std::size_t b = 0; b < model.blocks.size(); ++b) {
    for (std::size_t j = 0; j < x.size(); ++j) masked[j] = x[j] * g(b, j);
    score += mlp_forward(masked, model.blocks[b]).output;
  }
  return {score, model.task == Task::kRegression ? score : sigmoid(score)};
}

std::vector<double> predict(const PilibModel& model, const Matrix& rows, GateMode mode) {
  std::vector<double> out(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = pilib_forward(model, rows.row(i), mode).prediction;
  return out;
}

PilibGradients PilibGradients::zeros_like(const PilibModel& model) {
  PilibGradients g;
  g.pl = PiecewiseLinearParams::zeros(model.points);
  for (const auto& block : model.blocks) g.blocks.push_back(block.zeros_like());
  g.log_alpha = Matrix(model.gates.log_alpha.rows(), model.gates.log_alpha.cols());
  return g;
}

namespace {

ParamSlots collect_slots(PiecewiseLinearParams& pl, std::vector<MlpParams>& blocks, Matrix& log_alpha,
                         PilibPhase phase) {
  ParamSlots out = slots(pl);
  for (auto& block : blocks) {
    for (auto slot : block.slots()) {
      // Phase 1 regularizes the blocks only through the gate penalty.
      if (phase == PilibPhase::kGateSearch) slot.regularized = false;
      out.push_back(slot);
    }
  }
  if (phase == PilibPhase::kGateSearch) out.push_back({log_alpha.storage(), false});
  return out;
}

struct ChunkWork {
  std::vector<double> inputs;
  std::vector<double> masked;
  std::vector<double> upstream;
  std::vector<MlpCache> caches;
  Matrix input_grad;
  PilibGradients grad;
  double loss = 0.0;
};

}  // namespace

ParamSlots pilib_slots(PilibModel& model, PilibPhase phase) {
  return collect_slots(model.pl, model.blocks, model.gates.log_alpha, phase);
}

ParamSlots pilib_grad_slots(PilibGradients& grad, PilibPhase phase) {
  return collect_slots(grad.pl, grad.blocks, grad.log_alpha, phase);
}

double pilib_objective(const PilibModel& model, const Matrix& rows, const Matrix& encoded,
                       std::span<const double> targets, std::span<const std::size_t> indices,
                       const TrainConfig& config, PilibPhase phase, PilibGradients* grad) {
  if (indices.empty()) throw Error("objective needs a non-empty batch");
  if (encoded.cols() != model.points.width() || encoded.rows() != rows.rows() || targets.size() != rows.rows()) {
    throw DimensionError("encoded rows, rows and targets disagree");
  }
  const bool search = phase == PilibPhase::kGateSearch;
  const GateMode mode = search ? GateMode::kTrain : GateMode::kEval;
  const Matrix gates = gate_values(model.gates, mode);
  const std::size_t n = indices.size();
  const std::size_t m = model.num_features();
  const std::size_t n_blocks = model.blocks.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const std::size_t n_chunks = (n + kGradientChunk - 1) / kGradientChunk;
  std::vector<ChunkWork> work(n_chunks);

  for_each_chunk(n_chunks, [&](std::size_t c) {
    ChunkWork& w = work[c];
    const std::size_t start = c * kGradientChunk;
    const std::size_t count = std::min(kGradientChunk, n - start);
    w.inputs.resize(count * m);
    w.masked.resize(count * m);
    for (std::size_t s = 0; s < count; ++s) {
      const auto r = rows.row(indices[start + s]);
      std::copy(r.begin(), r.end(), w.inputs.begin() + static_cast<std::ptrdiff_t>(s * m));
    }
    w.caches.resize(n_blocks);
    std::vector<double> scores(count, 0.0);
    for (std::size_t b = 0; b < n_blocks; ++b) {
      for (std::size_t s = 0; s < count; ++s) {
        for (std::size_t j = 0; j < m; ++j) w.masked[s * m + j] = w.inputs[s * m + j] * gates(b, j);
      }
      mlp_forward_batch(model.blocks[b], w.masked, count, w.caches[b]);
      for (std::size_t s = 0; s < count; ++s) scores[s] += w.caches[b].outputs[s];
    }
    w.upstream.resize(count);
    if (grad != nullptr) w.grad = PilibGradients::zeros_like(model);
    for (std::size_t s = 0; s < count; ++s) {
      const std::size_t i = indices[start + s];
      const auto phi = encoded.row(i);
      const double score = linear_forward(phi, model.pl, model.points) + scores[s];
      w.loss += sample_loss(score, targets[i], model.task);
      w.upstream[s] = sample_loss_grad(score, targets[i], model.task) * inv_n;
      if (grad != nullptr) linear_backward(phi, model.pl, model.points, w.upstream[s], w.grad.pl);
    }
    if (grad == nullptr) return;
    for (std::size_t b = 0; b < n_blocks; ++b) {
      mlp_backward_batch(model.blocks[b], w.caches[b], w.upstream, w.grad.blocks[b], search ? &w.input_grad : nullptr);
      if (!search) continue;
      // d(loss)/d(G_bj) = sum_s d(loss)/d(masked_sj) * x_sj
      for (std::size_t s = 0; s < count; ++s) {
        for (std::size_t j = 0; j < m; ++j) w.grad.log_alpha(b, j) += w.input_grad(s, j) * w.inputs[s * m + j];
      }
    }
  });

  double value = 0.0;
  for (const auto& w : work) value += w.loss;
  value *= inv_n;

  std::vector<double> orders;
  if (search) {
    orders.assign(n_blocks, 0.0);
    for (std::size_t b = 0; b < n_blocks; ++b) {
      for (double g : gates.row(b)) orders[b] += g;
    }
    value += lk_penalty(orders, model.gates.max_order, model.gates.lambda0);
  }

  auto& mutable_model = const_cast<PilibModel&>(model);
  const ParamSlots param_slots = pilib_slots(mutable_model, phase);
  value += config.lambda * penalty(param_slots, config.reg);

  if (grad != nullptr) {
    const bool shapes_match = grad->blocks.size() == n_blocks && grad->pl.w.size() == model.pl.w.size() &&
                              grad->log_alpha.rows() == n_blocks && grad->log_alpha.cols() == m;
    if (!shapes_match) *grad = PilibGradients::zeros_like(model);
    const ParamSlots total = pilib_grad_slots(*grad, phase);
    for (const auto& slot : total) std::fill(slot.values.begin(), slot.values.end(), 0.0);
    for (auto& w : work) {
      const ParamSlots part = pilib_grad_slots(w.grad, phase);
      for (std::size_t k = 0; k < total.size(); ++k) {
        simd::add(part[k].values.data(), total[k].values.data(), total[k].values.size());
      }
    }
    if (search) {
      // Gradients so far are w.r.t. gate values; add the order penalty and
      // map through the gate slope to log_alpha.
      const auto d_orders = lk_penalty_grad(orders, model.gates.max_order, model.gates.lambda0);
      for (std::size_t b = 0; b < n_blocks; ++b) {
        for (std::size_t j = 0; j < m; ++j) {
          const double d_gate = grad->log_alpha(b, j) + d_orders[b];
          grad->log_alpha(b, j) = d_gate * train_gate_slope(model.gates.log_alpha(b, j), model.gates.temperature);
        }
      }
    }
    add_penalty_grad(param_slots, total, config.lambda, config.reg);
  }
  return value;
}

PilibModel initialize_pilib(const Dataset& data, std::span<const std::size_t> gammas,
                            std::span<const std::size_t> block_widths, const PilibConfig& pilib,
                            const TrainConfig& config) {
  pilib.validate();
  TrainConfig base = config;
  base.linear_component = true;
  const PilidModel seed_model = initialize_model(data, gammas, block_widths, base);

  PilibModel model;
  model.task = seed_model.task;
  model.specs = seed_model.specs;
  model.feature_means = seed_model.feature_means;
  model.points = seed_model.points;
  model.pl = seed_model.pl;
  for (std::size_t b = 0; b < pilib.blocks; ++b) {
    model.blocks.push_back(init_gaussian(block_widths, config.sigma, config.seed + 7919 * (b + 1), config.activation));
  }
  model.gates.log_alpha = Matrix(pilib.blocks, data.num_features(), pilib.gate_init);
  model.gates.temperature = pilib.temperature_start;
  model.gates.max_order = pilib.max_order;
  model.gates.lambda0 = pilib.lambda0;
  std::ostringstream fp;
  fp << config.fingerprint() << ";blocks=" << pilib.blocks << ";K=" << pilib.max_order << ";lambda0=" << pilib.lambda0;
  model.fingerprint = fp.str();
  return model;
}

PilibResult train_pilib(const Dataset& data, std::span<const std::size_t> gammas,
                        std::span<const std::size_t> block_widths, const PilibConfig& pilib,
                        const TrainConfig& config) {
  config.validate();
  PilibResult result;
  result.model = initialize_pilib(data, gammas, block_widths, pilib, config);
  PilibModel& model = result.model;
  const Matrix encoded = encode_matrix(data, model.points);

  const auto run_epoch = [&](PilibPhase phase, Adam& adam, const ParamSlots& params, PilibGradients& grad,
                             const ParamSlots& grads, std::uint64_t epoch_key) {
    const auto epoch_batches = batches(data.size(), config.batch_size, config.seed, epoch_key);
    double total = 0.0;
    for (const auto& batch : epoch_batches) {
      const double value =
          pilib_objective(model, data.rows(), encoded, data.targets(), batch, config, phase, &grad);
      if (!std::isfinite(value)) throw Error("PiLiB training diverged: non-finite loss");
      adam.step(params, grads);
      total += value;
    }
    return total / static_cast<double>(epoch_batches.size());
  };

  {
    Adam adam(config.adam());
    PilibGradients grad = PilibGradients::zeros_like(model);
    const ParamSlots params = pilib_slots(model, PilibPhase::kGateSearch);
    const ParamSlots grads = pilib_grad_slots(grad, PilibPhase::kGateSearch);
    for (std::size_t epoch = 1; epoch <= pilib.phase1_max_epochs; ++epoch) {
      model.gates.temperature = std::max(
          pilib.temperature_start * std::pow(pilib.temperature_decay, static_cast<double>(epoch - 1)),
          pilib.temperature_floor);
      result.phase1_trace.push_back(run_epoch(PilibPhase::kGateSearch, adam, params, grad, grads, epoch));
      result.phase1_epochs = epoch;
      const auto orders = estimated_orders(model.gates, GateMode::kEval);
      const double k_max = *std::max_element(orders.begin(), orders.end());
      if (epoch >= pilib.phase1_min_epochs && k_max <= static_cast<double>(pilib.max_order)) break;
    }
    const auto orders = estimated_orders(model.gates, GateMode::kEval);
    result.capped = *std::max_element(orders.begin(), orders.end()) > static_cast<double>(pilib.max_order);
    if (result.capped) {
      std::fprintf(stderr, "warning: phase 1 reached %zu epochs without meeting max order %zu\n",
                   pilib.phase1_max_epochs, pilib.max_order);
    }
  }

  model.gates.frozen = true;
  {
    Adam adam(config.adam());
    PilibGradients grad = PilibGradients::zeros_like(model);
    const ParamSlots params = pilib_slots(model, PilibPhase::kFrozenGates);
    const ParamSlots grads = pilib_grad_slots(grad, PilibPhase::kFrozenGates);
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
      result.phase2_trace.push_back(
          run_epoch(PilibPhase::kFrozenGates, adam, params, grad, grads, pilib.phase1_max_epochs + epoch));
    }
  }

  result.orders = estimated_orders(model.gates, GateMode::kEval);
  for (std::size_t b = 0; b < model.blocks.size(); ++b) result.active_sets.push_back(model.active_features(b));
  return result;
}

InteractionSurface interaction_surface(const PilibModel& model, std::size_t feature_a, std::size_t feature_b,
                                       std::size_t resolution) {
  const std::size_t m = model.num_features();
  if (feature_a >= m || feature_b >= m) throw DimensionError("interaction feature index out of range");
  if (feature_a == feature_b) throw Error("interaction surface needs two distinct features");
  if (resolution < 2) throw Error("interaction grid resolution must be at least 2");
  if (model.feature_means.size() != m) throw DimensionError("model has no training means");

  InteractionSurface surface;
  surface.feature_a = feature_a;
  surface.feature_b = feature_b;
  for (std::size_t b = 0; b < model.blocks.size(); ++b) {
    const auto active = model.active_features(b);
    const bool subset = !active.empty() && std::all_of(active.begin(), active.end(), [&](std::size_t j) {
      return j == feature_a || j == feature_b;
    });
    if (subset) surface.blocks.push_back(b);
  }
  const auto grid = [&](std::size_t j) {
    const auto& f = model.points.feature(j);
    std::vector<double> xs(resolution);
    for (std::size_t k = 0; k < resolution; ++k) {
      xs[k] = f.lower() + (f.upper() - f.lower()) * static_cast<double>(k) / static_cast<double>(resolution - 1);
    }
    return xs;
  };
  surface.xs_a = grid(feature_a);
  surface.xs_b = grid(feature_b);
  surface.values = Matrix(resolution, resolution);
  std::vector<double> x = model.feature_means;
  for (std::size_t p = 0; p < resolution; ++p) {
    for (std::size_t q = 0; q < resolution; ++q) {
      x[feature_a] = surface.xs_a[p];
      x[feature_b] = surface.xs_b[q];
      double value = 0.0;
      for (std::size_t b : surface.blocks) value += block_output(model, b, x, GateMode::kEval);
      surface.values(p, q) = value;
    }
  }
  return surface;
}

}  // namespace pilid
