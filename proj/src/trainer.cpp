#include "pilid/trainer.hpp"

#include <cmath>
#include <sstream>

#include "pilid/error.hpp"
#include "pilid/parallel.hpp"
#include "pilid/simd.hpp"

namespace pilid {

std::string_view linear_init_name(LinearInit init) {
  return init == LinearInit::kLeastSquares ? "least-squares" : "gaussian";
}

LinearInit parse_linear_init(std::string_view text) {
  if (text == "least-squares" || text == "ls") return LinearInit::kLeastSquares;
  if (text == "gaussian") return LinearInit::kGaussian;
  throw Error("unknown linear initialization '" + std::string(text) + "' (expected least-squares or gaussian)");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
  if (epochs < 1) throw Error("epochs must be at least 1");
  if (batch_size < 1) throw Error("batch size must be at least 1");
  if (!(lambda >= 0.0)) throw Error("lambda must be non-negative");
  if (!(sigma > 0.0)) throw Error("sigma must be positive");
  if (!(ridge >= 0.0)) throw Error("ridge must be non-negative");
}

std::string TrainConfig::fingerprint() const {
  std::ostringstream out;
  out.precision(17);
  out << "lr=" << learning_rate << ";epochs=" << epochs << ";batch=" << batch_size << ";lambda=" << lambda
      << ";reg=" << regularizer_name(reg) << ";sigma=" << sigma << ";ridge=" << ridge << ";seed=" << seed
      << ";act=" << activation_name(activation) << ";init=" << linear_init_name(linear_init)
      << ";linear=" << (linear_component ? 1 : 0);
  return out.str();
}

void PilidModel::check_consistent() const {
  if (pl.w.size() != points.width() || pl.omega.size() != points.num_features()) {
    throw DimensionError("linear parameters do not match the characteristic points");
  }
  if (mlp.input_width() != points.num_features()) throw DimensionError("MLP input width does not match features");
}

ParamSlots PilidModel::slots() {
  ParamSlots out;
  if (linear_component) out = pilid::slots(pl);
  auto m = mlp.slots();
  out.insert(out.end(), m.begin(), m.end());
  return out;
}

PilidGradients PilidGradients::zeros_like(const PilidModel& model) {
  return {PiecewiseLinearParams::zeros(model.points), model.mlp.zeros_like()};
}

ParamSlots PilidGradients::slots(bool linear_component) {
  ParamSlots out;
  if (linear_component) out = pilid::slots(pl);
  auto m = mlp.slots();
  out.insert(out.end(), m.begin(), m.end());
  return out;
}

Prediction model_forward(const PilidModel& model, std::span<const double> x) {
  if (x.size() != model.num_features()) {
    throw DimensionError("expected " + std::to_string(model.num_features()) + " features, got " +
                         std::to_string(x.size()));
  }
  const double linear = linear_forward(encode(x, model.points), model.pl, model.points);
  const double deep = mlp_forward(x, model.mlp).output;
  const double score = linear + deep;
  return {score, model.task == Task::kRegression ? score : sigmoid(score)};
}

std::vector<double> predict(const PilidModel& model, const Matrix& rows) {
  if (rows.cols() != model.num_features()) throw DimensionError("row width does not match the model");
  std::vector<double> out(rows.rows());
  std::vector<double> phi(model.points.width());
  MlpCache cache;
  for (std::size_t start = 0; start < rows.rows(); start += kGradientChunk) {
    const std::size_t count = std::min(kGradientChunk, rows.rows() - start);
    mlp_forward_batch(model.mlp, std::span<const double>(rows.row(start).data(), count * rows.cols()), count, cache);
    for (std::size_t s = 0; s < count; ++s) {
      encode_into(rows.row(start + s), model.points, phi);
      const double score = linear_forward(phi, model.pl, model.points) + cache.outputs[s];
      out[start + s] = model.task == Task::kRegression ? score : sigmoid(score);
    }
  }
  return out;
}

namespace {

struct ChunkWork {
  MlpCache cache;
  std::vector<double> inputs;
  std::vector<double> upstream;
  PilidGradients grad;
  double loss = 0.0;
};

}  // namespace

double objective(const PilidModel& model, const Matrix& rows, const Matrix& encoded, std::span<const double> targets,
                 std::span<const std::size_t> indices, const TrainConfig& config, PilidGradients* grad) {
  if (indices.empty()) throw Error("objective needs a non-empty batch");
  if (!(config.lambda >= 0.0)) throw Error("lambda must be non-negative");
  if (encoded.cols() != model.points.width() || encoded.rows() != rows.rows() || targets.size() != rows.rows()) {
    throw DimensionError("encoded rows, rows and targets disagree");
  }
  const std::size_t n = indices.size();
  const std::size_t m = model.num_features();
  const double inv_n = 1.0 / static_cast<double>(n);
  const std::size_t n_chunks = (n + kGradientChunk - 1) / kGradientChunk;
  std::vector<ChunkWork> work(n_chunks);

  for_each_chunk(n_chunks, [&](std::size_t c) {
    ChunkWork& w = work[c];
    const std::size_t start = c * kGradientChunk;
    const std::size_t count = std::min(kGradientChunk, n - start);
    w.inputs.resize(count * m);
    for (std::size_t s = 0; s < count; ++s) {
      const auto r = rows.row(indices[start + s]);
      std::copy(r.begin(), r.end(), w.inputs.begin() + static_cast<std::ptrdiff_t>(s * m));
    }
    mlp_forward_batch(model.mlp, w.inputs, count, w.cache);
    w.upstream.resize(count);
    if (grad != nullptr) w.grad = PilidGradients::zeros_like(model);
    for (std::size_t s = 0; s < count; ++s) {
      const std::size_t i = indices[start + s];
      const auto phi = encoded.row(i);
      const double score = linear_forward(phi, model.pl, model.points) + w.cache.outputs[s];
      w.loss += sample_loss(score, targets[i], model.task);
      w.upstream[s] = sample_loss_grad(score, targets[i], model.task) * inv_n;
      if (grad != nullptr && model.linear_component) {
        linear_backward(phi, model.pl, model.points, w.upstream[s], w.grad.pl);
      }
    }
    if (grad != nullptr) mlp_backward_batch(model.mlp, w.cache, w.upstream, w.grad.mlp);
  });

  double data_loss = 0.0;
  for (const auto& w : work) data_loss += w.loss;
  data_loss *= inv_n;

  auto& mutable_model = const_cast<PilidModel&>(model);
  const ParamSlots param_slots = mutable_model.slots();
  const double reg = config.lambda * penalty(param_slots, config.reg);

  if (grad != nullptr) {
    if (grad->pl.w.size() != model.pl.w.size() || grad->mlp.parameter_count() != model.mlp.parameter_count()) {
      *grad = PilidGradients::zeros_like(model);
    }
    // Zeroed in place: callers may hold slot views into *grad.
    const ParamSlots total = grad->slots(model.linear_component);
    for (const auto& slot : total) std::fill(slot.values.begin(), slot.values.end(), 0.0);
    for (auto& w : work) {
      const ParamSlots part = w.grad.slots(model.linear_component);
      for (std::size_t k = 0; k < total.size(); ++k) {
        simd::add(part[k].values.data(), total[k].values.data(), total[k].values.size());
      }
    }
    add_penalty_grad(param_slots, total, config.lambda, config.reg);
  }
  return data_loss + reg;
}

double loss(const PilidModel& model, const Dataset& data, std::span<const std::size_t> indices,
            const TrainConfig& config) {
  const Matrix encoded = encode_matrix(data, model.points);
  return objective(model, data.rows(), encoded, data.targets(), indices, config);
}

namespace {

// Least-squares target for the linear part. Classification regresses on
// 4(y - 1/2), the first-order logit of the label, so the fit lands on the
// logit scale the model scores in.
std::vector<double> linear_fit_targets(const Dataset& data) {
  std::vector<double> y = data.targets();
  if (data.task() == Task::kBinaryClassification) {
    for (double& v : y) v = 4.0 * (v - 0.5);
  }
  return y;
}

}  // namespace

PilidModel initialize_model(const Dataset& data, std::span<const std::size_t> gammas,
                            std::span<const std::size_t> mlp_widths, const TrainConfig& config) {
  config.validate();
  if (mlp_widths.empty() || mlp_widths.front() != data.num_features()) {
    throw DimensionError("MLP input width must equal the number of features");
  }
  PilidModel model;
  model.task = data.task();
  model.specs = data.specs();
  model.feature_means = data.feature_means();
  model.points = build_points(data, gammas);
  model.linear_component = config.linear_component;
  if (!config.linear_component) {
    model.pl = PiecewiseLinearParams::zeros(model.points);
  } else if (config.linear_init == LinearInit::kLeastSquares) {
    const Matrix encoded = encode_matrix(data, model.points);
    model.pl = init_least_squares(encoded, linear_fit_targets(data), config.ridge, model.points);
  } else {
    model.pl = init_gaussian_linear(model.points, config.sigma, config.seed);
  }
  model.mlp = init_gaussian(mlp_widths, config.sigma, config.seed, config.activation);
  model.fingerprint = config.fingerprint();
  return model;
}

TrainResult train(const Dataset& data, std::span<const std::size_t> gammas, std::span<const std::size_t> mlp_widths,
                  const TrainConfig& config) {
  TrainResult result;
  result.model = initialize_model(data, gammas, mlp_widths, config);
  PilidModel& model = result.model;
  const Matrix encoded = encode_matrix(data, model.points);

  Adam adam(config.adam());
  PilidGradients grad = PilidGradients::zeros_like(model);
  const ParamSlots param_slots = model.slots();
  const ParamSlots grad_slots = grad.slots(model.linear_component);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto epoch_batches = batches(data.size(), config.batch_size, config.seed, epoch);
    double epoch_loss = 0.0;
    for (const auto& batch : epoch_batches) {
      const double value = objective(model, data.rows(), encoded, data.targets(), batch, config, &grad);
      if (!std::isfinite(value)) {
        throw Error("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                    " (try a smaller learning rate)");
      }
      adam.step(param_slots, grad_slots);
      epoch_loss += value;
    }
    result.loss_trace.push_back(epoch_loss / static_cast<double>(epoch_batches.size()));
  }
  result.adam_steps = adam.steps();
  return result;
}

}  // namespace pilid
