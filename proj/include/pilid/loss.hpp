#pragma once

#include <cmath>
#include <string_view>

#include "pilid/dataset.hpp"
#include "pilid/params.hpp"

namespace pilid {

enum class Regularizer { kNone, kL1, kL2 };

std::string_view regularizer_name(Regularizer r);
Regularizer parse_regularizer(std::string_view text);

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Squared error for regression; cross-entropy on the logit for
// classification, computed as softplus(s) - y*s.
inline double sample_loss(double score, double target, Task task) {
  if (task == Task::kRegression) {
    const double r = score - target;
    return r * r;
  }
  return std::max(score, 0.0) - target * score + std::log1p(std::exp(-std::abs(score)));
}

inline double sample_loss_grad(double score, double target, Task task) {
  return task == Task::kRegression ? 2.0 * (score - target) : sigmoid(score) - target;
}

// Omega over the regularized slots only.
double penalty(const ParamSlots& params, Regularizer reg);
// grads += lambda * dOmega/dparams on the regularized slots.
void add_penalty_grad(const ParamSlots& params, const ParamSlots& grads, double lambda, Regularizer reg);

}  // namespace pilid
