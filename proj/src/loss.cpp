#include "pilid/loss.hpp"

#include <string>

#include "pilid/error.hpp"

namespace pilid {

std::string_view regularizer_name(Regularizer r) {
  switch (r) {
    case Regularizer::kNone: return "none";
    case Regularizer::kL1: return "l1";
    case Regularizer::kL2: return "l2";
  }
  return "none";
}

Regularizer parse_regularizer(std::string_view text) {
  if (text == "none") return Regularizer::kNone;
  if (text == "l1") return Regularizer::kL1;
  if (text == "l2") return Regularizer::kL2;
  throw Error("unknown regularizer '" + std::string(text) + "' (expected l1, l2 or none)");
}

double penalty(const ParamSlots& params, Regularizer reg) {
  if (reg == Regularizer::kNone) return 0.0;
  double total = 0.0;
  for (const auto& slot : params) {
    if (!slot.regularized) continue;
    for (double v : slot.values) total += reg == Regularizer::kL1 ? std::abs(v) : v * v;
  }
  return total;
}

void add_penalty_grad(const ParamSlots& params, const ParamSlots& grads, double lambda, Regularizer reg) {
  if (reg == Regularizer::kNone || lambda == 0.0) return;
  if (params.size() != grads.size()) throw DimensionError("penalty: slot layouts differ");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].regularized) continue;
    const auto p = params[i].values;
    const auto g = grads[i].values;
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (reg == Regularizer::kL2) {
        g[k] += 2.0 * lambda * p[k];
      } else if (p[k] != 0.0) {
        g[k] += p[k] > 0.0 ? lambda : -lambda;
      }
    }
  }
}

}  // namespace pilid
