#include "pilid/adam.hpp"

#include <cmath>

#include "pilid/error.hpp"
#include "pilid/simd.hpp"

namespace pilid {

void Adam::step(const ParamSlots& params, const ParamSlots& grads) {
  if (params.size() != grads.size()) throw DimensionError("Adam: parameter and gradient slot counts differ");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].values.size() != grads[i].values.size()) {
      throw DimensionError("Adam: parameter and gradient slot sizes differ");
    }
  }
  if (steps_ == 0 && m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i].values.size(), 0.0);
      v_[i].assign(params[i].values.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw DimensionError("Adam: state does not match the parameter layout");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (m_[i].size() != params[i].values.size()) throw DimensionError("Adam: state does not match the parameter layout");
  }

  ++steps_;
  const double t = static_cast<double>(steps_);
  const simd::AdamCoefficients c{config_.learning_rate, config_.beta1, config_.beta2, config_.epsilon,
                                 1.0 - std::pow(config_.beta1, t), 1.0 - std::pow(config_.beta2, t)};
  for (std::size_t i = 0; i < params.size(); ++i) {
    simd::adam_update(params[i].values.data(), grads[i].values.data(), m_[i].data(), v_[i].data(),
                      params[i].values.size(), c);
  }
}

}  // namespace pilid
