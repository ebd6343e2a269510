#pragma once

#include <span>
#include <vector>

namespace pilid {

// A contiguous run of trainable values. `regularized` marks weights that the
// L1/L2 penalty applies to (biases, omega and constants are exempt).
struct ParamSlot {
  std::span<double> values;
  bool regularized = false;
};

using ParamSlots = std::vector<ParamSlot>;

}  // namespace pilid
