#pragma once

#include "mvgrl/common.hpp"

#include <string>
#include <vector>

namespace mvgrl {

/// First/second moment buffers for one parameter set.
struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real epsilon = 1e-8;

  static AdamState like(const std::vector<Matrix*>& params);
};

/// One bias-corrected Adam update in place. Throws RuntimeError naming the
/// parameter if its gradient is non-finite.
void adam_step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
               const std::vector<std::string>& names, AdamState& state, Real lr);

}  // namespace mvgrl
