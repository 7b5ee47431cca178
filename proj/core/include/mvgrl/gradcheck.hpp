#pragma once

#include "mvgrl/tape.hpp"

#include <string>
#include <vector>

namespace mvgrl::ad {

struct OpGradReport {
  std::string op;
  Real max_rel_error = 0.0;
};

/// Finite-difference sweep over every op kind: each op is exercised in
/// isolation under a weighted-sum reduction across `trials` random seeds and
/// random shapes in [2, 8], inputs sampled away from the PReLU kink. Returns
/// the per-op worst relative error.
std::vector<OpGradReport> op_gradient_sweep(uint64_t seed, int trials = 100,
                                            Real eps = 1e-5);

}  // namespace mvgrl::ad
