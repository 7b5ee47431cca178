#include "mvgrl/adam.hpp"

#include <cmath>

namespace mvgrl {

AdamState AdamState::like(const std::vector<Matrix*>& params) {
  AdamState s;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const Matrix* p : params) {
    s.m.push_back(Matrix::Zero(p->rows(), p->cols()));
    s.v.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
  return s;
}

void adam_step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
               const std::vector<std::string>& names, AdamState& state, Real lr) {
  check_arg(params.size() == grads.size() && params.size() == state.m.size(),
            "adam_step: parameter/gradient/state sizes differ");
  for (size_t i = 0; i < params.size(); ++i) {
    check_arg(params[i]->rows() == grads[i]->rows() && params[i]->cols() == grads[i]->cols(),
              "adam_step: gradient shape mismatch for " +
                  (i < names.size() ? names[i] : std::to_string(i)));
    if (!grads[i]->allFinite()) {
      throw RuntimeError("adam_step: non-finite gradient for parameter " +
                         (i < names.size() ? names[i] : std::to_string(i)));
    }
  }
  ++state.step;
  const Real bc1 = 1.0 - std::pow(state.beta1, static_cast<Real>(state.step));
  const Real bc2 = 1.0 - std::pow(state.beta2, static_cast<Real>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * (*grads[i]);
    state.v[i] = state.beta2 * state.v[i].array().matrix() +
                 (1.0 - state.beta2) * grads[i]->cwiseProduct(*grads[i]);
    const Matrix m_hat = state.m[i] / bc1;
    const Matrix v_hat = state.v[i] / bc2;
    params[i]->array() -= lr * m_hat.array() / (v_hat.array().sqrt() + state.epsilon);
  }
}

}  // namespace mvgrl
