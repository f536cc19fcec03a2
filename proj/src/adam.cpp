// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
#include "warpspace/adam.hpp"

#include <cmath>

#include "warpspace/errors.hpp"

namespace warpspace {

void adam_step(Eigen::Ref<Eigen::VectorXd> param, const Eigen::VectorXd& grad,
               AdamState& state, const AdamConfig& config) {
  if (param.size() != grad.size())
    throw ContractViolation("adam_step: parameter/gradient size mismatch");
  if (state.m.size() == 0) {
    state.m.setZero(param.size());
    state.v.setZero(param.size());
  }
  if (state.m.size() != param.size())
    throw ContractViolation("adam_step: state was initialized for a different parameter");

  ++state.step;
  state.m = config.beta1 * state.m + (1.0 - config.beta1) * grad;
  state.v = (config.beta2 * state.v.array() + (1.0 - config.beta2) * grad.array().square()).matrix();
  const double bias1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  param -= (config.learning_rate * (state.m.array() / bias1) /
            ((state.v.array() / bias2).sqrt() + config.epsilon))
               .matrix();
}

}  // namespace warpspace
