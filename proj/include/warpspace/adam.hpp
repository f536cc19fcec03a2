// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
// Adam optimizer with bias correction, operating on flat parameter vectors.
#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace warpspace {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Per-parameter moment estimates. Buffers are sized on first use.
struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;
};

/// One update in place: param -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(Eigen::Ref<Eigen::VectorXd> param, const Eigen::VectorXd& grad,
               AdamState& state, const AdamConfig& config);

}  // namespace warpspace
