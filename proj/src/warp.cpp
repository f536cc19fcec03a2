// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
#include "warpspace/warp.hpp"

#include <string>

namespace warpspace {

void WarpingFunction::validate() const {
  const auto n = centers.rows();
  if (dim <= 0) throw ContractViolation("warping dim must be positive");
  if (n < 1) throw ContractViolation("warping needs at least one support");
  if (centers.cols() != dim)
    throw ContractViolation("centers have length " + std::to_string(centers.cols()) +
                            ", expected " + std::to_string(dim));
  if (weights.size() != n || log_scales.size() != n)
    throw ContractViolation("weights/log_scales length does not match support count");
}

WarpingFunction make_bipolar(const Eigen::MatrixXd& centers,
                             const Eigen::VectorXd& pair_weights,
                             const Eigen::VectorXd& pair_log_scales) {
  const auto n = centers.rows();
  if (n < 2 || n % 2 != 0)
    throw ContractViolation("bipolar warping needs an even number of supports, got " +
                            std::to_string(n));
  if (pair_weights.size() * 2 != n || pair_log_scales.size() * 2 != n)
    throw ContractViolation("bipolar warping needs one weight and one log-scale per pair");

  WarpingFunction warp;
  warp.dim = static_cast<int>(centers.cols());
  warp.centers = centers;
  warp.weights.resize(n);
  warp.log_scales.resize(n);
  for (Eigen::Index j = 0; j < n / 2; ++j) {
    warp.weights[2 * j] = pair_weights[j];
    warp.weights[2 * j + 1] = -pair_weights[j];
    warp.log_scales[2 * j] = pair_log_scales[j];
    warp.log_scales[2 * j + 1] = pair_log_scales[j];
  }
  warp.validate();
  return warp;
}

bool is_bipolar(const WarpingFunction& warp) {
  const auto n = warp.support_count();
  if (n < 2 || n % 2 != 0) return false;
  for (int j = 0; j < n / 2; ++j) {
    if (warp.weights[2 * j] != -warp.weights[2 * j + 1]) return false;
    if (warp.log_scales[2 * j] != warp.log_scales[2 * j + 1]) return false;
  }
  return true;
}

Eigen::VectorXd shift(const WarpingFunction& warp, Eigen::Ref<const Eigen::VectorXd> z,
                      double eps) {
  if (eps == 0.0) throw ContractViolation("shift magnitude must be nonzero");
  const Eigen::VectorXd grad = grad_warp(warp, z);
  const double norm = grad.norm();
  if (norm <= kDegenerateGradientThreshold) throw DegenerateGradient(z, norm);
  return (eps / norm) * grad;
}

LatentPath traverse(const WarpingFunction& warp, Eigen::Ref<const Eigen::VectorXd> z0,
                    double eps, int n_steps, int sign) {
  if (eps <= 0.0) throw ContractViolation("traverse requires eps > 0");
  if (sign != 1 && sign != -1) throw ContractViolation("traverse sign must be +1 or -1");
  if (n_steps < 0) throw ContractViolation("traverse requires n_steps >= 0");

  LatentPath path;
  path.step_magnitude = eps;
  path.direction_sign = sign;
  path.points.reserve(n_steps + 1);
  path.points.emplace_back(z0);
  for (int t = 0; t < n_steps; ++t) {
    try {
      path.points.push_back(path.points.back() + shift(warp, path.points.back(), sign * eps));
    } catch (const DegenerateGradient& e) {
      throw TraversalError(t, std::move(path), e.gradient_norm());
    }
  }
  return path;
}

double nonlinearity_coefficient(const LatentPath& path) {
  if (path.points.size() < 2)
    throw UndefinedRatio("nonlinearity coefficient needs at least two points");
  double arc = 0.0;
  for (std::size_t t = 0; t + 1 < path.points.size(); ++t)
    arc += (path.points[t + 1] - path.points[t]).norm();
  const double chord = (path.points.back() - path.points.front()).norm();
  if (chord == 0.0) throw UndefinedRatio("path endpoints coincide");
  return arc / chord;
}

}  // namespace warpspace
