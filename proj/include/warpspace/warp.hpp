// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
// Gaussian RBF warping functions over R^d. A warping is the scalar field
//
//   f(z) = sum_i alpha_i * exp(-gamma_i * |z - s_i|^2)
//
// whose gradient field defines a family of curves: repeatedly stepping a
// fixed magnitude eps along the normalized gradient traverses one of them.
// All functions here are pure and deterministic; identical inputs produce
// bit-identical outputs.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <utility>
#include <vector>

#include "warpspace/errors.hpp"

namespace warpspace {

/// Below this gradient norm a normalized shift is treated as undefined.
inline constexpr double kDegenerateGradientThreshold = 1e-12;

/// One RBF field over R^d. Scales are stored as log(gamma) so that gamma
/// stays strictly positive under unconstrained optimization.
struct WarpingFunction {
  int dim = 0;
  Eigen::MatrixXd centers;     // N x dim, one support vector per row
  Eigen::VectorXd weights;     // N
  Eigen::VectorXd log_scales;  // N

  int support_count() const { return static_cast<int>(centers.rows()); }
  Eigen::ArrayXd scales() const { return log_scales.array().exp(); }

  /// Throws ContractViolation unless centers/weights/log_scales agree in
  /// length, N >= 1 and every center has length dim.
  void validate() const;
};

/// Builds a warping from bipolar support pairs: entry 2j carries weight
/// +pair_weights[j], entry 2j+1 carries -pair_weights[j], and both share
/// pair_log_scales[j].
WarpingFunction make_bipolar(const Eigen::MatrixXd& centers,
                             const Eigen::VectorXd& pair_weights,
                             const Eigen::VectorXd& pair_log_scales);

/// True if weights and log-scales satisfy the bipolar pairing exactly.
bool is_bipolar(const WarpingFunction& warp);

namespace detail {
inline void check_point_dim(const WarpingFunction& warp, Eigen::Index size) {
  if (size != warp.dim)
    throw ContractViolation("warp point has length " + std::to_string(size) +
                            ", expected " + std::to_string(warp.dim));
}
}  // namespace detail

/// f(z). Accepts any Eigen column-vector expression of length warp.dim.
template <typename Derived>
double eval_warp(const WarpingFunction& warp, const Eigen::MatrixBase<Derived>& z) {
  detail::check_point_dim(warp, z.size());
  double acc = 0.0;
  for (int i = 0; i < warp.support_count(); ++i) {
    const double sq = (z.derived() - warp.centers.row(i).transpose()).squaredNorm();
    acc += warp.weights[i] * std::exp(-std::exp(warp.log_scales[i]) * sq);
  }
  return acc;
}

/// The analytic gradient -2 sum_i alpha_i gamma_i exp(-gamma_i |z-s_i|^2) (z - s_i).
template <typename Derived>
Eigen::VectorXd grad_warp(const WarpingFunction& warp, const Eigen::MatrixBase<Derived>& z) {
  detail::check_point_dim(warp, z.size());
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(warp.dim);
  for (int i = 0; i < warp.support_count(); ++i) {
    const Eigen::VectorXd diff = z.derived() - warp.centers.row(i).transpose();
    const double gamma = std::exp(warp.log_scales[i]);
    grad.noalias() -= 2.0 * warp.weights[i] * gamma * std::exp(-gamma * diff.squaredNorm()) * diff;
  }
  return grad;
}

/// The normalized shift eps * grad f(z) / |grad f(z)|. |result| = |eps| up to
/// rounding. Throws DegenerateGradient when the gradient norm is at or below
/// kDegenerateGradientThreshold.
Eigen::VectorXd shift(const WarpingFunction& warp, Eigen::Ref<const Eigen::VectorXd> z,
                      double eps);

/// An ordered walk through latent space with constant step magnitude.
struct LatentPath {
  std::vector<Eigen::VectorXd> points;  // n_steps + 1 entries
  double step_magnitude = 0.0;          // eps > 0
  int direction_sign = 1;               // +1 or -1
};

/// Traversal failed at some step; carries the step index and the points
/// visited so far.
class TraversalError : public std::runtime_error {
 public:
  TraversalError(int failed_step, LatentPath partial, double gradient_norm)
      : std::runtime_error("traversal hit a degenerate gradient at step " +
                           std::to_string(failed_step)),
        failed_step_(failed_step),
        partial_(std::move(partial)),
        gradient_norm_(gradient_norm) {}

  int failed_step() const { return failed_step_; }
  const LatentPath& partial_path() const { return partial_; }
  double gradient_norm() const { return gradient_norm_; }

 private:
  int failed_step_;
  LatentPath partial_;
  double gradient_norm_;
};

/// Explicit fixed-step walk along the normalized gradient field:
/// points[0] = z0, points[t+1] = points[t] + shift(warp, points[t], sign*eps).
LatentPath traverse(const WarpingFunction& warp, Eigen::Ref<const Eigen::VectorXd> z0,
                    double eps, int n_steps, int sign);

/// Arc length divided by endpoint distance; 1 for straight paths, and >= 1
/// always by the triangle inequality.
class UndefinedRatio : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double nonlinearity_coefficient(const LatentPath& path);

}  // namespace warpspace
