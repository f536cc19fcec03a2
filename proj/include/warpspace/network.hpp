// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
// A bank of K trainable RBF warpings over a shared latent space. Weights and
// log-scales are half-parameterized in bipolar mode: each pair stores one
// free weight and one free log-scale, and the mirrored entries are derived
// on read, so the bipolar constraint holds exactly under any optimizer.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "warpspace/types.hpp"
#include "warpspace/warp.hpp"

namespace warpspace {

/// Initialization hyperparameters; defaults give mildly non-linear warpings
/// over the standard normal latent ball.
struct NetworkInit {
  double support_stddev = 2.0;   // centers ~ N(0, stddev^2 I)
  double initial_scale = 0.01;   // gamma_0; log-scales start at log(gamma_0)
  double weight_low = 0.5;       // free weights ~ U[low, high]
  double weight_high = 1.5;
  bool bipolar = true;
};

/// Scale used by linear_directions_mode; small enough that gradients are
/// constant in z to well below any tolerance used here.
inline constexpr double kLinearModeScale = 1e-8;

class WarpingNetwork {
 public:
  WarpingNetwork() = default;

  /// Fresh network with seeded random supports and weights. Deterministic:
  /// the same arguments always produce a bit-identical network.
  static WarpingNetwork init(int num_warpings, int supports_per_warping, int dim,
                             std::uint64_t seed, const NetworkInit& config = {});

  /// One bipolar pair per warping with gamma frozen at kLinearModeScale:
  /// every warping's direction field is constant, so paths are straight
  /// lines and only the support vectors meaningfully train.
  static WarpingNetwork linear_directions_mode(int num_warpings, int dim, std::uint64_t seed);

  /// Rebuilds a network from full (mirror-expanded) tensors, as stored in a
  /// checkpoint: supports K*N*d, weights K*N, log-scales K*N, all row-major.
  static WarpingNetwork from_tensors(int num_warpings, int supports_per_warping, int dim,
                                     bool bipolar, bool scales_frozen,
                                     const Eigen::VectorXd& supports,
                                     const Eigen::VectorXd& weights,
                                     const Eigen::VectorXd& log_scales);

  int num_warpings() const { return num_warpings_; }
  int supports_per_warping() const { return supports_per_warping_; }
  int dim() const { return dim_; }
  bool bipolar() const { return bipolar_; }
  bool scales_frozen() const { return scales_frozen_; }

  /// Free parameters: K * (N*d + N/2 + N/2) in bipolar mode.
  std::int64_t parameter_count() const;

  /// Materializes warping k from the current parameters. Obtain a fresh
  /// snapshot after optimizer steps to observe updates.
  WarpingFunction warping(int k) const;

  /// Unit direction of warping k at z. Throws DegenerateGradient where the
  /// field vanishes.
  Eigen::VectorXd direction(int k, Eigen::Ref<const Eigen::VectorXd> z) const;

  // Mutable access to the free parameter slabs, one per warping; the trainer
  // is the sole writer.
  RowMat& centers(int k) { return check_index(k), centers_[k]; }
  const RowMat& centers(int k) const { return check_index(k), centers_[k]; }
  Eigen::VectorXd& free_weights(int k) { return check_index(k), free_weights_[k]; }
  const Eigen::VectorXd& free_weights(int k) const { return check_index(k), free_weights_[k]; }
  Eigen::VectorXd& free_log_scales(int k) { return check_index(k), free_log_scales_[k]; }
  const Eigen::VectorXd& free_log_scales(int k) const {
    return check_index(k), free_log_scales_[k];
  }

  /// Mirror-expanded rows of length N.
  Eigen::VectorXd weight_row(int k) const;
  Eigen::VectorXd log_scale_row(int k) const;

  // Full tensors, row-major, for serialization.
  Eigen::VectorXd support_tensor_flat() const;    // K*N*d
  Eigen::VectorXd weight_matrix_flat() const;     // K*N
  Eigen::VectorXd log_scale_matrix_flat() const;  // K*N

 private:
  void check_index(int k) const;

  int num_warpings_ = 0;
  int supports_per_warping_ = 0;
  int dim_ = 0;
  bool bipolar_ = true;
  bool scales_frozen_ = false;
  std::vector<RowMat> centers_;                  // each N x d
  std::vector<Eigen::VectorXd> free_weights_;    // each N/2 (bipolar) or N
  std::vector<Eigen::VectorXd> free_log_scales_; // same length as free_weights_
};

}  // namespace warpspace
