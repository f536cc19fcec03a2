// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
#include "warpspace/network.hpp"

#include <cmath>
#include <string>

#include "warpspace/errors.hpp"
#include "warpspace/rng.hpp"

namespace warpspace {

namespace {

void check_dims(int num_warpings, int supports_per_warping, int dim, bool bipolar) {
  std::vector<std::string> issues;
  if (num_warpings < 2) issues.push_back("num_warpings must be >= 2");
  if (supports_per_warping < 1) issues.push_back("supports_per_warping must be >= 1");
  if (bipolar && (supports_per_warping < 2 || supports_per_warping % 2 != 0))
    issues.push_back("supports_per_warping must be even and >= 2 in bipolar mode");
  if (dim < 1) issues.push_back("dim must be >= 1");
  if (!issues.empty()) throw ConfigError(std::move(issues));
}

}  // namespace

void WarpingNetwork::check_index(int k) const {
  if (k < 0 || k >= num_warpings_)
    throw ContractViolation("warping index " + std::to_string(k) + " out of range [0, " +
                            std::to_string(num_warpings_) + ")");
}

WarpingNetwork WarpingNetwork::init(int num_warpings, int supports_per_warping, int dim,
                                    std::uint64_t seed, const NetworkInit& config) {
  check_dims(num_warpings, supports_per_warping, dim, config.bipolar);

  WarpingNetwork net;
  net.num_warpings_ = num_warpings;
  net.supports_per_warping_ = supports_per_warping;
  net.dim_ = dim;
  net.bipolar_ = config.bipolar;
  net.centers_.resize(num_warpings);
  net.free_weights_.resize(num_warpings);
  net.free_log_scales_.resize(num_warpings);

  const int free_n = config.bipolar ? supports_per_warping / 2 : supports_per_warping;
  Rng rng(seed);
  for (int k = 0; k < num_warpings; ++k) {
    RowMat& c = net.centers_[k];
    c.resize(supports_per_warping, dim);
    for (int i = 0; i < supports_per_warping; ++i)
      for (int j = 0; j < dim; ++j) c(i, j) = config.support_stddev * rng.normal();
    Eigen::VectorXd& w = net.free_weights_[k];
    w.resize(free_n);
    for (int j = 0; j < free_n; ++j) w[j] = rng.uniform(config.weight_low, config.weight_high);
    net.free_log_scales_[k] =
        Eigen::VectorXd::Constant(free_n, std::log(config.initial_scale));
  }
  return net;
}

WarpingNetwork WarpingNetwork::linear_directions_mode(int num_warpings, int dim,
                                                      std::uint64_t seed) {
  NetworkInit config;
  config.initial_scale = kLinearModeScale;
  WarpingNetwork net = init(num_warpings, 2, dim, seed, config);
  net.scales_frozen_ = true;
  // The pair weight is untrainable in this mode and the normalized shift is
  // invariant to its magnitude; pin it so the baseline has no spectator noise.
  for (int k = 0; k < num_warpings; ++k) net.free_weights_[k].setOnes();
  return net;
}

WarpingNetwork WarpingNetwork::from_tensors(int num_warpings, int supports_per_warping, int dim,
                                            bool bipolar, bool scales_frozen,
                                            const Eigen::VectorXd& supports,
                                            const Eigen::VectorXd& weights,
                                            const Eigen::VectorXd& log_scales) {
  check_dims(num_warpings, supports_per_warping, dim, bipolar);
  const std::int64_t kn = static_cast<std::int64_t>(num_warpings) * supports_per_warping;
  if (supports.size() != kn * dim || weights.size() != kn || log_scales.size() != kn)
    throw ContractViolation("from_tensors: tensor sizes do not match dimensions");

  WarpingNetwork net;
  net.num_warpings_ = num_warpings;
  net.supports_per_warping_ = supports_per_warping;
  net.dim_ = dim;
  net.bipolar_ = bipolar;
  net.scales_frozen_ = scales_frozen;
  net.centers_.resize(num_warpings);
  net.free_weights_.resize(num_warpings);
  net.free_log_scales_.resize(num_warpings);

  const int n = supports_per_warping;
  const int free_n = bipolar ? n / 2 : n;
  for (int k = 0; k < num_warpings; ++k) {
    net.centers_[k] = Eigen::Map<const RowMat>(supports.data() +
                                                   static_cast<std::int64_t>(k) * n * dim,
                                               n, dim);
    Eigen::VectorXd& w = net.free_weights_[k];
    Eigen::VectorXd& g = net.free_log_scales_[k];
    w.resize(free_n);
    g.resize(free_n);
    for (int j = 0; j < free_n; ++j) {
      // In bipolar mode the even entry of each pair is the free parameter.
      const int src = bipolar ? 2 * j : j;
      w[j] = weights[static_cast<std::int64_t>(k) * n + src];
      g[j] = log_scales[static_cast<std::int64_t>(k) * n + src];
      if (bipolar) {
        const std::int64_t odd = static_cast<std::int64_t>(k) * n + src + 1;
        if (weights[odd] != -w[j] || log_scales[odd] != g[j])
          throw ContractViolation(
              "from_tensors: pair " + std::to_string(j) + " of warping " + std::to_string(k) +
              " violates the bipolar constraint (opposite weights, shared log-scale)");
      }
    }
  }
  return net;
}

std::int64_t WarpingNetwork::parameter_count() const {
  const std::int64_t per_warping =
      static_cast<std::int64_t>(supports_per_warping_) * dim_ + 2 * free_weights_[0].size();
  return num_warpings_ * per_warping;
}

Eigen::VectorXd WarpingNetwork::weight_row(int k) const {
  check_index(k);
  if (!bipolar_) return free_weights_[k];
  Eigen::VectorXd row(supports_per_warping_);
  for (Eigen::Index j = 0; j < free_weights_[k].size(); ++j) {
    row[2 * j] = free_weights_[k][j];
    row[2 * j + 1] = -free_weights_[k][j];
  }
  return row;
}

Eigen::VectorXd WarpingNetwork::log_scale_row(int k) const {
  check_index(k);
  if (!bipolar_) return free_log_scales_[k];
  Eigen::VectorXd row(supports_per_warping_);
  for (Eigen::Index j = 0; j < free_log_scales_[k].size(); ++j) {
    row[2 * j] = free_log_scales_[k][j];
    row[2 * j + 1] = free_log_scales_[k][j];
  }
  return row;
}

WarpingFunction WarpingNetwork::warping(int k) const {
  check_index(k);
  WarpingFunction warp;
  warp.dim = dim_;
  warp.centers = centers_[k];
  warp.weights = weight_row(k);
  warp.log_scales = log_scale_row(k);
  warp.validate();
  return warp;
}

Eigen::VectorXd WarpingNetwork::direction(int k, Eigen::Ref<const Eigen::VectorXd> z) const {
  const WarpingFunction warp = warping(k);
  const Eigen::VectorXd grad = grad_warp(warp, z);
  const double norm = grad.norm();
  if (norm <= kDegenerateGradientThreshold) throw DegenerateGradient(z, norm);
  return grad / norm;
}

Eigen::VectorXd WarpingNetwork::support_tensor_flat() const {
  Eigen::VectorXd flat(static_cast<std::int64_t>(num_warpings_) * supports_per_warping_ * dim_);
  for (int k = 0; k < num_warpings_; ++k)
    Eigen::Map<RowMat>(flat.data() + static_cast<std::int64_t>(k) * supports_per_warping_ * dim_,
                       supports_per_warping_, dim_) = centers_[k];
  return flat;
}

Eigen::VectorXd WarpingNetwork::weight_matrix_flat() const {
  Eigen::VectorXd flat(static_cast<std::int64_t>(num_warpings_) * supports_per_warping_);
  for (int k = 0; k < num_warpings_; ++k)
    flat.segment(static_cast<std::int64_t>(k) * supports_per_warping_, supports_per_warping_) =
        weight_row(k);
  return flat;
}

Eigen::VectorXd WarpingNetwork::log_scale_matrix_flat() const {
  Eigen::VectorXd flat(static_cast<std::int64_t>(num_warpings_) * supports_per_warping_);
  for (int k = 0; k < num_warpings_; ++k)
    flat.segment(static_cast<std::int64_t>(k) * supports_per_warping_, supports_per_warping_) =
        log_scale_row(k);
  return flat;
}

}  // namespace warpspace
