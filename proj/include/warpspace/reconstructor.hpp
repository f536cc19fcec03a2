// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
// The two-headed reconstructor: a small convolutional trunk over a
// channel-concatenated image pair, followed by a K-way classification head
// (which warping transformed the pair?) and a scalar regression head (by
// what signed magnitude?).
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "warpspace/autodiff.hpp"
#include "warpspace/types.hpp"

namespace warpspace {

/// Trunk geometry: three 3x3 stride-2 valid convolutions with leaky
/// rectifier activations, then global average pooling.
inline constexpr int kConvWidths[3] = {8, 16, 32};
inline constexpr int kConvKernel = 3;
inline constexpr int kConvStride = 2;
inline constexpr double kLeakySlope = 0.1;

class Reconstructor {
 public:
  Reconstructor() = default;

  /// Seeded He-style initialization; biases start at zero. Deterministic.
  static Reconstructor init(int num_warpings, int in_channels, std::uint64_t seed);

  /// Rebuilds from checkpointed tensors; validates names and shapes.
  static Reconstructor from_parameters(int num_warpings, int in_channels,
                                       std::vector<NamedTensor> parameters);

  int num_warpings() const { return num_warpings_; }
  int in_channels() const { return in_channels_; }

  /// Parameters in fixed serialization order: conv{1,2,3}.{weight,bias},
  /// cls.{weight,bias}, reg.{weight,bias}.
  const std::vector<NamedTensor>& parameters() const { return parameters_; }
  std::vector<NamedTensor>& parameters() { return parameters_; }

  /// Smallest input image the trunk accepts (each stage needs >= kernel).
  static int min_image_size();

  /// Parameter tensors leafed onto a tape, in parameters() order.
  struct Bound {
    std::vector<Var> vars;
  };
  Bound bind(Tape& tape, bool requires_grad) const;

  struct Output {
    Var logits;      // shape (K)
    Var shift_pred;  // shape (1)
  };
  /// Forward for a single image pair of shape (1, in_channels, H, W).
  Output forward(const Bound& bound, Var image_pair) const;

 private:
  int num_warpings_ = 0;
  int in_channels_ = 0;
  std::vector<NamedTensor> parameters_;
};

}  // namespace warpspace
