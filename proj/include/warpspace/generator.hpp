// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
// A frozen, deterministic, differentiable image generator: latent codes map
// through a fixed orthonormal factor map to the pose/scale/intensity of a
// rendered anisotropic Gaussian blob. Because the factor map is known, every
// rendered image comes with exact ground-truth attributes, which is what the
// evaluation protocol correlates against.
#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "warpspace/autodiff.hpp"
#include "warpspace/types.hpp"

namespace warpspace {

inline constexpr int kAttributeCount = 5;

/// Ground-truth render parameters, each squashed into a fixed range:
/// cx, cy in [0.2, 0.8]; sigma in [0.05, 0.2]; theta in (-pi/2, pi/2);
/// intensity in [0.3, 1.0].
struct AttributeVector {
  double cx = 0.0;
  double cy = 0.0;
  double sigma = 0.0;
  double theta = 0.0;
  double intensity = 0.0;
};

/// Column names used by every report that tabulates attributes.
extern const char* const kAttributeNames[kAttributeCount];

class SyntheticGenerator {
 public:
  /// Factor map = orthonormal rows from a seeded QR of a Gaussian matrix.
  /// When dim < kAttributeCount only the first dim rows can be orthonormal;
  /// the remaining rows are zero, freezing their attributes at midpoints.
  static SyntheticGenerator create(int dim, int image_size, std::uint64_t seed);

  /// Test fixture: supply the factor map directly (rows must be orthonormal
  /// or zero). Enables analytically predictable attribute responses.
  static SyntheticGenerator with_factor_map(const Eigen::MatrixXd& factor_map, int image_size);

  int dim() const { return dim_; }
  int image_size() const { return image_size_; }
  std::uint64_t seed() const { return seed_; }
  const Eigen::MatrixXd& factor_map() const { return factor_map_; }

  /// Ground-truth attributes of the image generate() would render at z.
  AttributeVector attributes(Eigen::Ref<const Eigen::VectorXd> z) const;
  /// Same values as a length-5 vector ordered as kAttributeNames.
  Eigen::VectorXd attribute_vector(Eigen::Ref<const Eigen::VectorXd> z) const;

  /// Renders onto the tape so gradients flow back into z. Output shape
  /// (1, 1, H, W), values in [0, 1].
  Var build_image(Tape& tape, Var z) const;

  /// Convenience non-tape render; bit-identical to build_image's forward
  /// values (it runs the same graph on a local tape).
  RowMat render(Eigen::Ref<const Eigen::VectorXd> z) const;

 private:
  SyntheticGenerator() = default;

  int dim_ = 0;
  int image_size_ = 0;
  std::uint64_t seed_ = 0;
  Eigen::MatrixXd factor_map_;   // kAttributeCount x dim, orthonormal/zero rows
  Eigen::VectorXd pixel_x_;      // H*W pixel-center x coordinates in [0,1]
  Eigen::VectorXd pixel_y_;
};

}  // namespace warpspace
