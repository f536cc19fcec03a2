// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace warpspace {

// All tensor data in this project is row-major and 64-bit.
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Shape = std::vector<int>;

inline std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape);

/// A named, shaped, flat 64-bit buffer; the unit of parameter storage and
/// checkpoint serialization.
struct NamedTensor {
  std::string name;
  Shape shape;
  Eigen::VectorXd value;
};

}  // namespace warpspace
