// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
#include "warpspace/reconstructor.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "warpspace/errors.hpp"
#include "warpspace/rng.hpp"

namespace warpspace {

namespace {

std::vector<NamedTensor> expected_layout(int num_warpings, int in_channels) {
  std::vector<NamedTensor> layout;
  int prev = in_channels;
  for (int b = 0; b < 3; ++b) {
    const int width = kConvWidths[b];
    const std::string stem = "conv" + std::to_string(b + 1);
    layout.push_back({stem + ".weight", {width, prev, kConvKernel, kConvKernel}, {}});
    layout.push_back({stem + ".bias", {width}, {}});
    prev = width;
  }
  layout.push_back({"cls.weight", {prev, num_warpings}, {}});
  layout.push_back({"cls.bias", {num_warpings}, {}});
  layout.push_back({"reg.weight", {prev, 1}, {}});
  layout.push_back({"reg.bias", {1}, {}});
  return layout;
}

}  // namespace

int Reconstructor::min_image_size() {
  // Invert three rounds of valid stride-2 convolution from a 1x1 output.
  int size = 1;
  for (int b = 0; b < 3; ++b) size = (size - 1) * kConvStride + kConvKernel;
  return size;
}

Reconstructor Reconstructor::init(int num_warpings, int in_channels, std::uint64_t seed) {
  if (num_warpings < 2) throw ContractViolation("reconstructor needs num_warpings >= 2");
  if (in_channels < 1) throw ContractViolation("reconstructor needs in_channels >= 1");

  Reconstructor r;
  r.num_warpings_ = num_warpings;
  r.in_channels_ = in_channels;
  r.parameters_ = expected_layout(num_warpings, in_channels);

  Rng rng(seed);
  for (NamedTensor& p : r.parameters_) {
    const auto numel = shape_numel(p.shape);
    p.value.resize(numel);
    if (p.name.ends_with(".bias")) {
      p.value.setZero();
      continue;
    }
    // He-style fan-in scaling: fan_in = everything but the leading
    // (output) dimension of the weight tensor.
    const double fan_in = static_cast<double>(numel / p.shape[0]);
    const double stddev = std::sqrt(2.0 / fan_in);
    for (Eigen::Index i = 0; i < numel; ++i) p.value[i] = stddev * rng.normal();
  }
  return r;
}

Reconstructor Reconstructor::from_parameters(int num_warpings, int in_channels,
                                             std::vector<NamedTensor> parameters) {
  const std::vector<NamedTensor> layout = expected_layout(num_warpings, in_channels);
  if (parameters.size() != layout.size())
    throw ContractViolation("reconstructor expects " + std::to_string(layout.size()) +
                            " parameter tensors, got " + std::to_string(parameters.size()));
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (parameters[i].name != layout[i].name)
      throw ContractViolation("parameter " + std::to_string(i) + " is named '" +
                              parameters[i].name + "', expected '" + layout[i].name + "'");
    if (parameters[i].shape != layout[i].shape)
      throw ContractViolation("parameter '" + parameters[i].name + "' has shape " +
                              shape_to_string(parameters[i].shape) + ", expected " +
                              shape_to_string(layout[i].shape));
    if (parameters[i].value.size() != shape_numel(layout[i].shape))
      throw ContractViolation("parameter '" + parameters[i].name + "' data does not match shape");
  }
  Reconstructor r;
  r.num_warpings_ = num_warpings;
  r.in_channels_ = in_channels;
  r.parameters_ = std::move(parameters);
  return r;
}

Reconstructor::Bound Reconstructor::bind(Tape& tape, bool requires_grad) const {
  Bound bound;
  bound.vars.reserve(parameters_.size());
  for (const NamedTensor& p : parameters_)
    bound.vars.push_back(tape.leaf(p.shape, p.value, requires_grad));
  return bound;
}

Reconstructor::Output Reconstructor::forward(const Bound& bound, Var image_pair) const {
  if (bound.vars.size() != parameters_.size())
    throw ContractViolation("forward: bound parameter list has wrong length");
  const Shape& in_shape = image_pair.shape();
  if (in_shape.size() != 4 || in_shape[0] != 1 || in_shape[1] != in_channels_)
    throw ContractViolation("forward expects a single pair shaped (1, " +
                            std::to_string(in_channels_) + ", H, W), got " +
                            shape_to_string(in_shape));

  Var x = image_pair;
  for (int b = 0; b < 3; ++b) {
    x = conv2d(x, bound.vars[2 * b], kConvStride);
    x = add_channel_bias(x, bound.vars[2 * b + 1]);
    x = leaky_relu(x, kLeakySlope);
  }
  Var pooled = global_avg_pool(x);  // (1, 32)

  Var logits = add(reshape(matmul(pooled, bound.vars[6]), {num_warpings_}), bound.vars[7]);
  Var shift_pred = add(reshape(matmul(pooled, bound.vars[8]), {1}), bound.vars[9]);
  return {logits, shift_pred};
}

}  // namespace warpspace
