// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
#include "warpspace/generator.hpp"

#include <cmath>
#include <string>

#include "warpspace/errors.hpp"
#include "warpspace/rng.hpp"

namespace warpspace {

const char* const kAttributeNames[kAttributeCount] = {"attr_cx", "attr_cy", "attr_sigma",
                                                      "attr_theta", "attr_intensity"};

namespace {

constexpr double kPi = 3.14159265358979323846;

// Midpoint and half-width of each attribute's range; attribute =
// mid + half * tanh(raw factor).
const double kMid[kAttributeCount] = {0.5, 0.5, 0.125, 0.0, 0.65};
const double kHalf[kAttributeCount] = {0.3, 0.3, 0.075, kPi / 2.0, 0.35};

void check_rows_orthonormal_or_zero(const Eigen::MatrixXd& m) {
  for (int i = 0; i < m.rows(); ++i) {
    const double ni = m.row(i).norm();
    if (ni != 0.0 && std::abs(ni - 1.0) > 1e-10)
      throw ContractViolation("factor map row " + std::to_string(i) +
                              " is neither unit-norm nor zero");
    for (int j = i + 1; j < m.rows(); ++j)
      if (std::abs(m.row(i).dot(m.row(j))) > 1e-10)
        throw ContractViolation("factor map rows " + std::to_string(i) + " and " +
                                std::to_string(j) + " are not orthogonal");
  }
}

}  // namespace

SyntheticGenerator SyntheticGenerator::create(int dim, int image_size, std::uint64_t seed) {
  if (dim < 1) throw ContractViolation("generator dim must be >= 1");

  // Orthonormal rows via QR of a seeded Gaussian matrix. With dim < 5 only
  // dim rows fit; the rest stay zero so their attributes sit at midpoints.
  const int rows = dim < kAttributeCount ? dim : kAttributeCount;
  Rng rng(seed);
  Eigen::MatrixXd gauss(rows, dim);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < dim; ++j) gauss(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss.transpose());
  const Eigen::MatrixXd thin_q =
      qr.householderQ() * Eigen::MatrixXd::Identity(dim, rows);

  Eigen::MatrixXd factor_map = Eigen::MatrixXd::Zero(kAttributeCount, dim);
  factor_map.topRows(rows) = thin_q.transpose();

  SyntheticGenerator gen = with_factor_map(factor_map, image_size);
  gen.seed_ = seed;
  return gen;
}

SyntheticGenerator SyntheticGenerator::with_factor_map(const Eigen::MatrixXd& factor_map,
                                                       int image_size) {
  if (factor_map.rows() != kAttributeCount)
    throw ContractViolation("factor map must have " + std::to_string(kAttributeCount) + " rows");
  if (image_size < 2) throw ContractViolation("image size must be >= 2");
  check_rows_orthonormal_or_zero(factor_map);

  SyntheticGenerator gen;
  gen.dim_ = static_cast<int>(factor_map.cols());
  gen.image_size_ = image_size;
  gen.factor_map_ = factor_map;
  const int hw = image_size * image_size;
  gen.pixel_x_.resize(hw);
  gen.pixel_y_.resize(hw);
  for (int y = 0; y < image_size; ++y)
    for (int x = 0; x < image_size; ++x) {
      gen.pixel_x_[y * image_size + x] = (x + 0.5) / image_size;
      gen.pixel_y_[y * image_size + x] = (y + 0.5) / image_size;
    }
  return gen;
}

AttributeVector SyntheticGenerator::attributes(Eigen::Ref<const Eigen::VectorXd> z) const {
  const Eigen::VectorXd v = attribute_vector(z);
  return {v[0], v[1], v[2], v[3], v[4]};
}

Eigen::VectorXd SyntheticGenerator::attribute_vector(Eigen::Ref<const Eigen::VectorXd> z) const {
  if (z.size() != dim_)
    throw ContractViolation("latent has length " + std::to_string(z.size()) + ", expected " +
                            std::to_string(dim_));
  const Eigen::VectorXd raw = factor_map_ * z;
  Eigen::VectorXd out(kAttributeCount);
  for (int i = 0; i < kAttributeCount; ++i) out[i] = kMid[i] + kHalf[i] * std::tanh(raw[i]);
  return out;
}

Var SyntheticGenerator::build_image(Tape& tape, Var z) const {
  if (z.tape != &tape) throw ContractViolation("build_image: z lives on a different tape");
  if (z.tensor().size() != dim_)
    throw ContractViolation("build_image: latent has length " +
                            std::to_string(z.tensor().size()) + ", expected " +
                            std::to_string(dim_));

  // Attributes: mid + half * tanh(M z), all on the tape.
  Var m = tape.constant({kAttributeCount, dim_},
                        Eigen::Map<const Eigen::VectorXd>(
                            RowMat(factor_map_).data(),
                            static_cast<Eigen::Index>(kAttributeCount) * dim_));
  Var raw = reshape(matmul(m, reshape(z, {dim_, 1})), {kAttributeCount});
  Var half = tape.constant({kAttributeCount},
                           Eigen::Map<const Eigen::VectorXd>(kHalf, kAttributeCount));
  Var mid = tape.constant({kAttributeCount},
                          Eigen::Map<const Eigen::VectorXd>(kMid, kAttributeCount));
  Var att = add(mul(tanh(raw), half), mid);

  Var cx = at(att, 0);
  Var cy = at(att, 1);
  Var sigma = at(att, 2);
  Var theta = at(att, 3);
  Var intensity = at(att, 4);
  Var cos_t = cos(theta);
  Var sin_t = sin(theta);

  const int hw = image_size_ * image_size_;
  Var px = tape.constant({hw}, pixel_x_);
  Var py = tape.constant({hw}, pixel_y_);
  Var ux = sub(px, cx);
  Var uy = sub(py, cy);

  // Quadratic form of the rotated anisotropic Gaussian: principal axes
  // (sigma, sigma/2), so the minor-axis term carries a factor of 4.
  Var along = add(mul(ux, cos_t), mul(uy, sin_t));
  Var across = sub(mul(uy, cos_t), mul(ux, sin_t));
  Var quad = add(square(along), scale(square(across), 4.0));
  Var normalized = div(quad, square(sigma));
  Var image = mul(exp(scale(normalized, -0.5)), intensity);
  return reshape(image, {1, 1, image_size_, image_size_});
}

RowMat SyntheticGenerator::render(Eigen::Ref<const Eigen::VectorXd> z) const {
  Tape tape;
  Var zv = tape.leaf({dim_}, z, /*requires_grad=*/false);
  Var image = build_image(tape, zv);
  return Eigen::Map<const RowMat>(image.values().data(), image_size_, image_size_);
}

}  // namespace warpspace
