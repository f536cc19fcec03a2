// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic-generator tests: analytic attribute behavior, image geometry,
// differentiability against a finite-difference oracle, and determinism.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "warpspace/autodiff.hpp"
#include "warpspace/generator.hpp"
#include "warpspace/rng.hpp"

using namespace warpspace;

namespace {

Eigen::MatrixXd identity_padded_map(int dim) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(kAttributeCount, dim);
  for (int i = 0; i < kAttributeCount && i < dim; ++i) m(i, i) = 1.0;
  return m;
}

}  // namespace

TEST_CASE("factor map rows are orthonormal") {
  for (const int dim : {5, 8, 16}) {
    const SyntheticGenerator gen = SyntheticGenerator::create(dim, 16, 3);
    const Eigen::MatrixXd gram = gen.factor_map() * gen.factor_map().transpose();
    CHECK((gram - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("low-dimensional latents orthonormalize the leading rows and zero the rest") {
  const SyntheticGenerator gen = SyntheticGenerator::create(3, 16, 3);
  const Eigen::MatrixXd m = gen.factor_map();
  CHECK((m.topRows(3) * m.topRows(3).transpose() - Eigen::MatrixXd::Identity(3, 3))
            .cwiseAbs()
            .maxCoeff() < 1e-10);
  CHECK(m.row(3).norm() == 0.0);
  CHECK(m.row(4).norm() == 0.0);
  // Frozen attributes stay at their midpoints for every z.
  Rng rng(4);
  const AttributeVector attrs = gen.attributes(rng.normal_vector(3) * 3.0);
  CHECK(attrs.theta == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(attrs.intensity == doctest::Approx(0.65).epsilon(1e-15));
}

TEST_CASE("zero latent code maps to midpoint attributes") {
  const SyntheticGenerator gen = SyntheticGenerator::create(8, 16, 7);
  const AttributeVector attrs = gen.attributes(Eigen::VectorXd::Zero(8));
  CHECK(attrs.cx == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(attrs.cy == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(attrs.sigma == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(attrs.theta == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(attrs.intensity == doctest::Approx(0.65).epsilon(1e-15));
}

TEST_CASE("scaling along the first factor row saturates cx only") {
  const SyntheticGenerator gen = SyntheticGenerator::create(10, 16, 11);
  const Eigen::VectorXd z = 50.0 * gen.factor_map().row(0).transpose();
  const AttributeVector attrs = gen.attributes(z);
  CHECK(attrs.cx == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(attrs.cy == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(attrs.sigma == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(attrs.intensity == doctest::Approx(0.65).epsilon(1e-12));
}

TEST_CASE("attributes ignore latent components orthogonal to the factor rows") {
  const SyntheticGenerator gen = SyntheticGenerator::create(8, 16, 13);
  Rng rng(14);
  const Eigen::VectorXd z = rng.normal_vector(8);
  // Project a random vector off the factor rowspace.
  Eigen::VectorXd off = rng.normal_vector(8);
  off -= gen.factor_map().transpose() * (gen.factor_map() * off);
  REQUIRE((gen.factor_map() * off).norm() < 1e-10);
  const Eigen::VectorXd a = gen.attribute_vector(z);
  const Eigen::VectorXd b = gen.attribute_vector(z + 5.0 * off);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("attributes always stay inside their declared ranges") {
  const SyntheticGenerator gen = SyntheticGenerator::create(6, 16, 17);
  Rng rng(18);
  for (int rep = 0; rep < 200; ++rep) {
    const AttributeVector a = gen.attributes(rng.normal_vector(6) * 4.0);
    CHECK(a.cx >= 0.2);
    CHECK(a.cx <= 0.8);
    CHECK(a.cy >= 0.2);
    CHECK(a.cy <= 0.8);
    CHECK(a.sigma >= 0.05);
    CHECK(a.sigma <= 0.2);
    CHECK(a.theta > -M_PI / 2);
    CHECK(a.theta < M_PI / 2);
    CHECK(a.intensity >= 0.3);
    CHECK(a.intensity <= 1.0);
  }
}

TEST_CASE("zero latent renders a centered blob peaking near the intensity midpoint") {
  const int size = 16;
  const SyntheticGenerator gen = SyntheticGenerator::create(8, size, 19);
  const RowMat image = gen.render(Eigen::VectorXd::Zero(8));
  REQUIRE(image.rows() == size);
  REQUIRE(image.cols() == size);
  Eigen::Index peak_row = 0, peak_col = 0;
  image.maxCoeff(&peak_row, &peak_col);
  // cx = cy = 0.5 falls between pixels 7 and 8 at 16x16.
  CHECK(peak_row >= 7);
  CHECK(peak_row <= 8);
  CHECK(peak_col >= 7);
  CHECK(peak_col <= 8);
  // Value at the peak: intensity 0.65 attenuated by the half-pixel offset.
  // Both offsets are 1/32; principal widths are sigma = 0.125 and
  // sigma/2 = 0.0625, so the exponent is
  //   (1/32)^2 / (2 * 0.125^2) + (1/32)^2 / (2 * 0.0625^2) = 0.15625.
  const double expected = 0.65 * std::exp(-0.15625);
  CHECK(image(peak_row, peak_col) == doctest::Approx(expected).epsilon(1e-9));
  // The four pixels around the exact center share that value by symmetry.
  CHECK(image(7, 7) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(image(7, 8) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(image(8, 7) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(image(8, 8) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("rendered values lie in [0, 1]") {
  const SyntheticGenerator gen = SyntheticGenerator::create(8, 16, 23);
  Rng rng(24);
  for (int rep = 0; rep < 20; ++rep) {
    const RowMat image = gen.render(rng.normal_vector(8) * 2.0);
    CHECK(image.minCoeff() >= 0.0);
    CHECK(image.maxCoeff() <= 1.0);
  }
}

TEST_CASE("moving cx moves the blob peak column") {
  const SyntheticGenerator gen = SyntheticGenerator::create(8, 16, 29);
  const Eigen::VectorXd toward_right = 3.0 * gen.factor_map().row(0).transpose();
  const RowMat image = gen.render(toward_right);
  Eigen::Index r = 0, c = 0;
  image.maxCoeff(&r, &c);
  CHECK(c > 9);  // cx saturates toward 0.8 of width
}

TEST_CASE("render is bit-deterministic and equals the tape forward pass") {
  const SyntheticGenerator gen = SyntheticGenerator::create(8, 16, 31);
  Rng rng(32);
  const Eigen::VectorXd z = rng.normal_vector(8);
  const RowMat a = gen.render(z);
  const RowMat b = gen.render(z);
  CHECK(a == b);

  Tape tape;
  Var zv = tape.leaf({8}, z, false);
  Var image = gen.build_image(tape, zv);
  REQUIRE(image.shape() == Shape{1, 1, 16, 16});
  const Eigen::Map<const RowMat> mapped(image.values().data(), 16, 16);
  CHECK(mapped == a);
}

TEST_CASE("image gradient with respect to z matches finite differences") {
  const SyntheticGenerator gen = SyntheticGenerator::create(6, 12, 37);
  Rng rng(38);
  const Eigen::VectorXd z = rng.normal_vector(6) * 0.5;
  Eigen::VectorXd probe = rng.normal_vector(12 * 12);

  // Scalar projection g(z) = <probe, image(z)> keeps the oracle cheap.
  const auto project = [&](const Eigen::VectorXd& at) {
    Tape local;
    Var img = gen.build_image(local, local.leaf({6}, at, false));
    return probe.dot(img.values());
  };

  Tape tape;
  Var zv = tape.leaf({6}, z, true);
  Var img = gen.build_image(tape, zv);
  Var loss = reduce_sum(mul(img, tape.constant({1, 1, 12, 12}, probe)));
  backward(loss);
  const Eigen::VectorXd analytic = zv.grad();

  const double h = 1e-6;
  for (int i = 0; i < 6; ++i) {
    Eigen::VectorXd zp = z, zm = z;
    zp[i] += h;
    zm[i] -= h;
    const double numeric = (project(zp) - project(zm)) / (2.0 * h);
    CHECK(std::abs(analytic[i] - numeric) / std::max(std::abs(analytic[i]), 1e-3) < 1e-5);
  }
}

TEST_CASE("with_factor_map validates row geometry") {
  CHECK_NOTHROW((void)SyntheticGenerator::with_factor_map(identity_padded_map(8), 16));
  Eigen::MatrixXd bad = identity_padded_map(8);
  bad(0, 1) = 0.5;  // row 0 no longer unit, rows 0/1 not orthogonal
  CHECK_THROWS_AS((void)SyntheticGenerator::with_factor_map(bad, 16), ContractViolation);
  CHECK_THROWS_AS((void)SyntheticGenerator::create(0, 16, 1), ContractViolation);
  CHECK_THROWS_AS((void)SyntheticGenerator::create(8, 0, 1), ContractViolation);
}

TEST_CASE("identity factor map turns coordinates into attributes") {
  const SyntheticGenerator gen = SyntheticGenerator::with_factor_map(identity_padded_map(6), 16);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(6);
  z[4] = 10.0;  // saturate intensity
  const AttributeVector attrs = gen.attributes(z);
  CHECK(attrs.intensity == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(attrs.cx == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("dimension mismatches are contract violations") {
  const SyntheticGenerator gen = SyntheticGenerator::create(4, 8, 2);
  CHECK_THROWS_AS((void)gen.attributes(Eigen::VectorXd::Zero(5)), ContractViolation);
  CHECK_THROWS_AS((void)gen.render(Eigen::VectorXd::Zero(3)), ContractViolation);
}
