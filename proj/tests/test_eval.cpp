// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
// Evaluation-protocol tests. The coordinate fixture (identity factor map +
// coordinate baseline directions) has analytically known behavior: warping j
// moves attribute j monotonically and nothing else, which pins down the
// correlation matrix, assignment, dominance margin, and ranges.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "warpspace/eval.hpp"
#include "warpspace/generator.hpp"
#include "warpspace/reconstructor.hpp"
#include "warpspace/rng.hpp"
#include "warpspace/trainer.hpp"

using namespace warpspace;

namespace {

// Identity-padded factor map: attribute i responds to latent coordinate i.
SyntheticGenerator coord_fixture_generator(int dim, int image_size) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(kAttributeCount, dim);
  for (int i = 0; i < kAttributeCount && i < dim; ++i) m(i, i) = 1.0;
  return SyntheticGenerator::with_factor_map(m, image_size);
}

}  // namespace

TEST_CASE("pearson correlation on hand-constructed series") {
  Eigen::VectorXd x(5), up(5), down(5), flat(5);
  x << -2, -1, 0, 1, 2;
  up << 1, 2, 3, 4, 5;
  down << 10, 8, 6, 4, 2;
  flat << 3, 3, 3, 3, 3;
  CHECK(pearson(x, up) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pearson(x, down) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(pearson(x, flat) == 0.0);  // zero-variance convention
  CHECK(pearson(flat, up) == 0.0);
  Eigen::VectorXd noisy(5);
  noisy << 1.0, 2.2, 2.8, 4.1, 4.9;
  const double r = pearson(x, noisy);
  CHECK(r > 0.99);
  CHECK(r <= 1.0);
}

TEST_CASE("walk_and_trace centers the trace on the starting code") {
  const SyntheticGenerator gen = coord_fixture_generator(6, 16);
  const WarpingNetwork net = coord_baseline(3, 6);
  Rng rng(1);
  const Eigen::VectorXd z0 = rng.normal_vector(6) * 0.5;
  const int steps = 4;
  const TwoSidedWalk walk = walk_and_trace(net, gen, 1, z0, 0.3, steps);
  REQUIRE(walk.path.points.size() == 2 * steps + 1);
  REQUIRE(walk.trace.values.rows() == 2 * steps + 1);
  REQUIRE(walk.trace.values.cols() == kAttributeCount);
  CHECK(walk.trace.path_index == 1);
  CHECK(walk.trace.steps == steps);
  CHECK((walk.path.points[steps] - z0).norm() == 0.0);
  CHECK((walk.trace.values.row(steps).transpose() - gen.attribute_vector(z0)).norm() < 1e-14);
  // Consecutive points keep the step magnitude.
  for (std::size_t t = 0; t + 1 < walk.path.points.size(); ++t)
    CHECK((walk.path.points[t + 1] - walk.path.points[t]).norm() ==
          doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("coord-fixture traces are monotone in the aligned attribute") {
  const SyntheticGenerator gen = coord_fixture_generator(6, 16);
  const WarpingNetwork net = coord_baseline(4, 6);
  Rng rng(2);
  const TwoSidedWalk walk = walk_and_trace(net, gen, 2, rng.normal_vector(6) * 0.3, 0.25, 5);
  // Attribute 2 (sigma) must move strictly monotonically with the step
  // index; direction depends on the walk's sign convention, so check either.
  const Eigen::VectorXd sigma = walk.trace.values.col(2);
  bool increasing = true, decreasing = true;
  for (Eigen::Index t = 0; t + 1 < sigma.size(); ++t) {
    increasing = increasing && sigma[t + 1] > sigma[t];
    decreasing = decreasing && sigma[t + 1] < sigma[t];
  }
  CHECK((increasing || decreasing));
  // Off-axis attributes stay frozen along the path up to the linear-regime
  // drift (the direction deviates from the axis by O(gamma) = O(1e-8)).
  for (const int a : {0, 1, 3, 4}) {
    const Eigen::VectorXd column = walk.trace.values.col(a);
    CHECK((column.array() - column[0]).abs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("coord fixture produces a near-diagonal correlation report") {
  const int dim = 6;
  const SyntheticGenerator gen = coord_fixture_generator(dim, 16);
  const WarpingNetwork net = coord_baseline(kAttributeCount, dim);
  // Small steps keep the tanh attribute squash in its near-linear regime, so
  // step index and the aligned attribute correlate almost perfectly.
  const CorrelationReport report = correlation_report(net, gen, 30, 10, 0.02, 7);
  REQUIRE(report.raw.rows() == kAttributeCount);
  REQUIRE(report.raw.cols() == kAttributeCount);
  CHECK(report.skipped_walks == 0);
  for (int k = 0; k < kAttributeCount; ++k) {
    CHECK(std::abs(report.raw(k, k)) > 0.99);
    for (int a = 0; a < kAttributeCount; ++a)
      if (a != k) CHECK(std::abs(report.raw(k, a)) < 0.05);
  }
  // Assignment maps each attribute to its aligned warping.
  for (int a = 0; a < kAttributeCount; ++a) CHECK(report.assignment[a] == a);
  // Ranges: only the aligned attribute moves.
  for (int k = 0; k < kAttributeCount; ++k) {
    CHECK(report.mean_ranges(k, k) > 0.0);
    for (int a = 0; a < kAttributeCount; ++a)
      if (a != k) CHECK(report.mean_ranges(k, a) < 1e-7);
  }
  CHECK(dominance_margin(report) > 0.8);
}

TEST_CASE("l1-normalized rows sum to one in absolute value") {
  const SyntheticGenerator gen = SyntheticGenerator::create(8, 16, 3);
  const WarpingNetwork net = WarpingNetwork::init(4, 2, 8, 21, NetworkInit{});
  const CorrelationReport report = correlation_report(net, gen, 20, 8, 0.5, 11);
  for (int k = 0; k < 4; ++k) {
    const double sum = report.l1_normalized.row(k).cwiseAbs().sum();
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    for (int a = 0; a < kAttributeCount; ++a) CHECK(report.l1_normalized(k, a) >= 0.0);
  }
}

TEST_CASE("correlation report is deterministic given the seed") {
  const SyntheticGenerator gen = SyntheticGenerator::create(8, 16, 5);
  const WarpingNetwork net = WarpingNetwork::init(3, 2, 8, 13, NetworkInit{});
  const CorrelationReport a = correlation_report(net, gen, 15, 6, 0.4, 99);
  const CorrelationReport b = correlation_report(net, gen, 15, 6, 0.4, 99);
  CHECK(a.raw == b.raw);
  CHECK(a.mean_ranges == b.mean_ranges);
  const CorrelationReport c = correlation_report(net, gen, 15, 6, 0.4, 100);
  CHECK(a.raw != c.raw);
}

TEST_CASE("phi report is sorted descending and bounded below by 1") {
  const SyntheticGenerator gen = SyntheticGenerator::create(8, 16, 5);
  const WarpingNetwork net = WarpingNetwork::init(4, 4, 8, 17, NetworkInit{});
  const PhiReport report = phi_report(net, gen, 20, 8, 0.5, 23);
  REQUIRE(report.warping.size() == 4);
  for (std::size_t i = 0; i < report.mean_phi.size(); ++i) {
    CHECK(report.mean_phi[i] >= 1.0);
    if (i > 0) CHECK(report.mean_phi[i - 1] >= report.mean_phi[i]);
  }
}

TEST_CASE("linear-mode networks walk perfectly straight paths") {
  const SyntheticGenerator gen = SyntheticGenerator::create(8, 16, 5);
  const WarpingNetwork net = WarpingNetwork::linear_directions_mode(4, 8, 29);
  const PhiReport report = phi_report(net, gen, 25, 10, 1.0, 31);
  CHECK(report.skipped_paths == 0);
  for (const double phi : report.mean_phi) CHECK(phi == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("random and coord baselines have unit, fixed directions") {
  const WarpingNetwork random_net = random_baseline(4, 8, 41);
  Rng rng(42);
  for (int k = 0; k < 4; ++k) {
    const Eigen::VectorXd d1 = random_net.direction(k, rng.normal_vector(8));
    const Eigen::VectorXd d2 = random_net.direction(k, rng.normal_vector(8) * 3.0);
    CHECK(d1.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d1.dot(d2) > 1.0 - 1e-6);  // constant direction
  }

  const WarpingNetwork coord_net = coord_baseline(3, 6);
  std::vector<Eigen::VectorXd> axes;
  for (int k = 0; k < 3; ++k)
    axes.push_back(coord_net.direction(k, rng.normal_vector(6)));
  for (int i = 0; i < 3; ++i) {
    // Each direction is the i-th standard basis vector (up to sign and the
    // O(gamma) = O(1e-8) linear-regime deviation).
    CHECK(std::abs(axes[i][i]) == doctest::Approx(1.0).epsilon(1e-9));
    for (int j = 0; j < i; ++j)
      CHECK(std::abs(axes[i].dot(axes[j])) < 1e-6);
  }
  CHECK_THROWS_AS((void)coord_baseline(7, 6), ConfigError);
}

TEST_CASE("untrained models classify at chance level") {
  const TrainConfig cfg;  // K = 5
  const WarpingNetwork net =
      WarpingNetwork::init(cfg.num_warpings, cfg.supports_per_warping, cfg.dim, 1, NetworkInit{});
  const Reconstructor recon = Reconstructor::init(cfg.num_warpings, 2, 2);
  const SyntheticGenerator gen = SyntheticGenerator::create(cfg.dim, cfg.image_size, 0);
  const double accuracy =
      reconstructor_accuracy(net, recon, gen, 10000, cfg.eps_min, cfg.eps_max, 3);
  // Chance is 20%; allow 3-sigma binomial slack at n = 10^4 (1.2 points).
  CHECK(accuracy > 20.0 - 1.2);
  CHECK(accuracy < 20.0 + 1.2);
}

TEST_CASE("accuracy evaluation is deterministic given the seed") {
  const WarpingNetwork net = WarpingNetwork::init(3, 2, 8, 4, NetworkInit{});
  const Reconstructor recon = Reconstructor::init(3, 2, 5);
  const SyntheticGenerator gen = SyntheticGenerator::create(8, 16, 6);
  const double a = reconstructor_accuracy(net, recon, gen, 400, 0.25, 2.0, 8);
  const double b = reconstructor_accuracy(net, recon, gen, 400, 0.25, 2.0, 8);
  CHECK(a == b);
}

TEST_CASE("zero-step walks yield a single-row trace; reports require steps") {
  const SyntheticGenerator gen = coord_fixture_generator(6, 16);
  const WarpingNetwork net = coord_baseline(2, 6);
  Rng rng(7);
  const TwoSidedWalk walk = walk_and_trace(net, gen, 0, rng.normal_vector(6), 0.5, 0);
  CHECK(walk.path.points.size() == 1);
  CHECK(walk.trace.values.rows() == 1);
  // A single point carries no correlation or arc-length signal.
  CHECK_THROWS_AS((void)correlation_report(net, gen, 5, 0, 0.5, 9), ContractViolation);
  CHECK_THROWS_AS((void)phi_report(net, gen, 5, 0, 0.5, 9), ContractViolation);
}
