// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
#include "warpspace/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "warpspace/errors.hpp"
#include "warpspace/parallel.hpp"
#include "warpspace/rng.hpp"
#include "warpspace/trainer.hpp"

namespace warpspace {

double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size())
    throw ContractViolation("pearson: series lengths differ");
  if (x.size() < 2) return 0.0;
  const double mx = x.mean();
  const double my = y.mean();
  const Eigen::ArrayXd dx = x.array() - mx;
  const Eigen::ArrayXd dy = y.array() - my;
  const double vx = (dx * dx).sum();
  const double vy = (dy * dy).sum();
  // A series is treated as constant below a tiny standard-deviation floor.
  // Correlation is scale-invariant, so without the floor an attribute that is
  // frozen up to ~1e-8 of numerical drift (linear-regime walks move strictly
  // along one axis only in exact arithmetic) would correlate as strongly as a
  // genuinely moving one; real attribute movement at any usable step size is
  // orders of magnitude above the floor.
  constexpr double kStdDevFloor = 1e-7;
  const double n = static_cast<double>(x.size());
  if (vx <= n * kStdDevFloor * kStdDevFloor || vy <= n * kStdDevFloor * kStdDevFloor) return 0.0;
  const double r = (dx * dy).sum() / std::sqrt(vx * vy);
  return std::clamp(r, -1.0, 1.0);
}

TwoSidedWalk walk_and_trace(const WarpingNetwork& net, const SyntheticGenerator& gen, int k,
                            Eigen::Ref<const Eigen::VectorXd> z0, double eps, int steps) {
  if (steps < 0) throw ContractViolation("walk_and_trace: steps must be >= 0");
  const WarpingFunction warp = net.warping(k);

  TwoSidedWalk walk;
  walk.path.step_magnitude = eps;
  walk.path.direction_sign = 1;
  if (steps == 0) {
    walk.path.points.emplace_back(z0);
  } else {
    const LatentPath negative = traverse(warp, z0, eps, steps, -1);
    const LatentPath positive = traverse(warp, z0, eps, steps, +1);
    walk.path.points.reserve(2 * steps + 1);
    for (int t = steps; t >= 1; --t) walk.path.points.push_back(negative.points[t]);
    for (int t = 0; t <= steps; ++t) walk.path.points.push_back(positive.points[t]);
  }

  walk.trace.path_index = k;
  walk.trace.steps = steps;
  walk.trace.values.resize(2 * steps + 1, kAttributeCount);
  for (int row = 0; row < 2 * steps + 1; ++row)
    walk.trace.values.row(row) = gen.attribute_vector(walk.path.points[row]).transpose();
  return walk;
}

namespace {

Eigen::VectorXd step_index_series(int steps) {
  Eigen::VectorXd idx(2 * steps + 1);
  for (int t = -steps; t <= steps; ++t) idx[t + steps] = static_cast<double>(t);
  return idx;
}

std::vector<Eigen::VectorXd> draw_codes(int n_codes, int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Eigen::VectorXd> codes;
  codes.reserve(n_codes);
  for (int c = 0; c < n_codes; ++c) codes.push_back(rng.normal_vector(dim));
  return codes;
}

}  // namespace

CorrelationReport correlation_report(const WarpingNetwork& net, const SyntheticGenerator& gen,
                                     int n_codes, int steps, double eps, std::uint64_t seed) {
  if (n_codes < 1) throw ContractViolation("correlation_report: n_codes must be >= 1");
  if (steps < 1) throw ContractViolation("correlation_report: steps must be >= 1");
  const int num_warpings = net.num_warpings();
  const std::vector<Eigen::VectorXd> codes = draw_codes(n_codes, net.dim(), seed);
  const Eigen::VectorXd idx = step_index_series(steps);

  // Per-code results filled in parallel, reduced in code order afterward.
  struct CodeResult {
    Eigen::MatrixXd corr;
    Eigen::MatrixXd range;
    std::vector<bool> valid;
  };
  std::vector<CodeResult> results(n_codes);
  parallel_for(n_codes, [&](int c) {
    CodeResult& r = results[c];
    r.corr.setZero(num_warpings, kAttributeCount);
    r.range.setZero(num_warpings, kAttributeCount);
    r.valid.assign(num_warpings, false);
    for (int k = 0; k < num_warpings; ++k) {
      TwoSidedWalk walk;
      try {
        walk = walk_and_trace(net, gen, k, codes[c], eps, steps);
      } catch (const TraversalError&) {
        continue;
      }
      r.valid[k] = true;
      for (int a = 0; a < kAttributeCount; ++a) {
        const Eigen::VectorXd series = walk.trace.values.col(a);
        r.corr(k, a) = pearson(idx, series);
        r.range(k, a) = series.maxCoeff() - series.minCoeff();
      }
    }
  });

  CorrelationReport report;
  report.raw.setZero(num_warpings, kAttributeCount);
  report.mean_ranges.setZero(num_warpings, kAttributeCount);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(num_warpings);
  for (int c = 0; c < n_codes; ++c)
    for (int k = 0; k < num_warpings; ++k) {
      if (!results[c].valid[k]) {
        ++report.skipped_walks;
        continue;
      }
      report.raw.row(k) += results[c].corr.row(k);
      report.mean_ranges.row(k) += results[c].range.row(k);
      counts[k] += 1.0;
    }
  for (int k = 0; k < num_warpings; ++k) {
    const double n = counts[k] > 0.0 ? counts[k] : 1.0;
    report.raw.row(k) /= n;
    report.mean_ranges.row(k) /= n;
  }

  report.l1_normalized = report.raw.cwiseAbs();
  for (int k = 0; k < num_warpings; ++k) {
    const double l1 = report.l1_normalized.row(k).sum();
    if (l1 > 0.0) report.l1_normalized.row(k) /= l1;
  }

  report.assignment.resize(kAttributeCount);
  for (int a = 0; a < kAttributeCount; ++a) {
    int best = 0;
    for (int k = 1; k < num_warpings; ++k)
      if (std::abs(report.raw(k, a)) > std::abs(report.raw(best, a))) best = k;
    report.assignment[a] = best;
  }
  return report;
}

double dominance_margin(const CorrelationReport& report) {
  const int num_warpings = static_cast<int>(report.l1_normalized.rows());
  double assigned = 0.0;
  double off = 0.0;
  int off_count = 0;
  for (int a = 0; a < kAttributeCount; ++a) {
    assigned += report.l1_normalized(report.assignment[a], a);
    for (int k = 0; k < num_warpings; ++k)
      if (k != report.assignment[a]) {
        off += report.l1_normalized(k, a);
        ++off_count;
      }
  }
  assigned /= kAttributeCount;
  if (off_count > 0) off /= off_count;
  return assigned - off;
}

PhiReport phi_report(const WarpingNetwork& net, const SyntheticGenerator& gen, int n_codes,
                     int steps, double eps, std::uint64_t seed) {
  if (n_codes < 1) throw ContractViolation("phi_report: n_codes must be >= 1");
  if (steps < 1) throw ContractViolation("phi_report: steps must be >= 1");
  const int num_warpings = net.num_warpings();
  const std::vector<Eigen::VectorXd> codes = draw_codes(n_codes, net.dim(), seed);

  struct CodeResult {
    std::vector<double> phi;
    std::vector<bool> valid;
  };
  std::vector<CodeResult> results(n_codes);
  parallel_for(n_codes, [&](int c) {
    CodeResult& r = results[c];
    r.phi.assign(num_warpings, 0.0);
    r.valid.assign(num_warpings, false);
    for (int k = 0; k < num_warpings; ++k) {
      try {
        const TwoSidedWalk walk = walk_and_trace(net, gen, k, codes[c], eps, steps);
        r.phi[k] = nonlinearity_coefficient(walk.path);
        r.valid[k] = true;
      } catch (const TraversalError&) {
      } catch (const UndefinedRatio&) {
      }
    }
  });

  PhiReport report;
  std::vector<double> sums(num_warpings, 0.0);
  std::vector<int> counts(num_warpings, 0);
  for (int c = 0; c < n_codes; ++c)
    for (int k = 0; k < num_warpings; ++k) {
      if (!results[c].valid[k]) {
        ++report.skipped_paths;
        continue;
      }
      sums[k] += results[c].phi[k];
      ++counts[k];
    }

  std::vector<int> order(num_warpings);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> means(num_warpings, 0.0);
  for (int k = 0; k < num_warpings; ++k)
    means[k] = counts[k] > 0 ? sums[k] / counts[k] : 0.0;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return means[a] > means[b]; });
  for (int k : order) {
    report.warping.push_back(k);
    report.mean_phi.push_back(means[k]);
  }
  return report;
}

double reconstructor_accuracy(const WarpingNetwork& net, const Reconstructor& recon,
                              const SyntheticGenerator& gen, int n_samples, double eps_min,
                              double eps_max, std::uint64_t seed) {
  if (n_samples < 1) throw ContractViolation("reconstructor_accuracy: n_samples must be >= 1");
  TrainConfig sampling;
  sampling.dim = net.dim();
  sampling.num_warpings = net.num_warpings();
  sampling.eps_min = eps_min;
  sampling.eps_max = eps_max;

  Rng rng(seed);
  Tape tape;
  const int hw = gen.image_size() * gen.image_size();
  int correct = 0;
  int evaluated = 0;
  for (int i = 0; i < n_samples; ++i) {
    TrainSample s = sample(rng, sampling);
    const WarpingFunction warp = net.warping(s.k);
    int attempts = 0;
    bool usable = true;
    while (grad_warp(warp, s.z).norm() <= kDegenerateGradientThreshold) {
      if (++attempts > 8) {
        usable = false;
        break;
      }
      s.z = rng.normal_vector(net.dim());
    }
    if (!usable) continue;

    const Eigen::VectorXd z_shifted = s.z + shift(warp, s.z, s.eps_signed);
    const RowMat image_a = gen.render(s.z);
    const RowMat image_b = gen.render(z_shifted);
    Eigen::VectorXd pair(2 * hw);
    pair.head(hw) = Eigen::Map<const Eigen::VectorXd>(image_a.data(), hw);
    pair.tail(hw) = Eigen::Map<const Eigen::VectorXd>(image_b.data(), hw);

    tape.reset();
    const Reconstructor::Bound bound = recon.bind(tape, /*requires_grad=*/false);
    Var input = tape.leaf({1, 2, gen.image_size(), gen.image_size()}, pair, false);
    const Reconstructor::Output out = recon.forward(bound, input);
    const Eigen::VectorXd& logits = out.logits.values();
    int best = 0;
    for (Eigen::Index k = 1; k < logits.size(); ++k)
      if (logits[k] > logits[best]) best = static_cast<int>(k);
    ++evaluated;
    if (best == s.k) ++correct;
  }
  return evaluated > 0 ? 100.0 * correct / evaluated : 0.0;
}

WarpingNetwork random_baseline(int num_warpings, int dim, std::uint64_t seed) {
  WarpingNetwork net = WarpingNetwork::linear_directions_mode(num_warpings, dim, seed);
  Rng rng(split_seed(seed, 17));
  for (int k = 0; k < num_warpings; ++k) {
    const Eigen::VectorXd direction = rng.normal_vector(dim).normalized();
    net.centers(k).row(0) = 0.5 * direction.transpose();
    net.centers(k).row(1) = -0.5 * direction.transpose();
    net.free_weights(k)[0] = 1.0;
  }
  return net;
}

WarpingNetwork coord_baseline(int num_warpings, int dim) {
  if (num_warpings > dim)
    throw ConfigError({"coord baseline requires num_warpings <= dim (one basis vector each)"});
  WarpingNetwork net = WarpingNetwork::linear_directions_mode(num_warpings, dim, /*seed=*/0);
  for (int k = 0; k < num_warpings; ++k) {
    net.centers(k).setZero();
    net.centers(k)(0, k) = 0.5;
    net.centers(k)(1, k) = -0.5;
    net.free_weights(k)[0] = 1.0;
  }
  return net;
}

}  // namespace warpspace
