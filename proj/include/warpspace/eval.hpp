// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
// Quantitative evaluation protocol: held-out reconstructor accuracy,
// step-index/attribute Pearson correlations with L1 row normalization,
// attribute-to-warping assignment by maximum absolute correlation, attribute
// ranges along selected paths, the non-linearity coefficient phi, and the
// fixed-direction Random/Coord baselines.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "warpspace/generator.hpp"
#include "warpspace/network.hpp"
#include "warpspace/reconstructor.hpp"
#include "warpspace/warp.hpp"

namespace warpspace {

/// Pearson correlation; returns 0 when either series has zero variance, so
/// constant attributes contribute nothing instead of NaN. Result clamped to
/// [-1, 1].
double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Attribute values along one two-sided walk: row (T + t) holds the
/// attributes at step t, for t in -T..T; row T is the starting code.
struct AttributeTrace {
  int path_index = 0;  // warping k
  int steps = 0;       // T, steps per direction
  RowMat values;       // (2T+1) x kAttributeCount
};

struct TwoSidedWalk {
  LatentPath path;  // 2T+1 points, negative side reversed + positive side
  AttributeTrace trace;
};

/// Walks T steps in both directions from z0 along warping k and evaluates
/// ground-truth attributes at every point. Throws TraversalError (with step
/// index and partial path) on a degenerate gradient.
TwoSidedWalk walk_and_trace(const WarpingNetwork& net, const SyntheticGenerator& gen, int k,
                            Eigen::Ref<const Eigen::VectorXd> z0, double eps, int steps);

struct CorrelationReport {
  Eigen::MatrixXd raw;            // K x A mean signed Pearson correlations
  Eigen::MatrixXd l1_normalized;  // K x A, abs values, each row sums to 1
  Eigen::MatrixXd mean_ranges;    // K x A mean (max - min) along the walk
  std::vector<int> assignment;    // per attribute: argmax_k |raw(k, a)|
  int skipped_walks = 0;          // degenerate walks excluded from the means
};

/// Correlates step index with each attribute along every warping, averaged
/// over n_codes shared random starting codes (per-code correlation, then
/// mean). Deterministic given seed.
CorrelationReport correlation_report(const WarpingNetwork& net, const SyntheticGenerator& gen,
                                     int n_codes, int steps, double eps, std::uint64_t seed);

/// Mean assigned-cell l1_normalized value minus the mean over all cells in a
/// column not assigned to that attribute.
double dominance_margin(const CorrelationReport& report);

struct PhiReport {
  std::vector<int> warping;      // sorted by mean_phi, descending
  std::vector<double> mean_phi;  // same order; every value >= 1
  int skipped_paths = 0;
};

/// Mean non-linearity coefficient (arc length / endpoint distance) of
/// two-sided walks per warping, over n_codes shared codes, sorted descending.
PhiReport phi_report(const WarpingNetwork& net, const SyntheticGenerator& gen, int n_codes,
                     int steps, double eps, std::uint64_t seed);

/// Percentage of fresh samples (drawn as in training) whose classification
/// argmax recovers k. Samples whose z stays degenerate after 8 redraws are
/// excluded from the denominator.
double reconstructor_accuracy(const WarpingNetwork& net, const Reconstructor& recon,
                              const SyntheticGenerator& gen, int n_samples, double eps_min,
                              double eps_max, std::uint64_t seed);

/// Fixed random unit directions in linear mode; only the reconstructor is
/// meant to train against this network.
WarpingNetwork random_baseline(int num_warpings, int dim, std::uint64_t seed);

/// Directions fixed to the first K standard basis vectors; requires K <= d.
WarpingNetwork coord_baseline(int num_warpings, int dim);

}  // namespace warpspace
