// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration: a flat `key = value` text format with `#`
// comments. Parsing aggregates every problem (unknown keys, bad values,
// missing required keys) into one ConfigError instead of failing one field
// at a time.
#pragma once

#include <cstdint>
#include <string>

#include "warpspace/trainer.hpp"

namespace warpspace {

struct ExperimentConfig {
  TrainConfig train;

  // Evaluation protocol parameters.
  int eval_codes = 100;
  int eval_steps = 10;
  double eval_eps = 0.0;  // 0 means "derive as eps_max / 2"
  int eval_samples = 10000;

  std::string out_dir = "out";

  /// Parses config text; throws ConfigError listing all problems.
  static ExperimentConfig parse(const std::string& text);
  /// Reads and parses a file; unreadable files are a ConfigError.
  static ExperimentConfig from_file(const std::string& path);

  /// Semantic validation (ranges, orderings); aggregates into ConfigError.
  void validate() const;

  /// eval_eps with the derived default applied.
  double resolved_eval_eps() const { return eval_eps > 0.0 ? eval_eps : train.eps_max / 2.0; }

  /// Canonical `key = value` rendering of every field except out_dir, in
  /// fixed order with fixed number formatting; input for the fingerprint.
  std::string canonical_text() const;

  /// FNV-1a 64-bit hash of canonical_text().
  std::uint64_t fingerprint() const;
};

/// FNV-1a 64-bit.
std::uint64_t fnv1a64(const std::string& text);

}  // namespace warpspace
