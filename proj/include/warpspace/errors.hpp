// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace warpspace {

/// A call-site contract was violated (dimension/shape mismatch, bad index).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Non-finite values where finite ones are required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gradient norm at or below the degenerate threshold; a normalized shift is
/// undefined here. Carries the offending point and the measured norm.
class DegenerateGradient : public std::runtime_error {
 public:
  DegenerateGradient(Eigen::VectorXd z, double gradient_norm)
      : std::runtime_error("degenerate gradient: |grad| = " + std::to_string(gradient_norm)),
        point_(std::move(z)),
        gradient_norm_(gradient_norm) {}

  const Eigen::VectorXd& point() const { return point_; }
  double gradient_norm() const { return gradient_norm_; }

 private:
  Eigen::VectorXd point_;
  double gradient_norm_;
};

/// Invalid configuration; collects every violation so the caller can report
/// them all at once.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : std::runtime_error(join(issues)), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "invalid configuration:";
    for (const auto& s : issues) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> issues_;
};

/// Unreadable, malformed, or corrupted checkpoint.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training aborted: too many degenerate gradients in one batch, which
/// signals a collapsed warping.
class TrainingCollapse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace warpspace
