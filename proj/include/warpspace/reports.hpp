// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
// CSV and JSON renderings of training logs and evaluation reports. All
// numbers use a fixed shortest round-trip format so reruns produce
// byte-identical files.
#pragma once

#include <string>
#include <vector>

#include "warpspace/eval.hpp"
#include "warpspace/trainer.hpp"

namespace warpspace {

/// `iteration,loss,cls_accuracy,reg_mae` rows.
std::string training_log_csv(const std::vector<TrainingLogEntry>& log);

/// `warping,attr_cx,...` header; one row per warping.
std::string attribute_matrix_csv(const Eigen::MatrixXd& matrix);

/// `attribute,warping` rows mapping each attribute to its dominant warping.
std::string assignment_csv(const std::vector<int>& assignment);

/// `warping,mean_phi` rows, already sorted by the report.
std::string phi_csv(const PhiReport& report);

/// Single `accuracy_percent` value.
std::string accuracy_csv(double accuracy_percent);

/// JSON document bundling every report plus the config fingerprint (hex).
std::string bundle_report_json(const std::string& config_fingerprint_hex,
                               double accuracy_percent, const CorrelationReport& correlation,
                               double margin, const PhiReport& phi);

/// 16-digit lowercase hex rendering of a fingerprint.
std::string fingerprint_hex(std::uint64_t fingerprint);

/// Writes text to a file; throws std::runtime_error on I/O failure.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace warpspace
