// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
#include "warpspace/reports.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "warpspace/generator.hpp"

namespace warpspace {
namespace {

// Shortest decimal form that parses back to the identical double;
// locale-independent, so report bytes are stable across environments.
std::string num(double v) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

std::string attribute_header() {
  std::string header = "warping";
  for (const auto* name : kAttributeNames) header += std::string(",") + name;
  return header + "\n";
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string training_log_csv(const std::vector<TrainingLogEntry>& log) {
  std::ostringstream out;
  out << "iteration,loss,cls_accuracy,reg_mae\n";
  for (const auto& e : log)
    out << e.iteration << "," << num(e.loss) << "," << num(e.cls_accuracy) << ","
        << num(e.reg_mae) << "\n";
  return out.str();
}

std::string attribute_matrix_csv(const Eigen::MatrixXd& matrix) {
  std::ostringstream out;
  out << attribute_header();
  for (Eigen::Index k = 0; k < matrix.rows(); ++k) {
    out << k;
    for (Eigen::Index a = 0; a < matrix.cols(); ++a) out << "," << num(matrix(k, a));
    out << "\n";
  }
  return out.str();
}

std::string assignment_csv(const std::vector<int>& assignment) {
  std::ostringstream out;
  out << "attribute,warping\n";
  for (std::size_t a = 0; a < assignment.size(); ++a)
    out << kAttributeNames[a] << "," << assignment[a] << "\n";
  return out.str();
}

std::string phi_csv(const PhiReport& report) {
  std::ostringstream out;
  out << "warping,mean_phi\n";
  for (std::size_t i = 0; i < report.warping.size(); ++i)
    out << report.warping[i] << "," << num(report.mean_phi[i]) << "\n";
  return out.str();
}

std::string accuracy_csv(double accuracy_percent) {
  return "accuracy_percent\n" + num(accuracy_percent) + "\n";
}

std::string bundle_report_json(const std::string& config_fingerprint_hex,
                               double accuracy_percent, const CorrelationReport& correlation,
                               double margin, const PhiReport& phi) {
  nlohmann::json doc;
  doc["config_fingerprint"] = config_fingerprint_hex;
  doc["accuracy_percent"] = accuracy_percent;
  doc["dominance_margin"] = margin;
  doc["correlation"]["raw"] = matrix_json(correlation.raw);
  doc["correlation"]["l1_normalized"] = matrix_json(correlation.l1_normalized);
  doc["correlation"]["mean_ranges"] = matrix_json(correlation.mean_ranges);
  nlohmann::json assignment;
  for (std::size_t a = 0; a < correlation.assignment.size(); ++a)
    assignment[kAttributeNames[a]] = correlation.assignment[a];
  doc["correlation"]["assignment"] = std::move(assignment);
  doc["correlation"]["skipped_walks"] = correlation.skipped_walks;
  nlohmann::json phis = nlohmann::json::array();
  for (std::size_t i = 0; i < phi.warping.size(); ++i)
    phis.push_back({{"warping", phi.warping[i]}, {"mean_phi", phi.mean_phi[i]}});
  doc["phi"] = std::move(phis);
  doc["phi_skipped_paths"] = phi.skipped_paths;
  return doc.dump(2) + "\n";
}

std::string fingerprint_hex(std::uint64_t fingerprint) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fingerprint));
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("failed to write '" + path + "'");
}

}  // namespace warpspace
