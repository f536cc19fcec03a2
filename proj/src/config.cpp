// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
#include "warpspace/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "warpspace/errors.hpp"

namespace warpspace {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

// Shortest decimal form that parses back to the identical double, so the
// canonical text (and therefore the fingerprint) is stable and readable.
std::string format_double(double v) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

// Key/value store collected from the file, consumed field by field so that
// leftovers can be reported as unknown keys.
class KeyStore {
 public:
  KeyStore(const std::string& text, std::vector<std::string>& issues) : issues_(issues) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        issues_.push_back("line " + std::to_string(line_no) + ": expected 'key = value', got '" +
                          line + "'");
        continue;
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) {
        issues_.push_back("line " + std::to_string(line_no) + ": empty key");
        continue;
      }
      if (entries_.count(key) != 0) {
        issues_.push_back("duplicate key '" + key + "'");
        continue;
      }
      entries_[key] = value;
    }
  }

  std::optional<std::string> take(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    std::string value = it->second;
    entries_.erase(it);
    return value;
  }

  void report_unknown() {
    for (const auto& [key, value] : entries_) issues_.push_back("unknown key '" + key + "'");
  }

 private:
  std::map<std::string, std::string> entries_;
  std::vector<std::string>& issues_;
};

class FieldReader {
 public:
  FieldReader(KeyStore& store, std::vector<std::string>& issues) : store_(store), issues_(issues) {}

  void required_int(const std::string& key, int& out) {
    if (auto v = store_.take(key))
      parse_int(key, *v, out);
    else
      issues_.push_back("missing required key '" + key + "'");
  }

  void required_double(const std::string& key, double& out) {
    if (auto v = store_.take(key))
      parse_double(key, *v, out);
    else
      issues_.push_back("missing required key '" + key + "'");
  }

  void required_u64(const std::string& key, std::uint64_t& out) {
    if (auto v = store_.take(key))
      parse_u64(key, *v, out);
    else
      issues_.push_back("missing required key '" + key + "'");
  }

  void optional_int(const std::string& key, int& out) {
    if (auto v = store_.take(key)) parse_int(key, *v, out);
  }

  void optional_double(const std::string& key, double& out) {
    if (auto v = store_.take(key)) parse_double(key, *v, out);
  }

  void optional_u64(const std::string& key, std::uint64_t& out) {
    if (auto v = store_.take(key)) parse_u64(key, *v, out);
  }

  void optional_bool(const std::string& key, bool& out) {
    if (auto v = store_.take(key)) {
      if (*v == "true")
        out = true;
      else if (*v == "false")
        out = false;
      else
        issues_.push_back("key '" + key + "': expected true or false, got '" + *v + "'");
    }
  }

  void optional_mode(const std::string& key, TrainMode& out) {
    if (auto v = store_.take(key)) {
      if (*v == "nonlinear")
        out = TrainMode::kNonlinear;
      else if (*v == "linear-baseline")
        out = TrainMode::kLinearBaseline;
      else
        issues_.push_back("key '" + key + "': expected nonlinear or linear-baseline, got '" + *v +
                          "'");
    }
  }

  void optional_string(const std::string& key, std::string& out) {
    if (auto v = store_.take(key)) out = *v;
  }

 private:
  void parse_int(const std::string& key, const std::string& value, int& out) {
    try {
      std::size_t pos = 0;
      const long long parsed = std::stoll(value, &pos);
      if (pos != value.size()) throw std::invalid_argument(value);
      out = static_cast<int>(parsed);
      if (static_cast<long long>(out) != parsed) throw std::out_of_range(value);
    } catch (const std::exception&) {
      issues_.push_back("key '" + key + "': expected integer, got '" + value + "'");
    }
  }

  void parse_u64(const std::string& key, const std::string& value, std::uint64_t& out) {
    try {
      std::size_t pos = 0;
      const unsigned long long parsed = std::stoull(value, &pos);
      if (pos != value.size() || value.find('-') != std::string::npos)
        throw std::invalid_argument(value);
      out = parsed;
    } catch (const std::exception&) {
      issues_.push_back("key '" + key + "': expected unsigned integer, got '" + value + "'");
    }
  }

  void parse_double(const std::string& key, const std::string& value, double& out) {
    try {
      std::size_t pos = 0;
      const double parsed = std::stod(value, &pos);
      if (pos != value.size()) throw std::invalid_argument(value);
      out = parsed;
    } catch (const std::exception&) {
      issues_.push_back("key '" + key + "': expected number, got '" + value + "'");
    }
  }

  KeyStore& store_;
  std::vector<std::string>& issues_;
};

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  std::vector<std::string> issues;
  KeyStore store(text, issues);
  FieldReader read(store, issues);

  ExperimentConfig cfg;
  read.required_int("num_warpings", cfg.train.num_warpings);
  read.required_int("supports_per_warping", cfg.train.supports_per_warping);
  read.required_int("dim", cfg.train.dim);
  read.required_int("image_size", cfg.train.image_size);
  read.required_int("batch_size", cfg.train.batch_size);
  read.required_int("iterations", cfg.train.iterations);
  read.required_double("lambda", cfg.train.lambda);
  read.required_double("eps_min", cfg.train.eps_min);
  read.required_double("eps_max", cfg.train.eps_max);
  read.required_u64("seed", cfg.train.seed);

  read.optional_u64("gen_seed", cfg.train.gen_seed);
  read.optional_mode("mode", cfg.train.mode);
  read.optional_bool("freeze_weights", cfg.train.freeze_weights);
  read.optional_bool("freeze_scales", cfg.train.freeze_scales);
  read.optional_double("warp_learning_rate", cfg.train.warp_learning_rate);
  read.optional_double("recon_learning_rate", cfg.train.recon_learning_rate);
  read.optional_double("support_stddev", cfg.train.network_init.support_stddev);
  read.optional_double("initial_scale", cfg.train.network_init.initial_scale);
  read.optional_int("eval_codes", cfg.eval_codes);
  read.optional_int("eval_steps", cfg.eval_steps);
  read.optional_double("eval_eps", cfg.eval_eps);
  read.optional_int("eval_samples", cfg.eval_samples);
  read.optional_string("out_dir", cfg.out_dir);

  store.report_unknown();
  if (!issues.empty()) throw ConfigError(issues);
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file '" + path + "'"});
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

void ExperimentConfig::validate() const {
  std::vector<std::string> issues;
  try {
    train.validate();
  } catch (const ConfigError& e) {
    issues = e.issues();
  }
  if (eval_codes < 1) issues.push_back("eval_codes must be >= 1");
  if (eval_steps < 1) issues.push_back("eval_steps must be >= 1");
  if (eval_eps < 0.0) issues.push_back("eval_eps must be > 0 (or omitted for the default)");
  if (eval_samples < 1) issues.push_back("eval_samples must be >= 1");
  if (out_dir.empty()) issues.push_back("out_dir must not be empty");
  if (!issues.empty()) throw ConfigError(issues);
}

std::string ExperimentConfig::canonical_text() const {
  std::ostringstream out;
  out << "batch_size = " << train.batch_size << "\n";
  out << "dim = " << train.dim << "\n";
  out << "eps_max = " << format_double(train.eps_max) << "\n";
  out << "eps_min = " << format_double(train.eps_min) << "\n";
  out << "eval_codes = " << eval_codes << "\n";
  out << "eval_eps = " << format_double(resolved_eval_eps()) << "\n";
  out << "eval_samples = " << eval_samples << "\n";
  out << "eval_steps = " << eval_steps << "\n";
  out << "freeze_scales = " << (train.freeze_scales ? "true" : "false") << "\n";
  out << "freeze_weights = " << (train.freeze_weights ? "true" : "false") << "\n";
  out << "gen_seed = " << train.gen_seed << "\n";
  out << "image_size = " << train.image_size << "\n";
  out << "initial_scale = " << format_double(train.network_init.initial_scale) << "\n";
  out << "iterations = " << train.iterations << "\n";
  out << "lambda = " << format_double(train.lambda) << "\n";
  out << "mode = " << (train.mode == TrainMode::kNonlinear ? "nonlinear" : "linear-baseline")
      << "\n";
  out << "num_warpings = " << train.num_warpings << "\n";
  out << "recon_learning_rate = " << format_double(train.recon_learning_rate) << "\n";
  out << "seed = " << train.seed << "\n";
  out << "support_stddev = " << format_double(train.network_init.support_stddev) << "\n";
  out << "supports_per_warping = " << train.supports_per_warping << "\n";
  out << "warp_learning_rate = " << format_double(train.warp_learning_rate) << "\n";
  return out.str();
}

std::uint64_t ExperimentConfig::fingerprint() const { return fnv1a64(canonical_text()); }

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ull;  // offset basis
  for (const char c : text) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ull;  // prime
  }
  return hash;
}

}  // namespace warpspace
