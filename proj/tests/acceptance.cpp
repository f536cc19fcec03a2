// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
// Release gate: one pass/fail line per criterion, each with its measured
// value, tolerance, and runtime. Exits with the number of failed criteria.
//
//   1. Analytic RBF gradient vs central finite differences.
//   2. Small-scale bipolar pairs act as a constant linear direction.
//   3. End-to-end finite-difference gradcheck of the composite loss.
//   4. Trained reconstructor accuracy and its gap over the random baseline.
//   5. Correlation diagonal dominance: fixture floor and nonlinear >= linear.
//   6. Non-linearity coefficient reporting for nonlinear and linear models.
//   7. Byte-identical rerun determinism of the CLI (train/eval/traverse).
//   8. Checkpoint round-trip identity and checksum tamper detection.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "warpspace/checkpoint.hpp"
#include "warpspace/errors.hpp"
#include "warpspace/eval.hpp"
#include "warpspace/generator.hpp"
#include "warpspace/network.hpp"
#include "warpspace/reconstructor.hpp"
#include "warpspace/rng.hpp"
#include "warpspace/trainer.hpp"
#include "warpspace/warp.hpp"

#ifndef WARPSPACE_CLI
#error "WARPSPACE_CLI must point at the CLI binary"
#endif

namespace fs = std::filesystem;
using namespace warpspace;

namespace {

// The reference experiment: the repository's default configuration. Training
// is fully seeded, so the measured accuracies below are exact reproducible
// numbers, not statistical estimates.
constexpr std::uint64_t kSeed = 5;

TrainConfig reference_config() {
  TrainConfig cfg;  // K=5, N=2, d=16, 16x16 images, batch 32, 10000 iterations
  cfg.seed = kSeed;
  return cfg;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), format, v);
  return buffer;
}

// Shared trained artifacts (criteria 4-6 reuse the same runs).
struct SharedRuns {
  std::optional<TrainResult> ours;
  std::optional<TrainResult> random_frozen;
  std::optional<TrainResult> linear;
};
SharedRuns g_runs;

const fs::path& scratch() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "warpspace-acceptance";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(WARPSPACE_CLI) + " " + args + " > " +
                          (scratch() / "cli.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
#if defined(_WIN32)
  return status;
#else
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#endif
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw std::runtime_error("missing file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// ---------------------------------------------------------------------------
// 1. Analytic gradient vs central finite differences, 100 seeded instances.
Outcome criterion_gradient() {
  constexpr double kTol = 1e-6;
  constexpr double kH = 1e-5;
  Rng rng(2026);
  double worst = 0.0;
  const int dims[3] = {2, 8, 32};
  for (int i = 0; i < 100; ++i) {
    const int d = dims[i % 3];
    const int n = 2 * (1 + rng.uniform_int(3));  // N in {2, 4, 6}
    WarpingFunction warp;
    warp.dim = d;
    warp.centers = Eigen::MatrixXd::NullaryExpr(n, d, [&] { return rng.normal(); });
    warp.weights = Eigen::VectorXd::NullaryExpr(n, [&] { return rng.sign() * rng.uniform(0.5, 1.5); });
    warp.log_scales =
        Eigen::VectorXd::NullaryExpr(n, [&] { return std::log(rng.uniform(0.05, 2.0)); });
    const Eigen::VectorXd z = rng.normal_vector(d);

    const Eigen::VectorXd analytic = grad_warp(warp, z);
    Eigen::VectorXd fd(d);
    for (int j = 0; j < d; ++j) {
      Eigen::VectorXd zp = z, zm = z;
      zp[j] += kH;
      zm[j] -= kH;
      fd[j] = (eval_warp(warp, zp) - eval_warp(warp, zm)) / (2.0 * kH);
    }
    const double rel = (analytic - fd).norm() / std::max(analytic.norm(), 1e-12);
    worst = std::max(worst, rel);
  }
  return {worst < kTol, "max rel err " + fmt("%.2e", worst) + " over 100 instances, d in {2,8,32} (tolerance 1e-6)"};
}

// ---------------------------------------------------------------------------
// 2. gamma = 1e-8 bipolar pair: constant direction, collinear walks, phi = 1.
Outcome criterion_linear_regime() {
  constexpr int kDim = 8;
  constexpr double kEps = 0.25;
  Rng rng(99);
  Eigen::MatrixXd centers(2, kDim);
  const Eigen::VectorXd s = 1.5 * rng.normal_vector(kDim).normalized();
  centers.row(0) = s.transpose();
  centers.row(1) = -s.transpose();
  Eigen::VectorXd pair_weight(1), pair_log_scale(1);
  pair_weight << 0.7;
  pair_log_scale << std::log(1e-8);
  const WarpingFunction warp = make_bipolar(centers, pair_weight, pair_log_scale);
  const Eigen::VectorXd s_hat = s.normalized();

  double min_cos = 1.0;
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd z = rng.normal_vector(kDim);
    z *= rng.uniform(0.0, 10.0) / std::max(z.norm(), 1e-12);  // inside the ball |z| <= 10
    const Eigen::VectorXd dz = shift(warp, z, kEps);
    min_cos = std::min(min_cos, dz.dot(s_hat) / dz.norm());
  }

  double max_residual = 0.0;
  double max_phi_err = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd z0 = rng.normal_vector(kDim);
    const LatentPath path = traverse(warp, z0, kEps, 5, +1);
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(path.points.size()), kDim);
    for (Eigen::Index r = 0; r < pts.rows(); ++r)
      pts.row(r) = path.points[static_cast<std::size_t>(r)].transpose();
    const Eigen::MatrixXd centered = pts.rowwise() - pts.colwise().mean();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const Eigen::VectorXd axis = svd.matrixV().col(0);
    const Eigen::MatrixXd residuals = centered - (centered * axis) * axis.transpose();
    max_residual = std::max(max_residual, residuals.rowwise().norm().maxCoeff());
    max_phi_err = std::max(max_phi_err, std::abs(nonlinearity_coefficient(path) - 1.0));
  }

  const bool pass =
      min_cos > 1.0 - 1e-6 && max_residual < 1e-6 * kEps && max_phi_err < 1e-9;
  return {pass, "min cosine " + fmt("%.10f", min_cos) + " (> 1-1e-6), collinearity residual " +
                    fmt("%.2e", max_residual) + " (< 1e-6*eps), |phi-1| " +
                    fmt("%.2e", max_phi_err) + " (< 1e-9)"};
}

// ---------------------------------------------------------------------------
// 3. Finite-difference gradcheck of the full composite loss at d=4, K=3.
Outcome criterion_end_to_end_gradcheck() {
  constexpr double kTol = 1e-4;
  constexpr double kH = 1e-5;
  constexpr double kLambda = 0.25;
  const int K = 3, N = 2, d = 4, image = 16;
  WarpingNetwork net = WarpingNetwork::init(K, N, d, 101, NetworkInit{});
  Reconstructor recon = Reconstructor::init(K, 2, 102);
  // Gradcheck at a generic point: biases initialize to zero, and on the mostly
  // black rendered background a conv pre-activation equals its bias exactly,
  // which parks entire channels on the rectifier kink where central
  // differences measure a slope blend instead of either one-sided derivative.
  Rng bias_rng(104);
  for (NamedTensor& t : recon.parameters())
    if (t.name.ends_with(".bias"))
      for (Eigen::Index i = 0; i < t.value.size(); ++i)
        t.value[i] += bias_rng.sign() * bias_rng.uniform(0.05, 0.15);
  const SyntheticGenerator gen = SyntheticGenerator::create(d, image, 7);
  TrainSample s;
  s.z = Rng(103).normal_vector(d);
  s.k = 1;
  s.eps_signed = 0.7;

  const Trainability all;  // everything trainable
  const auto loss_of = [&](const WarpingNetwork& w, const Reconstructor& r) {
    Tape tape;
    const BoundWarpings bound = bind_warpings(tape, w, all);
    const Reconstructor::Bound rb = r.bind(tape, true);
    return build_sample_graph(tape, bound, r, rb, gen, s, kLambda).loss.value();
  };

  // Analytic gradients, one backward pass.
  Tape tape;
  const BoundWarpings bound = bind_warpings(tape, net, all);
  const Reconstructor::Bound rb = recon.bind(tape, true);
  const SampleGraph graph = build_sample_graph(tape, bound, recon, rb, gen, s, kLambda);
  tape.backward(graph.loss.id);

  double worst = 0.0;
  long checked = 0;
  const auto compare = [&](double analytic, double fd) {
    const double rel = std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1.0});
    worst = std::max(worst, rel);
    ++checked;
  };

  for (int k = 0; k < K; ++k) {
    for (int idx = 0; idx < net.centers(k).size(); ++idx) {
      WarpingNetwork w = net;
      const int r = idx / d, c = idx % d;
      w.centers(k)(r, c) += kH;
      const double up = loss_of(w, recon);
      w.centers(k)(r, c) -= 2 * kH;
      compare(bound.centers[static_cast<std::size_t>(k)].grad()[idx],
              (up - loss_of(w, recon)) / (2 * kH));
    }
    for (int idx = 0; idx < net.free_weights(k).size(); ++idx) {
      WarpingNetwork w = net;
      w.free_weights(k)[idx] += kH;
      const double up = loss_of(w, recon);
      w.free_weights(k)[idx] -= 2 * kH;
      compare(bound.free_weights[static_cast<std::size_t>(k)].grad()[idx],
              (up - loss_of(w, recon)) / (2 * kH));
    }
    for (int idx = 0; idx < net.free_log_scales(k).size(); ++idx) {
      WarpingNetwork w = net;
      w.free_log_scales(k)[idx] += kH;
      const double up = loss_of(w, recon);
      w.free_log_scales(k)[idx] -= 2 * kH;
      compare(bound.free_log_scales[static_cast<std::size_t>(k)].grad()[idx],
              (up - loss_of(w, recon)) / (2 * kH));
    }
  }
  for (std::size_t t = 0; t < recon.parameters().size(); ++t) {
    for (int idx = 0; idx < recon.parameters()[t].value.size(); ++idx) {
      Reconstructor r = recon;
      r.parameters()[t].value[idx] += kH;
      const double up = loss_of(net, r);
      r.parameters()[t].value[idx] -= 2 * kH;
      compare(rb.vars[t].grad()[idx], (up - loss_of(net, r)) / (2 * kH));
    }
  }

  return {worst < kTol, "max rel err " + fmt("%.2e", worst) + " over " + std::to_string(checked) +
                            " parameters of the warping bank and reconstructor (tolerance 1e-4)"};
}

// ---------------------------------------------------------------------------
// 4. Held-out accuracy >= 90% and >= 20 points over the random baseline.
Outcome criterion_training_accuracy() {
  const TrainConfig cfg = reference_config();
  g_runs.ours = train(cfg);

  TrainConfig frozen = cfg;
  frozen.freeze_supports = frozen.freeze_weights = frozen.freeze_scales = true;
  g_runs.random_frozen =
      train_with_network(frozen, random_baseline(cfg.num_warpings, cfg.dim, cfg.seed));

  const SyntheticGenerator gen =
      SyntheticGenerator::create(cfg.dim, cfg.image_size, cfg.gen_seed);
  const double acc_ours = reconstructor_accuracy(g_runs.ours->net, g_runs.ours->recon, gen,
                                                 10000, cfg.eps_min, cfg.eps_max, cfg.seed);
  const double acc_random =
      reconstructor_accuracy(g_runs.random_frozen->net, g_runs.random_frozen->recon, gen, 10000,
                             cfg.eps_min, cfg.eps_max, cfg.seed);

  const bool pass = acc_ours >= 90.0 && acc_ours - acc_random >= 20.0;
  return {pass, "held-out accuracy " + fmt("%.2f", acc_ours) + "% (>= 90%), random baseline " +
                    fmt("%.2f", acc_random) + "%, gap " + fmt("%.2f", acc_ours - acc_random) +
                    " points (>= 20)"};
}

// ---------------------------------------------------------------------------
// 5. Diagonal dominance: axis-aligned fixture floor, nonlinear >= linear.
Outcome criterion_disentanglement() {
  const TrainConfig cfg = reference_config();

  // Fixture: factor map aligned to the first five basis axes, walked by the
  // coordinate baseline. Assigned cells must dominate by a wide margin.
  Eigen::MatrixXd aligned = Eigen::MatrixXd::Zero(kAttributeCount, cfg.dim);
  for (int a = 0; a < kAttributeCount; ++a) aligned(a, a) = 1.0;
  const SyntheticGenerator fixture_gen =
      SyntheticGenerator::with_factor_map(aligned, cfg.image_size);
  const WarpingNetwork coord = coord_baseline(kAttributeCount, cfg.dim);
  const double fixture_margin =
      dominance_margin(correlation_report(coord, fixture_gen, 100, 10, 0.5, 0));

  if (!g_runs.ours) g_runs.ours = train(cfg);
  TrainConfig lin = cfg;
  lin.mode = TrainMode::kLinearBaseline;
  g_runs.linear = train(lin);

  const SyntheticGenerator gen =
      SyntheticGenerator::create(cfg.dim, cfg.image_size, cfg.gen_seed);
  const double eval_eps = cfg.eps_max / 2.0;
  const double margin_ours =
      dominance_margin(correlation_report(g_runs.ours->net, gen, 100, 10, eval_eps, 0));
  const double margin_linear =
      dominance_margin(correlation_report(g_runs.linear->net, gen, 100, 10, eval_eps, 0));

  const bool pass = fixture_margin > 0.8 && margin_ours > 0.0 && margin_ours >= margin_linear;
  return {pass, "fixture margin " + fmt("%.4f", fixture_margin) + " (> 0.8), nonlinear margin " +
                    fmt("%.4f", margin_ours) + " (> 0 and >= linear " + fmt("%.4f", margin_linear) +
                    ")"};
}

// ---------------------------------------------------------------------------
// 6. Non-linearity coefficients: sorted, >= 1; linear baseline all 1 +- 1e-6.
Outcome criterion_phi() {
  const TrainConfig cfg = reference_config();
  if (!g_runs.ours) g_runs.ours = train(cfg);
  if (!g_runs.linear) {
    TrainConfig lin = cfg;
    lin.mode = TrainMode::kLinearBaseline;
    g_runs.linear = train(lin);
  }
  const SyntheticGenerator gen =
      SyntheticGenerator::create(cfg.dim, cfg.image_size, cfg.gen_seed);
  const double eval_eps = cfg.eps_max / 2.0;
  const PhiReport ours = phi_report(g_runs.ours->net, gen, 100, 10, eval_eps, 0);
  const PhiReport linear = phi_report(g_runs.linear->net, gen, 100, 10, eval_eps, 0);

  bool sorted = true, ours_ok = true;
  for (std::size_t i = 0; i < ours.mean_phi.size(); ++i) {
    if (i > 0 && ours.mean_phi[i] > ours.mean_phi[i - 1] + 1e-15) sorted = false;
    if (!(ours.mean_phi[i] >= 1.0 - 1e-12)) ours_ok = false;
  }
  double max_linear_err = 0.0;
  for (double phi : linear.mean_phi) max_linear_err = std::max(max_linear_err, std::abs(phi - 1.0));

  std::string listing;
  for (double phi : ours.mean_phi) listing += " " + fmt("%.5f", phi);
  const bool pass = sorted && ours_ok && max_linear_err < 1e-6;
  return {pass, "nonlinear phi (descending)" + listing + " all >= 1; linear max |phi-1| " +
                    fmt("%.2e", max_linear_err) + " (< 1e-6)"};
}

// ---------------------------------------------------------------------------
// 7. CLI determinism: byte-identical checkpoints, CSVs, and PGM exports.
Outcome criterion_determinism() {
  const fs::path cfg_path = scratch() / "determinism.cfg";
  {
    std::ofstream out(cfg_path);
    out << "num_warpings = 3\nsupports_per_warping = 2\ndim = 6\nimage_size = 16\n"
           "batch_size = 8\niterations = 300\nlambda = 0.25\neps_min = 0.25\neps_max = 2.0\n"
           "seed = 5\neval_codes = 12\neval_steps = 4\neval_samples = 300\n";
  }
  const fs::path a = scratch() / "det-a", b = scratch() / "det-b";
  for (const fs::path& out : {a, b}) {
    if (run_cli("train --config " + cfg_path.string() + " --out " + out.string()) != 0)
      return {false, "train run failed"};
    if (run_cli("eval --checkpoint " + (out / "checkpoint.bin").string() + " --out " +
                (out / "eval").string()) != 0)
      return {false, "eval run failed"};
    if (run_cli("traverse --checkpoint " + (out / "checkpoint.bin").string() +
                " --k 0 --steps 3 --out " + (out / "walk").string()) != 0)
      return {false, "traverse run failed"};
  }

  std::vector<std::string> files = {"checkpoint.bin", "training_log.csv",
                                    "config_fingerprint.txt"};
  for (const char* name : {"accuracy.csv", "correlation.csv", "correlation_raw.csv", "ranges.csv",
                           "assignment.csv", "phi.csv", "report.json"})
    files.push_back(std::string("eval/") + name);
  for (int t = -3; t <= 3; ++t)
    files.push_back("walk/path0_step" + std::string(t < 0 ? "-" : "+") +
                    std::to_string(std::abs(t)) + ".pgm");
  files.push_back("walk/path0_meta.json");

  int mismatches = 0;
  for (const std::string& name : files)
    if (read_bytes(a / name) != read_bytes(b / name)) ++mismatches;

  return {mismatches == 0, "repeated train/eval/traverse: " + std::to_string(files.size()) +
                               " artifacts compared, " + std::to_string(mismatches) +
                               " byte mismatches"};
}

// ---------------------------------------------------------------------------
// 8. Checkpoint round-trip identity; tampering detected in-process and exit 4.
Outcome criterion_serialization() {
  Checkpoint ckpt;
  ckpt.net = WarpingNetwork::init(3, 2, 6, 42, NetworkInit{});
  ckpt.recon = Reconstructor::init(3, 2, 43);
  ckpt.gen_seed = 7;
  ckpt.image_size = 16;

  const std::vector<std::uint8_t> bytes = serialize_checkpoint(ckpt);
  const std::vector<std::uint8_t> bytes2 = serialize_checkpoint(parse_checkpoint(bytes));
  const bool round_trip = bytes == bytes2;

  std::vector<std::uint8_t> tampered = bytes;
  tampered[tampered.size() / 2] ^= 0x01;
  bool detected = false;
  try {
    (void)parse_checkpoint(tampered);
  } catch (const CheckpointError&) {
    detected = true;
  }

  const fs::path bad = scratch() / "tampered.bin";
  {
    std::ofstream out(bad, std::ios::binary);
    out.write(reinterpret_cast<const char*>(tampered.data()),
              static_cast<std::streamsize>(tampered.size()));
  }
  const int exit_code = run_cli("eval --checkpoint " + bad.string() + " --samples 50");

  const bool pass = round_trip && detected && exit_code == 4;
  return {pass, std::string("write-read-write ") + (round_trip ? "identical" : "DIFFERS") +
                    "; tampered byte " + (detected ? "rejected" : "ACCEPTED") +
                    "; CLI exit code " + std::to_string(exit_code) + " (want 4)"};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;  // <= 0: no stated limit
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "analytic gradient vs finite differences", 5.0, criterion_gradient},
      {2, "small-scale bipolar pair is a constant direction", 5.0, criterion_linear_regime},
      {3, "end-to-end gradcheck of the composite loss", 60.0, criterion_end_to_end_gradcheck},
      {4, "trained accuracy and gap over random baseline", 600.0, criterion_training_accuracy},
      {5, "correlation diagonal dominance", 300.0, criterion_disentanglement},
      {6, "non-linearity coefficient reporting", 60.0, criterion_phi},
      {7, "byte-identical rerun determinism", 0.0, criterion_determinism},
      {8, "checkpoint round-trip and tamper detection", 0.0, criterion_serialization},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start).count();
    bool pass = outcome.pass;
    std::string timing = fmt("%.1f", elapsed) + " s";
    if (c.limit_seconds > 0.0) {
      timing += " / limit " + fmt("%.0f", c.limit_seconds) + " s";
      if (elapsed > c.limit_seconds) pass = false;
    }
    std::printf("[%s] %d. %s: %s [%s]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                outcome.detail.c_str(), timing.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  std::printf("acceptance: %zu/%zu criteria passed\n", criteria.size() - failures,
              criteria.size());
  return failures;
}
