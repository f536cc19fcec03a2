// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line entry point: train a model, evaluate a checkpoint, export a
// traversal as an image sequence, or compare against the fixed-direction
// baselines. Exit codes are a stable contract: 0 success, 2 configuration,
// 3 training abort, 4 checkpoint, 5 traversal.
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "warpspace/checkpoint.hpp"
#include "warpspace/config.hpp"
#include "warpspace/errors.hpp"
#include "warpspace/eval.hpp"
#include "warpspace/generator.hpp"
#include "warpspace/image_io.hpp"
#include "warpspace/network.hpp"
#include "warpspace/reports.hpp"
#include "warpspace/rng.hpp"
#include "warpspace/trainer.hpp"
#include "warpspace/warp.hpp"

namespace fs = std::filesystem;
using namespace warpspace;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitTrainingAbort = 3;
constexpr int kExitCheckpoint = 4;
constexpr int kExitTraversal = 5;

std::string under(const std::string& out_dir, const std::string& name) {
  return (fs::path(out_dir) / name).string();
}

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw ConfigError({"cannot create output directory '" + out_dir + "': " + ec.message()});
}

struct TrainArgs {
  std::string config_path;
  std::string out_override;
  std::optional<std::uint64_t> seed_override;
};

int run_train(const TrainArgs& args) {
  ExperimentConfig cfg = ExperimentConfig::from_file(args.config_path);
  if (!args.out_override.empty()) cfg.out_dir = args.out_override;
  if (args.seed_override) cfg.train.seed = *args.seed_override;
  cfg.validate();
  ensure_out_dir(cfg.out_dir);

  const TrainResult result = train(cfg.train);

  const Checkpoint ckpt{result.net, result.recon, cfg.train.gen_seed, cfg.train.image_size,
                        cfg.train.eps_min, cfg.train.eps_max};
  save_checkpoint(ckpt, under(cfg.out_dir, "checkpoint.bin"));
  write_text_file(under(cfg.out_dir, "training_log.csv"), training_log_csv(result.log));
  write_text_file(under(cfg.out_dir, "config_fingerprint.txt"),
                  fingerprint_hex(cfg.fingerprint()) + "\n");
  write_text_file(under(cfg.out_dir, "config_resolved.cfg"), cfg.canonical_text());

  const TrainingLogEntry& last = result.log.back();
  std::cout << "trained " << cfg.train.num_warpings << " warpings for " << cfg.train.iterations
            << " iterations: loss " << last.loss << ", classification accuracy "
            << last.cls_accuracy * 100.0 << "%, shift MAE " << last.reg_mae << "\n";
  std::cout << "checkpoint: " << under(cfg.out_dir, "checkpoint.bin") << "\n";
  return 0;
}

struct EvalArgs {
  std::string checkpoint_path;
  std::string config_path;
  std::string out_override;
  std::optional<std::uint64_t> seed;
  std::optional<int> codes;
  std::optional<int> steps;
  std::optional<double> eps;
  std::optional<int> samples;
};

int run_eval(const EvalArgs& args) {
  const Checkpoint ckpt = load_checkpoint(args.checkpoint_path);

  // Precedence: explicit flags > config file > checkpoint-derived defaults.
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  int codes = 100;
  int steps = 10;
  double eps = ckpt.eps_max / 2.0;
  int samples = 10000;
  std::string fingerprint;
  if (!args.config_path.empty()) {
    const ExperimentConfig cfg = ExperimentConfig::from_file(args.config_path);
    cfg.validate();
    out_dir = cfg.out_dir;
    seed = cfg.train.seed;
    codes = cfg.eval_codes;
    steps = cfg.eval_steps;
    eps = cfg.resolved_eval_eps();
    samples = cfg.eval_samples;
    fingerprint = fingerprint_hex(cfg.fingerprint());
  }
  if (!args.out_override.empty()) out_dir = args.out_override;
  if (args.seed) seed = *args.seed;
  if (args.codes) codes = *args.codes;
  if (args.steps) steps = *args.steps;
  if (args.eps) eps = *args.eps;
  if (args.samples) samples = *args.samples;
  if (codes < 1 || steps < 0 || eps <= 0.0 || samples < 1)
    throw ConfigError({"eval parameters must satisfy codes >= 1, steps >= 0, eps > 0, "
                       "samples >= 1"});
  if (fingerprint.empty()) {
    std::string basis = "checkpoint-eval\n";
    basis += "codes = " + std::to_string(codes) + "\n";
    basis += "eps = " + std::to_string(eps) + "\n";
    basis += "samples = " + std::to_string(samples) + "\n";
    basis += "seed = " + std::to_string(seed) + "\n";
    basis += "steps = " + std::to_string(steps) + "\n";
    fingerprint = fingerprint_hex(fnv1a64(basis));
  }
  ensure_out_dir(out_dir);

  const SyntheticGenerator gen =
      SyntheticGenerator::create(ckpt.net.dim(), ckpt.image_size, ckpt.gen_seed);
  const double accuracy = reconstructor_accuracy(ckpt.net, ckpt.recon, gen, samples,
                                                 ckpt.eps_min, ckpt.eps_max, seed);
  const CorrelationReport corr = correlation_report(ckpt.net, gen, codes, steps, eps, seed);
  const double margin = dominance_margin(corr);
  const PhiReport phi = phi_report(ckpt.net, gen, codes, steps, eps, seed);

  write_text_file(under(out_dir, "accuracy.csv"), accuracy_csv(accuracy));
  write_text_file(under(out_dir, "correlation.csv"), attribute_matrix_csv(corr.l1_normalized));
  write_text_file(under(out_dir, "correlation_raw.csv"), attribute_matrix_csv(corr.raw));
  write_text_file(under(out_dir, "ranges.csv"), attribute_matrix_csv(corr.mean_ranges));
  write_text_file(under(out_dir, "assignment.csv"), assignment_csv(corr.assignment));
  write_text_file(under(out_dir, "phi.csv"), phi_csv(phi));
  write_text_file(under(out_dir, "report.json"),
                  bundle_report_json(fingerprint, accuracy, corr, margin, phi));

  std::cout << "reconstructor accuracy: " << accuracy << "%\n";
  std::cout << "dominance margin: " << margin << "\n";
  std::cout << "reports written to " << out_dir << "\n";
  return 0;
}

struct TraverseArgs {
  std::string checkpoint_path;
  int k = 0;
  std::uint64_t seed = 0;
  int steps = 10;
  std::optional<double> eps;
  std::string out_dir = "out";
};

struct SideWalk {
  std::vector<Eigen::VectorXd> points;  // points[0] = z0
  int failed_step = -1;                 // -1 when the side completed
};

SideWalk walk_side(const WarpingFunction& warp, const Eigen::VectorXd& z0, double eps, int steps,
                   int sign) {
  SideWalk side;
  try {
    side.points = traverse(warp, z0, eps, steps, sign).points;
  } catch (const TraversalError& e) {
    side.points = e.partial_path().points;
    side.failed_step = e.failed_step();
  }
  return side;
}

int run_traverse(const TraverseArgs& args) {
  const Checkpoint ckpt = load_checkpoint(args.checkpoint_path);
  if (args.k < 0 || args.k >= ckpt.net.num_warpings())
    throw ConfigError({"--k must be in [0, " + std::to_string(ckpt.net.num_warpings() - 1) +
                       "], got " + std::to_string(args.k)});
  if (args.steps < 0) throw ConfigError({"--steps must be >= 0"});
  const double eps = args.eps ? *args.eps : ckpt.eps_max / 2.0;
  if (eps <= 0.0) throw ConfigError({"--eps must be > 0"});
  ensure_out_dir(args.out_dir);

  const SyntheticGenerator gen =
      SyntheticGenerator::create(ckpt.net.dim(), ckpt.image_size, ckpt.gen_seed);
  const WarpingFunction warp = ckpt.net.warping(args.k);
  const Eigen::VectorXd z0 = Rng(args.seed).normal_vector(ckpt.net.dim());

  const SideWalk negative = walk_side(warp, z0, eps, args.steps, -1);
  const SideWalk positive = walk_side(warp, z0, eps, args.steps, +1);

  const auto step_name = [&](int t) {
    return "path" + std::to_string(args.k) + "_step" + (t < 0 ? "-" : "+") +
           std::to_string(std::abs(t)) + ".pgm";
  };

  // Export in step order -T..+T; partial walks export what they reached.
  nlohmann::json points = nlohmann::json::array();
  const auto export_point = [&](int t, const Eigen::VectorXd& z) {
    write_pgm(gen.render(z), under(args.out_dir, step_name(t)));
    nlohmann::json entry;
    entry["step"] = t;
    entry["latent"] = std::vector<double>(z.data(), z.data() + z.size());
    points.push_back(std::move(entry));
  };
  for (int t = static_cast<int>(negative.points.size()) - 1; t >= 1; --t)
    export_point(-t, negative.points[static_cast<std::size_t>(t)]);
  for (int t = 0; t < static_cast<int>(positive.points.size()); ++t)
    export_point(t, positive.points[static_cast<std::size_t>(t)]);

  const bool complete = negative.failed_step < 0 && positive.failed_step < 0;
  nlohmann::json meta;
  meta["warping"] = args.k;
  meta["seed"] = args.seed;
  meta["eps"] = eps;
  meta["steps"] = args.steps;
  meta["complete"] = complete;
  if (complete && args.steps > 0) {
    LatentPath two_sided;
    two_sided.step_magnitude = eps;
    for (int t = args.steps; t >= 1; --t)
      two_sided.points.push_back(negative.points[static_cast<std::size_t>(t)]);
    for (int t = 0; t <= args.steps; ++t)
      two_sided.points.push_back(positive.points[static_cast<std::size_t>(t)]);
    meta["phi"] = nonlinearity_coefficient(two_sided);
  } else {
    meta["phi"] = nullptr;
  }
  if (!complete) {
    nlohmann::json failures = nlohmann::json::array();
    if (negative.failed_step >= 0)
      failures.push_back({{"direction", -1}, {"step", negative.failed_step}});
    if (positive.failed_step >= 0)
      failures.push_back({{"direction", +1}, {"step", positive.failed_step}});
    meta["failed"] = std::move(failures);
  }
  meta["points"] = std::move(points);
  write_text_file(under(args.out_dir, "path" + std::to_string(args.k) + "_meta.json"),
                  meta.dump(2) + "\n");

  if (!complete) {
    const int failed_at =
        negative.failed_step >= 0 ? negative.failed_step : positive.failed_step;
    std::cerr << "traversal hit a degenerate gradient at step " << failed_at
              << "; partial sequence exported to " << args.out_dir << "\n";
    return kExitTraversal;
  }
  std::cout << "exported " << (2 * args.steps + 1) << " images to " << args.out_dir << "\n";
  return 0;
}

struct BaselineArgs {
  std::string config_path;
  std::string out_override;
  std::optional<std::uint64_t> seed_override;
};

int run_baseline(const BaselineArgs& args) {
  ExperimentConfig cfg = ExperimentConfig::from_file(args.config_path);
  if (!args.out_override.empty()) cfg.out_dir = args.out_override;
  if (args.seed_override) cfg.train.seed = *args.seed_override;
  cfg.validate();
  if (cfg.train.num_warpings > cfg.train.dim)
    throw ConfigError({"baseline comparison requires num_warpings <= dim for the coordinate "
                       "baseline"});
  ensure_out_dir(cfg.out_dir);

  const SyntheticGenerator gen =
      SyntheticGenerator::create(cfg.train.dim, cfg.train.image_size, cfg.train.gen_seed);

  struct Row {
    std::string method;
    double accuracy = 0.0;
  };
  std::vector<Row> rows;

  const auto evaluate = [&](const std::string& method, const TrainResult& result) {
    const double accuracy =
        reconstructor_accuracy(result.net, result.recon, gen, cfg.eval_samples,
                               cfg.train.eps_min, cfg.train.eps_max, cfg.train.seed);
    write_text_file(under(cfg.out_dir, "training_log_" + method + ".csv"),
                    training_log_csv(result.log));
    rows.push_back({method, accuracy});
    std::cout << method << ": " << accuracy << "%\n";
  };

  TrainConfig frozen = cfg.train;
  frozen.freeze_supports = true;
  frozen.freeze_weights = true;
  frozen.freeze_scales = true;

  evaluate("random",
           train_with_network(frozen, random_baseline(cfg.train.num_warpings, cfg.train.dim,
                                                      cfg.train.seed)));
  evaluate("coord",
           train_with_network(frozen, coord_baseline(cfg.train.num_warpings, cfg.train.dim)));
  TrainConfig linear = cfg.train;
  linear.mode = TrainMode::kLinearBaseline;
  evaluate("linear", train(linear));

  std::string csv = "method,accuracy_percent\n";
  for (const Row& row : rows) csv += row.method + "," + std::to_string(row.accuracy) + "\n";
  write_text_file(under(cfg.out_dir, "baseline.csv"), csv);
  std::cout << "comparison written to " << under(cfg.out_dir, "baseline.csv") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"warpspace: non-linear latent-space traversal trainer and evaluator"};
  app.require_subcommand(1);

  TrainArgs train_args;
  std::uint64_t train_seed = 0;
  CLI::App* cmd_train = app.add_subcommand("train", "Train a model from a config file");
  cmd_train->add_option("--config", train_args.config_path, "Config file path")->required();
  cmd_train->add_option("--out", train_args.out_override, "Output directory (overrides config)");
  CLI::Option* train_seed_opt =
      cmd_train->add_option("--seed", train_seed, "Seed override");

  EvalArgs eval_args;
  std::uint64_t eval_seed = 0;
  int eval_codes = 0, eval_steps = 0, eval_samples = 0;
  double eval_eps = 0.0;
  CLI::App* cmd_eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  cmd_eval->add_option("--checkpoint", eval_args.checkpoint_path, "Checkpoint path")->required();
  cmd_eval->add_option("--config", eval_args.config_path, "Config file for eval parameters");
  cmd_eval->add_option("--out", eval_args.out_override, "Output directory");
  CLI::Option* eval_seed_opt = cmd_eval->add_option("--seed", eval_seed, "Evaluation seed");
  CLI::Option* eval_codes_opt =
      cmd_eval->add_option("--codes", eval_codes, "Latent codes per report");
  CLI::Option* eval_steps_opt =
      cmd_eval->add_option("--steps", eval_steps, "Traversal steps per direction");
  CLI::Option* eval_eps_opt = cmd_eval->add_option("--eps", eval_eps, "Traversal step magnitude");
  CLI::Option* eval_samples_opt =
      cmd_eval->add_option("--samples", eval_samples, "Held-out samples for accuracy");

  TraverseArgs traverse_args;
  double traverse_eps = 0.0;
  CLI::App* cmd_traverse =
      app.add_subcommand("traverse", "Export one warping's path as an image sequence");
  cmd_traverse->add_option("--checkpoint", traverse_args.checkpoint_path, "Checkpoint path")
      ->required();
  cmd_traverse->add_option("--k", traverse_args.k, "Warping index")->required();
  cmd_traverse->add_option("--seed", traverse_args.seed, "Seed for the starting latent code");
  cmd_traverse->add_option("--steps", traverse_args.steps, "Steps per direction");
  CLI::Option* traverse_eps_opt =
      cmd_traverse->add_option("--eps", traverse_eps, "Step magnitude");
  cmd_traverse->add_option("--out", traverse_args.out_dir, "Output directory");

  BaselineArgs baseline_args;
  std::uint64_t baseline_seed = 0;
  CLI::App* cmd_baseline =
      app.add_subcommand("baseline", "Train and compare the fixed-direction baselines");
  cmd_baseline->add_option("--config", baseline_args.config_path, "Config file path")->required();
  cmd_baseline->add_option("--out", baseline_args.out_override,
                           "Output directory (overrides config)");
  CLI::Option* baseline_seed_opt =
      cmd_baseline->add_option("--seed", baseline_seed, "Seed override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*cmd_train) {
      if (train_seed_opt->count() > 0) train_args.seed_override = train_seed;
      return run_train(train_args);
    }
    if (*cmd_eval) {
      if (eval_seed_opt->count() > 0) eval_args.seed = eval_seed;
      if (eval_codes_opt->count() > 0) eval_args.codes = eval_codes;
      if (eval_steps_opt->count() > 0) eval_args.steps = eval_steps;
      if (eval_eps_opt->count() > 0) eval_args.eps = eval_eps;
      if (eval_samples_opt->count() > 0) eval_args.samples = eval_samples;
      return run_eval(eval_args);
    }
    if (*cmd_traverse) {
      if (traverse_eps_opt->count() > 0) traverse_args.eps = traverse_eps;
      return run_traverse(traverse_args);
    }
    if (*cmd_baseline) {
      if (baseline_seed_opt->count() > 0) baseline_args.seed_override = baseline_seed;
      return run_baseline(baseline_args);
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const TrainingCollapse& e) {
    std::cerr << "training aborted: " << e.what() << "\n";
    return kExitTrainingAbort;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitCheckpoint;
  } catch (const TraversalError& e) {
    std::cerr << e.what() << "\n";
    return kExitTraversal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
