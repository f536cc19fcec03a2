// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
// Joint training of the warping bank and the reconstructor: sample
// (z, k, eps), shift z along warping k's normalized gradient, render the
// image pair, and minimize  cross_entropy(k, logits) + lambda * |eps - pred|
// over the warping parameters and the reconstructor simultaneously.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "warpspace/adam.hpp"
#include "warpspace/autodiff.hpp"
#include "warpspace/generator.hpp"
#include "warpspace/network.hpp"
#include "warpspace/reconstructor.hpp"
#include "warpspace/rng.hpp"

namespace warpspace {

enum class TrainMode {
  kNonlinear,       // RBF warpings, everything trainable
  kLinearBaseline,  // one frozen-scale bipolar pair per warping; supports only
};

struct TrainConfig {
  int num_warpings = 5;        // K
  int supports_per_warping = 2;  // N, even (bipolar pairs)
  int dim = 16;                // d
  int image_size = 16;
  int batch_size = 32;
  int iterations = 10000;
  double lambda = 0.25;        // regression term weight
  double eps_min = 0.25;
  double eps_max = 2.0;
  double warp_learning_rate = 1e-3;
  double recon_learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::uint64_t gen_seed = 0;
  TrainMode mode = TrainMode::kNonlinear;
  bool freeze_weights = false;   // weight matrix (A)
  bool freeze_scales = false;    // log-scale matrix (G)
  bool freeze_supports = false;  // support tensor (S); used by fixed baselines
  NetworkInit network_init;

  /// Throws ConfigError listing every violated constraint.
  void validate() const;
};

struct TrainSample {
  Eigen::VectorXd z;
  int k = 0;
  double eps_signed = 0.0;
};

/// Draw order is fixed: dim normals for z, then k, then |eps|, then sign.
TrainSample sample(Rng& rng, const TrainConfig& config);

/// cross_entropy(logits, k) + lambda * |eps_pred - eps_signed|.
Var composite_loss(Var logits, int k, Var eps_pred, double eps_signed, double lambda);

/// The warping bank leafed onto a tape. weight_rows/scale_rows are the
/// mirror-expanded length-N derivations actually consumed by the shift graph.
struct BoundWarpings {
  std::vector<Var> centers;          // K tensors of shape (N, d)
  std::vector<Var> free_weights;     // K tensors of shape (N/2) or (N)
  std::vector<Var> free_log_scales;  // same shapes as free_weights
  std::vector<Var> weight_rows;      // K tensors of shape (N)
  std::vector<Var> scale_rows;       // K tensors of shape (N), log-scales
};

struct Trainability {
  bool supports = true;
  bool weights = true;
  bool scales = true;
};

/// Freeze flags and mode folded together with the network's own frozen-scale
/// marker.
Trainability resolve_trainability(const TrainConfig& config, const WarpingNetwork& net);

BoundWarpings bind_warpings(Tape& tape, const WarpingNetwork& net, const Trainability& train);

/// z + eps * grad f_k(z) / |grad f_k(z)| as a tape graph; gradients flow into
/// warping k's parameters. Callers must ensure the gradient is non-degenerate.
Var latent_shift_graph(Tape& tape, const BoundWarpings& bound, int k, Var z, double eps_signed);

/// Loss graph for one sample: shift, render pair, reconstruct, composite loss.
struct SampleGraph {
  Var loss;
  Var logits;
  Var eps_pred;
};
SampleGraph build_sample_graph(Tape& tape, const BoundWarpings& warpings,
                               const Reconstructor& recon, const Reconstructor::Bound& bound,
                               const SyntheticGenerator& gen, const TrainSample& s,
                               double lambda);

struct StepReport {
  double loss = 0.0;          // batch mean composite loss
  double cls_accuracy = 0.0;  // fraction in [0, 1]
  double reg_mae = 0.0;       // mean |eps_pred - eps_signed|
  int resampled = 0;          // samples whose z had to be redrawn
};

/// Optimizer state plus per-sample workspaces. The workspaces make batch
/// gradients a fixed-order sum of per-sample gradients, so results do not
/// depend on WARPSPACE_THREADS.
class TrainState {
 public:
  TrainState(const WarpingNetwork& net, const Reconstructor& recon, const TrainConfig& config);

  AdamConfig warp_adam;
  AdamConfig recon_adam;
  std::vector<AdamState> center_states;   // per warping
  std::vector<AdamState> weight_states;   // per warping
  std::vector<AdamState> scale_states;    // per warping
  std::vector<AdamState> recon_states;    // per named tensor
  Rng resample_rng;

  struct SampleWorkspace {
    Tape tape;
    std::vector<Eigen::VectorXd> center_grads;
    std::vector<Eigen::VectorXd> weight_grads;
    std::vector<Eigen::VectorXd> scale_grads;
    std::vector<Eigen::VectorXd> recon_grads;
    double loss = 0.0;
    int predicted_k = 0;
    double eps_pred = 0.0;
  };
  std::vector<SampleWorkspace> workspaces;  // batch_size entries
};

/// One optimization step over a batch. Degenerate samples get their z redrawn
/// (keeping k and eps) up to 8 times; more than 10% initially degenerate, or
/// any sample exhausting its redraws, aborts with TrainingCollapse.
StepReport train_step(WarpingNetwork& net, Reconstructor& recon, const SyntheticGenerator& gen,
                      std::vector<TrainSample> batch, const TrainConfig& config,
                      TrainState& state);

struct TrainingLogEntry {
  int iteration = 0;
  double loss = 0.0;
  double cls_accuracy = 0.0;
  double reg_mae = 0.0;
};

struct TrainResult {
  WarpingNetwork net;
  Reconstructor recon;
  std::vector<TrainingLogEntry> log;  // every 100 iterations plus the last
};

/// Full run from scratch: builds the network per config.mode, the
/// reconstructor, and the generator, then iterates train_step. Deterministic
/// given config.
TrainResult train(const TrainConfig& config);

/// Same loop but starting from a caller-supplied network (fixed-direction
/// baselines set freeze flags in config accordingly).
TrainResult train_with_network(const TrainConfig& config, WarpingNetwork net);

}  // namespace warpspace
