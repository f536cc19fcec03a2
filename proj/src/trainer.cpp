// Copyright (c) 2026, the warpspace authors
// SPDX-License-Identifier: Apache-2.0
//
#include "warpspace/trainer.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "warpspace/errors.hpp"
#include "warpspace/parallel.hpp"
#include "warpspace/warp.hpp"

namespace warpspace {

void TrainConfig::validate() const {
  std::vector<std::string> issues;
  if (num_warpings < 2) issues.push_back("num_warpings must be >= 2");
  if (supports_per_warping < 2 || supports_per_warping % 2 != 0)
    issues.push_back("supports_per_warping must be even and >= 2");
  if (dim < 1) issues.push_back("dim must be >= 1");
  if (image_size < Reconstructor::min_image_size())
    issues.push_back("image_size must be >= " + std::to_string(Reconstructor::min_image_size()) +
                     " for the three-stage trunk");
  if (batch_size < 1) issues.push_back("batch_size must be >= 1");
  if (iterations < 0) issues.push_back("iterations must be >= 0");
  if (lambda < 0.0) issues.push_back("lambda must be >= 0");
  // eps_min must clear zero by a margin: the regression target has to be
  // resolvable at toy image resolution.
  if (eps_min < 0.05) issues.push_back("eps_min must be >= 0.05");
  if (!(eps_min < eps_max)) issues.push_back("eps_min must be < eps_max");
  if (warp_learning_rate <= 0.0) issues.push_back("warp_learning_rate must be > 0");
  if (recon_learning_rate <= 0.0) issues.push_back("recon_learning_rate must be > 0");
  if (!issues.empty()) throw ConfigError(std::move(issues));
}

TrainSample sample(Rng& rng, const TrainConfig& config) {
  TrainSample s;
  s.z = rng.normal_vector(config.dim);
  s.k = rng.uniform_int(config.num_warpings);
  s.eps_signed = rng.uniform(config.eps_min, config.eps_max) * rng.sign();
  return s;
}

Var composite_loss(Var logits, int k, Var eps_pred, double eps_signed, double lambda) {
  Var ce = cross_entropy(logits, k);
  Var mae = mean_absolute_error(eps_pred, eps_signed);
  return add(ce, scale(mae, lambda));
}

Trainability resolve_trainability(const TrainConfig& config, const WarpingNetwork& net) {
  Trainability t;
  t.supports = !config.freeze_supports;
  const bool linear = config.mode == TrainMode::kLinearBaseline;
  t.weights = !config.freeze_weights && !linear;
  t.scales = !config.freeze_scales && !linear && !net.scales_frozen();
  return t;
}

BoundWarpings bind_warpings(Tape& tape, const WarpingNetwork& net, const Trainability& train) {
  const int num_warpings = net.num_warpings();
  const int n = net.supports_per_warping();
  const int dim = net.dim();
  BoundWarpings bound;
  bound.centers.reserve(num_warpings);
  bound.free_weights.reserve(num_warpings);
  bound.free_log_scales.reserve(num_warpings);
  bound.weight_rows.reserve(num_warpings);
  bound.scale_rows.reserve(num_warpings);
  for (int k = 0; k < num_warpings; ++k) {
    const RowMat& c = net.centers(k);
    bound.centers.push_back(tape.leaf(
        {n, dim},
        Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(n) * dim),
        train.supports));
    bound.free_weights.push_back(tape.leaf(
        {static_cast<int>(net.free_weights(k).size())}, net.free_weights(k), train.weights));
    bound.free_log_scales.push_back(tape.leaf(
        {static_cast<int>(net.free_log_scales(k).size())}, net.free_log_scales(k), train.scales));
    if (net.bipolar()) {
      bound.weight_rows.push_back(bipolar_expand(bound.free_weights[k]));
      bound.scale_rows.push_back(pair_duplicate(bound.free_log_scales[k]));
    } else {
      bound.weight_rows.push_back(bound.free_weights[k]);
      bound.scale_rows.push_back(bound.free_log_scales[k]);
    }
  }
  return bound;
}

Var latent_shift_graph(Tape& tape, const BoundWarpings& bound, int k, Var z, double eps_signed) {
  if (k < 0 || k >= static_cast<int>(bound.centers.size()))
    throw ContractViolation("latent_shift_graph: warping index out of range");
  const int n = bound.centers[k].shape()[0];
  const int dim = bound.centers[k].shape()[1];

  Var gamma = exp(bound.scale_rows[k]);                       // (N)
  Var diff = sub_rowvec(bound.centers[k], z);                 // (N, d): s_i - z
  Var sq_dist = row_sums(square(diff));                       // (N): |z - s_i|^2
  Var radial = exp(neg(mul(gamma, sq_dist)));                 // (N)
  Var coeff = mul(mul(bound.weight_rows[k], gamma), radial);  // (N)
  // grad f = -2 sum_i coeff_i (z - s_i) = 2 * coeff^T (s - z).
  Var grad = scale(matmul(reshape(coeff, {1, n}), diff), 2.0);  // (1, d)
  Var grad_norm = sqrt(reduce_sum(square(grad)));               // (1)
  Var delta = scale(div(grad, grad_norm), eps_signed);          // (1, d)
  return add(z, reshape(delta, {dim}));
}

SampleGraph build_sample_graph(Tape& tape, const BoundWarpings& warpings,
                               const Reconstructor& recon, const Reconstructor::Bound& bound,
                               const SyntheticGenerator& gen, const TrainSample& s,
                               double lambda) {
  Var z = tape.leaf({gen.dim()}, s.z, /*requires_grad=*/false);
  Var z_shifted = latent_shift_graph(tape, warpings, s.k, z, s.eps_signed);
  Var image_a = gen.build_image(tape, z);
  Var image_b = gen.build_image(tape, z_shifted);
  Var pair = concat_channels(image_a, image_b);
  const Reconstructor::Output out = recon.forward(bound, pair);
  Var loss = composite_loss(out.logits, s.k, out.shift_pred, s.eps_signed, lambda);
  return {loss, out.logits, out.shift_pred};
}

TrainState::TrainState(const WarpingNetwork& net, const Reconstructor& recon,
                       const TrainConfig& config)
    : resample_rng(split_seed(config.seed, 4)) {
  warp_adam.learning_rate = config.warp_learning_rate;
  recon_adam.learning_rate = config.recon_learning_rate;
  const int num_warpings = net.num_warpings();
  center_states.resize(num_warpings);
  weight_states.resize(num_warpings);
  scale_states.resize(num_warpings);
  recon_states.resize(recon.parameters().size());
  workspaces.resize(config.batch_size);
  for (SampleWorkspace& ws : workspaces) {
    ws.center_grads.resize(num_warpings);
    ws.weight_grads.resize(num_warpings);
    ws.scale_grads.resize(num_warpings);
    ws.recon_grads.resize(recon.parameters().size());
  }
}

namespace {

bool degenerate_at(const WarpingNetwork& net, const TrainSample& s) {
  return grad_warp(net.warping(s.k), s.z).norm() <= kDegenerateGradientThreshold;
}

int argmax_index(const Eigen::VectorXd& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

}  // namespace

StepReport train_step(WarpingNetwork& net, Reconstructor& recon, const SyntheticGenerator& gen,
                      std::vector<TrainSample> batch, const TrainConfig& config,
                      TrainState& state) {
  const int batch_size = static_cast<int>(batch.size());
  if (batch_size == 0) throw ContractViolation("train_step: empty batch");
  if (batch_size > static_cast<int>(state.workspaces.size()))
    throw ContractViolation("train_step: batch larger than the state's workspaces");

  // Degenerate gradients: redraw z (keeping k and eps) up to 8 times per
  // sample. Too many degenerate draws means the warpings have collapsed.
  int initially_degenerate = 0;
  for (TrainSample& s : batch)
    if (degenerate_at(net, s)) ++initially_degenerate;
  if (initially_degenerate * 10 > batch_size)
    throw TrainingCollapse("aborting: " + std::to_string(initially_degenerate) + " of " +
                           std::to_string(batch_size) +
                           " samples hit degenerate gradients (over 10% of the batch)");
  int resampled = 0;
  for (TrainSample& s : batch) {
    int attempts = 0;
    while (degenerate_at(net, s)) {
      if (++attempts > 8)
        throw TrainingCollapse("aborting: a sample stayed degenerate after 8 resampled latents");
      s.z = state.resample_rng.normal_vector(net.dim());
      ++resampled;
    }
  }

  const Trainability train = resolve_trainability(config, net);
  const int num_warpings = net.num_warpings();
  const std::size_t recon_count = recon.parameters().size();

  parallel_for(batch_size, [&](int i) {
    TrainState::SampleWorkspace& ws = state.workspaces[i];
    ws.tape.reset();
    const BoundWarpings warpings = bind_warpings(ws.tape, net, train);
    const Reconstructor::Bound bound = recon.bind(ws.tape, /*requires_grad=*/true);
    const SampleGraph graph =
        build_sample_graph(ws.tape, warpings, recon, bound, gen, batch[i], config.lambda);
    backward(graph.loss);

    ws.loss = graph.loss.value();
    ws.predicted_k = argmax_index(graph.logits.values());
    ws.eps_pred = graph.eps_pred.value();
    for (int k = 0; k < num_warpings; ++k) {
      if (train.supports) ws.center_grads[k] = warpings.centers[k].grad();
      if (train.weights) ws.weight_grads[k] = warpings.free_weights[k].grad();
      if (train.scales) ws.scale_grads[k] = warpings.free_log_scales[k].grad();
    }
    for (std::size_t p = 0; p < recon_count; ++p) ws.recon_grads[p] = bound.vars[p].grad();
  });

  // Fixed-order reduction over samples keeps results independent of the
  // thread count. Batch loss is the arithmetic mean, so grads scale by 1/B.
  StepReport report;
  report.resampled = resampled;
  const double inv_batch = 1.0 / batch_size;
  std::vector<Eigen::VectorXd> center_acc(num_warpings), weight_acc(num_warpings),
      scale_acc(num_warpings), recon_acc(recon_count);
  for (int i = 0; i < batch_size; ++i) {
    const TrainState::SampleWorkspace& ws = state.workspaces[i];
    report.loss += ws.loss;
    if (ws.predicted_k == batch[i].k) report.cls_accuracy += 1.0;
    report.reg_mae += std::abs(ws.eps_pred - batch[i].eps_signed);
    for (int k = 0; k < num_warpings; ++k) {
      auto accumulate = [i](Eigen::VectorXd& acc, const Eigen::VectorXd& g) {
        if (i == 0)
          acc = g;
        else
          acc += g;
      };
      if (train.supports) accumulate(center_acc[k], ws.center_grads[k]);
      if (train.weights) accumulate(weight_acc[k], ws.weight_grads[k]);
      if (train.scales) accumulate(scale_acc[k], ws.scale_grads[k]);
    }
    for (std::size_t p = 0; p < recon_count; ++p) {
      if (i == 0)
        recon_acc[p] = ws.recon_grads[p];
      else
        recon_acc[p] += ws.recon_grads[p];
    }
  }
  report.loss *= inv_batch;
  report.cls_accuracy *= inv_batch;
  report.reg_mae *= inv_batch;

  for (int k = 0; k < num_warpings; ++k) {
    if (train.supports) {
      Eigen::Map<Eigen::VectorXd> flat(net.centers(k).data(), net.centers(k).size());
      adam_step(flat, center_acc[k] * inv_batch, state.center_states[k], state.warp_adam);
    }
    if (train.weights)
      adam_step(net.free_weights(k), weight_acc[k] * inv_batch, state.weight_states[k],
                state.warp_adam);
    if (train.scales)
      adam_step(net.free_log_scales(k), scale_acc[k] * inv_batch, state.scale_states[k],
                state.warp_adam);
  }
  for (std::size_t p = 0; p < recon_count; ++p)
    adam_step(recon.parameters()[p].value, recon_acc[p] * inv_batch, state.recon_states[p],
              state.recon_adam);
  return report;
}

TrainResult train(const TrainConfig& config) {
  config.validate();
  WarpingNetwork net =
      config.mode == TrainMode::kLinearBaseline
          ? WarpingNetwork::linear_directions_mode(config.num_warpings, config.dim,
                                                   split_seed(config.seed, 0))
          : WarpingNetwork::init(config.num_warpings, config.supports_per_warping, config.dim,
                                 split_seed(config.seed, 0), config.network_init);
  return train_with_network(config, std::move(net));
}

TrainResult train_with_network(const TrainConfig& config, WarpingNetwork net) {
  config.validate();
  if (net.dim() != config.dim || net.num_warpings() != config.num_warpings)
    throw ContractViolation("train_with_network: network does not match config dimensions");

  Reconstructor recon =
      Reconstructor::init(config.num_warpings, /*in_channels=*/2, split_seed(config.seed, 1));
  const SyntheticGenerator gen =
      SyntheticGenerator::create(config.dim, config.image_size, config.gen_seed);
  TrainState state(net, recon, config);
  Rng sampler(split_seed(config.seed, 3));

  std::vector<TrainingLogEntry> log;
  for (int iter = 1; iter <= config.iterations; ++iter) {
    std::vector<TrainSample> batch;
    batch.reserve(config.batch_size);
    for (int b = 0; b < config.batch_size; ++b) batch.push_back(sample(sampler, config));
    const StepReport report = train_step(net, recon, gen, std::move(batch), config, state);
    if (iter % 100 == 0 || iter == config.iterations)
      log.push_back({iter, report.loss, report.cls_accuracy, report.reg_mae});
  }
  return {std::move(net), std::move(recon), std::move(log)};
}

}  // namespace warpspace
