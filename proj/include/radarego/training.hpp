#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "radarego/network.hpp"
#include "radarego/simulator.hpp"

namespace radarego {

struct TrainConfig {
  double lr = 1e-5;            // initial learning rate
  double lr_decay = 0.75;      // multiplier applied every decay_every epochs
  int decay_every = 25;
  int epochs = 200;
  int subsequence_length = 16; // consecutive pairs per optimization step
  double rms_decay = 0.9;
  double rms_eps = 1e-8;
  std::uint64_t seed = 0;
  int subsample = 1;           // keep every Nth frame before pairing
};

struct RmsPropState {
  OptimizerBlobs acc;  // squared-gradient accumulators, keyed by parameter name
};

/// One RMSProp update over every parameter that accumulated a gradient:
/// acc <- decay*acc + (1-decay)*g^2; p <- p - lr * g / sqrt(acc + eps).
void rmsprop_step(LayerParams& params, RmsPropState& state, double lr, double decay,
                  double eps);

/// Mean over the batch of ||t_err||^2 + gamma*||r_err||^2, rotation
/// residuals wrapped to (-pi, pi]. Inputs are flattened K x [t, r]
/// 6-vectors.
double pose_loss(std::span<const double> pred, std::span<const double> truth, double gamma);

/// Differentiable form of the same loss over per-pair prediction tensors.
Tensor pose_loss_graph(std::span<const Tensor> preds, std::span<const RelativePose> truths,
                       double gamma);

/// Keeps every Nth frame; the retained frames' IMU windows absorb the
/// samples of the skipped frames so inter-frame motion is still covered.
std::vector<SensorFrame> subsample_frames(std::span<const SensorFrame> frames, int subsample);

struct PreparedPair {
  PairInput input;
  RelativePose target;
  double timestamp = 0.0;  // of the later frame
};

struct PreparedDataset {
  std::vector<std::vector<PreparedPair>> sequences;
  Normalization norm;
};

/// Encodes sequences into network inputs: frame sub-sampling, panoramic
/// encoding, dataset mean subtraction, ground-truth relative-pose targets.
PreparedDataset prepare_dataset(std::span<const SimulatedSequence> sequences,
                                const NetworkConfig& cfg, const PanoGeometry& geom,
                                int subsample);

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
};

/// Training loop: non-overlapping chunks of subsequence_length consecutive
/// pairs, seeded shuffle per epoch, RMSProp with the staircase LR decay.
/// Deterministic for a fixed seed. start_epoch offsets the LR schedule
/// when resuming.
std::vector<EpochRecord> train(EgoNet& model, const PreparedDataset& data,
                               const TrainConfig& tc, RmsPropState* opt_state = nullptr,
                               int start_epoch = 0);

/// Convenience wrapper: prepares the dataset (setting the model's
/// normalization from it) and trains.
std::vector<EpochRecord> train(EgoNet& model, std::span<const SimulatedSequence> sequences,
                               const TrainConfig& tc, const PanoGeometry& geom);

// Gradient verification against central finite differences.

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double worst = 0.0;
  bool all_pass = true;
};

/// Max over elements of |analytic - numeric| / max(1, |analytic| + |numeric|)
/// for the given leaves, probing loss_fn at +-step. `corrupt` offsets the
/// first analytic gradient (negative-control hook).
double max_rel_grad_error(const std::function<Tensor()>& loss_fn, std::span<Tensor> leaves,
                          double step = 1e-5, double corrupt = 0.0);

/// Checks every layer type plus the assembled micro network.
GradCheckReport run_grad_checks(std::uint64_t seed, double corrupt = 0.0);

}  // namespace radarego
