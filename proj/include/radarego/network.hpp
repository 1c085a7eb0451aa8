#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "radarego/layers.hpp"
#include "radarego/sensing.hpp"

namespace radarego {

struct ConvLayerSpec {
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int pad = 1;
};

/// Architecture hyperparameters. The `paper` profile follows the published
/// sizes (9-conv mmWave extractor with receptive fields shrinking
/// 7x7 -> 5x5 -> 3x3, 2x512 LSTM, 128/64/6 FC head, dropout 0.25); `toy`
/// shrinks widths for CPU-scale training; `micro` is a gradient-check size.
struct NetworkConfig {
  int rows = 32;
  int cols = 128;
  std::vector<ConvLayerSpec> conv_plan;
  int n_m = 256;  // mmWave feature length
  int n_i = 64;   // inertial feature length
  int n_v = 256;  // third-modality (depth) feature length
  int imu_input = 6;
  int imu_hidden = 64;
  bool use_third_modality = false;
  int lstm_hidden = 512;
  int lstm_layers = 2;
  std::vector<int> fc_sizes = {128, 64, 6};
  double dropout_rate = 0.25;
  double leaky_slope = 0.1;
  double gamma = 0.001;
  AttentionActivation attention_activation = AttentionActivation::kSigmoid;

  static NetworkConfig paper(bool third_modality = false);
  static NetworkConfig toy(bool third_modality = false);
  static NetworkConfig micro(bool third_modality = true);
  static NetworkConfig by_name(const std::string& profile, bool third_modality);

  void validate() const;
  /// Spatial dims and channel count after the conv stack.
  void conv_output(int& channels, int& out_rows, int& out_cols) const;
  int fused_length() const { return n_m + n_i + (use_third_modality ? n_v : 0); }

  std::map<std::string, std::string> to_kv() const;
  static NetworkConfig from_kv(const std::map<std::string, std::string>& kv);
};

/// Dataset statistics subtracted from inputs; learned at training time and
/// carried in the checkpoint.
struct Normalization {
  double mmwave_mean = 0.0;
  double depth_mean = 0.0;
  double imu_mean = 0.0;
};

/// Inputs for one consecutive-frame pair.
struct PairInput {
  Tensor mmwave;                  // [2, rows, cols] stacked panoramic pair
  std::vector<Tensor> imu_steps;  // inter-frame IMU window, each [imu_input]
  Tensor depth;                   // [2, rows, cols], only with a third modality
};

using OptimizerBlobs = std::map<std::string, std::vector<double>>;

/// The full egomotion regressor: per-sensor subnets, two-stage
/// self/cross attention fusion, a 2-layer LSTM over the fused features and
/// an FC head emitting a 6-vector [t, r] per frame pair.
class EgoNet {
 public:
  EgoNet(NetworkConfig cfg, std::uint64_t seed);

  const NetworkConfig& config() const { return cfg_; }
  LayerParams& params() { return params_; }
  const LayerParams& params() const { return params_; }
  Normalization& normalization() { return norm_; }
  const Normalization& normalization() const { return norm_; }

  /// Forward over consecutive pairs. `state` carries the temporal LSTM
  /// across calls (zero state when null). Dropout draws from `dropout_rng`
  /// only when training.
  std::vector<Tensor> forward(std::span<const PairInput> pairs, LstmState* state = nullptr,
                              bool training = false,
                              std::mt19937_64* dropout_rng = nullptr) const;

  std::int64_t param_count() const;

 private:
  Tensor conv_subnet(const std::string& prefix, const Tensor& stacked_pair) const;
  Tensor imu_subnet(const std::vector<Tensor>& steps) const;
  Tensor fuse(const Tensor& z_m, const Tensor& z_i, const Tensor* z_v) const;

  NetworkConfig cfg_;
  LayerParams params_;
  Normalization norm_;
};

/// Builds the pair input for frames (prev, curr) using the model's
/// normalization. Requires dense clouds when the third modality is on.
PairInput make_pair_input(const SensorFrame& prev, const SensorFrame& curr,
                          const NetworkConfig& cfg, const PanoGeometry& geom,
                          const Normalization& norm);

/// One relative pose per consecutive frame pair; dropout disabled, LSTM
/// state carried across the sequence.
std::vector<RelativePose> infer_sequence(const EgoNet& model,
                                         std::span<const SensorFrame> frames,
                                         const PanoGeometry& geom);

// Checkpoint: single binary file, little-endian.
//   magic "RGOCKPT1" | u32 version=1
//   u32 n_meta   { u32 klen, key, u32 vlen, value } ...   (config echo etc.)
//   u32 n_params { u32 nlen, name, u32 rank, u32 dims[rank], f64 data[] } ...
//   u32 n_opt    { u32 nlen, name, u64 count, f64 data[] } ...

void save_checkpoint(const std::filesystem::path& path, const EgoNet& model,
                     const std::map<std::string, std::string>& extra_meta = {},
                     const OptimizerBlobs* optimizer = nullptr);

EgoNet load_checkpoint(const std::filesystem::path& path,
                       std::map<std::string, std::string>* meta_out = nullptr,
                       OptimizerBlobs* optimizer_out = nullptr);

}  // namespace radarego
