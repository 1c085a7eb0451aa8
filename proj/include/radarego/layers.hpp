#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "radarego/tensor.hpp"

namespace radarego {

/// Named parameter store. Hierarchical dot-separated names; map ordering
/// makes iteration (and therefore checkpoints and optimizer sweeps)
/// deterministic.
using LayerParams = std::map<std::string, Tensor>;

enum class AttentionActivation { kSigmoid, kSoftmax };

// Parameter initialization: weights uniform in +-1/sqrt(fan_in), biases zero.

Tensor init_weight(Shape shape, int fan_in, std::mt19937_64& rng);

void init_linear(LayerParams& params, const std::string& prefix, int in, int out,
                 std::mt19937_64& rng);
Tensor apply_linear(const LayerParams& params, const std::string& prefix, const Tensor& x);

void init_conv(LayerParams& params, const std::string& prefix, int in_channels,
               int out_channels, int kernel, std::mt19937_64& rng);
Tensor apply_conv(const LayerParams& params, const std::string& prefix, const Tensor& x,
                  int stride, int pad);

// LSTM with sigmoid gates and tanh candidate/cell activation, gate order
// (input, forget, cell, output). Parameters per layer l:
//   prefix.l<l>.w_ih [4H, in], prefix.l<l>.w_hh [4H, H],
//   prefix.l<l>.b_ih [4H],     prefix.l<l>.b_hh [4H]

void init_lstm(LayerParams& params, const std::string& prefix, int input, int hidden,
               int layers, std::mt19937_64& rng);

struct LstmState {
  std::vector<Tensor> h, c;  // one per layer

  static LstmState zeros(int layers, int hidden);
};

/// One step through all layers; updates `state` in place and returns the
/// top layer's hidden output.
Tensor lstm_step(const LayerParams& params, const std::string& prefix, const Tensor& x,
                 LstmState& state, int layers, int hidden);

/// Runs a sequence from a zero initial state; one output per input.
std::vector<Tensor> lstm_forward(const LayerParams& params, const std::string& prefix,
                                 std::span<const Tensor> sequence, int layers, int hidden);

// Attention. A mask is sigma[(W_rho z) elementwise* (W_phi z)]: per-element
// similarity of the two learned embeddings of the conditioning feature,
// squashed by the activation.

/// Mask conditioned on `source`, sized to gate a `target_len` feature.
/// Weights prefix.rho and prefix.phi are [target_len, len(source)].
Tensor attention_mask(const LayerParams& params, const std::string& prefix,
                      const Tensor& source, AttentionActivation act);

void init_attention(LayerParams& params, const std::string& prefix, int source_len,
                    int target_len, std::mt19937_64& rng);

/// Self-attention: mask from z gates z itself. Returns (gated z, mask).
std::pair<Tensor, Tensor> self_attention(const LayerParams& params,
                                         const std::string& prefix, const Tensor& z,
                                         AttentionActivation act = AttentionActivation::kSigmoid);

void init_self_attention(LayerParams& params, const std::string& prefix, int len,
                         std::mt19937_64& rng);

/// Two-modality cross-attention: the mask conditioned on z_i gates z_m and
/// vice versa; the output concatenates [gated z_i ; gated z_m].
/// Weight blocks: prefix.i_to_m.{rho,phi} [Nm,Ni], prefix.m_to_i.{rho,phi} [Ni,Nm].
Tensor cross_attention_pair(const LayerParams& params, const std::string& prefix,
                            const Tensor& z_m, const Tensor& z_i,
                            AttentionActivation act = AttentionActivation::kSigmoid);

void init_cross_attention_pair(LayerParams& params, const std::string& prefix, int n_m,
                               int n_i, std::mt19937_64& rng);

/// Leave-one-out cross-attention for three or more modalities: each
/// modality is gated by a mask conditioned on the concatenation of all the
/// others; outputs concatenate in declared order. Weight blocks:
/// prefix.to_<name>.{rho,phi} [N_name, sum of other lengths].
Tensor cross_attention_loo(const LayerParams& params, const std::string& prefix,
                           std::span<const std::pair<std::string, Tensor>> features,
                           AttentionActivation act = AttentionActivation::kSigmoid);

void init_cross_attention_loo(LayerParams& params, const std::string& prefix,
                              std::span<const std::pair<std::string, int>> lengths,
                              std::mt19937_64& rng);

enum class AttentionMode { kSingleStage, kMixed };

/// Attention weight-matrix entry count for a three-modality fusion.
/// Single-stage: 2(Nm+Ni+Nv)^2. Mixed: 2(Nm^2+Ni^2+Nv^2) +
/// 4(NmNi + NvNi + NmNv). The two are equal for every triple.
std::int64_t attention_param_count(AttentionMode mode, std::int64_t n_m, std::int64_t n_i,
                                   std::int64_t n_v);

}  // namespace radarego
