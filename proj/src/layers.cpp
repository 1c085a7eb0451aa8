#include "radarego/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "radarego/rng.hpp"

namespace radarego {

namespace {

const Tensor& param(const LayerParams& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end())
    throw std::invalid_argument("missing parameter: " + name);
  return it->second;
}

Tensor apply_activation(const Tensor& t, AttentionActivation act) {
  return act == AttentionActivation::kSigmoid ? sigmoid(t) : softmax(t);
}

}  // namespace

Tensor init_weight(Shape shape, int fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t = Tensor::zeros(std::move(shape), /*requires_grad=*/true);
  for (double& v : t.mutable_data()) v = uniform_range(rng, -bound, bound);
  return t;
}

void init_linear(LayerParams& params, const std::string& prefix, int in, int out,
                 std::mt19937_64& rng) {
  params[prefix + ".w"] = init_weight({out, in}, in, rng);
  params[prefix + ".b"] = Tensor::zeros({out}, true);
}

Tensor apply_linear(const LayerParams& params, const std::string& prefix, const Tensor& x) {
  return linear(param(params, prefix + ".w"), x, param(params, prefix + ".b"));
}

void init_conv(LayerParams& params, const std::string& prefix, int in_channels,
               int out_channels, int kernel, std::mt19937_64& rng) {
  params[prefix + ".w"] =
      init_weight({out_channels, in_channels, kernel, kernel}, in_channels * kernel * kernel, rng);
  params[prefix + ".b"] = Tensor::zeros({out_channels}, true);
}

Tensor apply_conv(const LayerParams& params, const std::string& prefix, const Tensor& x,
                  int stride, int pad) {
  return conv2d(x, param(params, prefix + ".w"), param(params, prefix + ".b"), stride, pad);
}

void init_lstm(LayerParams& params, const std::string& prefix, int input, int hidden,
               int layers, std::mt19937_64& rng) {
  for (int l = 0; l < layers; ++l) {
    const int in = l == 0 ? input : hidden;
    const std::string base = prefix + ".l" + std::to_string(l);
    params[base + ".w_ih"] = init_weight({4 * hidden, in}, in, rng);
    params[base + ".w_hh"] = init_weight({4 * hidden, hidden}, hidden, rng);
    params[base + ".b_ih"] = Tensor::zeros({4 * hidden}, true);
    params[base + ".b_hh"] = Tensor::zeros({4 * hidden}, true);
  }
}

LstmState LstmState::zeros(int layers, int hidden) {
  LstmState s;
  for (int l = 0; l < layers; ++l) {
    s.h.push_back(Tensor::zeros({hidden}));
    s.c.push_back(Tensor::zeros({hidden}));
  }
  return s;
}

Tensor lstm_step(const LayerParams& params, const std::string& prefix, const Tensor& x,
                 LstmState& state, int layers, int hidden) {
  if (static_cast<int>(state.h.size()) != layers)
    throw std::invalid_argument("lstm_step: state layer count mismatch");
  Tensor inp = x;
  for (int l = 0; l < layers; ++l) {
    const std::string base = prefix + ".l" + std::to_string(l);
    Tensor gates = add(linear(param(params, base + ".w_ih"), inp, param(params, base + ".b_ih")),
                       linear(param(params, base + ".w_hh"), state.h[l], param(params, base + ".b_hh")));
    Tensor i = sigmoid(slice(gates, 0, hidden));
    Tensor f = sigmoid(slice(gates, hidden, hidden));
    Tensor g = tanh_op(slice(gates, 2 * hidden, hidden));
    Tensor o = sigmoid(slice(gates, 3 * hidden, hidden));
    Tensor c = add(mul(f, state.c[l]), mul(i, g));
    Tensor h = mul(o, tanh_op(c));
    state.c[l] = c;
    state.h[l] = h;
    inp = h;
  }
  return inp;
}

std::vector<Tensor> lstm_forward(const LayerParams& params, const std::string& prefix,
                                 std::span<const Tensor> sequence, int layers, int hidden) {
  LstmState state = LstmState::zeros(layers, hidden);
  std::vector<Tensor> out;
  out.reserve(sequence.size());
  for (const Tensor& x : sequence)
    out.push_back(lstm_step(params, prefix, x, state, layers, hidden));
  return out;
}

void init_attention(LayerParams& params, const std::string& prefix, int source_len,
                    int target_len, std::mt19937_64& rng) {
  params[prefix + ".rho"] = init_weight({target_len, source_len}, source_len, rng);
  params[prefix + ".phi"] = init_weight({target_len, source_len}, source_len, rng);
}

Tensor attention_mask(const LayerParams& params, const std::string& prefix,
                      const Tensor& source, AttentionActivation act) {
  const Tensor rho = matvec(param(params, prefix + ".rho"), source);
  const Tensor phi = matvec(param(params, prefix + ".phi"), source);
  return apply_activation(mul(rho, phi), act);
}

void init_self_attention(LayerParams& params, const std::string& prefix, int len,
                         std::mt19937_64& rng) {
  init_attention(params, prefix, len, len, rng);
}

std::pair<Tensor, Tensor> self_attention(const LayerParams& params, const std::string& prefix,
                                         const Tensor& z, AttentionActivation act) {
  Tensor mask = attention_mask(params, prefix, z, act);
  return {mul(mask, z), mask};
}

void init_cross_attention_pair(LayerParams& params, const std::string& prefix, int n_m,
                               int n_i, std::mt19937_64& rng) {
  init_attention(params, prefix + ".i_to_m", n_i, n_m, rng);
  init_attention(params, prefix + ".m_to_i", n_m, n_i, rng);
}

Tensor cross_attention_pair(const LayerParams& params, const std::string& prefix,
                            const Tensor& z_m, const Tensor& z_i, AttentionActivation act) {
  const Tensor mask_i_to_m = attention_mask(params, prefix + ".i_to_m", z_i, act);
  const Tensor mask_m_to_i = attention_mask(params, prefix + ".m_to_i", z_m, act);
  const Tensor parts[] = {mul(mask_m_to_i, z_i), mul(mask_i_to_m, z_m)};
  return concat(parts);
}

void init_cross_attention_loo(LayerParams& params, const std::string& prefix,
                              std::span<const std::pair<std::string, int>> lengths,
                              std::mt19937_64& rng) {
  if (lengths.size() < 3)
    throw std::invalid_argument("cross_attention_loo: needs at least 3 modalities");
  int total = 0;
  for (const auto& [name, len] : lengths) total += len;
  for (const auto& [name, len] : lengths)
    init_attention(params, prefix + ".to_" + name, total - len, len, rng);
}

Tensor cross_attention_loo(const LayerParams& params, const std::string& prefix,
                           std::span<const std::pair<std::string, Tensor>> features,
                           AttentionActivation act) {
  if (features.size() < 3)
    throw std::invalid_argument("cross_attention_loo: needs at least 3 modalities");
  std::vector<Tensor> gated;
  gated.reserve(features.size());
  for (std::size_t k = 0; k < features.size(); ++k) {
    std::vector<Tensor> others;
    for (std::size_t j = 0; j < features.size(); ++j)
      if (j != k) others.push_back(features[j].second);
    const Tensor rest = concat(others);
    const Tensor mask = attention_mask(params, prefix + ".to_" + features[k].first, rest, act);
    gated.push_back(mul(mask, features[k].second));
  }
  return concat(gated);
}

std::int64_t attention_param_count(AttentionMode mode, std::int64_t n_m, std::int64_t n_i,
                                   std::int64_t n_v) {
  if (n_m <= 0 || n_i <= 0 || n_v <= 0)
    throw std::invalid_argument("attention_param_count: lengths must be positive");
  if (mode == AttentionMode::kSingleStage) {
    const std::int64_t n = n_m + n_i + n_v;
    return 2 * n * n;
  }
  return 2 * (n_m * n_m + n_i * n_i + n_v * n_v) +
         4 * (n_m * n_i + n_v * n_i + n_m * n_v);
}

}  // namespace radarego
