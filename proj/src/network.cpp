#include "radarego/network.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "radarego/errors.hpp"
#include "radarego/rng.hpp"

namespace radarego {

namespace {

std::vector<ConvLayerSpec> nine_layer_plan(const std::vector<int>& channels) {
  // Receptive fields shrink 7x7 -> 5x5 -> 3x3; every other layer strides.
  const int kernels[9] = {7, 7, 5, 5, 3, 3, 3, 3, 3};
  const int strides[9] = {2, 1, 2, 1, 2, 1, 2, 1, 2};
  std::vector<ConvLayerSpec> plan(9);
  for (int i = 0; i < 9; ++i)
    plan[i] = {channels[i], kernels[i], strides[i], kernels[i] / 2};
  return plan;
}

}  // namespace

NetworkConfig NetworkConfig::paper(bool third_modality) {
  NetworkConfig c;
  c.conv_plan = nine_layer_plan({16, 32, 32, 64, 64, 128, 128, 128, 128});
  c.use_third_modality = third_modality;
  return c;
}

NetworkConfig NetworkConfig::toy(bool third_modality) {
  NetworkConfig c;
  c.conv_plan = nine_layer_plan({4, 4, 8, 8, 8, 8, 16, 16, 16});
  c.n_m = 64;
  c.n_i = 16;
  c.n_v = 64;
  c.imu_hidden = 16;
  c.lstm_hidden = 64;
  c.use_third_modality = third_modality;
  return c;
}

NetworkConfig NetworkConfig::micro(bool third_modality) {
  NetworkConfig c;
  c.rows = 4;
  c.cols = 4;
  c.conv_plan = {{2, 3, 2, 1}, {2, 3, 1, 1}, {4, 3, 2, 1}};
  c.n_m = 4;
  c.n_i = 3;
  c.n_v = 4;
  c.imu_hidden = 3;
  c.lstm_hidden = 4;
  c.fc_sizes = {5, 4, 6};
  c.use_third_modality = third_modality;
  return c;
}

NetworkConfig NetworkConfig::by_name(const std::string& profile, bool third_modality) {
  if (profile == "paper") return paper(third_modality);
  if (profile == "toy") return toy(third_modality);
  if (profile == "micro") return micro(third_modality);
  throw usage_error("unknown network profile: " + profile);
}

void NetworkConfig::validate() const {
  if (rows <= 0 || cols <= 0 || conv_plan.empty())
    throw std::invalid_argument("network config: bad image/conv plan");
  if (n_m <= 0 || n_i <= 0 || n_v <= 0 || imu_input <= 0 || imu_hidden <= 0)
    throw std::invalid_argument("network config: feature lengths must be positive");
  if (lstm_hidden <= 0 || lstm_layers <= 0)
    throw std::invalid_argument("network config: bad LSTM sizes");
  if (fc_sizes.empty() || fc_sizes.back() != 6)
    throw std::invalid_argument("network config: FC head must end in 6 units");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw std::invalid_argument("network config: dropout rate in [0,1)");
  if (!(gamma > 0.0)) throw std::invalid_argument("network config: gamma must be positive");
  int c, h, w;
  conv_output(c, h, w);  // throws when the plan collapses the image
}

void NetworkConfig::conv_output(int& channels, int& out_rows, int& out_cols) const {
  int c = 2, h = rows, w = cols;
  for (const ConvLayerSpec& l : conv_plan) {
    h = (h + 2 * l.pad - l.kernel) / l.stride + 1;
    w = (w + 2 * l.pad - l.kernel) / l.stride + 1;
    c = l.out_channels;
    if (h <= 0 || w <= 0)
      throw std::invalid_argument("network config: conv plan collapses the image");
  }
  channels = c;
  out_rows = h;
  out_cols = w;
}

std::map<std::string, std::string> NetworkConfig::to_kv() const {
  std::map<std::string, std::string> kv;
  kv["rows"] = std::to_string(rows);
  kv["cols"] = std::to_string(cols);
  std::ostringstream plan;
  for (std::size_t i = 0; i < conv_plan.size(); ++i) {
    if (i) plan << ",";
    plan << conv_plan[i].out_channels << ":" << conv_plan[i].kernel << ":"
         << conv_plan[i].stride << ":" << conv_plan[i].pad;
  }
  kv["conv_plan"] = plan.str();
  kv["n_m"] = std::to_string(n_m);
  kv["n_i"] = std::to_string(n_i);
  kv["n_v"] = std::to_string(n_v);
  kv["imu_input"] = std::to_string(imu_input);
  kv["imu_hidden"] = std::to_string(imu_hidden);
  kv["use_third_modality"] = use_third_modality ? "1" : "0";
  kv["lstm_hidden"] = std::to_string(lstm_hidden);
  kv["lstm_layers"] = std::to_string(lstm_layers);
  std::ostringstream fc;
  for (std::size_t i = 0; i < fc_sizes.size(); ++i) {
    if (i) fc << ",";
    fc << fc_sizes[i];
  }
  kv["fc_sizes"] = fc.str();
  std::ostringstream num;
  num.precision(17);
  num << dropout_rate;
  kv["dropout_rate"] = num.str();
  num.str("");
  num << leaky_slope;
  kv["leaky_slope"] = num.str();
  num.str("");
  num << gamma;
  kv["gamma"] = num.str();
  kv["attention_activation"] =
      attention_activation == AttentionActivation::kSigmoid ? "sigmoid" : "softmax";
  return kv;
}

NetworkConfig NetworkConfig::from_kv(const std::map<std::string, std::string>& kv) {
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw data_error("checkpoint config missing key: " + key);
    return it->second;
  };
  NetworkConfig c;
  c.rows = std::stoi(get("rows"));
  c.cols = std::stoi(get("cols"));
  c.conv_plan.clear();
  {
    std::istringstream in(get("conv_plan"));
    std::string item;
    while (std::getline(in, item, ',')) {
      ConvLayerSpec l;
      if (std::sscanf(item.c_str(), "%d:%d:%d:%d", &l.out_channels, &l.kernel, &l.stride,
                      &l.pad) != 4)
        throw data_error("checkpoint config: bad conv plan entry '" + item + "'");
      c.conv_plan.push_back(l);
    }
  }
  c.n_m = std::stoi(get("n_m"));
  c.n_i = std::stoi(get("n_i"));
  c.n_v = std::stoi(get("n_v"));
  c.imu_input = std::stoi(get("imu_input"));
  c.imu_hidden = std::stoi(get("imu_hidden"));
  c.use_third_modality = get("use_third_modality") == "1";
  c.lstm_hidden = std::stoi(get("lstm_hidden"));
  c.lstm_layers = std::stoi(get("lstm_layers"));
  c.fc_sizes.clear();
  {
    std::istringstream in(get("fc_sizes"));
    std::string item;
    while (std::getline(in, item, ',')) c.fc_sizes.push_back(std::stoi(item));
  }
  c.dropout_rate = std::stod(get("dropout_rate"));
  c.leaky_slope = std::stod(get("leaky_slope"));
  c.gamma = std::stod(get("gamma"));
  c.attention_activation = get("attention_activation") == "softmax"
                               ? AttentionActivation::kSoftmax
                               : AttentionActivation::kSigmoid;
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

EgoNet::EgoNet(NetworkConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  auto rng = make_stream(seed, "init");

  int conv_c, conv_h, conv_w;
  cfg_.conv_output(conv_c, conv_h, conv_w);
  const int flat = conv_c * conv_h * conv_w;

  auto init_subnet = [&](const std::string& name, int out_len) {
    int in_c = 2;
    for (std::size_t i = 0; i < cfg_.conv_plan.size(); ++i) {
      init_conv(params_, name + ".conv" + std::to_string(i), in_c,
                cfg_.conv_plan[i].out_channels, cfg_.conv_plan[i].kernel, rng);
      in_c = cfg_.conv_plan[i].out_channels;
    }
    init_linear(params_, name + ".fc", flat, out_len, rng);
  };

  init_subnet("mmwave", cfg_.n_m);
  if (cfg_.use_third_modality) init_subnet("depth", cfg_.n_v);

  init_lstm(params_, "imu.lstm", cfg_.imu_input, cfg_.imu_hidden, 1, rng);
  init_linear(params_, "imu.fc", cfg_.imu_hidden, cfg_.n_i, rng);

  init_self_attention(params_, "att.self_m", cfg_.n_m, rng);
  init_self_attention(params_, "att.self_i", cfg_.n_i, rng);
  if (cfg_.use_third_modality) {
    init_self_attention(params_, "att.self_v", cfg_.n_v, rng);
    const std::pair<std::string, int> lengths[] = {
        {"m", cfg_.n_m}, {"i", cfg_.n_i}, {"v", cfg_.n_v}};
    init_cross_attention_loo(params_, "att.cross", lengths, rng);
  } else {
    init_cross_attention_pair(params_, "att.cross", cfg_.n_m, cfg_.n_i, rng);
  }

  init_lstm(params_, "lstm", cfg_.fused_length(), cfg_.lstm_hidden, cfg_.lstm_layers, rng);

  int in = cfg_.lstm_hidden;
  for (std::size_t i = 0; i < cfg_.fc_sizes.size(); ++i) {
    init_linear(params_, "fc" + std::to_string(i), in, cfg_.fc_sizes[i], rng);
    in = cfg_.fc_sizes[i];
  }
}

Tensor EgoNet::conv_subnet(const std::string& prefix, const Tensor& stacked_pair) const {
  Tensor x = stacked_pair;
  for (std::size_t i = 0; i < cfg_.conv_plan.size(); ++i) {
    const ConvLayerSpec& l = cfg_.conv_plan[i];
    x = apply_conv(params_, prefix + ".conv" + std::to_string(i), x, l.stride, l.pad);
    x = leaky_relu(x, cfg_.leaky_slope);
  }
  return apply_linear(params_, prefix + ".fc", flatten(x));
}

Tensor EgoNet::imu_subnet(const std::vector<Tensor>& steps) const {
  LstmState state = LstmState::zeros(1, cfg_.imu_hidden);
  if (steps.empty()) {
    lstm_step(params_, "imu.lstm", Tensor::zeros({cfg_.imu_input}), state, 1, cfg_.imu_hidden);
  } else {
    for (const Tensor& s : steps) lstm_step(params_, "imu.lstm", s, state, 1, cfg_.imu_hidden);
  }
  return apply_linear(params_, "imu.fc", state.h.back());
}

Tensor EgoNet::fuse(const Tensor& z_m, const Tensor& z_i, const Tensor* z_v) const {
  const auto act = cfg_.attention_activation;
  const Tensor zm = self_attention(params_, "att.self_m", z_m, act).first;
  const Tensor zi = self_attention(params_, "att.self_i", z_i, act).first;
  if (!z_v) return cross_attention_pair(params_, "att.cross", zm, zi, act);
  const Tensor zv = self_attention(params_, "att.self_v", *z_v, act).first;
  const std::pair<std::string, Tensor> feats[] = {{"m", zm}, {"i", zi}, {"v", zv}};
  return cross_attention_loo(params_, "att.cross", feats, act);
}

std::vector<Tensor> EgoNet::forward(std::span<const PairInput> pairs, LstmState* state,
                                    bool training, std::mt19937_64* dropout_rng) const {
  if (training && cfg_.dropout_rate > 0.0 && !dropout_rng)
    throw std::invalid_argument("forward: training mode needs a dropout rng");
  LstmState local = LstmState::zeros(cfg_.lstm_layers, cfg_.lstm_hidden);
  LstmState& st = state ? *state : local;

  std::vector<Tensor> out;
  out.reserve(pairs.size());
  for (const PairInput& pair : pairs) {
    const Tensor z_m = conv_subnet("mmwave", pair.mmwave);
    const Tensor z_i = imu_subnet(pair.imu_steps);
    Tensor z_v;
    if (cfg_.use_third_modality) {
      if (!pair.depth.defined())
        throw data_error("forward: third modality configured but no depth input");
      z_v = conv_subnet("depth", pair.depth);
    }
    const Tensor fused = fuse(z_m, z_i, cfg_.use_third_modality ? &z_v : nullptr);
    Tensor x = lstm_step(params_, "lstm", fused, st, cfg_.lstm_layers, cfg_.lstm_hidden);
    for (std::size_t i = 0; i < cfg_.fc_sizes.size(); ++i) {
      x = apply_linear(params_, "fc" + std::to_string(i), x);
      if (i + 1 < cfg_.fc_sizes.size()) {
        x = leaky_relu(x, cfg_.leaky_slope);
        if (training && cfg_.dropout_rate > 0.0)
          x = dropout(x, cfg_.dropout_rate, *dropout_rng, true);
      }
    }
    out.push_back(x);
  }
  return out;
}

std::int64_t EgoNet::param_count() const {
  std::int64_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

PairInput make_pair_input(const SensorFrame& prev, const SensorFrame& curr,
                          const NetworkConfig& cfg, const PanoGeometry& geom,
                          const Normalization& norm) {
  PairInput in;
  in.mmwave = stack_pair(encode_panoramic(prev.cloud, geom), encode_panoramic(curr.cloud, geom),
                         norm.mmwave_mean);
  for (const ImuSample& s : curr.imu_window) {
    in.imu_steps.push_back(Tensor::from_data(
        {cfg.imu_input},
        {s.accel.x - norm.imu_mean, s.accel.y - norm.imu_mean, s.accel.z - norm.imu_mean,
         s.gyro.x - norm.imu_mean, s.gyro.y - norm.imu_mean, s.gyro.z - norm.imu_mean}));
  }
  if (cfg.use_third_modality) {
    if (prev.dense.empty() && curr.dense.empty())
      throw data_error("make_pair_input: third modality configured but frames have no dense scans");
    in.depth = stack_pair(encode_panoramic(prev.dense, geom), encode_panoramic(curr.dense, geom),
                          norm.depth_mean);
  }
  return in;
}

std::vector<RelativePose> infer_sequence(const EgoNet& model,
                                         std::span<const SensorFrame> frames,
                                         const PanoGeometry& geom) {
  if (frames.size() < 2) throw std::invalid_argument("infer_sequence: need at least 2 frames");
  LstmState state = LstmState::zeros(model.config().lstm_layers, model.config().lstm_hidden);
  std::vector<RelativePose> rels;
  rels.reserve(frames.size() - 1);
  for (std::size_t k = 1; k < frames.size(); ++k) {
    const PairInput input = make_pair_input(frames[k - 1], frames[k], model.config(), geom,
                                            model.normalization());
    const PairInput batch[] = {input};
    const Tensor y = model.forward(batch, &state).front();
    // Cut the recurrent state from the graph so memory stays flat over
    // long sequences.
    for (auto& h : state.h) h = detach(h);
    for (auto& c : state.c) c = detach(c);
    const auto d = y.data();
    rels.push_back(RelativePose{{d[0], d[1], d[2]}, {d[3], d[4], d[5]}});
  }
  return rels;
}

// ---------------------------------------------------------------------------
// Checkpoint serialization

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void put_f64(std::ostream& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw data_error("checkpoint: truncated file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& in) {
  const std::uint64_t lo = get_u32(in);
  const std::uint64_t hi = get_u32(in);
  return lo | (hi << 32);
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

std::string get_str(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw data_error("checkpoint: truncated file");
  return s;
}

constexpr char kMagic[8] = {'R', 'G', 'O', 'C', 'K', 'P', 'T', '1'};

std::string format_double_meta(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const EgoNet& model,
                     const std::map<std::string, std::string>& extra_meta,
                     const OptimizerBlobs* optimizer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write checkpoint: " + path.string());
  out.write(kMagic, 8);
  put_u32(out, 1);

  std::map<std::string, std::string> meta = model.config().to_kv();
  meta["norm.mmwave_mean"] = format_double_meta(model.normalization().mmwave_mean);
  meta["norm.depth_mean"] = format_double_meta(model.normalization().depth_mean);
  meta["norm.imu_mean"] = format_double_meta(model.normalization().imu_mean);
  for (const auto& [k, v] : extra_meta) meta[k] = v;

  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    put_str(out, k);
    put_str(out, v);
  }

  put_u32(out, static_cast<std::uint32_t>(model.params().size()));
  for (const auto& [name, t] : model.params()) {
    put_str(out, name);
    put_u32(out, static_cast<std::uint32_t>(t.shape().size()));
    for (int d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.data()) put_f64(out, v);
  }

  const OptimizerBlobs empty;
  const OptimizerBlobs& opt = optimizer ? *optimizer : empty;
  put_u32(out, static_cast<std::uint32_t>(opt.size()));
  for (const auto& [name, blob] : opt) {
    put_str(out, name);
    put_u64(out, blob.size());
    for (double v : blob) put_f64(out, v);
  }
  if (!out) throw data_error("checkpoint write failed: " + path.string());
}

EgoNet load_checkpoint(const std::filesystem::path& path,
                       std::map<std::string, std::string>* meta_out,
                       OptimizerBlobs* optimizer_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw data_error("not a checkpoint file: " + path.string());
  const std::uint32_t version = get_u32(in);
  if (version != 1) throw data_error("unsupported checkpoint version");

  std::map<std::string, std::string> meta;
  const std::uint32_t n_meta = get_u32(in);
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = get_str(in);
    meta[k] = get_str(in);
  }

  NetworkConfig cfg = NetworkConfig::from_kv(meta);
  EgoNet model(cfg, /*seed=*/0);
  model.normalization().mmwave_mean = std::stod(meta.at("norm.mmwave_mean"));
  model.normalization().depth_mean = std::stod(meta.at("norm.depth_mean"));
  model.normalization().imu_mean = std::stod(meta.at("norm.imu_mean"));

  const std::uint32_t n_params = get_u32(in);
  for (std::uint32_t i = 0; i < n_params; ++i) {
    const std::string name = get_str(in);
    const std::uint32_t rank = get_u32(in);
    Shape shape(rank);
    std::int64_t count = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape[d] = static_cast<int>(get_u32(in));
      count *= shape[d];
    }
    auto it = model.params().find(name);
    if (it == model.params().end())
      throw data_error("checkpoint parameter not in architecture: " + name);
    if (it->second.shape() != shape)
      throw data_error("checkpoint parameter shape mismatch: " + name);
    auto dst = it->second.mutable_data();
    for (std::int64_t k = 0; k < count; ++k) dst[k] = get_f64(in);
  }

  const std::uint32_t n_opt = get_u32(in);
  for (std::uint32_t i = 0; i < n_opt; ++i) {
    const std::string name = get_str(in);
    const std::uint64_t count = get_u64(in);
    std::vector<double> blob(count);
    for (std::uint64_t k = 0; k < count; ++k) blob[k] = get_f64(in);
    if (optimizer_out) (*optimizer_out)[name] = std::move(blob);
  }

  if (meta_out) *meta_out = std::move(meta);
  return model;
}

}  // namespace radarego
