#include "radarego/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "radarego/errors.hpp"
#include "radarego/rng.hpp"

namespace radarego {

void rmsprop_step(LayerParams& params, RmsPropState& state, double lr, double decay,
                  double eps) {
  for (auto& [name, p] : params) {
    const auto g = p.grad();
    if (g.empty()) continue;
    auto& acc = state.acc[name];
    if (acc.size() != g.size()) acc.assign(g.size(), 0.0);
    auto values = p.mutable_data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      acc[i] = decay * acc[i] + (1.0 - decay) * g[i] * g[i];
      values[i] -= lr * g[i] / std::sqrt(acc[i] + eps);
    }
  }
}

double pose_loss(std::span<const double> pred, std::span<const double> truth, double gamma) {
  if (pred.size() != truth.size() || pred.empty() || pred.size() % 6 != 0)
    throw std::invalid_argument("pose_loss: inputs must be matching non-empty K x 6 batches");
  const std::size_t k = pred.size() / 6;
  double acc = 0.0;
  for (std::size_t b = 0; b < k; ++b) {
    for (int i = 0; i < 3; ++i) {
      const double d = pred[b * 6 + i] - truth[b * 6 + i];
      acc += d * d;
    }
    for (int i = 3; i < 6; ++i) {
      const double d = wrap_angle(pred[b * 6 + i] - truth[b * 6 + i]);
      acc += gamma * d * d;
    }
  }
  return acc / static_cast<double>(k);
}

Tensor pose_loss_graph(std::span<const Tensor> preds, std::span<const RelativePose> truths,
                       double gamma) {
  if (preds.size() != truths.size() || preds.empty())
    throw std::invalid_argument("pose_loss_graph: empty or mismatched batch");
  std::vector<Tensor> terms;
  terms.reserve(preds.size());
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const RelativePose& y = truths[k];
    const Tensor t_true = Tensor::from_data({3}, {y.t.x, y.t.y, y.t.z});
    const Tensor r_true = Tensor::from_data({3}, {y.r.roll, y.r.pitch, y.r.yaw});
    const Tensor t_err = sub(slice(preds[k], 0, 3), t_true);
    const Tensor r_err = wrap_to_pi(sub(slice(preds[k], 3, 3), r_true));
    terms.push_back(add(sum(mul(t_err, t_err)),
                        scalar_mul(sum(mul(r_err, r_err)), gamma)));
  }
  return scalar_mul(sum(concat(terms)), 1.0 / static_cast<double>(preds.size()));
}

std::vector<SensorFrame> subsample_frames(std::span<const SensorFrame> frames, int subsample) {
  if (subsample < 1) throw std::invalid_argument("subsample_frames: factor must be >= 1");
  std::vector<SensorFrame> out;
  for (std::size_t k = 0; k < frames.size(); k += subsample) {
    SensorFrame f = frames[k];
    if (k >= static_cast<std::size_t>(subsample)) {
      // The window of a retained frame is the union over the skipped span.
      f.imu_window.clear();
      for (std::size_t j = k - subsample + 1; j <= k; ++j)
        f.imu_window.insert(f.imu_window.end(), frames[j].imu_window.begin(),
                            frames[j].imu_window.end());
    }
    out.push_back(std::move(f));
  }
  return out;
}

PreparedDataset prepare_dataset(std::span<const SimulatedSequence> sequences,
                                const NetworkConfig& cfg, const PanoGeometry& geom,
                                int subsample) {
  if (geom.rows != cfg.rows || geom.cols != cfg.cols)
    throw std::invalid_argument("prepare_dataset: panoramic geometry does not match the network");

  struct FrameFeatures {
    PanoramicImage mm, depth;
    std::vector<double> imu_flat;  // samples x 6
    PoseSE3 ground_truth;
    double timestamp = 0.0;
  };
  std::vector<std::vector<FrameFeatures>> all;
  double mm_sum = 0.0, depth_sum = 0.0, imu_sum = 0.0;
  std::int64_t mm_n = 0, depth_n = 0, imu_n = 0;

  for (const SimulatedSequence& seq : sequences) {
    const std::vector<SensorFrame> sub = subsample_frames(seq.frames, subsample);
    std::vector<FrameFeatures> feats;
    feats.reserve(sub.size());
    for (const SensorFrame& f : sub) {
      if (!f.ground_truth) throw data_error("prepare_dataset: frame without ground truth");
      FrameFeatures ff;
      ff.ground_truth = *f.ground_truth;
      ff.timestamp = f.cloud.timestamp;
      ff.mm = encode_panoramic(f.cloud, geom);
      for (double v : ff.mm.values) mm_sum += v;
      mm_n += static_cast<std::int64_t>(ff.mm.values.size());
      if (cfg.use_third_modality) {
        ff.depth = encode_panoramic(f.dense, geom);
        for (double v : ff.depth.values) depth_sum += v;
        depth_n += static_cast<std::int64_t>(ff.depth.values.size());
      }
      for (const ImuSample& s : f.imu_window) {
        const double vals[6] = {s.accel.x, s.accel.y, s.accel.z,
                                s.gyro.x, s.gyro.y, s.gyro.z};
        for (double v : vals) {
          ff.imu_flat.push_back(v);
          imu_sum += v;
        }
        imu_n += 6;
      }
      feats.push_back(std::move(ff));
    }
    all.push_back(std::move(feats));
  }

  PreparedDataset data;
  data.norm.mmwave_mean = mm_n ? mm_sum / mm_n : 0.0;
  data.norm.depth_mean = depth_n ? depth_sum / depth_n : 0.0;
  data.norm.imu_mean = imu_n ? imu_sum / imu_n : 0.0;

  for (auto& feats : all) {
    std::vector<PreparedPair> pairs;
    for (std::size_t k = 1; k < feats.size(); ++k) {
      PreparedPair p;
      p.input.mmwave = stack_pair(feats[k - 1].mm, feats[k].mm, data.norm.mmwave_mean);
      if (cfg.use_third_modality)
        p.input.depth = stack_pair(feats[k - 1].depth, feats[k].depth, data.norm.depth_mean);
      for (std::size_t off = 0; off + 6 <= feats[k].imu_flat.size(); off += 6) {
        std::vector<double> step(6);
        for (int i = 0; i < 6; ++i) step[i] = feats[k].imu_flat[off + i] - data.norm.imu_mean;
        p.input.imu_steps.push_back(Tensor::from_data({cfg.imu_input}, std::move(step)));
      }
      p.target = relative_between(feats[k - 1].ground_truth, feats[k].ground_truth);
      p.timestamp = feats[k].timestamp;
      pairs.push_back(std::move(p));
    }
    if (!pairs.empty()) data.sequences.push_back(std::move(pairs));
  }
  return data;
}

std::vector<EpochRecord> train(EgoNet& model, const PreparedDataset& data,
                               const TrainConfig& tc, RmsPropState* opt_state,
                               int start_epoch) {
  if (tc.subsequence_length < 2)
    throw std::invalid_argument("train: subsequence_length must be >= 2");

  struct Chunk {
    const std::vector<PreparedPair>* pairs;
    std::size_t begin, length;
  };
  std::vector<Chunk> chunks;
  for (const auto& seq : data.sequences) {
    const std::size_t n = seq.size() / tc.subsequence_length;
    for (std::size_t c = 0; c < n; ++c)
      chunks.push_back({&seq, c * static_cast<std::size_t>(tc.subsequence_length),
                        static_cast<std::size_t>(tc.subsequence_length)});
  }
  if (chunks.empty())
    throw data_error("train: dataset shorter than the subsequence length");

  RmsPropState local_state;
  RmsPropState& opt = opt_state ? *opt_state : local_state;
  auto shuffle_rng = make_stream(tc.seed, "train-shuffle");
  auto dropout_rng = make_stream(tc.seed, "train-dropout");

  std::vector<EpochRecord> history;
  history.reserve(tc.epochs);
  std::vector<std::size_t> order(chunks.size());
  std::iota(order.begin(), order.end(), 0);

  for (int e = 0; e < tc.epochs; ++e) {
    const int abs_epoch = start_epoch + e;
    const double lr = tc.lr * std::pow(tc.lr_decay, abs_epoch / tc.decay_every);

    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(shuffle_rng, 0, i - 1));
      std::swap(order[i - 1], order[j]);
    }

    double loss_sum = 0.0;
    for (std::size_t ci : order) {
      const Chunk& ch = chunks[ci];
      std::vector<PairInput> inputs;
      std::vector<RelativePose> targets;
      inputs.reserve(ch.length);
      targets.reserve(ch.length);
      for (std::size_t k = 0; k < ch.length; ++k) {
        inputs.push_back((*ch.pairs)[ch.begin + k].input);
        targets.push_back((*ch.pairs)[ch.begin + k].target);
      }
      for (auto& [name, p] : model.params()) p.zero_grad();
      LstmState state = LstmState::zeros(model.config().lstm_layers, model.config().lstm_hidden);
      const std::vector<Tensor> preds =
          model.forward(inputs, &state, /*training=*/true, &dropout_rng);
      Tensor loss = pose_loss_graph(preds, targets, model.config().gamma);
      const double value = loss.item();
      if (!std::isfinite(value)) throw numeric_error("train: loss diverged to non-finite");
      loss.backward();
      rmsprop_step(model.params(), opt, lr, tc.rms_decay, tc.rms_eps);
      loss_sum += value;
    }
    history.push_back({abs_epoch, loss_sum / chunks.size(), lr});
  }
  return history;
}

std::vector<EpochRecord> train(EgoNet& model, std::span<const SimulatedSequence> sequences,
                               const TrainConfig& tc, const PanoGeometry& geom) {
  const PreparedDataset data = prepare_dataset(sequences, model.config(), geom, tc.subsample);
  model.normalization() = data.norm;
  return train(model, data, tc, nullptr, 0);
}

// ---------------------------------------------------------------------------
// Gradient verification

double max_rel_grad_error(const std::function<Tensor()>& loss_fn, std::span<Tensor> leaves,
                          double step, double corrupt) {
  for (Tensor& leaf : leaves) leaf.zero_grad();
  Tensor loss = loss_fn();
  loss.backward();

  std::vector<std::vector<double>> analytic;
  for (Tensor& leaf : leaves) {
    auto g = leaf.grad();
    analytic.emplace_back(g.begin(), g.end());
    if (analytic.back().empty()) analytic.back().assign(leaf.size(), 0.0);
  }
  if (corrupt != 0.0 && !analytic.empty() && !analytic[0].empty())
    analytic[0][0] += corrupt;

  double worst = 0.0;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    auto values = leaves[li].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double fp = loss_fn().item();
      values[i] = saved - step;
      const double fm = loss_fn().item();
      values[i] = saved;
      const double numeric = (fp - fm) / (2.0 * step);
      const double ga = analytic[li][i];
      const double rel = std::abs(ga - numeric) / std::max(1.0, std::abs(ga) + std::abs(numeric));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, bool requires_grad,
                     double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (double& v : t.mutable_data()) v = uniform_range(rng, lo, hi);
  return t;
}

/// Random values bounded away from zero (for kinked activations).
Tensor random_tensor_off_zero(Shape shape, std::mt19937_64& rng, bool requires_grad) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (double& v : t.mutable_data()) {
    const double mag = uniform_range(rng, 0.1, 1.0);
    v = bernoulli(rng, 0.5) ? mag : -mag;
  }
  return t;
}

Tensor project_scalar(const Tensor& t, const Tensor& probe) {
  return sum(mul(flatten(t), probe));
}

}  // namespace

GradCheckReport run_grad_checks(std::uint64_t seed, double corrupt) {
  GradCheckReport report;
  auto rng = make_stream(seed, "gradcheck");

  auto add_entry = [&](const std::string& name, double tol,
                       const std::function<Tensor()>& fn, std::span<Tensor> leaves) {
    GradCheckEntry e;
    e.name = name;
    e.tolerance = tol;
    e.max_rel_err = max_rel_grad_error(fn, leaves, 1e-5, corrupt);
    e.pass = e.max_rel_err < tol;
    report.entries.push_back(e);
    report.worst = std::max(report.worst, e.max_rel_err);
    report.all_pass = report.all_pass && e.pass;
  };

  const double kLinearTol = 1e-6;
  const double kNonlinearTol = 1e-4;

  {  // linear layer
    Tensor w = random_tensor({4, 5}, rng, true);
    Tensor x = random_tensor({5}, rng, true);
    Tensor b = random_tensor({4}, rng, true);
    Tensor probe = random_tensor({4}, rng, false);
    Tensor leaves[] = {w, x, b};
    add_entry("linear", kLinearTol,
              [&] { return project_scalar(linear(w, x, b), probe); }, leaves);
  }
  {  // matmul
    Tensor a = random_tensor({3, 4}, rng, true);
    Tensor b = random_tensor({4, 2}, rng, true);
    Tensor probe = random_tensor({6}, rng, false);
    Tensor leaves[] = {a, b};
    add_entry("matmul", kLinearTol,
              [&] { return project_scalar(matmul(a, b), probe); }, leaves);
  }
  {  // conv2d
    Tensor x = random_tensor({2, 5, 6}, rng, true);
    Tensor w = random_tensor({3, 2, 3, 3}, rng, true);
    Tensor b = random_tensor({3}, rng, true);
    Tensor probe = random_tensor({3 * 3 * 3}, rng, false);
    Tensor leaves[] = {x, w, b};
    add_entry("conv2d", kLinearTol,
              [&] { return project_scalar(conv2d(x, w, b, 2, 1), probe); }, leaves);
  }
  {  // leaky ReLU (inputs bounded away from the kink)
    Tensor x = random_tensor_off_zero({12}, rng, true);
    Tensor probe = random_tensor({12}, rng, false);
    Tensor leaves[] = {x};
    add_entry("leaky_relu", kNonlinearTol,
              [&] { return project_scalar(leaky_relu(x, 0.1), probe); }, leaves);
  }
  {  // sigmoid
    Tensor x = random_tensor({10}, rng, true);
    Tensor probe = random_tensor({10}, rng, false);
    Tensor leaves[] = {x};
    add_entry("sigmoid", kNonlinearTol,
              [&] { return project_scalar(sigmoid(x), probe); }, leaves);
  }
  {  // tanh
    Tensor x = random_tensor({10}, rng, true);
    Tensor probe = random_tensor({10}, rng, false);
    Tensor leaves[] = {x};
    add_entry("tanh", kNonlinearTol,
              [&] { return project_scalar(tanh_op(x), probe); }, leaves);
  }
  {  // softmax
    Tensor x = random_tensor({7}, rng, true);
    Tensor probe = random_tensor({7}, rng, false);
    Tensor leaves[] = {x};
    add_entry("softmax", kNonlinearTol,
              [&] { return project_scalar(softmax(x), probe); }, leaves);
  }
  {  // dropout in eval mode is the identity
    Tensor x = random_tensor({8}, rng, true);
    Tensor probe = random_tensor({8}, rng, false);
    Tensor leaves[] = {x};
    auto dr = make_stream(seed, "gradcheck-dropout");
    add_entry("dropout_off", kLinearTol,
              [&] { return project_scalar(dropout(x, 0.25, dr, false), probe); }, leaves);
  }
  {  // LSTM, 2 layers over a 3-step sequence
    LayerParams params;
    init_lstm(params, "lstm", 4, 3, 2, rng);
    std::vector<Tensor> seq = {random_tensor({4}, rng, true), random_tensor({4}, rng, true),
                               random_tensor({4}, rng, true)};
    Tensor probe = random_tensor({3}, rng, false);
    std::vector<Tensor> leaves;
    for (auto& [name, p] : params) leaves.push_back(p);
    for (auto& s : seq) leaves.push_back(s);
    add_entry("lstm", kNonlinearTol,
              [&] {
                auto outs = lstm_forward(params, "lstm", seq, 2, 3);
                std::vector<Tensor> projected;
                for (auto& o : outs) projected.push_back(project_scalar(o, probe));
                return sum(concat(projected));
              },
              leaves);
  }
  {  // self-attention
    LayerParams params;
    init_self_attention(params, "self", 5, rng);
    Tensor z = random_tensor({5}, rng, true);
    Tensor probe = random_tensor({5}, rng, false);
    std::vector<Tensor> leaves = {z};
    for (auto& [name, p] : params) leaves.push_back(p);
    add_entry("self_attention", kNonlinearTol,
              [&] { return project_scalar(self_attention(params, "self", z).first, probe); },
              leaves);
  }
  {  // cross-attention pair
    LayerParams params;
    init_cross_attention_pair(params, "cross", 3, 2, rng);
    Tensor zm = random_tensor({3}, rng, true);
    Tensor zi = random_tensor({2}, rng, true);
    Tensor probe = random_tensor({5}, rng, false);
    std::vector<Tensor> leaves = {zm, zi};
    for (auto& [name, p] : params) leaves.push_back(p);
    add_entry("cross_attention_pair", kNonlinearTol,
              [&] {
                return project_scalar(cross_attention_pair(params, "cross", zm, zi), probe);
              },
              leaves);
  }
  {  // leave-one-out cross-attention, three modalities
    LayerParams params;
    const std::pair<std::string, int> lens[] = {{"m", 3}, {"i", 2}, {"v", 2}};
    init_cross_attention_loo(params, "loo", lens, rng);
    Tensor zm = random_tensor({3}, rng, true);
    Tensor zi = random_tensor({2}, rng, true);
    Tensor zv = random_tensor({2}, rng, true);
    Tensor probe = random_tensor({7}, rng, false);
    std::vector<Tensor> leaves = {zm, zi, zv};
    for (auto& [name, p] : params) leaves.push_back(p);
    add_entry("cross_attention_loo", kNonlinearTol,
              [&] {
                const std::pair<std::string, Tensor> feats[] = {
                    {"m", zm}, {"i", zi}, {"v", zv}};
                return project_scalar(cross_attention_loo(params, "loo", feats), probe);
              },
              leaves);
  }
  {  // pose loss (residuals kept away from the +-pi wrap)
    std::vector<Tensor> preds = {random_tensor({6}, rng, true, -0.5, 0.5),
                                 random_tensor({6}, rng, true, -0.5, 0.5)};
    std::vector<RelativePose> truths(2);
    truths[0] = {{0.1, -0.2, 0.05}, {0.01, -0.03, 0.2}};
    truths[1] = {{-0.3, 0.0, 0.12}, {-0.15, 0.04, -0.3}};
    std::vector<Tensor> leaves = preds;
    add_entry("pose_loss", kNonlinearTol,
              [&] { return pose_loss_graph(preds, truths, 0.001); }, leaves);
  }
  {  // the assembled network at gradient-check scale
    EgoNet model(NetworkConfig::micro(/*third_modality=*/true), stream_seed(seed, "micro"));
    const NetworkConfig& cfg = model.config();
    // Fan-in scaling plus the recurrent squashing leaves the head's
    // pre-activations near 1e-3, which parks LeakyReLU kinks inside the
    // finite-difference step. O(1) weights keep the probe off the kinks.
    for (auto& [name, p] : model.params())
      for (double& v : p.mutable_data()) v = uniform_range(rng, -0.8, 0.8);
    std::vector<PairInput> pairs(2);
    for (auto& p : pairs) {
      p.mmwave = random_tensor({2, cfg.rows, cfg.cols}, rng, false);
      p.depth = random_tensor({2, cfg.rows, cfg.cols}, rng, false);
      p.imu_steps = {random_tensor({cfg.imu_input}, rng, false),
                     random_tensor({cfg.imu_input}, rng, false)};
    }
    std::vector<RelativePose> truths(2);
    truths[0] = {{0.05, 0.0, 0.0}, {0.0, 0.0, 0.02}};
    truths[1] = {{0.04, 0.01, 0.0}, {0.0, 0.0, 0.03}};
    std::vector<Tensor> leaves;
    for (auto& [name, p] : model.params()) leaves.push_back(p);
    add_entry("full_network", kNonlinearTol,
              [&] {
                const std::vector<Tensor> preds = model.forward(pairs);
                return pose_loss_graph(preds, truths, cfg.gamma);
              },
              leaves);
  }

  return report;
}

}  // namespace radarego
