#include "radarego/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "radarego/errors.hpp"
#include "radarego/io.hpp"
#include "radarego/network.hpp"
#include "radarego/registration.hpp"
#include "radarego/rng.hpp"
#include "radarego/training.hpp"

namespace radarego {

namespace fs = std::filesystem;

namespace {

using Meta = std::vector<std::pair<std::string, std::string>>;

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write: " + path.string());
  return out;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOpts {
  std::string world, waypoints, out;
  std::uint64_t seed = 0;
  double frame_rate = 20.0, speed = 1.0;
  RadarNoiseModel noise;
  ImuNoiseSpec imu;
  ScanFov fov;
  double hfov_deg = 120.0, vfov_deg = 60.0;

  Meta meta() const {
    return {{"command", "simulate"},
            {"world", world},
            {"waypoints", waypoints},
            {"sim_seed", std::to_string(seed)},
            {"sim_frame_rate", format_double(frame_rate)},
            {"speed", format_double(speed)},
            {"keep_prob", format_double(noise.keep_probability)},
            {"ghost_prob", format_double(noise.ghost_probability)},
            {"range_sigma", format_double(noise.range_sigma)},
            {"az_sigma", format_double(noise.angular_sigma_az)},
            {"el_sigma", format_double(noise.angular_sigma_el)},
            {"max_points", std::to_string(noise.max_points)},
            {"imu_rate", format_double(imu.rate)},
            {"gyro_sigma", format_double(imu.gyro_sigma)},
            {"accel_sigma", format_double(imu.accel_sigma)},
            {"n_az", std::to_string(fov.n_az)},
            {"n_el", std::to_string(fov.n_el)},
            {"hfov_deg", format_double(hfov_deg)},
            {"vfov_deg", format_double(vfov_deg)},
            {"max_range", format_double(fov.max_range)}};
  }
};

void cmd_simulate(const SimulateOpts& opts) {
  const WorldModel world = read_world(opts.world);
  TrajectorySpec spec;
  spec.waypoints = read_waypoints(opts.waypoints);
  spec.frame_rate = opts.frame_rate;
  spec.speed = opts.speed;
  ScanFov fov = opts.fov;
  fov.h_fov = opts.hfov_deg * M_PI / 180.0;
  fov.v_fov = opts.vfov_deg * M_PI / 180.0;

  const SimulatedSequence seq =
      generate_sequence(world, spec, opts.noise, opts.imu, fov, opts.seed);
  write_sequence_dir(opts.out, seq, opts.meta());
  std::cout << "simulate: wrote " << seq.frames.size() << " frames to " << opts.out << "\n";
}

// ---------------------------------------------------------------------------
// encode

struct EncodeOpts {
  std::string cloud, sequence, out;
  int rows = 32, cols = 128;
  double max_range = 10.0;
  bool dense = false;
};

void cmd_encode(const EncodeOpts& opts) {
  if (opts.cloud.empty() == opts.sequence.empty())
    throw usage_error("encode: give exactly one of --cloud or --sequence");
  const PanoGeometry geom = PanoGeometry::standard(opts.rows, opts.cols, opts.max_range);
  fs::create_directories(opts.out);
  std::size_t count = 0;
  if (!opts.cloud.empty()) {
    write_panoramic(fs::path(opts.out) / "00000.pano",
                    encode_panoramic(read_cloud(opts.cloud), geom));
    count = 1;
  } else {
    const SimulatedSequence seq = read_sequence_dir(opts.sequence);
    for (std::size_t k = 0; k < seq.frames.size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof(name), "%05zu.pano", k);
      const PointCloud& cloud = opts.dense ? seq.frames[k].dense : seq.frames[k].cloud;
      write_panoramic(fs::path(opts.out) / name, encode_panoramic(cloud, geom));
      ++count;
    }
  }
  write_kv(fs::path(opts.out) / "meta.txt",
           {{"command", "encode"},
            {"cloud", opts.cloud},
            {"sequence", opts.sequence},
            {"rows", std::to_string(opts.rows)},
            {"cols", std::to_string(opts.cols)},
            {"max_range", format_double(opts.max_range)},
            {"dense", opts.dense ? "1" : "0"},
            {"images", std::to_string(count)}});
  std::cout << "encode: wrote " << count << " images to " << opts.out << "\n";
}

// ---------------------------------------------------------------------------
// register

struct RegisterOpts {
  std::string sequence, method = "icp", out, use = "radar";
  IcpParams icp;
  RansacParams ransac;
  std::uint64_t seed = 0;
};

void cmd_register(const RegisterOpts& opts) {
  if (opts.method != "icp" && opts.method != "ransac-icp" && opts.method != "imu-icp")
    throw usage_error("register: unknown method '" + opts.method + "'");
  if (opts.use != "radar" && opts.use != "dense")
    throw usage_error("register: --use must be radar or dense");

  const SimulatedSequence seq = read_sequence_dir(opts.sequence);
  if (seq.frames.size() < 2) throw data_error("register: sequence has fewer than 2 frames");

  fs::create_directories(opts.out);
  auto diag = open_out(fs::path(opts.out) / "diagnostics.csv");
  diag << "pair,objective,iterations,converged,inliers,starved,imu_fallback\n";

  std::vector<RelativePose> rels;
  std::vector<double> timestamps{seq.frames.front().cloud.timestamp};
  for (std::size_t k = 1; k < seq.frames.size(); ++k) {
    const SensorFrame& fa = seq.frames[k - 1];
    const SensorFrame& fb = seq.frames[k];
    const PointCloud& a = opts.use == "dense" ? fa.dense : fa.cloud;
    const PointCloud& b = opts.use == "dense" ? fb.dense : fb.cloud;

    RegistrationResult res;
    if (a.empty() || b.empty()) {
      res.starved = true;
    } else if (opts.method == "icp") {
      res = icp(a, b, PoseSE3::identity(), opts.icp);
    } else if (opts.method == "ransac-icp") {
      const auto init =
          ransac_init(a, b, opts.ransac, stream_seed(opts.seed, "pair-" + std::to_string(k)));
      res = icp(a, b, init.value_or(PoseSE3::identity()), opts.icp);
      if (!init) res.starved = true;
    } else {
      res = imu_icp(a, b, fb.imu_window, opts.icp);
    }

    // Starved pairs fall back to zero motion and stay flagged in the CSV.
    rels.push_back(res.converged ? registration_to_egomotion(res.transform) : RelativePose{});
    timestamps.push_back(fb.cloud.timestamp);
    diag << k << ',' << format_double(res.objective) << ',' << res.iterations << ','
         << (res.converged ? 1 : 0) << ',' << res.inlier_count << ',' << (res.starved ? 1 : 0)
         << ',' << (res.imu_fallback ? 1 : 0) << '\n';
  }

  const PoseSE3 start = seq.frames.front().ground_truth.value_or(PoseSE3::identity());
  const Trajectory traj = compose_trajectory(start, rels, timestamps);
  write_trajectory(fs::path(opts.out) / "trajectory.txt", traj);
  write_kv(fs::path(opts.out) / "meta.txt",
           {{"command", "register"},
            {"sequence", opts.sequence},
            {"method", opts.method},
            {"use", opts.use},
            {"max_iterations", std::to_string(opts.icp.max_iterations)},
            {"objective_tolerance", format_double(opts.icp.objective_tolerance)},
            {"reject_distance", format_double(opts.icp.reject_distance)},
            {"ransac_hypotheses", std::to_string(opts.ransac.hypotheses)},
            {"ransac_threshold", format_double(opts.ransac.inlier_threshold)},
            {"reg_seed", std::to_string(opts.seed)},
            {"pairs", std::to_string(rels.size())}});
  std::cout << "register: " << opts.method << " over " << rels.size() << " pairs -> "
            << opts.out << "\n";
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  std::vector<std::string> sequences;
  std::string profile = "toy", out, resume;
  bool third_modality = false;
  int rows = 32, cols = 128;
  double max_range = 10.0;
  TrainConfig tc;
};

void write_loss_csv(const fs::path& path, std::span<const EpochRecord> history) {
  auto out = open_out(path);
  out << "epoch,mean_loss,lr\n";
  for (const EpochRecord& r : history)
    out << r.epoch << ',' << format_double(r.mean_loss) << ',' << format_double(r.lr) << '\n';
}

void cmd_train(const TrainOpts& opts) {
  if (opts.sequences.empty()) throw usage_error("train: at least one --sequence required");

  std::vector<SimulatedSequence> dataset;
  Meta input_hashes;
  for (const std::string& dir : opts.sequences) {
    dataset.push_back(read_sequence_dir(dir));
    input_hashes.emplace_back("input_hash." + fs::path(dir).filename().string(),
                              content_hash_file(fs::path(dir) / "groundtruth.txt"));
  }

  int start_epoch = 0;
  RmsPropState opt_state;
  std::unique_ptr<EgoNet> model;
  PanoGeometry geom = PanoGeometry::standard(opts.rows, opts.cols, opts.max_range);

  if (!opts.resume.empty()) {
    std::map<std::string, std::string> meta;
    OptimizerBlobs blobs;
    model = std::make_unique<EgoNet>(load_checkpoint(opts.resume, &meta, &blobs));
    opt_state.acc = std::move(blobs);
    if (auto it = meta.find("epoch"); it != meta.end()) start_epoch = std::stoi(it->second);
    const NetworkConfig expected =
        NetworkConfig::by_name(opts.profile, opts.third_modality);
    if (model->config().to_kv() != expected.to_kv())
      throw data_error("train: checkpoint does not match the requested profile");
    if (auto it = meta.find("pano.max_range"); it != meta.end())
      geom = PanoGeometry::standard(model->config().rows, model->config().cols,
                                    std::stod(it->second));
  } else {
    model = std::make_unique<EgoNet>(NetworkConfig::by_name(opts.profile, opts.third_modality),
                                     stream_seed(opts.tc.seed, "model-init"));
  }

  const PreparedDataset data =
      prepare_dataset(dataset, model->config(), geom, opts.tc.subsample);
  if (opts.resume.empty()) model->normalization() = data.norm;

  const std::vector<EpochRecord> history =
      train(*model, data, opts.tc, &opt_state, start_epoch);

  fs::create_directories(opts.out);
  std::map<std::string, std::string> ckpt_meta = {
      {"epoch", std::to_string(start_epoch + opts.tc.epochs)},
      {"profile", opts.profile},
      {"pano.max_range", format_double(opts.max_range)},
      {"train_seed", std::to_string(opts.tc.seed)},
  };
  for (const auto& [k, v] : input_hashes) ckpt_meta[k] = v;
  save_checkpoint(fs::path(opts.out) / "checkpoint.bin", *model, ckpt_meta, &opt_state.acc);
  write_loss_csv(fs::path(opts.out) / "loss.csv", history);

  Meta meta = {{"command", "train"},
               {"profile", opts.profile},
               {"third_modality", opts.third_modality ? "1" : "0"},
               {"resume", opts.resume},
               {"epochs", std::to_string(opts.tc.epochs)},
               {"start_epoch", std::to_string(start_epoch)},
               {"lr", format_double(opts.tc.lr)},
               {"lr_decay", format_double(opts.tc.lr_decay)},
               {"decay_every", std::to_string(opts.tc.decay_every)},
               {"subsequence_length", std::to_string(opts.tc.subsequence_length)},
               {"subsample", std::to_string(opts.tc.subsample)},
               {"train_seed", std::to_string(opts.tc.seed)},
               {"rows", std::to_string(opts.rows)},
               {"cols", std::to_string(opts.cols)},
               {"max_range", format_double(opts.max_range)},
               {"param_count", std::to_string(model->param_count())}};
  for (std::size_t i = 0; i < opts.sequences.size(); ++i)
    meta.emplace_back("sequence." + std::to_string(i), opts.sequences[i]);
  meta.insert(meta.end(), input_hashes.begin(), input_hashes.end());
  write_kv(fs::path(opts.out) / "meta.txt", meta);

  const double last = history.empty() ? 0.0 : history.back().mean_loss;
  std::cout << "train: " << opts.tc.epochs << " epochs, final mean loss "
            << format_double(last) << " -> " << opts.out << "\n";
}

// ---------------------------------------------------------------------------
// infer

struct InferOpts {
  std::string checkpoint, sequence, out;
  int subsample = 1;
};

void cmd_infer(const InferOpts& opts) {
  std::map<std::string, std::string> meta;
  const EgoNet model = load_checkpoint(opts.checkpoint, &meta);
  double max_range = 10.0;
  if (auto it = meta.find("pano.max_range"); it != meta.end()) max_range = std::stod(it->second);
  const PanoGeometry geom =
      PanoGeometry::standard(model.config().rows, model.config().cols, max_range);

  const SimulatedSequence seq = read_sequence_dir(opts.sequence);
  const std::vector<SensorFrame> frames = subsample_frames(seq.frames, opts.subsample);
  if (frames.size() < 2) throw data_error("infer: fewer than 2 frames after sub-sampling");

  const std::vector<RelativePose> rels = infer_sequence(model, frames, geom);
  std::vector<double> timestamps;
  timestamps.reserve(frames.size());
  for (const SensorFrame& f : frames) timestamps.push_back(f.cloud.timestamp);
  const PoseSE3 start = frames.front().ground_truth.value_or(PoseSE3::identity());
  const Trajectory traj = compose_trajectory(start, rels, timestamps);

  fs::create_directories(opts.out);
  write_trajectory(fs::path(opts.out) / "trajectory.txt", traj);
  write_kv(fs::path(opts.out) / "meta.txt",
           {{"command", "infer"},
            {"checkpoint", opts.checkpoint},
            {"sequence", opts.sequence},
            {"subsample", std::to_string(opts.subsample)},
            {"entries", std::to_string(traj.size())}});
  std::cout << "infer: " << traj.size() << " trajectory entries -> " << opts.out << "\n";
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  std::string est, ref, out, align = "first";
};

void cmd_eval(const EvalOpts& opts) {
  if (opts.align != "none" && opts.align != "first" && opts.align != "full")
    throw usage_error("eval: --align must be none, first or full");
  const Trajectory ref = read_trajectory(opts.ref);
  Trajectory est = read_trajectory(opts.est);
  if (opts.align == "first")
    est = align_first_frame(est, ref);
  else if (opts.align == "full")
    est = align_full(est, ref);

  const AteReport r3 = ate(est, ref, AteDim::k3D);
  const AteReport r2 = ate(est, ref, AteDim::k2D);
  const double drift = drift_percent(r3, ref);

  fs::create_directories(opts.out);
  {
    auto out = open_out(fs::path(opts.out) / "summary.csv");
    out << "mean,std,max,dim,drift_percent\n";
    out << format_double(r3.mean) << ',' << format_double(r3.std) << ','
        << format_double(r3.max) << ",3D," << format_double(drift) << '\n';
    out << format_double(r2.mean) << ',' << format_double(r2.std) << ','
        << format_double(r2.max) << ",2D," << format_double(drift_percent(r2, ref)) << '\n';
  }
  {
    auto out = open_out(fs::path(opts.out) / "per_frame.csv");
    out << "frame,error\n";
    for (std::size_t i = 0; i < r3.per_frame.size(); ++i)
      out << i << ',' << format_double(r3.per_frame[i]) << '\n';
  }
  {
    auto out = open_out(fs::path(opts.out) / "cdf.csv");
    out << "error,cumulative_fraction\n";
    for (const auto& [err, frac] : cdf_export(r3))
      out << format_double(err) << ',' << format_double(frac) << '\n';
  }
  write_kv(fs::path(opts.out) / "meta.txt", {{"command", "eval"},
                                             {"est", opts.est},
                                             {"ref", opts.ref},
                                             {"align", opts.align},
                                             {"frames", std::to_string(r3.per_frame.size())}});

  std::cout << "ate3d mean=" << format_double(r3.mean) << " std=" << format_double(r3.std)
            << " max=" << format_double(r3.max) << " drift=" << format_double(drift) << "%\n";
  std::cout << "ate2d mean=" << format_double(r2.mean) << " std=" << format_double(r2.std)
            << " max=" << format_double(r2.max) << "\n";
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckOpts {
  std::uint64_t seed = 0;
  bool corrupt = false;
};

void cmd_gradcheck(const GradcheckOpts& opts) {
  const GradCheckReport report = run_grad_checks(opts.seed, opts.corrupt ? 1.0 : 0.0);
  for (const GradCheckEntry& e : report.entries)
    std::cout << (e.pass ? "PASS " : "FAIL ") << e.name
              << " max_rel_err=" << format_double(e.max_rel_err)
              << " tol=" << format_double(e.tolerance) << "\n";
  std::cout << "gradcheck worst_rel_err=" << format_double(report.worst) << "\n";
  if (!report.all_pass) throw numeric_error("gradcheck: analytic gradients disagree");
}

// ---------------------------------------------------------------------------
// compare

struct CompareOpts {
  SimulateOpts sim;  // world/waypoints/noise settings shared across seeds
  std::string seeds = "1,2,3";
  std::string methods = "icp,ransac-icp,imu-icp";
  std::string checkpoint, out, use = "radar";
  IcpParams icp;
  RansacParams ransac;
};

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void cmd_compare(const CompareOpts& opts) {
  const std::vector<std::string> methods = split_csv(opts.methods);
  for (const std::string& m : methods)
    if (m != "icp" && m != "ransac-icp" && m != "imu-icp" && m != "network")
      throw usage_error("compare: unknown method '" + m + "'");
  if (std::find(methods.begin(), methods.end(), "network") != methods.end() &&
      opts.checkpoint.empty())
    throw usage_error("compare: the network method needs --checkpoint");

  fs::create_directories(opts.out);
  auto table = open_out(fs::path(opts.out) / "comparison.csv");
  table << "seed,method,mean3d,std3d,max3d,mean2d,std2d,max2d,drift_percent\n";

  for (const std::string& seed_str : split_csv(opts.seeds)) {
    const std::uint64_t seed = std::stoull(seed_str);
    SimulateOpts sim = opts.sim;
    sim.seed = seed;
    sim.out = (fs::path(opts.out) / ("seed-" + seed_str)).string();
    cmd_simulate(sim);

    for (const std::string& method : methods) {
      const fs::path run_dir = fs::path(opts.out) / ("seed-" + seed_str + "-" + method);
      if (method == "network") {
        InferOpts inf;
        inf.checkpoint = opts.checkpoint;
        inf.sequence = sim.out;
        inf.out = run_dir.string();
        cmd_infer(inf);
      } else {
        RegisterOpts reg;
        reg.sequence = sim.out;
        reg.method = method;
        reg.use = opts.use;
        reg.out = run_dir.string();
        reg.icp = opts.icp;
        reg.ransac = opts.ransac;
        reg.seed = seed;
        cmd_register(reg);
      }
      const Trajectory ref = read_trajectory(fs::path(sim.out) / "groundtruth.txt");
      Trajectory est = read_trajectory(run_dir / "trajectory.txt");
      est = align_first_frame(est, ref);
      const AteReport r3 = ate(est, ref, AteDim::k3D);
      const AteReport r2 = ate(est, ref, AteDim::k2D);
      table << seed_str << ',' << method << ',' << format_double(r3.mean) << ','
            << format_double(r3.std) << ',' << format_double(r3.max) << ','
            << format_double(r2.mean) << ',' << format_double(r2.std) << ','
            << format_double(r2.max) << ',' << format_double(drift_percent(r3, ref)) << '\n';
    }
  }
  write_kv(fs::path(opts.out) / "meta.txt", {{"command", "compare"},
                                             {"seeds", opts.seeds},
                                             {"methods", opts.methods},
                                             {"use", opts.use},
                                             {"checkpoint", opts.checkpoint}});
  std::cout << "compare: table -> " << (fs::path(opts.out) / "comparison.csv").string() << "\n";
}

// ---------------------------------------------------------------------------

void add_simulate_options(CLI::App* cmd, SimulateOpts& o, bool require_out) {
  cmd->add_option("--world", o.world, "world description file")->required();
  cmd->add_option("--waypoints", o.waypoints, "waypoint file (tx ty tz roll pitch yaw)")
      ->required();
  if (require_out) cmd->add_option("--out", o.out, "output sequence directory")->required();
  cmd->add_option("--seed", o.seed, "master seed")->capture_default_str();
  cmd->add_option("--frame-rate", o.frame_rate, "frames per second")->capture_default_str();
  cmd->add_option("--speed", o.speed, "platform speed, m/s")->capture_default_str();
  cmd->add_option("--keep-prob", o.noise.keep_probability, "radar point keep probability")
      ->capture_default_str();
  cmd->add_option("--ghost-prob", o.noise.ghost_probability, "multipath ghost probability")
      ->capture_default_str();
  cmd->add_option("--range-sigma", o.noise.range_sigma, "range jitter sigma, m")
      ->capture_default_str();
  cmd->add_option("--az-sigma", o.noise.angular_sigma_az, "azimuth jitter sigma, rad")
      ->capture_default_str();
  cmd->add_option("--el-sigma", o.noise.angular_sigma_el, "elevation jitter sigma, rad")
      ->capture_default_str();
  cmd->add_option("--max-points", o.noise.max_points, "radar cloud size cap")
      ->capture_default_str();
  cmd->add_option("--imu-rate", o.imu.rate, "IMU rate, Hz")->capture_default_str();
  cmd->add_option("--gyro-sigma", o.imu.gyro_sigma, "gyro noise sigma, rad/s")
      ->capture_default_str();
  cmd->add_option("--accel-sigma", o.imu.accel_sigma, "accel noise sigma, m/s^2")
      ->capture_default_str();
  cmd->add_option("--n-az", o.fov.n_az, "dense scan azimuth rays")->capture_default_str();
  cmd->add_option("--n-el", o.fov.n_el, "dense scan elevation rays")->capture_default_str();
  cmd->add_option("--hfov-deg", o.hfov_deg, "horizontal FOV, degrees")->capture_default_str();
  cmd->add_option("--vfov-deg", o.vfov_deg, "vertical FOV, degrees")->capture_default_str();
  cmd->add_option("--max-range", o.fov.max_range, "sensor max range, m")->capture_default_str();
}

}  // namespace

int run_cli(std::vector<std::string> args) {
  CLI::App app{"mmWave-radar-aided egomotion estimation pipeline"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value config file with per-command sections");

  SimulateOpts sim;
  auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic sensor sequence");
  sim_cmd->configurable();
  add_simulate_options(sim_cmd, sim, /*require_out=*/true);

  EncodeOpts enc;
  auto* enc_cmd = app.add_subcommand("encode", "encode clouds into panoramic images");
  enc_cmd->configurable();
  enc_cmd->add_option("--cloud", enc.cloud, "single cloud file");
  enc_cmd->add_option("--sequence", enc.sequence, "sequence directory");
  enc_cmd->add_option("--out", enc.out, "output directory")->required();
  enc_cmd->add_option("--rows", enc.rows, "image rows")->capture_default_str();
  enc_cmd->add_option("--cols", enc.cols, "image cols")->capture_default_str();
  enc_cmd->add_option("--max-range", enc.max_range, "encoding max range, m")
      ->capture_default_str();
  enc_cmd->add_flag("--dense", enc.dense, "encode the dense scans instead of radar");

  RegisterOpts reg;
  auto* reg_cmd = app.add_subcommand("register", "classical registration over a sequence");
  reg_cmd->configurable();
  reg_cmd->add_option("--sequence", reg.sequence, "sequence directory")->required();
  reg_cmd->add_option("--method", reg.method, "icp | ransac-icp | imu-icp")
      ->capture_default_str();
  reg_cmd->add_option("--out", reg.out, "output directory")->required();
  reg_cmd->add_option("--use", reg.use, "radar | dense clouds")->capture_default_str();
  reg_cmd->add_option("--max-iters", reg.icp.max_iterations, "ICP iteration cap")
      ->capture_default_str();
  reg_cmd->add_option("--tol", reg.icp.objective_tolerance, "ICP objective tolerance, m^2")
      ->capture_default_str();
  reg_cmd->add_option("--reject-dist", reg.icp.reject_distance, "NN rejection distance, m")
      ->capture_default_str();
  reg_cmd->add_option("--ransac-hypotheses", reg.ransac.hypotheses, "RANSAC hypothesis count")
      ->capture_default_str();
  reg_cmd->add_option("--ransac-threshold", reg.ransac.inlier_threshold,
                      "RANSAC inlier threshold, m")
      ->capture_default_str();
  reg_cmd->add_option("--seed", reg.seed, "seed for RANSAC sampling")->capture_default_str();

  TrainOpts trn;
  auto* trn_cmd = app.add_subcommand("train", "train the egomotion network");
  trn_cmd->configurable();
  trn_cmd->add_option("--sequence", trn.sequences, "sequence directory (repeatable)")
      ->required();
  trn_cmd->add_option("--profile", trn.profile, "toy | paper")->capture_default_str();
  trn_cmd->add_option("--out", trn.out, "output directory")->required();
  trn_cmd->add_option("--resume", trn.resume, "checkpoint to continue from");
  trn_cmd->add_flag("--third-modality", trn.third_modality, "enable the depth subnet");
  trn_cmd->add_option("--epochs", trn.tc.epochs, "training epochs")->capture_default_str();
  trn_cmd->add_option("--lr", trn.tc.lr, "initial learning rate")->capture_default_str();
  trn_cmd->add_option("--lr-decay", trn.tc.lr_decay, "LR decay factor")->capture_default_str();
  trn_cmd->add_option("--decay-every", trn.tc.decay_every, "epochs between LR decays")
      ->capture_default_str();
  trn_cmd->add_option("--subseq", trn.tc.subsequence_length, "consecutive pairs per step")
      ->capture_default_str();
  trn_cmd->add_option("--subsample", trn.tc.subsample, "frame sub-sampling factor")
      ->capture_default_str();
  trn_cmd->add_option("--seed", trn.tc.seed, "training seed")->capture_default_str();
  trn_cmd->add_option("--rows", trn.rows, "panoramic rows")->capture_default_str();
  trn_cmd->add_option("--cols", trn.cols, "panoramic cols")->capture_default_str();
  trn_cmd->add_option("--max-range", trn.max_range, "panoramic max range, m")
      ->capture_default_str();

  InferOpts inf;
  auto* inf_cmd = app.add_subcommand("infer", "run the network over a sequence");
  inf_cmd->configurable();
  inf_cmd->add_option("--checkpoint", inf.checkpoint, "model checkpoint")->required();
  inf_cmd->add_option("--sequence", inf.sequence, "sequence directory")->required();
  inf_cmd->add_option("--out", inf.out, "output directory")->required();
  inf_cmd->add_option("--subsample", inf.subsample, "frame sub-sampling factor")
      ->capture_default_str();

  EvalOpts evl;
  auto* evl_cmd = app.add_subcommand("eval", "ATE between trajectories");
  evl_cmd->configurable();
  evl_cmd->add_option("--est", evl.est, "estimated trajectory file")->required();
  evl_cmd->add_option("--ref", evl.ref, "reference trajectory file")->required();
  evl_cmd->add_option("--out", evl.out, "output directory")->required();
  evl_cmd->add_option("--align", evl.align, "none | first | full")->capture_default_str();

  GradcheckOpts grd;
  auto* grd_cmd = app.add_subcommand("gradcheck", "verify gradients by finite differences");
  grd_cmd->configurable();
  grd_cmd->add_option("--seed", grd.seed, "probe seed")->capture_default_str();
  grd_cmd->add_flag("--corrupt-gradient", grd.corrupt,
                    "deliberately corrupt one gradient (test hook)");

  CompareOpts cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "methods x seeds ATE comparison table");
  cmp_cmd->configurable();
  add_simulate_options(cmp_cmd, cmp.sim, /*require_out=*/false);
  cmp_cmd->add_option("--seeds", cmp.seeds, "comma-separated seed list")->capture_default_str();
  cmp_cmd->add_option("--methods", cmp.methods, "comma-separated method list")
      ->capture_default_str();
  cmp_cmd->add_option("--checkpoint", cmp.checkpoint, "checkpoint for the network method");
  cmp_cmd->add_option("--out", cmp.out, "output directory")->required();
  cmp_cmd->add_option("--use", cmp.use, "radar | dense clouds for registration")
      ->capture_default_str();
  cmp_cmd->add_option("--max-iters", cmp.icp.max_iterations, "ICP iteration cap")
      ->capture_default_str();
  cmp_cmd->add_option("--reject-dist", cmp.icp.reject_distance, "NN rejection distance, m")
      ->capture_default_str();

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (sim_cmd->parsed()) cmd_simulate(sim);
    if (enc_cmd->parsed()) cmd_encode(enc);
    if (reg_cmd->parsed()) cmd_register(reg);
    if (trn_cmd->parsed()) cmd_train(trn);
    if (inf_cmd->parsed()) cmd_infer(inf);
    if (evl_cmd->parsed()) cmd_eval(evl);
    if (grd_cmd->parsed()) cmd_gradcheck(grd);
    if (cmp_cmd->parsed()) cmd_compare(cmp);
  } catch (const usage_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace radarego
