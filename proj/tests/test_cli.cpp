#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "radarego/cli.hpp"
#include "radarego/evaluation.hpp"
#include "radarego/io.hpp"
#include "radarego/rng.hpp"

using namespace radarego;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("radarego_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_test_world(const fs::path& p) {
  std::ofstream out(p);
  out << "plane x 6 -4.5 4.5 -1.5 1.5\n"
      << "plane x -6 -4.5 4.5 -1.5 1.5\n"
      << "plane y 4.5 -6 6 -1.5 1.5\n"
      << "plane y -4.5 -6 6 -1.5 1.5\n"
      << "plane z 1.5 -6 6 -4.5 4.5\n"
      << "plane z -1.5 -6 6 -4.5 4.5\n"
      << "box 2 -1 -0.9 0.8 0.6 1.2\n"
      << "box -1.5 1.2 -1.0 0.5 0.9 1.0\n";
}

void write_test_waypoints(const fs::path& p, double length = 0.5) {
  std::ofstream out(p);
  out << -length / 2 << " 0 0 0 0 0\n" << length / 2 << " 0 0 0 0 0\n";
}

int cli(std::initializer_list<std::string> args) {
  return run_cli(std::vector<std::string>(args));
}

/// Order-independent digest of every regular file under a directory.
std::map<std::string, std::string> dir_digest(const fs::path& root) {
  std::map<std::string, std::string> digest;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file())
      digest[fs::relative(entry.path(), root).string()] = content_hash_file(entry.path());
  return digest;
}

/// A tiny simulated sequence shared by the register/train/infer tests.
fs::path make_sequence(const TempDir& tmp, const std::string& name, std::uint64_t seed,
                       double length = 0.5) {
  write_test_world(tmp.path / "world.txt");
  write_test_waypoints(tmp.path / "wp.txt", length);
  const fs::path seq = tmp.path / name;
  REQUIRE(cli({"simulate", "--world", (tmp.path / "world.txt").string(), "--waypoints",
               (tmp.path / "wp.txt").string(), "--out", seq.string(), "--seed",
               std::to_string(seed), "--n-az", "32", "--n-el", "8", "--keep-prob", "0.5"}) == 0);
  return seq;
}

}  // namespace

TEST_CASE("simulate writes the documented directory layout with the right frame count") {
  TempDir tmp;
  write_test_world(tmp.path / "world.txt");
  write_test_waypoints(tmp.path / "wp.txt", 4.0);  // 4 m at 1 m/s, 20 Hz
  const fs::path out = tmp.path / "seq";
  CHECK(cli({"simulate", "--world", (tmp.path / "world.txt").string(), "--waypoints",
             (tmp.path / "wp.txt").string(), "--out", out.string(), "--seed", "9", "--n-az",
             "16", "--n-el", "4"}) == 0);
  CHECK(fs::exists(out / "frames" / "00000.cloud"));
  CHECK(fs::exists(out / "frames" / "00080.cloud"));
  CHECK(!fs::exists(out / "frames" / "00081.cloud"));
  CHECK(fs::exists(out / "imu.txt"));
  CHECK(fs::exists(out / "groundtruth.txt"));
  const auto meta = read_kv(out / "meta.txt");
  CHECK(meta.at("frames") == "81");
  CHECK(meta.at("sim_seed") == "9");
  CHECK(read_trajectory(out / "groundtruth.txt").size() == 81);
}

TEST_CASE("simulate is byte-identical under a repeated seed") {
  TempDir tmp;
  write_test_world(tmp.path / "world.txt");
  write_test_waypoints(tmp.path / "wp.txt");
  auto run = [&](const std::string& name) {
    REQUIRE(cli({"simulate", "--world", (tmp.path / "world.txt").string(), "--waypoints",
                 (tmp.path / "wp.txt").string(), "--out", (tmp.path / name).string(), "--seed",
                 "77", "--n-az", "16", "--n-el", "4"}) == 0);
    return dir_digest(tmp.path / name);
  };
  const auto a = run("seq_a");
  const auto b = run("seq_b");
  CHECK(a == b);

  REQUIRE(cli({"simulate", "--world", (tmp.path / "world.txt").string(), "--waypoints",
               (tmp.path / "wp.txt").string(), "--out", (tmp.path / "seq_c").string(), "--seed",
               "78", "--n-az", "16", "--n-el", "4"}) == 0);
  CHECK(dir_digest(tmp.path / "seq_c") != a);
}

TEST_CASE("register produces a trajectory cmd_eval accepts, and eval of truth is zero") {
  TempDir tmp;
  const fs::path seq = make_sequence(tmp, "seq", 3);
  const fs::path reg = tmp.path / "reg";
  CHECK(cli({"register", "--sequence", seq.string(), "--method", "icp", "--use", "dense",
             "--out", reg.string()}) == 0);
  CHECK(read_trajectory(reg / "trajectory.txt").size() ==
        read_trajectory(seq / "groundtruth.txt").size());
  CHECK(fs::exists(reg / "diagnostics.csv"));

  const fs::path ev = tmp.path / "eval_self";
  CHECK(cli({"eval", "--est", (seq / "groundtruth.txt").string(), "--ref",
             (seq / "groundtruth.txt").string(), "--out", ev.string()}) == 0);
  std::ifstream summary(ev / "summary.csv");
  std::string header, line3d;
  std::getline(summary, header);
  std::getline(summary, line3d);
  CHECK(line3d.substr(0, 2) == "0,");
}

TEST_CASE("eval without alignment reports a constant offset exactly") {
  TempDir tmp;
  Trajectory ref;
  for (int k = 0; k < 10; ++k)
    ref.entries.push_back({0.05 * k, PoseSE3{RotMat3::identity(), {0.1 * k, 0, 0}}});
  Trajectory est = ref;
  for (auto& e : est.entries) e.pose.translation = e.pose.translation + Vec3{0.3, 0.4, 0};
  write_trajectory(tmp.path / "ref.txt", ref);
  write_trajectory(tmp.path / "est.txt", est);
  CHECK(cli({"eval", "--est", (tmp.path / "est.txt").string(), "--ref",
             (tmp.path / "ref.txt").string(), "--out", (tmp.path / "ev").string(), "--align",
             "none"}) == 0);
  std::ifstream summary(tmp.path / "ev" / "summary.csv");
  std::string header, line3d;
  std::getline(summary, header);
  std::getline(summary, line3d);
  CHECK(line3d.substr(0, line3d.find(',')) == "0.5");  // |(0.3, 0.4)| exactly
}

TEST_CASE("CLI eval matches the in-process computation") {
  TempDir tmp;
  const fs::path seq = make_sequence(tmp, "seq", 5);
  const fs::path reg = tmp.path / "reg";
  REQUIRE(cli({"register", "--sequence", seq.string(), "--method", "icp", "--use", "dense",
               "--out", reg.string()}) == 0);
  REQUIRE(cli({"eval", "--est", (reg / "trajectory.txt").string(), "--ref",
               (seq / "groundtruth.txt").string(), "--out", (tmp.path / "ev").string(),
               "--align", "first"}) == 0);

  const Trajectory ref = read_trajectory(seq / "groundtruth.txt");
  const Trajectory est =
      align_first_frame(read_trajectory(reg / "trajectory.txt"), ref);
  const AteReport r3 = ate(est, ref, AteDim::k3D);

  std::ifstream summary(tmp.path / "ev" / "summary.csv");
  std::string header, line3d;
  std::getline(summary, header);
  std::getline(summary, line3d);
  const double cli_mean = std::stod(line3d.substr(0, line3d.find(',')));
  CHECK(cli_mean == r3.mean);  // bit-identical, both paths share the library
}

TEST_CASE("train writes checkpoint, loss history and metadata; infer respects subsample") {
  TempDir tmp;
  const fs::path seq = make_sequence(tmp, "seq", 11, 0.5);  // 11 frames
  const fs::path run = tmp.path / "run";
  REQUIRE(cli({"train", "--sequence", seq.string(), "--profile", "micro", "--rows", "4",
               "--cols", "4", "--out", run.string(), "--epochs", "2", "--subseq", "4", "--lr",
               "1e-3", "--seed", "21"}) == 0);
  CHECK(fs::exists(run / "checkpoint.bin"));
  CHECK(fs::exists(run / "meta.txt"));
  {
    std::ifstream loss(run / "loss.csv");
    std::string header, l0, l1, extra;
    REQUIRE(std::getline(loss, header));
    CHECK(header == "epoch,mean_loss,lr");
    REQUIRE(std::getline(loss, l0));
    REQUIRE(std::getline(loss, l1));
    CHECK(!std::getline(loss, extra));
    CHECK(l0.substr(0, 2) == "0,");
    CHECK(l1.substr(0, 2) == "1,");
  }

  // infer: 11 frames -> 11 entries at subsample 1; ceil(11/5)=3 at subsample 5.
  const fs::path inf1 = tmp.path / "inf1";
  REQUIRE(cli({"infer", "--checkpoint", (run / "checkpoint.bin").string(), "--sequence",
               seq.string(), "--out", inf1.string()}) == 0);
  CHECK(read_trajectory(inf1 / "trajectory.txt").size() == 11);

  const fs::path inf5 = tmp.path / "inf5";
  REQUIRE(cli({"infer", "--checkpoint", (run / "checkpoint.bin").string(), "--sequence",
               seq.string(), "--out", inf5.string(), "--subsample", "5"}) == 0);
  CHECK(read_trajectory(inf5 / "trajectory.txt").size() == 3);

  // repeated inference is deterministic
  const fs::path inf1b = tmp.path / "inf1b";
  REQUIRE(cli({"infer", "--checkpoint", (run / "checkpoint.bin").string(), "--sequence",
               seq.string(), "--out", inf1b.string()}) == 0);
  CHECK(content_hash_file(inf1 / "trajectory.txt") ==
        content_hash_file(inf1b / "trajectory.txt"));
}

TEST_CASE("train with zero epochs still saves an initialized checkpoint") {
  TempDir tmp;
  const fs::path seq = make_sequence(tmp, "seq", 13);
  const fs::path run = tmp.path / "run0";
  REQUIRE(cli({"train", "--sequence", seq.string(), "--profile", "micro", "--rows", "4",
               "--cols", "4", "--out", run.string(), "--epochs", "0", "--subseq", "4"}) == 0);
  CHECK(fs::exists(run / "checkpoint.bin"));
  std::ifstream loss(run / "loss.csv");
  std::string header, extra;
  REQUIRE(std::getline(loss, header));
  CHECK(!std::getline(loss, extra));  // header only
}

TEST_CASE("resumed training continues without a loss spike") {
  TempDir tmp;
  const fs::path seq = make_sequence(tmp, "seq", 17);
  const fs::path first = tmp.path / "first";
  REQUIRE(cli({"train", "--sequence", seq.string(), "--profile", "micro", "--rows", "4",
               "--cols", "4", "--out", first.string(), "--epochs", "6", "--subseq", "4",
               "--lr", "1e-3", "--seed", "31"}) == 0);
  const fs::path second = tmp.path / "second";
  REQUIRE(cli({"train", "--sequence", seq.string(), "--profile", "micro", "--rows", "4",
               "--cols", "4", "--out", second.string(), "--epochs", "4", "--subseq", "4",
               "--lr", "1e-3", "--seed", "32", "--resume",
               (first / "checkpoint.bin").string()}) == 0);

  auto read_losses = [](const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::pair<int, double>> rows;
    while (std::getline(in, line)) {
      const auto c1 = line.find(',');
      const auto c2 = line.find(',', c1 + 1);
      rows.emplace_back(std::stoi(line.substr(0, c1)),
                        std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
    }
    return rows;
  };
  const auto a = read_losses(first / "loss.csv");
  const auto b = read_losses(second / "loss.csv");
  REQUIRE(a.size() == 6);
  REQUIRE(b.size() == 4);
  CHECK(b.front().first == 6);  // epoch numbering continues
  CHECK(b.front().second < 10.0 * a.back().second);  // no reset spike
}

TEST_CASE("gradcheck exits zero normally and nonzero when corrupted") {
  CHECK(cli({"gradcheck", "--seed", "4"}) == 0);
  CHECK(cli({"gradcheck", "--seed", "4", "--corrupt-gradient"}) == 3);
}

TEST_CASE("exit codes: usage, data and parse errors") {
  TempDir tmp;
  CHECK(cli({"definitely-not-a-command"}) == 1);
  CHECK(cli({"register", "--sequence", "/nonexistent", "--method", "warp", "--out",
             (tmp.path / "x").string()}) == 1);
  CHECK(cli({"register", "--sequence", "/nonexistent", "--method", "icp", "--out",
             (tmp.path / "x").string()}) == 2);
  CHECK(cli({"eval", "--est", "/nonexistent", "--ref", "/nonexistent", "--out",
             (tmp.path / "y").string()}) == 2);
  CHECK(cli({"infer", "--checkpoint", "/nonexistent", "--sequence", "/nonexistent", "--out",
             (tmp.path / "z").string()}) == 2);
}

TEST_CASE("encode writes parseable panoramic images") {
  TempDir tmp;
  const fs::path seq = make_sequence(tmp, "seq", 19);
  const fs::path enc = tmp.path / "enc";
  CHECK(cli({"encode", "--sequence", seq.string(), "--out", enc.string(), "--rows", "16",
             "--cols", "32"}) == 0);
  const PanoramicImage img = read_panoramic(enc / "00000.pano");
  CHECK(img.geom.rows == 16);
  CHECK(img.geom.cols == 32);
  for (double v : img.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 255.0);
  }

  CHECK(cli({"encode", "--out", (tmp.path / "none").string()}) == 1);  // neither input given
}

TEST_CASE("config file supplies defaults and flags override") {
  TempDir tmp;
  write_test_world(tmp.path / "world.txt");
  write_test_waypoints(tmp.path / "wp.txt");
  {
    std::ofstream cfg(tmp.path / "run.ini");
    cfg << "[simulate]\n"
        << "world = " << (tmp.path / "world.txt").string() << "\n"
        << "waypoints = " << (tmp.path / "wp.txt").string() << "\n"
        << "out = " << (tmp.path / "from_config").string() << "\n"
        << "seed = 5\n"
        << "n-az = 16\n"
        << "n-el = 4\n";
  }
  CHECK(cli({"--config", (tmp.path / "run.ini").string(), "simulate"}) == 0);
  CHECK(read_kv(tmp.path / "from_config" / "meta.txt").at("sim_seed") == "5");

  // The command line wins over the config file.
  CHECK(cli({"--config", (tmp.path / "run.ini").string(), "simulate", "--seed", "6", "--out",
             (tmp.path / "overridden").string()}) == 0);
  CHECK(read_kv(tmp.path / "overridden" / "meta.txt").at("sim_seed") == "6");
}

TEST_CASE("compare emits one table row per seed and method") {
  TempDir tmp;
  write_test_world(tmp.path / "world.txt");
  write_test_waypoints(tmp.path / "wp.txt");
  const fs::path out = tmp.path / "cmp";
  CHECK(cli({"compare", "--world", (tmp.path / "world.txt").string(), "--waypoints",
             (tmp.path / "wp.txt").string(), "--out", out.string(), "--seeds", "1,2",
             "--methods", "icp,imu-icp", "--use", "dense", "--n-az", "32", "--n-el", "8",
             "--keep-prob", "0.5"}) == 0);
  std::ifstream table(out / "comparison.csv");
  std::string line;
  int rows = 0;
  std::getline(table, line);
  CHECK(line == "seed,method,mean3d,std3d,max3d,mean2d,std2d,max2d,drift_percent");
  while (std::getline(table, line)) ++rows;
  CHECK(rows == 4);
  CHECK(cli({"compare", "--world", (tmp.path / "world.txt").string(), "--waypoints",
             (tmp.path / "wp.txt").string(), "--out", (tmp.path / "cmp2").string(),
             "--methods", "network"}) == 1);  // network without --checkpoint
}
