#include "radarego/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "radarego/errors.hpp"

namespace radarego {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open: " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write: " + path.string());
  return out;
}

/// Strips comments and surrounding whitespace; empty result means skip.
std::string clean_line(const std::string& raw) {
  std::string line = raw;
  const auto hash = line.find('#');
  if (hash != std::string::npos) line.erase(hash);
  const auto first = line.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = line.find_last_not_of(" \t\r\n");
  return line.substr(first, last - first + 1);
}

std::vector<double> parse_doubles(const std::string& line, const fs::path& path) {
  std::istringstream ss(line);
  std::vector<double> vals;
  double v;
  while (ss >> v) vals.push_back(v);
  std::string trailing;
  if (ss.clear(), ss >> trailing; !trailing.empty())
    throw data_error("malformed numeric line in " + path.string() + ": " + line);
  return vals;
}

}  // namespace

PointCloud read_cloud(const fs::path& path) {
  auto in = open_in(path);
  PointCloud cloud;
  std::string raw;
  bool any_intensity = false;
  while (std::getline(in, raw)) {
    const std::string line = clean_line(raw);
    if (line.empty()) continue;
    const auto vals = parse_doubles(line, path);
    if (vals.size() != 3 && vals.size() != 4)
      throw data_error("cloud line needs 3 or 4 fields in " + path.string());
    cloud.points.push_back({vals[0], vals[1], vals[2]});
    if (vals.size() == 4) {
      any_intensity = true;
      cloud.intensities.resize(cloud.points.size() - 1, 0.0);
      cloud.intensities.push_back(vals[3]);
    } else if (any_intensity) {
      cloud.intensities.push_back(0.0);
    }
  }
  return cloud;
}

void write_cloud(const fs::path& path, const PointCloud& cloud) {
  auto out = open_out(path);
  const bool has_intensity = cloud.intensities.size() == cloud.size();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    out << format_double(p.x) << ' ' << format_double(p.y) << ' ' << format_double(p.z);
    if (has_intensity) out << ' ' << format_double(cloud.intensities[i]);
    out << '\n';
  }
}

std::vector<ImuSample> read_imu(const fs::path& path) {
  auto in = open_in(path);
  std::vector<ImuSample> samples;
  std::string raw;
  while (std::getline(in, raw)) {
    const std::string line = clean_line(raw);
    if (line.empty()) continue;
    const auto v = parse_doubles(line, path);
    if (v.size() != 7) throw data_error("imu line needs 7 fields in " + path.string());
    ImuSample s;
    s.timestamp = v[0];
    s.accel = {v[1], v[2], v[3]};
    s.gyro = {v[4], v[5], v[6]};
    if (!samples.empty() && s.timestamp <= samples.back().timestamp)
      throw data_error("imu timestamps not strictly increasing in " + path.string());
    samples.push_back(s);
  }
  return samples;
}

void write_imu(const fs::path& path, std::span<const ImuSample> samples) {
  auto out = open_out(path);
  for (const ImuSample& s : samples) {
    out << format_double(s.timestamp) << ' ' << format_double(s.accel.x) << ' '
        << format_double(s.accel.y) << ' ' << format_double(s.accel.z) << ' '
        << format_double(s.gyro.x) << ' ' << format_double(s.gyro.y) << ' '
        << format_double(s.gyro.z) << '\n';
  }
}

PanoramicImage read_panoramic(const fs::path& path) {
  auto in = open_in(path);
  std::string raw;
  PanoramicImage img;
  bool have_header = false;
  while (std::getline(in, raw)) {
    const std::string line = clean_line(raw);
    if (line.empty()) continue;
    const auto v = parse_doubles(line, path);
    if (!have_header) {
      if (v.size() != 7) throw data_error("panoramic header needs 7 fields: " + path.string());
      img.geom.rows = static_cast<int>(v[0]);
      img.geom.cols = static_cast<int>(v[1]);
      img.geom.delta_alpha = v[2];
      img.geom.delta_beta = v[3];
      img.geom.alpha_min = v[4];
      img.geom.beta_min = v[5];
      img.geom.max_range = v[6];
      if (img.geom.rows <= 0 || img.geom.cols <= 0)
        throw data_error("panoramic header has non-positive dims: " + path.string());
      img.values.reserve(static_cast<std::size_t>(img.geom.rows) * img.geom.cols);
      have_header = true;
      continue;
    }
    if (static_cast<int>(v.size()) != img.geom.cols)
      throw data_error("panoramic row width mismatch in " + path.string());
    img.values.insert(img.values.end(), v.begin(), v.end());
  }
  if (!have_header || static_cast<int>(img.values.size()) != img.geom.rows * img.geom.cols)
    throw data_error("panoramic grid incomplete in " + path.string());
  return img;
}

void write_panoramic(const fs::path& path, const PanoramicImage& img) {
  auto out = open_out(path);
  const PanoGeometry& g = img.geom;
  out << g.rows << ' ' << g.cols << ' ' << format_double(g.delta_alpha) << ' '
      << format_double(g.delta_beta) << ' ' << format_double(g.alpha_min) << ' '
      << format_double(g.beta_min) << ' ' << format_double(g.max_range) << '\n';
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      if (c) out << ' ';
      out << format_double(img.values[r * g.cols + c]);
    }
    out << '\n';
  }
}

Trajectory read_trajectory(const fs::path& path) {
  auto in = open_in(path);
  Trajectory traj;
  std::string raw;
  while (std::getline(in, raw)) {
    const std::string line = clean_line(raw);
    if (line.empty()) continue;
    const auto v = parse_doubles(line, path);
    if (v.size() != 8) throw data_error("trajectory line needs 8 fields in " + path.string());
    Trajectory::Entry e;
    e.timestamp = v[0];
    e.pose.translation = {v[1], v[2], v[3]};
    e.pose.rotation = quat_to_rotmat({v[4], v[5], v[6], v[7]});
    if (!traj.entries.empty() && e.timestamp <= traj.entries.back().timestamp)
      throw data_error("trajectory timestamps not strictly increasing in " + path.string());
    traj.entries.push_back(e);
  }
  return traj;
}

void write_trajectory(const fs::path& path, const Trajectory& traj) {
  auto out = open_out(path);
  for (const auto& e : traj.entries) {
    const Quat q = rotmat_to_quat(e.pose.rotation);
    out << format_double(e.timestamp) << ' ' << format_double(e.pose.translation.x) << ' '
        << format_double(e.pose.translation.y) << ' ' << format_double(e.pose.translation.z)
        << ' ' << format_double(q.x) << ' ' << format_double(q.y) << ' ' << format_double(q.z)
        << ' ' << format_double(q.w) << '\n';
  }
}

WorldModel read_world(const fs::path& path) {
  auto in = open_in(path);
  std::vector<Surface> surfaces;
  std::string raw;
  while (std::getline(in, raw)) {
    const std::string line = clean_line(raw);
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string kind;
    ss >> kind;
    if (kind == "box") {
      double cx, cy, cz, sx, sy, sz;
      if (!(ss >> cx >> cy >> cz >> sx >> sy >> sz))
        throw data_error("bad box line in " + path.string() + ": " + line);
      surfaces.push_back(Surface::box({cx, cy, cz}, {sx, sy, sz}));
    } else if (kind == "plane") {
      std::string axis;
      double coord, a0, a1, b0, b1;
      if (!(ss >> axis >> coord >> a0 >> a1 >> b0 >> b1) || axis.size() != 1 ||
          (axis[0] != 'x' && axis[0] != 'y' && axis[0] != 'z'))
        throw data_error("bad plane line in " + path.string() + ": " + line);
      surfaces.push_back(Surface::plane(axis[0] - 'x', coord, a0, a1, b0, b1));
    } else {
      throw data_error("unknown surface kind in " + path.string() + ": " + kind);
    }
  }
  return WorldModel::from_surfaces(std::move(surfaces));
}

void write_world(const fs::path& path, const WorldModel& world) {
  auto out = open_out(path);
  for (const Surface& s : world.surfaces) {
    if (s.kind == Surface::Kind::Box) {
      const Vec3 size = s.half_size * 2.0;
      out << "box " << format_double(s.center.x) << ' ' << format_double(s.center.y) << ' '
          << format_double(s.center.z) << ' ' << format_double(size.x) << ' '
          << format_double(size.y) << ' ' << format_double(size.z) << '\n';
    } else {
      out << "plane " << static_cast<char>('x' + s.axis) << ' ' << format_double(s.coord)
          << ' ' << format_double(s.a0) << ' ' << format_double(s.a1) << ' '
          << format_double(s.b0) << ' ' << format_double(s.b1) << '\n';
    }
  }
}

std::vector<PoseSE3> read_waypoints(const fs::path& path) {
  auto in = open_in(path);
  std::vector<PoseSE3> waypoints;
  std::string raw;
  while (std::getline(in, raw)) {
    const std::string line = clean_line(raw);
    if (line.empty()) continue;
    const auto v = parse_doubles(line, path);
    if (v.size() != 6) throw data_error("waypoint line needs 6 fields in " + path.string());
    PoseSE3 p;
    p.translation = {v[0], v[1], v[2]};
    p.rotation = euler_to_rotmat({v[3], v[4], v[5]});
    waypoints.push_back(p);
  }
  if (waypoints.size() < 2)
    throw data_error("waypoint file needs at least 2 waypoints: " + path.string());
  return waypoints;
}

void write_kv(const fs::path& path,
              const std::vector<std::pair<std::string, std::string>>& kv) {
  auto out = open_out(path);
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

std::map<std::string, std::string> read_kv(const fs::path& path) {
  auto in = open_in(path);
  std::map<std::string, std::string> kv;
  std::string raw;
  while (std::getline(in, raw)) {
    const std::string line = clean_line(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw data_error("bad key=value line in " + path.string());
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void write_sequence_dir(const fs::path& dir, const SimulatedSequence& seq,
                        const std::vector<std::pair<std::string, std::string>>& meta) {
  fs::create_directories(dir / "frames");

  std::vector<ImuSample> all_imu;
  Trajectory gt;
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const SensorFrame& f = seq.frames[k];
    char name[32];
    std::snprintf(name, sizeof(name), "%05zu", k);
    write_cloud(dir / "frames" / (std::string(name) + ".cloud"), f.cloud);
    write_cloud(dir / "frames" / (std::string(name) + ".dense"), f.dense);
    all_imu.insert(all_imu.end(), f.imu_window.begin(), f.imu_window.end());
    if (!f.ground_truth) throw data_error("write_sequence_dir: frame missing ground truth");
    gt.entries.push_back({f.cloud.timestamp, *f.ground_truth});
  }
  write_imu(dir / "imu.txt", all_imu);
  write_trajectory(dir / "groundtruth.txt", gt);

  std::vector<std::pair<std::string, std::string>> full_meta = {
      {"seed", std::to_string(seq.seed)},
      {"frame_rate", format_double(seq.frame_rate)},
      {"frames", std::to_string(seq.frames.size())},
  };
  full_meta.insert(full_meta.end(), meta.begin(), meta.end());
  write_kv(dir / "meta.txt", full_meta);
}

SimulatedSequence read_sequence_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw data_error("not a sequence directory: " + dir.string());
  const auto meta = read_kv(dir / "meta.txt");
  const Trajectory gt = read_trajectory(dir / "groundtruth.txt");
  std::vector<ImuSample> all_imu;
  if (fs::exists(dir / "imu.txt")) all_imu = read_imu(dir / "imu.txt");

  SimulatedSequence seq;
  if (auto it = meta.find("seed"); it != meta.end()) seq.seed = std::stoull(it->second);
  if (auto it = meta.find("frame_rate"); it != meta.end())
    seq.frame_rate = std::stod(it->second);

  std::size_t imu_cursor = 0;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "%05zu", k);
    SensorFrame f;
    const double t = gt.entries[k].timestamp;
    f.cloud = read_cloud(dir / "frames" / (std::string(name) + ".cloud"));
    f.cloud.timestamp = t;
    const fs::path dense_path = dir / "frames" / (std::string(name) + ".dense");
    if (fs::exists(dense_path)) {
      f.dense = read_cloud(dense_path);
      f.dense.timestamp = t;
    }
    f.ground_truth = gt.entries[k].pose;
    while (imu_cursor < all_imu.size() && all_imu[imu_cursor].timestamp <= t + 1e-12) {
      if (k > 0) f.imu_window.push_back(all_imu[imu_cursor]);
      ++imu_cursor;
    }
    seq.frames.push_back(std::move(f));
  }
  if (seq.frames.empty()) throw data_error("sequence directory has no frames: " + dir.string());
  return seq;
}

std::string content_hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot hash missing file: " + path.string());
  std::uint64_t h = 14695981039346656037ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

}  // namespace radarego
