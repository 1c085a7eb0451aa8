#include "radarego/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "radarego/errors.hpp"
#include "radarego/rng.hpp"

namespace radarego {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double axis_component(const Vec3& v, int axis) {
  return axis == 0 ? v.x : axis == 1 ? v.y : v.z;
}

/// Slab test; returns entry distance of the ray into the box, or +inf.
double ray_box(const Vec3& origin, const Vec3& dir, const Aabb& box) {
  double tmin = 0.0, tmax = kInf;
  for (int axis = 0; axis < 3; ++axis) {
    const double o = axis_component(origin, axis);
    const double d = axis_component(dir, axis);
    const double lo = axis_component(box.lo, axis);
    const double hi = axis_component(box.hi, axis);
    if (std::abs(d) < 1e-15) {
      if (o < lo || o > hi) return kInf;
      continue;
    }
    double t0 = (lo - o) / d, t1 = (hi - o) / d;
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return kInf;
  }
  return tmin > 1e-9 ? tmin : kInf;  // ignore hits at/behind the origin
}

double ray_plane(const Vec3& origin, const Vec3& dir, const Surface& s) {
  const double o = axis_component(origin, s.axis);
  const double d = axis_component(dir, s.axis);
  if (std::abs(d) < 1e-15) return kInf;
  const double t = (s.coord - o) / d;
  if (t <= 1e-9) return kInf;
  const Vec3 hit = origin + dir * t;
  double u, v;
  if (s.axis == 0) {
    u = hit.y; v = hit.z;
  } else if (s.axis == 1) {
    u = hit.x; v = hit.z;
  } else {
    u = hit.x; v = hit.y;
  }
  if (u < s.a0 || u > s.a1 || v < s.b0 || v > s.b1) return kInf;
  return t;
}

double ray_world(const WorldModel& world, const Vec3& origin, const Vec3& dir) {
  double best = kInf;
  for (const Surface& s : world.surfaces) {
    const double t = s.kind == Surface::Kind::Box ? ray_box(origin, dir, s.bounds())
                                                  : ray_plane(origin, dir, s);
    best = std::min(best, t);
  }
  return best;
}

Vec3 direction_from_angles(double az, double el) {
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

/// Keeps a deterministic, order-preserving subset of size at most n.
void cap_cloud(PointCloud& cloud, int n, std::mt19937_64& rng) {
  const int total = static_cast<int>(cloud.size());
  if (total <= n) return;
  std::vector<int> indices(total);
  std::iota(indices.begin(), indices.end(), 0);
  for (int i = 0; i < n; ++i) {
    const int j = static_cast<int>(uniform_int(rng, i, total - 1));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(n);
  std::sort(indices.begin(), indices.end());
  PointCloud kept;
  kept.timestamp = cloud.timestamp;
  kept.points.reserve(n);
  const bool has_intensity = cloud.intensities.size() == cloud.size();
  if (has_intensity) kept.intensities.reserve(n);
  for (int idx : indices) {
    kept.points.push_back(cloud.points[idx]);
    if (has_intensity) kept.intensities.push_back(cloud.intensities[idx]);
  }
  cloud = std::move(kept);
}

}  // namespace

void Aabb::expand(const Aabb& o) {
  lo = {std::min(lo.x, o.lo.x), std::min(lo.y, o.lo.y), std::min(lo.z, o.lo.z)};
  hi = {std::max(hi.x, o.hi.x), std::max(hi.y, o.hi.y), std::max(hi.z, o.hi.z)};
}

Surface Surface::box(const Vec3& center, const Vec3& full_size) {
  Surface s;
  s.kind = Kind::Box;
  s.center = center;
  s.half_size = full_size * 0.5;
  return s;
}

Surface Surface::plane(int axis, double coord, double a0, double a1, double b0, double b1) {
  Surface s;
  s.kind = Kind::Plane;
  s.axis = axis;
  s.coord = coord;
  s.a0 = std::min(a0, a1);
  s.a1 = std::max(a0, a1);
  s.b0 = std::min(b0, b1);
  s.b1 = std::max(b0, b1);
  return s;
}

Aabb Surface::bounds() const {
  if (kind == Kind::Box) return {center - half_size, center + half_size};
  Vec3 lo, hi;
  if (axis == 0) {
    lo = {coord, a0, b0};
    hi = {coord, a1, b1};
  } else if (axis == 1) {
    lo = {a0, coord, b0};
    hi = {a1, coord, b1};
  } else {
    lo = {a0, b0, coord};
    hi = {a1, b1, coord};
  }
  return {lo, hi};
}

WorldModel WorldModel::from_surfaces(std::vector<Surface> surfaces) {
  if (surfaces.empty()) throw data_error("world model needs at least one surface");
  WorldModel w;
  w.surfaces = std::move(surfaces);
  w.bounds = w.surfaces.front().bounds();
  for (std::size_t i = 1; i < w.surfaces.size(); ++i) w.bounds.expand(w.surfaces[i].bounds());
  return w;
}

PointCloud raycast_scan(const WorldModel& world, const PoseSE3& pose, const ScanFov& fov) {
  if (!world.bounds.contains(pose.translation))
    throw data_error("raycast_scan: sensor pose outside world bounds");
  PointCloud cloud;
  auto jitter = make_stream(fov.jitter_seed, "scan-jitter");
  for (int ei = 0; ei < fov.n_el; ++ei) {
    for (int ai = 0; ai < fov.n_az; ++ai) {
      // Bin centers, or a seeded offset within each bin.
      const double fe = fov.jitter_seed ? uniform_unit(jitter) : 0.5;
      const double fa = fov.jitter_seed ? uniform_unit(jitter) : 0.5;
      const double el = -fov.v_fov / 2.0 + (ei + fe) * fov.v_fov / fov.n_el;
      const double az = -fov.h_fov / 2.0 + (ai + fa) * fov.h_fov / fov.n_az;
      const Vec3 dir_body = direction_from_angles(az, el);
      const Vec3 dir_world = pose.rotation * dir_body;
      const double t = ray_world(world, pose.translation, dir_world);
      if (t <= fov.max_range) cloud.points.push_back(dir_body * t);
    }
  }
  return cloud;
}

PointCloud degrade_to_radar(const PointCloud& dense, const RadarNoiseModel& noise,
                            std::uint64_t seed) {
  if (noise.keep_probability < 0 || noise.keep_probability > 1 ||
      noise.ghost_probability < 0 || noise.ghost_probability > 1 ||
      noise.range_sigma < 0 || noise.angular_sigma_az < 0 || noise.angular_sigma_el < 0 ||
      noise.max_points <= 0)
    throw std::invalid_argument("degrade_to_radar: invalid noise model");

  auto rng = make_stream(seed, "degrade");
  const bool has_intensity = dense.intensities.size() == dense.size();

  PointCloud kept;
  kept.timestamp = dense.timestamp;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (!bernoulli(rng, noise.keep_probability)) continue;
    kept.points.push_back(dense.points[i]);
    if (has_intensity) kept.intensities.push_back(dense.intensities[i]);
  }
  cap_cloud(kept, noise.max_points, rng);

  PointCloud out;
  out.timestamp = dense.timestamp;
  const bool jitter = noise.range_sigma > 0 || noise.angular_sigma_az > 0 ||
                      noise.angular_sigma_el > 0;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    Vec3 p = kept.points[i];
    if (jitter) {
      const auto [az, el] = spherical_angles(p);
      const double range =
          std::max(1e-6, p.norm() + normal(rng, 0.0, noise.range_sigma));
      const double az2 = az + normal(rng, 0.0, noise.angular_sigma_az);
      const double el2 = std::clamp(el + normal(rng, 0.0, noise.angular_sigma_el),
                                    -M_PI_2, M_PI_2);
      p = direction_from_angles(az2, el2) * range;
    }
    out.points.push_back(p);
    if (has_intensity) out.intensities.push_back(kept.intensities[i]);
    if (bernoulli(rng, noise.ghost_probability)) {
      const double factor = uniform_range(rng, 1.2, 2.0);
      out.points.push_back(p * factor);
      if (has_intensity) out.intensities.push_back(kept.intensities[i]);
    }
  }
  cap_cloud(out, noise.max_points, rng);
  return out;
}

std::vector<ImuSample> synth_imu(std::span<const PoseSE3> poses, double pose_rate,
                                 const ImuNoiseSpec& noise, std::uint64_t seed) {
  if (poses.size() < 2) throw std::invalid_argument("synth_imu: need at least 2 poses");
  if (!(noise.rate > pose_rate))
    throw std::invalid_argument("synth_imu: IMU rate must exceed the pose rate");

  // Resample the pose path at the IMU rate (lerp + slerp between poses).
  const double duration = (poses.size() - 1) / pose_rate;
  const double dt = 1.0 / noise.rate;
  const int n = static_cast<int>(std::floor(duration / dt + 1e-9)) + 1;
  std::vector<PoseSE3> dense(n);
  for (int k = 0; k < n; ++k) {
    const double t = k * dt;
    const double u = t * pose_rate;
    const int seg = std::min(static_cast<int>(u), static_cast<int>(poses.size()) - 2);
    const double frac = u - seg;
    dense[k].translation =
        poses[seg].translation + (poses[seg + 1].translation - poses[seg].translation) * frac;
    dense[k].rotation = slerp(poses[seg].rotation, poses[seg + 1].rotation, frac);
  }

  auto rng = make_stream(seed, "imu");
  const Vec3 g_reaction{0.0, 0.0, kStandardGravity};
  std::vector<ImuSample> samples(n);
  for (int k = 0; k < n; ++k) {
    const int kf = std::min(k, n - 2);  // forward-difference index, clamped
    const Vec3 omega = so3_log(dense[kf].rotation.transposed() * dense[kf + 1].rotation) *
                       (1.0 / dt);
    const int kc = std::clamp(k, 1, n - 2);  // central second difference, clamped
    const Vec3 a_world =
        (dense[kc + 1].translation - dense[kc].translation * 2.0 + dense[kc - 1].translation) *
        (1.0 / (dt * dt));
    const RotMat3 world_to_body = dense[k].rotation.transposed();
    ImuSample s;
    s.timestamp = k * dt;
    s.gyro = omega + noise.gyro_bias +
             Vec3{normal(rng, 0, noise.gyro_sigma), normal(rng, 0, noise.gyro_sigma),
                  normal(rng, 0, noise.gyro_sigma)};
    s.accel = world_to_body * (a_world + g_reaction) + noise.accel_bias +
              Vec3{normal(rng, 0, noise.accel_sigma), normal(rng, 0, noise.accel_sigma),
                   normal(rng, 0, noise.accel_sigma)};
    samples[k] = s;
  }
  return samples;
}

PoseSE3 interpolate_waypoints(std::span<const PoseSE3> waypoints, double s) {
  if (waypoints.size() < 2)
    throw std::invalid_argument("interpolate_waypoints: need at least 2 waypoints");
  double remaining = std::max(0.0, s);
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    const double len = (waypoints[i + 1].translation - waypoints[i].translation).norm();
    if (remaining <= len || i + 2 == waypoints.size()) {
      const double frac = len > 0 ? std::min(remaining / len, 1.0) : 1.0;
      PoseSE3 p;
      p.translation = waypoints[i].translation +
                      (waypoints[i + 1].translation - waypoints[i].translation) * frac;
      p.rotation = slerp(waypoints[i].rotation, waypoints[i + 1].rotation, frac);
      return p;
    }
    remaining -= len;
  }
  return waypoints.back();
}

SimulatedSequence generate_sequence(const WorldModel& world, const TrajectorySpec& spec,
                                    const RadarNoiseModel& noise, const ImuNoiseSpec& imu,
                                    const ScanFov& fov, std::uint64_t seed) {
  if (spec.waypoints.size() < 2)
    throw std::invalid_argument("generate_sequence: need at least 2 waypoints");
  if (!(spec.frame_rate > 0) || !(spec.speed > 0))
    throw std::invalid_argument("generate_sequence: frame rate and speed must be positive");

  double path_length = 0.0;
  for (std::size_t i = 0; i + 1 < spec.waypoints.size(); ++i)
    path_length += (spec.waypoints[i + 1].translation - spec.waypoints[i].translation).norm();
  const double duration = path_length / spec.speed;
  const int n_frames = static_cast<int>(std::floor(duration * spec.frame_rate + 1e-9)) + 1;

  std::vector<PoseSE3> frame_poses(n_frames);
  for (int k = 0; k < n_frames; ++k) {
    const double t = k / spec.frame_rate;
    frame_poses[k] = interpolate_waypoints(spec.waypoints, t * spec.speed);
    if (!world.bounds.contains(frame_poses[k].translation))
      throw data_error("generate_sequence: trajectory exits world bounds");
  }

  ImuNoiseSpec imu_spec = imu;
  // Draw the per-sequence constant biases at seed time when unset.
  if (imu_spec.gyro_bias.norm() == 0 && imu_spec.accel_bias.norm() == 0) {
    auto bias_rng = make_stream(seed, "imu-bias");
    imu_spec.gyro_bias = {normal(bias_rng, 0, 0.002), normal(bias_rng, 0, 0.002),
                          normal(bias_rng, 0, 0.002)};
    imu_spec.accel_bias = {normal(bias_rng, 0, 0.02), normal(bias_rng, 0, 0.02),
                           normal(bias_rng, 0, 0.02)};
  }
  std::vector<ImuSample> imu_all;
  if (n_frames >= 2) imu_all = synth_imu(frame_poses, spec.frame_rate, imu_spec, seed);

  SimulatedSequence seq;
  seq.world = world;
  seq.seed = seed;
  seq.frame_rate = spec.frame_rate;
  seq.frames.resize(n_frames);
  std::size_t imu_cursor = 0;
  for (int k = 0; k < n_frames; ++k) {
    const double t = k / spec.frame_rate;
    SensorFrame& f = seq.frames[k];
    ScanFov frame_fov = fov;
    if (fov.jitter_seed)  // decorrelate consecutive rasters
      frame_fov.jitter_seed = stream_seed(fov.jitter_seed, "frame-" + std::to_string(k));
    f.dense = raycast_scan(world, frame_poses[k], frame_fov);
    f.dense.timestamp = t;
    f.cloud = degrade_to_radar(f.dense, noise,
                               stream_seed(seed, "radar-frame-" + std::to_string(k)));
    f.cloud.timestamp = t;
    f.ground_truth = frame_poses[k];
    // IMU window: samples with timestamp in (t_prev, t].
    while (imu_cursor < imu_all.size() && imu_all[imu_cursor].timestamp <= t + 1e-12) {
      if (k > 0) f.imu_window.push_back(imu_all[imu_cursor]);
      ++imu_cursor;
    }
  }
  return seq;
}

}  // namespace radarego
