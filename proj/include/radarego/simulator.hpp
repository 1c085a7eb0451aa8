#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "radarego/geometry.hpp"
#include "radarego/sensing.hpp"

namespace radarego {

constexpr double kStandardGravity = 9.80665;  // m/s^2

struct Aabb {
  Vec3 lo, hi;

  bool contains(const Vec3& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y &&
           p.z >= lo.z && p.z <= hi.z;
  }
  double diagonal() const { return (hi - lo).norm(); }
  void expand(const Aabb& o);
};

/// Either an axis-aligned box (solid obstacle) or an axis-aligned
/// rectangle. For a plane, `axis` names the normal direction, `coord` its
/// position on that axis, and (a0,a1) x (b0,b1) its extent on the other
/// two axes in x<y<z order.
struct Surface {
  enum class Kind { Box, Plane };
  Kind kind = Kind::Box;
  // Box
  Vec3 center, half_size;
  // Plane
  int axis = 0;
  double coord = 0.0;
  double a0 = 0.0, a1 = 0.0, b0 = 0.0, b1 = 0.0;

  static Surface box(const Vec3& center, const Vec3& full_size);
  static Surface plane(int axis, double coord, double a0, double a1, double b0, double b1);
  Aabb bounds() const;
};

struct WorldModel {
  std::vector<Surface> surfaces;
  Aabb bounds;  // derived from surfaces

  static WorldModel from_surfaces(std::vector<Surface> surfaces);
};

/// Degradation from a dense scan to radar-like returns. Defaults match a
/// low-cost single-chip device: heavy sparsification, ~4 cm range jitter,
/// angular smearing, multipath ghosts.
struct RadarNoiseModel {
  double keep_probability = 0.15;
  double ghost_probability = 0.10;
  double range_sigma = 0.04;        // meters
  double angular_sigma_az = 0.01;   // radians
  double angular_sigma_el = 0.02;   // radians
  int max_points = 120;
};

struct TrajectorySpec {
  std::vector<PoseSE3> waypoints;  // >= 2
  double frame_rate = 20.0;        // Hz
  double speed = 1.0;              // m/s along the waypoint path
};

struct ImuNoiseSpec {
  Vec3 gyro_bias, accel_bias;
  double gyro_sigma = 0.005;   // rad/s
  double accel_sigma = 0.05;   // m/s^2
  double rate = 100.0;         // Hz
};

struct SimulatedSequence {
  std::vector<SensorFrame> frames;  // ground_truth set on every frame
  WorldModel world;
  std::uint64_t seed = 0;
  double frame_rate = 20.0;
};

struct ScanFov {
  int n_az = 64;
  int n_el = 16;
  double h_fov = 2.0 * M_PI / 3.0;
  double v_fov = M_PI / 3.0;
  double max_range = 10.0;
  /// 0 keeps rays at bin centers. Any other value jitters each ray
  /// uniformly within its angular bin, seeded, so consecutive scans do not
  /// resample identical world points (as a physical scanner would not).
  std::uint64_t jitter_seed = 0;
};

/// Ray-marched range scan: one nearest-hit point per ray that intersects a
/// surface within max_range, in the sensor frame, deterministic ray-scan
/// order (elevation-major). Throws when the pose sits outside the world.
PointCloud raycast_scan(const WorldModel& world, const PoseSE3& pose, const ScanFov& fov);

/// Sparsifies and corrupts a dense scan: Bernoulli keep, cap at
/// max_points, range/angle jitter, multipath ghosts (a kept point
/// re-emitted at 1.2-2x range in the same direction). Ghosts count toward
/// the cap, so the output never exceeds max_points.
PointCloud degrade_to_radar(const PointCloud& dense, const RadarNoiseModel& noise,
                            std::uint64_t seed);

/// Synthesizes IMU readings along a pose path sampled at pose_rate.
/// Gyro: body-frame angular rate by forward differences. Accel: body-frame
/// specific force (second differences plus the gravity reaction).
std::vector<ImuSample> synth_imu(std::span<const PoseSE3> poses, double pose_rate,
                                 const ImuNoiseSpec& noise, std::uint64_t seed);

/// Pose at arc length position `s` along the piecewise-linear waypoint
/// path (translation lerp, rotation slerp per segment).
PoseSE3 interpolate_waypoints(std::span<const PoseSE3> waypoints, double s);

/// Full synthetic capture: frame poses at spec.frame_rate along the
/// waypoint path, per-frame dense scan + degraded radar scan + IMU window
/// + ground truth. Reproducible byte-for-byte under a fixed seed.
SimulatedSequence generate_sequence(const WorldModel& world, const TrajectorySpec& spec,
                                    const RadarNoiseModel& noise, const ImuNoiseSpec& imu,
                                    const ScanFov& fov, std::uint64_t seed);

}  // namespace radarego
