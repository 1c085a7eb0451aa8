#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "radarego/evaluation.hpp"
#include "radarego/sensing.hpp"
#include "radarego/simulator.hpp"

namespace radarego {

// Text file formats. '#' starts a comment everywhere; doubles are written
// round-trippable (%.17g).
//   cloud:      x y z [intensity]
//   imu:        timestamp ax ay az gx gy gz
//   panoramic:  header "rows cols delta_alpha delta_beta alpha_min beta_min
//               max_range", then one row of values per line
//   trajectory: timestamp tx ty tz qx qy qz qw   (unit quaternion, w last)
//   world:      box cx cy cz sx sy sz | plane axis coord a0 a1 b0 b1
//               (axis in x|y|z; a/b extents in x<y<z order)

std::string format_double(double v);

PointCloud read_cloud(const std::filesystem::path& path);
void write_cloud(const std::filesystem::path& path, const PointCloud& cloud);

std::vector<ImuSample> read_imu(const std::filesystem::path& path);
void write_imu(const std::filesystem::path& path, std::span<const ImuSample> samples);

PanoramicImage read_panoramic(const std::filesystem::path& path);
void write_panoramic(const std::filesystem::path& path, const PanoramicImage& img);

Trajectory read_trajectory(const std::filesystem::path& path);
void write_trajectory(const std::filesystem::path& path, const Trajectory& traj);

WorldModel read_world(const std::filesystem::path& path);
void write_world(const std::filesystem::path& path, const WorldModel& world);

/// Waypoint list for the simulator: lines "tx ty tz roll pitch yaw".
std::vector<PoseSE3> read_waypoints(const std::filesystem::path& path);

// Key-value metadata files ("key = value" per line).
void write_kv(const std::filesystem::path& path,
              const std::vector<std::pair<std::string, std::string>>& kv);
std::map<std::string, std::string> read_kv(const std::filesystem::path& path);

// Sequence directory layout:
//   frames/NNNNN.cloud  radar scan per frame
//   frames/NNNNN.dense  dense reference scan per frame
//   imu.txt             full IMU stream
//   groundtruth.txt     trajectory file
//   meta.txt            seed, spec and noise parameters
void write_sequence_dir(const std::filesystem::path& dir, const SimulatedSequence& seq,
                        const std::vector<std::pair<std::string, std::string>>& meta);
SimulatedSequence read_sequence_dir(const std::filesystem::path& dir);

/// FNV-1a over the file bytes, as 16 hex digits.
std::string content_hash_file(const std::filesystem::path& path);

}  // namespace radarego
