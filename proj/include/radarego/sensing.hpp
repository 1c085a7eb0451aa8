#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "radarego/geometry.hpp"
#include "radarego/tensor.hpp"

namespace radarego {

struct PointCloud {
  std::vector<Vec3> points;          // sensor frame, meters
  std::vector<double> intensities;   // optional; empty or same length as points
  double timestamp = 0.0;            // seconds

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Grid geometry of a panoramic projection. Azimuth indexes columns,
/// elevation indexes rows.
struct PanoGeometry {
  int rows = 32;
  int cols = 128;
  double delta_alpha = 0.0;  // rad per azimuth bin
  double delta_beta = 0.0;   // rad per elevation bin
  double alpha_min = 0.0;    // rad
  double beta_min = 0.0;     // rad
  double max_range = 10.0;   // meters

  /// 120 deg horizontal x 60 deg vertical field of view on a rows x cols grid.
  static PanoGeometry standard(int rows = 32, int cols = 128, double max_range = 10.0);

  double alpha_max() const { return alpha_min + delta_alpha * cols; }
  double beta_max() const { return beta_min + delta_beta * rows; }
};

/// 2-D range encoding of a point cloud: values in [0, 255], higher means
/// closer. Empty bins hold 0.
struct PanoramicImage {
  PanoGeometry geom;
  std::vector<double> values;  // rows * cols, row-major

  double at(int row, int col) const { return values[row * geom.cols + col]; }
  double& at(int row, int col) { return values[row * geom.cols + col]; }
};

struct ImuSample {
  Vec3 accel;  // m/s^2, body frame, includes gravity reaction
  Vec3 gyro;   // rad/s, body frame
  double timestamp = 0.0;
};

/// One synchronized capture: radar cloud, the IMU samples since the
/// previous frame, and (in simulation) the dense reference scan and
/// ground-truth pose.
struct SensorFrame {
  PointCloud cloud;
  PointCloud dense;
  std::vector<ImuSample> imu_window;  // timestamps in (prev frame, this frame]
  std::optional<PoseSE3> ground_truth;
};

/// (azimuth, elevation) of a point: atan2(y, x) in (-pi, pi] and
/// asin(z / |p|) in [-pi/2, pi/2]. Rejects the origin.
std::pair<double, double> spherical_angles(const Vec3& p);

/// Grid bin of an (azimuth, elevation) pair. az indexes columns, el rows.
struct BinIndex {
  int az = 0;
  int el = 0;
};

/// Floor binning relative to (alpha_min, beta_min); nullopt when the
/// angles fall outside the grid.
std::optional<BinIndex> bin_index(double alpha, double beta, const PanoGeometry& g);

/// Projects a cloud onto the grid. Each in-view point writes
/// 255 * (1 - min(range / max_range, 1)); colliding points keep the
/// maximum (nearest wins). Permutation-invariant in point order.
PanoramicImage encode_panoramic(const PointCloud& cloud, const PanoGeometry& g);

/// Stacks two images of matching geometry into a [2, rows, cols] tensor
/// (channel 0 = prev, channel 1 = curr), subtracting `mean` from every value.
Tensor stack_pair(const PanoramicImage& prev, const PanoramicImage& curr,
                  double mean = 0.0);

/// Union of clouds mapped through their extrinsic poses. Intensities are
/// carried when every input provides them; the timestamp is taken from
/// the first cloud.
PointCloud merge_clouds(const std::vector<std::pair<PointCloud, PoseSE3>>& clouds);

}  // namespace radarego
