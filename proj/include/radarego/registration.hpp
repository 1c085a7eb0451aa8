#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "radarego/geometry.hpp"
#include "radarego/sensing.hpp"

namespace radarego {

// Rigid point-set registration. All transforms returned here map
// coordinates of cloud A into the frame of cloud B (b ~ R a + t), i.e.
// they minimize sum ||b_j - R a_i - t||^2 over the matched pairs. For
// consecutive sensor frames this is the inverse of the egomotion as a
// relative pose; see registration_to_egomotion.

struct Correspondences {
  std::vector<std::pair<int, int>> pairs;  // (index into A, index into B); A indices unique
  std::vector<double> residuals;           // meters, per pair (optional)

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

struct RegistrationResult {
  PoseSE3 transform;           // maps A coordinates into B's frame
  double objective = 0.0;      // final sum of squared pair distances, m^2
  int iterations = 0;
  bool converged = false;
  int inlier_count = 0;        // matched pairs at the final transform
  std::vector<double> objective_history;  // per accepted iteration, non-increasing
  bool starved = false;        // fewer than 3 correspondences at some iteration
  bool imu_fallback = false;   // IMU bootstrap fell back to identity
};

struct IcpParams {
  int max_iterations = 50;
  double objective_tolerance = 1e-8;  // m^2 improvement below which we stop
  double reject_distance = 0.5;       // meters
};

struct RansacParams {
  int hypotheses = 200;
  double inlier_threshold = 0.1;  // meters
};

/// Sum over pairs of ||b_j - T(a_i)||^2.
double eq1_objective(const PointCloud& a, const PointCloud& b,
                     const Correspondences& corr, const PoseSE3& transform);

/// Closed-form least-squares rigid transform for paired points (SVD of the
/// cross-covariance, reflection-corrected). Throws numeric_error on
/// degenerate input (fewer than 3 pairs, collinear or coincident points).
PoseSE3 rigid_solve(std::span<const Vec3> a_pts, std::span<const Vec3> b_pts);

/// Pairs every A point with its Euclidean-nearest B point, dropping pairs
/// farther than reject_distance. Exact brute-force search; ties break to
/// the lowest B index.
Correspondences nn_correspondences(const PointCloud& a, const PointCloud& b,
                                   double reject_distance);

/// Iterated closest point from a given initialization. The recorded
/// objective history is non-increasing: a step that would raise the
/// objective is rejected and iteration stops. converged=false only on
/// correspondence starvation.
RegistrationResult icp(const PointCloud& a, const PointCloud& b, const PoseSE3& init,
                       const IcpParams& params = {});

/// Best-of-N three-pair RANSAC initialization scored by re-matched inlier
/// count at the threshold (ties to the earliest hypothesis). Returns
/// nullopt when no hypothesis reaches 3 inliers or the clouds are too
/// small to sample.
std::optional<PoseSE3> ransac_init(const PointCloud& a, const PointCloud& b,
                                   const RansacParams& params, std::uint64_t seed);

/// ICP bootstrapped with a gyro-integrated initial rotation (zero initial
/// translation). An empty IMU window falls back to the identity and sets
/// imu_fallback on the result.
RegistrationResult imu_icp(const PointCloud& a, const PointCloud& b,
                           std::span<const ImuSample> imu_window,
                           const IcpParams& params = {});

/// Egomotion (earlier-body-frame relative pose) from a registration
/// transform: the inverse of the A-to-B alignment.
RelativePose registration_to_egomotion(const PoseSE3& transform,
                                       bool* gimbal_lock = nullptr);

}  // namespace radarego
