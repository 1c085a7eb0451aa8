#include "radarego/registration.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "radarego/errors.hpp"
#include "radarego/rng.hpp"

namespace radarego {

namespace {

PoseSE3 solve_pairs(const PointCloud& a, const PointCloud& b, const Correspondences& corr) {
  std::vector<Vec3> ap, bp;
  ap.reserve(corr.size());
  bp.reserve(corr.size());
  for (const auto& [i, j] : corr.pairs) {
    ap.push_back(a.points[i]);
    bp.push_back(b.points[j]);
  }
  return rigid_solve(ap, bp);
}

}  // namespace

double eq1_objective(const PointCloud& a, const PointCloud& b,
                     const Correspondences& corr, const PoseSE3& transform) {
  if (corr.empty()) throw std::invalid_argument("eq1_objective: empty correspondences");
  double acc = 0.0;
  for (const auto& [i, j] : corr.pairs) {
    const Vec3 d = b.points[j] - transform_point(transform, a.points[i]);
    acc += d.squared_norm();
  }
  return acc;
}

PoseSE3 rigid_solve(std::span<const Vec3> a_pts, std::span<const Vec3> b_pts) {
  if (a_pts.size() != b_pts.size())
    throw std::invalid_argument("rigid_solve: point lists differ in length");
  const std::size_t n = a_pts.size();
  if (n < 3) throw numeric_error("rigid_solve: need at least 3 point pairs");

  Vec3 ca{}, cb{};
  for (std::size_t k = 0; k < n; ++k) {
    ca = ca + a_pts[k];
    cb = cb + b_pts[k];
  }
  ca = ca * (1.0 / n);
  cb = cb * (1.0 / n);

  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec3 pa = a_pts[k] - ca, pb = b_pts[k] - cb;
    const Eigen::Vector3d ea(pa.x, pa.y, pa.z), eb(pb.x, pb.y, pb.z);
    h += ea * eb.transpose();
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  // Rank < 2 leaves a rotation about the dominant axis unconstrained.
  if (sv(1) <= 1e-9 * std::max(1.0, sv(0)))
    throw numeric_error("rigid_solve: degenerate configuration (collinear or coincident points)");

  Eigen::Matrix3d u = svd.matrixU(), v = svd.matrixV();
  Eigen::Matrix3d r = v * u.transpose();
  if (r.determinant() < 0) {
    v.col(2) *= -1.0;
    r = v * u.transpose();
  }

  PoseSE3 result;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) result.rotation.m[i][j] = r(i, j);
  const Vec3 rca = result.rotation * ca;
  result.translation = cb - rca;
  return result;
}

Correspondences nn_correspondences(const PointCloud& a, const PointCloud& b,
                                   double reject_distance) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("nn_correspondences: empty cloud");
  Correspondences corr;
  for (std::size_t i = 0; i < a.size(); ++i) {
    int best_j = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d2 = (b.points[j] - a.points[i]).squared_norm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best_j = static_cast<int>(j);
      }
    }
    const double d = std::sqrt(best_d2);
    if (d > reject_distance) continue;
    corr.pairs.emplace_back(static_cast<int>(i), best_j);
    corr.residuals.push_back(d);
  }
  return corr;
}

RegistrationResult icp(const PointCloud& a, const PointCloud& b, const PoseSE3& init,
                       const IcpParams& params) {
  if (a.empty() || b.empty()) throw std::invalid_argument("icp: empty cloud");

  RegistrationResult res;
  res.transform = init;

  auto match = [&](const PoseSE3& t) {
    PointCloud moved;
    moved.points = transform_points(t, a.points);
    return nn_correspondences(moved, b, params.reject_distance);
  };

  Correspondences corr = match(res.transform);
  if (corr.size() < 3) {
    res.starved = true;
    res.inlier_count = static_cast<int>(corr.size());
    return res;
  }
  double obj = eq1_objective(a, b, corr, res.transform);
  res.objective_history.push_back(obj);

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    PoseSE3 candidate;
    try {
      candidate = solve_pairs(a, b, corr);
    } catch (const numeric_error&) {
      res.starved = true;
      break;
    }
    Correspondences next = match(candidate);
    if (next.size() < 3) {
      res.starved = true;
      break;
    }
    const double next_obj = eq1_objective(a, b, next, candidate);
    if (next_obj > obj) break;  // reject the step; keep the best-so-far
    res.transform = candidate;
    corr = std::move(next);
    res.iterations = iter + 1;
    res.objective_history.push_back(next_obj);
    const double improvement = obj - next_obj;
    obj = next_obj;
    if (improvement < params.objective_tolerance) break;
  }

  res.objective = obj;
  res.inlier_count = static_cast<int>(corr.size());
  res.converged = !res.starved;
  return res;
}

std::optional<PoseSE3> ransac_init(const PointCloud& a, const PointCloud& b,
                                   const RansacParams& params, std::uint64_t seed) {
  if (a.size() < 3 || b.size() < 3) return std::nullopt;

  // Candidate pool: every A point matched to its nearest B point.
  const Correspondences pool =
      nn_correspondences(a, b, std::numeric_limits<double>::infinity());
  const int pool_size = static_cast<int>(pool.size());
  if (pool_size < 3) return std::nullopt;

  auto rng = make_stream(seed, "ransac");
  const double thresh2 = params.inlier_threshold * params.inlier_threshold;

  std::optional<PoseSE3> best;
  int best_inliers = 2;  // require at least 3 to accept

  for (int h = 0; h < params.hypotheses; ++h) {
    int idx[3];
    idx[0] = static_cast<int>(uniform_int(rng, 0, pool_size - 1));
    do {
      idx[1] = static_cast<int>(uniform_int(rng, 0, pool_size - 1));
    } while (idx[1] == idx[0]);
    do {
      idx[2] = static_cast<int>(uniform_int(rng, 0, pool_size - 1));
    } while (idx[2] == idx[0] || idx[2] == idx[1]);

    Vec3 ap[3], bp[3];
    for (int k = 0; k < 3; ++k) {
      ap[k] = a.points[pool.pairs[idx[k]].first];
      bp[k] = b.points[pool.pairs[idx[k]].second];
    }
    PoseSE3 hypothesis;
    try {
      hypothesis = rigid_solve(std::span<const Vec3>(ap, 3), std::span<const Vec3>(bp, 3));
    } catch (const numeric_error&) {
      continue;
    }

    // Score by re-matching: A points whose transformed position lands
    // within the threshold of some B point.
    int inliers = 0;
    for (const Vec3& pa : a.points) {
      const Vec3 moved = transform_point(hypothesis, pa);
      double best_d2 = std::numeric_limits<double>::infinity();
      for (const Vec3& pb : b.points)
        best_d2 = std::min(best_d2, (pb - moved).squared_norm());
      if (best_d2 <= thresh2) ++inliers;
    }
    if (inliers > best_inliers) {
      best_inliers = inliers;
      best = hypothesis;
    }
  }
  return best;
}

RegistrationResult imu_icp(const PointCloud& a, const PointCloud& b,
                           std::span<const ImuSample> imu_window, const IcpParams& params) {
  PoseSE3 init;
  bool fallback = true;
  if (!imu_window.empty()) {
    // Integrate gyro over the window for the body rotation from frame A to
    // frame B; the aligning transform uses its transpose.
    RotMat3 rel = RotMat3::identity();
    for (std::size_t k = 0; k < imu_window.size(); ++k) {
      // dt to the previous sample; the first sample reuses the first gap.
      double dt = 0.0;
      if (k > 0)
        dt = imu_window[k].timestamp - imu_window[k - 1].timestamp;
      else if (imu_window.size() > 1)
        dt = imu_window[1].timestamp - imu_window[0].timestamp;
      if (!(dt > 0)) continue;
      rel = rel * so3_exp(imu_window[k].gyro * dt);
      fallback = false;
    }
    init.rotation = rel.transposed();
  }
  RegistrationResult res = icp(a, b, init, params);
  res.imu_fallback = fallback;
  return res;
}

RelativePose registration_to_egomotion(const PoseSE3& transform, bool* gimbal_lock) {
  const PoseSE3 ego = inverse(transform);
  return {ego.translation, rotmat_to_euler(ego.rotation, gimbal_lock)};
}

}  // namespace radarego
