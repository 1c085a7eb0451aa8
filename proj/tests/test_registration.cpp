#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "radarego/errors.hpp"
#include "radarego/registration.hpp"
#include "radarego/rng.hpp"
#include "test_helpers.hpp"

using namespace radarego;
using radarego::testing::cluttered_room;

namespace {

PointCloud cloud_from(std::vector<Vec3> pts) {
  PointCloud c;
  c.points = std::move(pts);
  return c;
}

PointCloud random_cloud(int n, std::mt19937_64& rng, double extent = 3.0) {
  PointCloud c;
  for (int i = 0; i < n; ++i)
    c.points.push_back({uniform_range(rng, -extent, extent), uniform_range(rng, -extent, extent),
                        uniform_range(rng, -extent, extent)});
  return c;
}

PoseSE3 random_pose(std::mt19937_64& rng, double t_extent = 1.0) {
  return {euler_to_rotmat({uniform_range(rng, -1, 1), uniform_range(rng, -0.8, 0.8),
                           uniform_range(rng, -1, 1)}),
          {uniform_range(rng, -t_extent, t_extent), uniform_range(rng, -t_extent, t_extent),
           uniform_range(rng, -t_extent, t_extent)}};
}

Correspondences identity_corr(std::size_t n) {
  Correspondences c;
  for (std::size_t i = 0; i < n; ++i) c.pairs.emplace_back(i, i);
  return c;
}

}  // namespace

TEST_CASE("eq1_objective basic values") {
  auto rng = make_stream(51, "eq1");
  const PointCloud a = random_cloud(20, rng);
  CHECK(eq1_objective(a, a, identity_corr(20), PoseSE3::identity()) == doctest::Approx(0.0));

  const PointCloud single_a = cloud_from({{0, 0, 0}});
  const PointCloud single_b = cloud_from({{1, 0, 0}});
  CHECK(eq1_objective(single_a, single_b, identity_corr(1), PoseSE3::identity()) ==
        doctest::Approx(1.0));

  CHECK_THROWS_AS(eq1_objective(a, a, Correspondences{}, PoseSE3::identity()),
                  std::invalid_argument);
}

TEST_CASE("eq1_objective matches an independent brute-force summation") {
  auto rng = make_stream(52, "eq1-brute");
  for (int trial = 0; trial < 20; ++trial) {
    const PointCloud a = random_cloud(30, rng);
    const PointCloud b = random_cloud(40, rng);
    Correspondences corr;
    for (int i = 0; i < 30; ++i)
      corr.pairs.emplace_back(i, static_cast<int>(uniform_int(rng, 0, 39)));
    const PoseSE3 t = random_pose(rng);

    double brute = 0.0;
    for (const auto& [i, j] : corr.pairs) {
      const Vec3 moved = t.rotation * a.points[i] + t.translation;
      const double dx = b.points[j].x - moved.x;
      const double dy = b.points[j].y - moved.y;
      const double dz = b.points[j].z - moved.z;
      brute += dx * dx + dy * dy + dz * dz;
    }
    CHECK(std::abs(eq1_objective(a, b, corr, t) - brute) < 1e-12);
  }
}

TEST_CASE("eq1_objective is invariant under a conjugated global motion") {
  auto rng = make_stream(53, "eq1-conj");
  const PointCloud a = random_cloud(25, rng);
  const PointCloud b = random_cloud(25, rng);
  const Correspondences corr = identity_corr(25);
  for (int trial = 0; trial < 10; ++trial) {
    const PoseSE3 t = random_pose(rng);
    const PoseSE3 g = random_pose(rng, 3.0);
    PointCloud ag, bg;
    ag.points = transform_points(g, a.points);
    bg.points = transform_points(g, b.points);
    const PoseSE3 t_conj = compose(g, compose(t, inverse(g)));
    CHECK(eq1_objective(a, b, corr, t) ==
          doctest::Approx(eq1_objective(ag, bg, corr, t_conj)).epsilon(1e-9));
  }
}

TEST_CASE("rigid_solve recovers exact transforms and validates rotations") {
  auto rng = make_stream(54, "rigid");
  for (int trial = 0; trial < 100; ++trial) {
    const PointCloud a = random_cloud(12, rng);
    const PoseSE3 truth = random_pose(rng);
    const auto b = transform_points(truth, a.points);
    const PoseSE3 solved = rigid_solve(a.points, b);
    CHECK(solved.rotation.is_valid(1e-9));
    CHECK((solved.translation - truth.translation).norm() < 1e-9);
    double rot_err = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        rot_err = std::max(rot_err,
                           std::abs(solved.rotation.m[i][j] - truth.rotation.m[i][j]));
    CHECK(rot_err < 1e-9);
  }
}

TEST_CASE("rigid_solve identity on equal clouds") {
  auto rng = make_stream(55, "rigid-id");
  const PointCloud a = random_cloud(10, rng);
  const PoseSE3 t = rigid_solve(a.points, a.points);
  CHECK((t.translation).norm() < 1e-12);
  CHECK(t.rotation.orthonormality_error() < 1e-12);
}

TEST_CASE("rigid_solve rejects degenerate configurations") {
  const std::vector<Vec3> two = {{0, 0, 0}, {1, 0, 0}};
  CHECK_THROWS_AS(rigid_solve(two, two), numeric_error);

  std::vector<Vec3> collinear;
  for (int i = 0; i < 6; ++i) collinear.push_back({static_cast<double>(i), 0, 0});
  CHECK_THROWS_AS(rigid_solve(collinear, collinear), numeric_error);

  const std::vector<Vec3> coincident(5, Vec3{1, 2, 3});
  CHECK_THROWS_AS(rigid_solve(coincident, coincident), numeric_error);
}

TEST_CASE("rigid_solve beats random transforms on its own objective") {
  auto rng = make_stream(56, "rigid-opt");
  PointCloud a = random_cloud(15, rng);
  PointCloud b = random_cloud(15, rng);
  const Correspondences corr = identity_corr(15);
  std::vector<Vec3> ap = a.points, bp = b.points;
  const PoseSE3 best = rigid_solve(ap, bp);
  const double best_obj = eq1_objective(a, b, corr, best);
  for (int trial = 0; trial < 50; ++trial)
    CHECK(best_obj <= eq1_objective(a, b, corr, random_pose(rng)) + 1e-12);
}

TEST_CASE("nn_correspondences pairing and rejection") {
  auto rng = make_stream(57, "nn");
  const PointCloud a = random_cloud(30, rng);
  const Correspondences same = nn_correspondences(a, a, 1.0);
  REQUIRE(same.size() == 30);
  for (std::size_t i = 0; i < same.size(); ++i) {
    CHECK(same.pairs[i].first == static_cast<int>(i));
    CHECK(same.pairs[i].second == static_cast<int>(i));
    CHECK(same.residuals[i] == 0.0);
  }

  PointCloud shifted = a;
  for (Vec3& p : shifted.points) p = p + Vec3{0.1, 0, 0};
  // Spread the points so 0.1 is always the nearest-neighbor distance.
  const Correspondences close = nn_correspondences(a, shifted, 1.0);
  bool all_near = true;
  for (double r : close.residuals) all_near = all_near && r <= 0.1 + 1e-12;
  CHECK(all_near);

  CHECK(nn_correspondences(a, shifted, 0.0).empty());
}

TEST_CASE("nn_correspondences never duplicates A indices") {
  auto rng = make_stream(58, "nn-dup");
  const PointCloud a = random_cloud(40, rng);
  const PointCloud b = random_cloud(10, rng);
  const Correspondences corr =
      nn_correspondences(a, b, std::numeric_limits<double>::infinity());
  std::vector<int> seen;
  for (const auto& [i, j] : corr.pairs) seen.push_back(i);
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}

TEST_CASE("icp on identical clouds converges immediately") {
  auto rng = make_stream(59, "icp-id");
  const PointCloud a = random_cloud(50, rng);
  const RegistrationResult res = icp(a, a, PoseSE3::identity());
  CHECK(res.converged);
  CHECK(res.objective == doctest::Approx(0.0));
  CHECK((res.transform.translation).norm() < 1e-12);
}

TEST_CASE("icp recovers small motion on dense scans and reports monotone objectives") {
  const WorldModel world = radarego::testing::furnished_room(45);
  const ScanFov fov = radarego::testing::precision_fov();
  const PoseSE3 pose_a{euler_to_rotmat({0, 0, 0.2}), {0.15, 0.1, 0}};
  const RelativePose truth{{0.1, 0, 0}, {0, 0, 2.0 * M_PI / 180.0}};
  const PoseSE3 pose_b = compose(pose_a, to_pose(truth));
  const PointCloud a = raycast_scan(world, pose_a, fov);
  const PointCloud b = raycast_scan(world, pose_b, fov);
  REQUIRE(a.size() == 1024);

  IcpParams params;
  params.reject_distance = 0.4;
  const RegistrationResult res = icp(a, b, PoseSE3::identity(), params);
  CHECK(res.converged);
  for (std::size_t k = 1; k < res.objective_history.size(); ++k)
    CHECK(res.objective_history[k] <= res.objective_history[k - 1] + 1e-15);

  const RelativePose ego = registration_to_egomotion(res.transform);
  CHECK((ego.t - truth.t).norm() < 0.005);
  CHECK(std::abs(wrap_angle(ego.r.yaw - truth.r.yaw)) < 0.01);
}

TEST_CASE("icp on sparse noisy radar clouds degrades versus dense") {
  const WorldModel world = radarego::testing::furnished_room(45);
  const ScanFov fov = radarego::testing::precision_fov();
  const PoseSE3 pose_a{euler_to_rotmat({0, 0, 0.2}), {0.15, 0.1, 0}};
  const RelativePose truth{{0.1, 0, 0}, {0, 0, 2.0 * M_PI / 180.0}};
  const PoseSE3 pose_b = compose(pose_a, to_pose(truth));
  const PointCloud dense_a = raycast_scan(world, pose_a, fov);
  const PointCloud dense_b = raycast_scan(world, pose_b, fov);

  IcpParams params;
  params.reject_distance = 0.4;
  const RegistrationResult dense_res = icp(dense_a, dense_b, PoseSE3::identity(), params);
  const double dense_err =
      (registration_to_egomotion(dense_res.transform).t - truth.t).norm();

  const RadarNoiseModel noise;
  const PointCloud sparse_a = degrade_to_radar(dense_a, noise, 1001);
  const PointCloud sparse_b = degrade_to_radar(dense_b, noise, 1002);
  const RegistrationResult sparse_res = icp(sparse_a, sparse_b, PoseSE3::identity(), params);
  const double sparse_err =
      (registration_to_egomotion(sparse_res.transform).t - truth.t).norm();

  CHECK(sparse_err > dense_err);
  for (std::size_t k = 1; k < sparse_res.objective_history.size(); ++k)
    CHECK(sparse_res.objective_history[k] <= sparse_res.objective_history[k - 1] + 1e-15);
}

TEST_CASE("icp reports starvation instead of diverging") {
  PointCloud a = cloud_from({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0.5, 0.5, 0}});
  PointCloud b = cloud_from({{100, 100, 100}, {101, 100, 100}, {100, 101, 100}});
  const RegistrationResult res = icp(a, b, PoseSE3::identity());
  CHECK(!res.converged);
  CHECK(res.starved);
}

TEST_CASE("ransac_init on identical clouds finds the identity with full inliers") {
  auto rng = make_stream(60, "ransac-id");
  const PointCloud a = random_cloud(40, rng);
  const auto init = ransac_init(a, a, RansacParams{}, 5);
  REQUIRE(init.has_value());
  CHECK(init->translation.norm() < 1e-9);
  CHECK(init->rotation.orthonormality_error() < 1e-9);
}

TEST_CASE("ransac_init rejects clouds that are too small") {
  const PointCloud two = cloud_from({{0, 0, 0}, {1, 0, 0}});
  CHECK(!ransac_init(two, two, RansacParams{}, 1).has_value());
}

TEST_CASE("ransac_init excludes injected outliers from the inlier set") {
  auto rng = make_stream(61, "ransac-out");
  const PoseSE3 truth = {euler_to_rotmat({0, 0, 0.3}), {0.4, -0.2, 0.1}};
  const PointCloud a = random_cloud(60, rng);
  PointCloud b;
  b.points = transform_points(truth, a.points);
  // Half the B points are replaced with junk: those A points become
  // labeled outlier pairs.
  std::vector<bool> outlier(a.size(), false);
  for (std::size_t i = 0; i < a.size(); i += 2) {
    b.points[i] = {uniform_range(rng, 20, 30), uniform_range(rng, 20, 30),
                   uniform_range(rng, 20, 30)};
    outlier[i] = true;
  }
  const auto init = ransac_init(a, b, RansacParams{}, 7);
  REQUIRE(init.has_value());
  int outliers_admitted = 0, total_outliers = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!outlier[i]) continue;
    ++total_outliers;
    const Vec3 moved = transform_point(*init, a.points[i]);
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& pb : b.points) best = std::min(best, (pb - moved).norm());
    if (best <= RansacParams{}.inlier_threshold) ++outliers_admitted;
  }
  CHECK(outliers_admitted <= total_outliers / 10);
  // The minimal-sample estimate is coarse; it only has to be a usable init.
  CHECK((init->translation - truth.translation).norm() < 0.15);
}

TEST_CASE("imu_icp static pair with a static window stays at identity") {
  auto rng = make_stream(62, "imu-static");
  const PointCloud a = random_cloud(50, rng);
  std::vector<ImuSample> window;
  for (int k = 0; k < 5; ++k)
    window.push_back({{0, 0, kStandardGravity}, {0, 0, 0}, 0.01 * (k + 1)});
  const RegistrationResult res = imu_icp(a, a, window);
  CHECK(res.converged);
  CHECK(!res.imu_fallback);
  CHECK(res.transform.translation.norm() < 1e-9);
  CHECK(res.transform.rotation.orthonormality_error() < 1e-9);
}

TEST_CASE("imu_icp with a clean gyro needs no more iterations than identity init") {
  const WorldModel world = cluttered_room();
  int wins = 0, ties = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    auto rng = make_stream(63 + trial, "imu-trial");
    const double yaw = uniform_range(rng, 0.12, 0.2);  // 7-11 degrees
    const PoseSE3 pose_a{euler_to_rotmat({0, 0, uniform_range(rng, -0.3, 0.3)}),
                         {uniform_range(rng, -0.5, 0.5), uniform_range(rng, -0.5, 0.5), 0}};
    const PoseSE3 pose_b = compose(pose_a, to_pose(RelativePose{{}, {0, 0, yaw}}));
    const PointCloud a = raycast_scan(world, pose_a, ScanFov{});
    const PointCloud b = raycast_scan(world, pose_b, ScanFov{});

    // Clean gyro: constant yaw rate across a 50 ms window.
    std::vector<ImuSample> window;
    for (int k = 0; k < 5; ++k)
      window.push_back({{0, 0, kStandardGravity}, {0, 0, yaw / 0.05}, 0.01 * (k + 1)});

    const RegistrationResult with_imu = imu_icp(a, b, window);
    const RegistrationResult without = icp(a, b, PoseSE3::identity());
    REQUIRE(with_imu.converged);
    wins += with_imu.iterations < without.iterations;
    ties += with_imu.iterations == without.iterations;
  }
  // Median comparison: at least half the trials must not be worse, and the
  // bootstrap must win outright more often than it loses.
  CHECK(wins + ties > trials / 2);
  CHECK(wins > trials - wins - ties);
}

TEST_CASE("imu_icp with an all-zero gyro matches identity-init icp") {
  const WorldModel world = cluttered_room();
  const PoseSE3 pose_a = PoseSE3::identity();
  const PoseSE3 pose_b = compose(pose_a, to_pose(RelativePose{{}, {0, 0, 0.15}}));
  const PointCloud a = raycast_scan(world, pose_a, ScanFov{});
  const PointCloud b = raycast_scan(world, pose_b, ScanFov{});
  std::vector<ImuSample> window;
  for (int k = 0; k < 5; ++k)
    window.push_back({{0, 0, kStandardGravity}, {0, 0, 0}, 0.01 * (k + 1)});
  const RegistrationResult zeroed = imu_icp(a, b, window);
  const RegistrationResult plain = icp(a, b, PoseSE3::identity());
  CHECK(zeroed.iterations == plain.iterations);
  CHECK((zeroed.transform.translation - plain.transform.translation).norm() < 1e-12);
}

TEST_CASE("imu_icp flags an empty window and falls back to identity init") {
  auto rng = make_stream(70, "imu-empty");
  const PointCloud a = random_cloud(30, rng);
  const RegistrationResult res = imu_icp(a, a, {});
  CHECK(res.imu_fallback);
  CHECK(res.converged);
}

TEST_CASE("registration transform is the inverse of the egomotion") {
  const WorldModel world = radarego::testing::furnished_room(47);
  const ScanFov fov = radarego::testing::precision_fov();
  const PoseSE3 pose_a{euler_to_rotmat({0, 0, 0.4}), {0.5, -0.3, 0}};
  const RelativePose truth{{0.08, 0.02, 0}, {0, 0, 0.03}};
  const PoseSE3 pose_b = compose(pose_a, to_pose(truth));
  const PointCloud a = raycast_scan(world, pose_a, fov);
  const PointCloud b = raycast_scan(world, pose_b, fov);
  IcpParams params;
  params.reject_distance = 0.4;
  const RegistrationResult res = icp(a, b, PoseSE3::identity(), params);
  REQUIRE(res.converged);
  const RelativePose ego = registration_to_egomotion(res.transform);
  CHECK((ego.t - truth.t).norm() < 0.02);
  CHECK(std::abs(wrap_angle(ego.r.yaw - truth.r.yaw)) < 0.01);
}
