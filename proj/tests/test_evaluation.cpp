#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "radarego/errors.hpp"
#include "radarego/evaluation.hpp"
#include "radarego/rng.hpp"

using namespace radarego;

namespace {

PoseSE3 random_pose(std::mt19937_64& rng) {
  return {euler_to_rotmat({uniform_range(rng, -1, 1), uniform_range(rng, -0.8, 0.8),
                           uniform_range(rng, -1, 1)}),
          {uniform_range(rng, -4, 4), uniform_range(rng, -4, 4), uniform_range(rng, -4, 4)}};
}

Trajectory random_trajectory(std::mt19937_64& rng, int n) {
  Trajectory t;
  PoseSE3 pose = random_pose(rng);
  for (int k = 0; k < n; ++k) {
    t.entries.push_back({0.05 * k, pose});
    pose = compose(pose, to_pose(RelativePose{{uniform_range(rng, -0.05, 0.08), 0.01, 0},
                                              {0, 0, uniform_range(rng, -0.02, 0.02)}}));
  }
  return t;
}

}  // namespace

TEST_CASE("compose_trajectory basics") {
  const double t0[] = {0.0};
  const Trajectory single = compose_trajectory(PoseSE3::identity(), {}, t0);
  CHECK(single.size() == 1);

  std::vector<RelativePose> zeros(4);
  const double ts[] = {0, 0.05, 0.1, 0.15, 0.2};
  const Trajectory constant = compose_trajectory(PoseSE3::identity(), zeros, ts);
  REQUIRE(constant.size() == 5);
  for (const auto& e : constant.entries) CHECK(e.pose.translation.norm() == 0.0);

  CHECK_THROWS_AS(compose_trajectory(PoseSE3::identity(), zeros, t0), std::invalid_argument);
}

TEST_CASE("compose_trajectory is the left inverse of per-frame relative extraction") {
  auto rng = make_stream(81, "traj-inverse");
  const Trajectory truth = random_trajectory(rng, 40);
  std::vector<RelativePose> rels;
  std::vector<double> ts{truth.entries[0].timestamp};
  for (std::size_t k = 1; k < truth.size(); ++k) {
    rels.push_back(relative_between(truth.entries[k - 1].pose, truth.entries[k].pose));
    ts.push_back(truth.entries[k].timestamp);
  }
  const Trajectory rebuilt = compose_trajectory(truth.entries[0].pose, rels, ts);
  REQUIRE(rebuilt.size() == truth.size());
  for (std::size_t k = 0; k < truth.size(); ++k)
    CHECK((rebuilt.entries[k].pose.translation - truth.entries[k].pose.translation).norm() <
          1e-9);
}

TEST_CASE("align_first_frame maps the start onto the reference") {
  auto rng = make_stream(82, "align");
  const Trajectory ref = random_trajectory(rng, 20);
  CHECK(ate(align_first_frame(ref, ref), ref, AteDim::k3D).max < 1e-12);

  Trajectory shifted = ref;
  for (auto& e : shifted.entries) e.pose.translation = e.pose.translation + Vec3{5, 0, 0};
  const AteReport after = ate(align_first_frame(shifted, ref), ref, AteDim::k3D);
  CHECK(after.max < 1e-9);

  // Rotate the whole trajectory about its first pose: exactly recoverable.
  const PoseSE3 pivot = ref.entries.front().pose;
  const PoseSE3 spin{euler_to_rotmat({0, 0, M_PI_2}), {}};
  const PoseSE3 motion = compose(pivot, compose(spin, inverse(pivot)));
  Trajectory rotated = ref;
  for (auto& e : rotated.entries) e.pose = compose(motion, e.pose);
  const AteReport aligned = ate(align_first_frame(rotated, ref), ref, AteDim::k3D);
  CHECK(aligned.max < 1e-9);
}

TEST_CASE("align_full recovers a rigidly displaced trajectory") {
  auto rng = make_stream(83, "align-full");
  const Trajectory ref = random_trajectory(rng, 30);
  const PoseSE3 motion = random_pose(rng);
  Trajectory moved = ref;
  for (auto& e : moved.entries) e.pose = compose(motion, e.pose);
  const AteReport aligned = ate(align_full(moved, ref), ref, AteDim::k3D);
  CHECK(aligned.max < 1e-9);
}

TEST_CASE("ate trivial and offset cases") {
  auto rng = make_stream(84, "ate");
  const Trajectory ref = random_trajectory(rng, 25);
  const AteReport zero = ate(ref, ref, AteDim::k3D);
  CHECK(zero.mean == 0.0);
  CHECK(zero.std == 0.0);
  CHECK(zero.max == 0.0);

  Trajectory offset = ref;
  const Vec3 d{0.3, -0.4, 1.2};
  for (auto& e : offset.entries) e.pose.translation = e.pose.translation + d;
  const AteReport shifted = ate(offset, ref, AteDim::k3D);
  CHECK(shifted.mean == doctest::Approx(d.norm()).epsilon(1e-12));
  CHECK(shifted.max == doctest::Approx(d.norm()).epsilon(1e-12));
  CHECK(shifted.std == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("ate matches an independent recomputation from its definition") {
  auto rng = make_stream(85, "ate-oracle");
  const Trajectory ref = random_trajectory(rng, 30);
  Trajectory est = ref;
  for (auto& e : est.entries)
    e.pose.translation =
        e.pose.translation + Vec3{uniform_range(rng, -0.2, 0.2), uniform_range(rng, -0.2, 0.2),
                                  uniform_range(rng, -0.2, 0.2)};
  const AteReport r = ate(est, ref, AteDim::k3D);

  // Independent pass: same-index association (identical timestamps).
  std::vector<double> errs;
  for (std::size_t k = 0; k < ref.size(); ++k)
    errs.push_back((est.entries[k].pose.translation - ref.entries[k].pose.translation).norm());
  double sq = 0.0, sum = 0.0, mx = 0.0;
  for (double e : errs) {
    sq += e * e;
    sum += e;
    mx = std::max(mx, e);
  }
  const double mean_rmse = std::sqrt(sq / errs.size());
  const double arith = sum / errs.size();
  double var = 0.0;
  for (double e : errs) var += (e - arith) * (e - arith);

  CHECK(std::abs(r.mean - mean_rmse) < 1e-12);
  CHECK(std::abs(r.std - std::sqrt(var / errs.size())) < 1e-12);
  CHECK(std::abs(r.max - mx) < 1e-12);
  REQUIRE(r.per_frame.size() == errs.size());
  for (std::size_t k = 0; k < errs.size(); ++k) CHECK(std::abs(r.per_frame[k] - errs[k]) < 1e-12);
}

TEST_CASE("2D ate never exceeds 3D ate") {
  auto rng = make_stream(86, "ate-2d");
  const Trajectory ref = random_trajectory(rng, 20);
  Trajectory est = ref;
  for (auto& e : est.entries)
    e.pose.translation =
        e.pose.translation + Vec3{uniform_range(rng, -0.3, 0.3), uniform_range(rng, -0.3, 0.3),
                                  uniform_range(rng, -0.3, 0.3)};
  const AteReport r2 = ate(est, ref, AteDim::k2D);
  const AteReport r3 = ate(est, ref, AteDim::k3D);
  CHECK(r2.mean <= r3.mean + 1e-12);
  CHECK(r2.max <= r3.max + 1e-12);
}

TEST_CASE("ate is invariant under a common rigid motion") {
  auto rng = make_stream(87, "ate-invariant");
  const Trajectory ref = random_trajectory(rng, 20);
  Trajectory est = ref;
  for (auto& e : est.entries)
    e.pose.translation = e.pose.translation + Vec3{uniform_range(rng, -0.2, 0.2), 0.1, 0};
  const AteReport before = ate(est, ref, AteDim::k3D);

  const PoseSE3 g = random_pose(rng);
  Trajectory est_g = est, ref_g = ref;
  for (auto& e : est_g.entries) e.pose = compose(g, e.pose);
  for (auto& e : ref_g.entries) e.pose = compose(g, e.pose);
  const AteReport after = ate(est_g, ref_g, AteDim::k3D);
  CHECK(before.mean == doctest::Approx(after.mean).epsilon(1e-9));
  CHECK(before.max == doctest::Approx(after.max).epsilon(1e-9));
}

TEST_CASE("ate requires timestamp overlap") {
  auto rng = make_stream(88, "ate-overlap");
  const Trajectory ref = random_trajectory(rng, 10);
  Trajectory late = ref;
  for (auto& e : late.entries) e.timestamp += 100.0;
  CHECK_THROWS_AS(ate(late, ref, AteDim::k3D), data_error);
}

TEST_CASE("ate associates nearest timestamps within tolerance") {
  Trajectory ref, est;
  for (int k = 0; k < 10; ++k)
    ref.entries.push_back({0.05 * k, PoseSE3{RotMat3::identity(), {1.0 * k, 0, 0}}});
  // Slightly perturbed timestamps still associate to the right entries.
  for (int k = 0; k < 10; ++k)
    est.entries.push_back({0.05 * k + 0.004, PoseSE3{RotMat3::identity(), {1.0 * k, 0, 0}}});
  const AteReport r = ate(est, ref, AteDim::k3D);
  CHECK(r.per_frame.size() == 10);
  CHECK(r.max < 1e-12);
}

TEST_CASE("cdf_export orders errors with rank fractions") {
  AteReport single;
  single.per_frame = {0.5};
  const auto one = cdf_export(single);
  REQUIRE(one.size() == 1);
  CHECK(one[0].first == 0.5);
  CHECK(one[0].second == 1.0);

  AteReport four;
  four.per_frame = {3, 1, 4, 2};
  const auto cdf = cdf_export(four);
  REQUIRE(cdf.size() == 4);
  const double want_err[] = {1, 2, 3, 4};
  const double want_frac[] = {0.25, 0.5, 0.75, 1.0};
  for (int i = 0; i < 4; ++i) {
    CHECK(cdf[i].first == want_err[i]);
    CHECK(cdf[i].second == doctest::Approx(want_frac[i]));
  }

  auto rng = make_stream(89, "cdf");
  AteReport random_report;
  for (int i = 0; i < 50; ++i) random_report.per_frame.push_back(uniform_range(rng, 0, 2));
  const auto rc = cdf_export(random_report);
  for (std::size_t i = 1; i < rc.size(); ++i) {
    CHECK(rc[i].first >= rc[i - 1].first);
    CHECK(rc[i].second > rc[i - 1].second);
  }
  CHECK(rc.back().second == doctest::Approx(1.0));
}

TEST_CASE("drift percent is mean over path length") {
  Trajectory ref;
  for (int k = 0; k < 11; ++k)
    ref.entries.push_back({0.1 * k, PoseSE3{RotMat3::identity(), {1.0 * k, 0, 0}}});
  AteReport r;
  r.mean = 0.5;
  r.per_frame = {0.5};
  CHECK(drift_percent(r, ref) == doctest::Approx(5.0));  // 0.5 m over 10 m
}
