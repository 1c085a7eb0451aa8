#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "radarego/rng.hpp"
#include "radarego/sensing.hpp"

using namespace radarego;

TEST_CASE("spherical_angles axis cases") {
  auto [a1, b1] = spherical_angles({1, 0, 0});
  CHECK(a1 == doctest::Approx(0.0));
  CHECK(b1 == doctest::Approx(0.0));

  auto [a2, b2] = spherical_angles({0, 1, 0});
  CHECK(a2 == doctest::Approx(M_PI_2));
  CHECK(b2 == doctest::Approx(0.0));

  auto [a3, b3] = spherical_angles({1, 0, 1});
  CHECK(a3 == doctest::Approx(0.0));
  CHECK(b3 == doctest::Approx(M_PI / 4));

  CHECK_THROWS_AS(spherical_angles({0, 0, 0}), std::invalid_argument);
}

TEST_CASE("bin_index floor semantics and bounds") {
  const PanoGeometry g = PanoGeometry::standard();

  const auto origin = bin_index(g.alpha_min, g.beta_min, g);
  REQUIRE(origin.has_value());
  CHECK(origin->az == 0);
  CHECK(origin->el == 0);

  const auto az1 = bin_index(g.alpha_min + 1.5 * g.delta_alpha, g.beta_min, g);
  REQUIRE(az1.has_value());
  CHECK(az1->az == 1);

  CHECK(!bin_index(g.alpha_max() + 0.1, 0.0, g).has_value());
  CHECK(!bin_index(0.0, g.beta_max() + 0.1, g).has_value());
  CHECK(!bin_index(g.alpha_min - 1e-9, 0.0, g).has_value());
}

TEST_CASE("bin_index is monotone in alpha and moves by at most one bin") {
  const PanoGeometry g = PanoGeometry::standard();
  auto rng = make_stream(21, "bin-monotone");
  for (int i = 0; i < 500; ++i) {
    const double alpha = uniform_range(rng, g.alpha_min, g.alpha_max() - g.delta_alpha);
    const double beta = uniform_range(rng, g.beta_min, g.beta_max() - g.delta_beta);
    const double eps = uniform_range(rng, 0.0, g.delta_alpha * 0.999);
    const auto lo = bin_index(alpha, beta, g);
    const auto hi = bin_index(std::min(alpha + eps, g.alpha_max() - 1e-12), beta, g);
    REQUIRE(lo.has_value());
    REQUIRE(hi.has_value());
    CHECK(hi->az >= lo->az);
    CHECK(hi->az - lo->az <= 1);
  }
}

TEST_CASE("encode_panoramic empty cloud and range boundary") {
  const PanoGeometry g = PanoGeometry::standard();
  const PanoramicImage empty = encode_panoramic(PointCloud{}, g);
  for (double v : empty.values) CHECK(v == 0.0);

  PointCloud far;
  far.points.push_back({g.max_range, 0, 0});  // exactly at max range
  const PanoramicImage img = encode_panoramic(far, g);
  for (double v : img.values) CHECK(v == 0.0);
}

TEST_CASE("encode_panoramic collision keeps the nearest point") {
  const PanoGeometry g = PanoGeometry::standard(32, 128, 10.0);
  PointCloud cloud;
  cloud.points.push_back({1, 0, 0});
  cloud.points.push_back({3, 0, 0});
  const PanoramicImage img = encode_panoramic(cloud, g);
  const auto bin = bin_index(0.0, 0.0, g);
  REQUIRE(bin.has_value());
  CHECK(img.at(bin->el, bin->az) == doctest::Approx(229.5));
}

TEST_CASE("encode_panoramic value range, positivity and permutation invariance") {
  const PanoGeometry g = PanoGeometry::standard();
  auto rng = make_stream(22, "encode-prop");
  PointCloud cloud;
  for (int i = 0; i < 300; ++i) {
    const double az = uniform_range(rng, g.alpha_min + 1e-3, g.alpha_max() - 1e-3);
    const double el = uniform_range(rng, g.beta_min + 1e-3, g.beta_max() - 1e-3);
    const double r = uniform_range(rng, 0.2, g.max_range - 0.2);
    cloud.points.push_back(
        {r * std::cos(el) * std::cos(az), r * std::cos(el) * std::sin(az), r * std::sin(el)});
  }
  const PanoramicImage img = encode_panoramic(cloud, g);
  for (double v : img.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 255.0);
  }
  // Every strictly in-view point lands in a strictly positive bin.
  for (const Vec3& p : cloud.points) {
    const auto [a, b] = spherical_angles(p);
    const auto bin = bin_index(a, b, g);
    REQUIRE(bin.has_value());
    CHECK(img.at(bin->el, bin->az) > 0.0);
  }

  PointCloud shuffled = cloud;
  for (std::size_t i = shuffled.points.size(); i > 1; --i)
    std::swap(shuffled.points[i - 1],
              shuffled.points[static_cast<std::size_t>(uniform_int(rng, 0, i - 1))]);
  const PanoramicImage img2 = encode_panoramic(shuffled, g);
  CHECK(img.values == img2.values);
}

TEST_CASE("stack_pair shapes and channels") {
  const PanoGeometry g = PanoGeometry::standard();
  PointCloud cloud;
  cloud.points.push_back({2, 0.5, 0.1});
  const PanoramicImage a = encode_panoramic(cloud, g);
  const Tensor both = stack_pair(a, a);
  CHECK(both.shape() == Shape{2, 32, 128});
  const auto data = both.data();
  const std::size_t half = data.size() / 2;
  for (std::size_t i = 0; i < half; ++i) CHECK(data[i] == data[half + i]);

  const PanoGeometry other = PanoGeometry::standard(16, 64);
  const PanoramicImage b = encode_panoramic(cloud, other);
  CHECK_THROWS_AS(stack_pair(a, b), std::invalid_argument);
}

TEST_CASE("stack_pair mean subtraction recenters the dataset") {
  const PanoGeometry g = PanoGeometry::standard();
  auto rng = make_stream(23, "stack-mean");
  std::vector<PanoramicImage> images;
  double sum = 0.0;
  std::size_t count = 0;
  for (int k = 0; k < 6; ++k) {
    PointCloud cloud;
    for (int i = 0; i < 80; ++i) {
      const double az = uniform_range(rng, g.alpha_min + 1e-3, g.alpha_max() - 1e-3);
      const double el = uniform_range(rng, g.beta_min + 1e-3, g.beta_max() - 1e-3);
      const double r = uniform_range(rng, 0.5, 9.0);
      cloud.points.push_back(
          {r * std::cos(el) * std::cos(az), r * std::cos(el) * std::sin(az), r * std::sin(el)});
    }
    images.push_back(encode_panoramic(cloud, g));
    for (double v : images.back().values) sum += v;
    count += images.back().values.size();
  }
  const double mean = sum / count;
  double stacked_sum = 0.0;
  std::size_t stacked_n = 0;
  for (std::size_t k = 1; k < images.size(); ++k) {
    const Tensor t = stack_pair(images[k - 1], images[k], mean);
    for (double v : t.data()) stacked_sum += v;
    stacked_n += t.size();
  }
  // Interior pairs appear twice, the ends once; the residual is tiny
  // relative to the raw value scale.
  CHECK(std::abs(stacked_sum / stacked_n) < 1.0);
}

TEST_CASE("merge_clouds identity and cardinality") {
  PointCloud a;
  for (int i = 0; i < 50; ++i) a.points.push_back({1.0 + i * 0.01, 0, 0});
  const PointCloud same = merge_clouds({{a, PoseSE3::identity()}});
  REQUIRE(same.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((same.points[i] - a.points[i]).norm() == 0.0);

  PointCloud b;
  for (int i = 0; i < 50; ++i) b.points.push_back({0, 2.0 + i * 0.01, 0});
  CHECK(merge_clouds({{a, PoseSE3::identity()}, {b, PoseSE3::identity()}}).size() == 100);
}

TEST_CASE("merge_clouds with yaw extrinsics spans the union of FOVs") {
  // Three identical forward-looking 120 deg fans merged at 0/+120/-120 deg.
  auto rng = make_stream(24, "merge-fov");
  PointCloud fan;
  for (int i = 0; i < 200; ++i) {
    const double az = uniform_range(rng, -M_PI / 3, M_PI / 3);
    fan.points.push_back({3.0 * std::cos(az), 3.0 * std::sin(az), 0});
  }
  const PoseSE3 left{euler_to_rotmat({0, 0, 2 * M_PI / 3}), {}};
  const PoseSE3 right{euler_to_rotmat({0, 0, -2 * M_PI / 3}), {}};
  const PointCloud merged =
      merge_clouds({{fan, PoseSE3::identity()}, {fan, left}, {fan, right}});

  // 12-bin azimuth histogram over the full circle: every bin occupied.
  std::vector<int> hist(12, 0);
  for (const Vec3& p : merged.points) {
    const auto [az, el] = spherical_angles(p);
    const int bin = std::min(11, static_cast<int>((az + M_PI) / (2 * M_PI / 12)));
    ++hist[bin];
  }
  for (int count : hist) CHECK(count > 0);

  // A single fan covers only a third of the circle.
  std::vector<int> single(12, 0);
  for (const Vec3& p : fan.points) {
    const auto [az, el] = spherical_angles(p);
    ++single[std::min(11, static_cast<int>((az + M_PI) / (2 * M_PI / 12)))];
  }
  CHECK(std::count(single.begin(), single.end(), 0) >= 6);
}
