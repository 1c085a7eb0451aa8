#include "radarego/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace radarego {

PanoGeometry PanoGeometry::standard(int rows, int cols, double max_range) {
  const double h_fov = 2.0 * M_PI / 3.0;  // 120 deg
  const double v_fov = M_PI / 3.0;        // 60 deg
  PanoGeometry g;
  g.rows = rows;
  g.cols = cols;
  g.delta_alpha = h_fov / cols;
  g.delta_beta = v_fov / rows;
  g.alpha_min = -h_fov / 2.0;
  g.beta_min = -v_fov / 2.0;
  g.max_range = max_range;
  return g;
}

std::pair<double, double> spherical_angles(const Vec3& p) {
  const double n = p.norm();
  if (!(n > 0.0)) throw std::invalid_argument("spherical_angles: zero-norm point");
  const double alpha = std::atan2(p.y, p.x);
  const double beta = std::asin(std::clamp(p.z / n, -1.0, 1.0));
  return {alpha, beta};
}

std::optional<BinIndex> bin_index(double alpha, double beta, const PanoGeometry& g) {
  if (!(std::isfinite(alpha) && std::isfinite(beta)))
    throw std::invalid_argument("bin_index: non-finite angle");
  const int az = static_cast<int>(std::floor((alpha - g.alpha_min) / g.delta_alpha));
  const int el = static_cast<int>(std::floor((beta - g.beta_min) / g.delta_beta));
  if (az < 0 || az >= g.cols || el < 0 || el >= g.rows) return std::nullopt;
  return BinIndex{az, el};
}

PanoramicImage encode_panoramic(const PointCloud& cloud, const PanoGeometry& g) {
  if (!(g.delta_alpha > 0.0 && g.delta_beta > 0.0 && g.max_range > 0.0))
    throw std::invalid_argument("encode_panoramic: non-positive grid resolution");
  PanoramicImage img;
  img.geom = g;
  img.values.assign(static_cast<std::size_t>(g.rows) * g.cols, 0.0);
  for (const Vec3& p : cloud.points) {
    const double range = p.norm();
    if (!(range > 0.0)) continue;
    const auto [alpha, beta] = spherical_angles(p);
    const auto bin = bin_index(alpha, beta, g);
    if (!bin) continue;
    const double value = 255.0 * (1.0 - std::min(range / g.max_range, 1.0));
    double& cell = img.at(bin->el, bin->az);
    cell = std::max(cell, value);
  }
  return img;
}

Tensor stack_pair(const PanoramicImage& prev, const PanoramicImage& curr, double mean) {
  if (prev.geom.rows != curr.geom.rows || prev.geom.cols != curr.geom.cols)
    throw std::invalid_argument("stack_pair: image dimensions differ");
  const int rows = prev.geom.rows, cols = prev.geom.cols;
  std::vector<double> data;
  data.reserve(2u * rows * cols);
  for (double v : prev.values) data.push_back(v - mean);
  for (double v : curr.values) data.push_back(v - mean);
  return Tensor::from_data({2, rows, cols}, std::move(data));
}

PointCloud merge_clouds(const std::vector<std::pair<PointCloud, PoseSE3>>& clouds) {
  PointCloud merged;
  bool all_have_intensity = !clouds.empty();
  std::size_t total = 0;
  for (const auto& [cloud, pose] : clouds) {
    total += cloud.size();
    all_have_intensity = all_have_intensity && cloud.intensities.size() == cloud.size();
  }
  merged.points.reserve(total);
  if (all_have_intensity) merged.intensities.reserve(total);
  for (const auto& [cloud, pose] : clouds) {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      merged.points.push_back(transform_point(pose, cloud.points[i]));
      if (all_have_intensity) merged.intensities.push_back(cloud.intensities[i]);
    }
  }
  if (!clouds.empty()) merged.timestamp = clouds.front().first.timestamp;
  return merged;
}

}  // namespace radarego
