#include "radarego/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "radarego/errors.hpp"
#include "radarego/registration.hpp"

namespace radarego {

double Trajectory::path_length() const {
  double acc = 0.0;
  for (std::size_t k = 1; k < entries.size(); ++k)
    acc += (entries[k].pose.translation - entries[k - 1].pose.translation).norm();
  return acc;
}

Trajectory compose_trajectory(const PoseSE3& start, std::span<const RelativePose> rels,
                              std::span<const double> timestamps) {
  if (timestamps.size() != rels.size() + 1)
    throw std::invalid_argument("compose_trajectory: need rels.size() + 1 timestamps");
  Trajectory traj;
  traj.entries.reserve(timestamps.size());
  traj.entries.push_back({timestamps[0], start});
  for (std::size_t k = 0; k < rels.size(); ++k) {
    const PoseSE3 next = compose(traj.entries.back().pose, to_pose(rels[k]));
    traj.entries.push_back({timestamps[k + 1], next});
  }
  return traj;
}

Trajectory align_first_frame(const Trajectory& est, const Trajectory& ref) {
  if (est.empty() || ref.empty())
    throw std::invalid_argument("align_first_frame: empty trajectory");
  const PoseSE3 correction = compose(ref.entries.front().pose,
                                     inverse(est.entries.front().pose));
  Trajectory out = est;
  for (auto& e : out.entries) e.pose = compose(correction, e.pose);
  return out;
}

Trajectory align_full(const Trajectory& est, const Trajectory& ref) {
  if (est.size() != ref.size() || est.size() < 3)
    throw std::invalid_argument("align_full: needs matched trajectories of >= 3 entries");
  std::vector<Vec3> a, b;
  a.reserve(est.size());
  b.reserve(ref.size());
  for (std::size_t k = 0; k < est.size(); ++k) {
    a.push_back(est.entries[k].pose.translation);
    b.push_back(ref.entries[k].pose.translation);
  }
  const PoseSE3 correction = rigid_solve(a, b);
  Trajectory out = est;
  for (auto& e : out.entries) e.pose = compose(correction, e.pose);
  return out;
}

AteReport ate(const Trajectory& est, const Trajectory& ref, AteDim dim, double tolerance) {
  if (est.empty() || ref.empty()) throw std::invalid_argument("ate: empty trajectory");
  if (tolerance < 0) {
    double interval = 0.0;
    if (ref.size() > 1)
      interval = (ref.entries.back().timestamp - ref.entries.front().timestamp) /
                 static_cast<double>(ref.size() - 1);
    tolerance = interval > 0 ? interval / 2.0 : 1e-6;
  }

  AteReport report;
  report.dimensionality = dim;
  std::size_t cursor = 0;
  for (const auto& e : est.entries) {
    // Nearest ref entry by timestamp; both trajectories are time-sorted.
    while (cursor + 1 < ref.size() &&
           std::abs(ref.entries[cursor + 1].timestamp - e.timestamp) <=
               std::abs(ref.entries[cursor].timestamp - e.timestamp))
      ++cursor;
    if (std::abs(ref.entries[cursor].timestamp - e.timestamp) > tolerance) continue;
    const Vec3 d = e.pose.translation - ref.entries[cursor].pose.translation;
    const double err = dim == AteDim::k2D ? std::hypot(d.x, d.y) : d.norm();
    report.per_frame.push_back(err);
  }
  if (report.per_frame.empty())
    throw data_error("ate: no timestamp overlap between trajectories");

  double sq_sum = 0.0, sum = 0.0;
  for (double e : report.per_frame) {
    sq_sum += e * e;
    sum += e;
    report.max = std::max(report.max, e);
  }
  const double n = static_cast<double>(report.per_frame.size());
  report.mean = std::sqrt(sq_sum / n);
  const double arith = sum / n;
  double var = 0.0;
  for (double e : report.per_frame) var += (e - arith) * (e - arith);
  report.std = std::sqrt(var / n);
  return report;
}

std::vector<std::pair<double, double>> cdf_export(const AteReport& report) {
  if (report.per_frame.empty()) throw std::invalid_argument("cdf_export: empty report");
  std::vector<double> sorted = report.per_frame;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> cdf;
  cdf.reserve(sorted.size());
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    cdf.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
  return cdf;
}

double drift_percent(const AteReport& report, const Trajectory& ref) {
  const double length = ref.path_length();
  return length > 0 ? 100.0 * report.mean / length : 0.0;
}

}  // namespace radarego
