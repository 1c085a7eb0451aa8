#pragma once

#include <span>
#include <utility>
#include <vector>

#include "radarego/geometry.hpp"

namespace radarego {

/// Timestamped global poses, timestamps strictly increasing.
struct Trajectory {
  struct Entry {
    double timestamp = 0.0;
    PoseSE3 pose;
  };
  std::vector<Entry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  double path_length() const;
};

enum class AteDim { k2D, k3D };
enum class AlignMode { kNone, kFirstFrame, kFullTrajectory };

struct AteReport {
  double mean = 0.0;  // RMSE over per-frame errors, meters
  double std = 0.0;   // standard deviation of per-frame errors
  double max = 0.0;
  std::vector<double> per_frame;
  AteDim dimensionality = AteDim::k3D;
};

/// Chains relative poses onto a start pose; entry k composes entry k-1
/// with rels[k-1]. timestamps must have rels.size() + 1 entries.
Trajectory compose_trajectory(const PoseSE3& start, std::span<const RelativePose> rels,
                              std::span<const double> timestamps);

/// Applies the rigid transform mapping est's first pose onto ref's first
/// pose to every est entry.
Trajectory align_first_frame(const Trajectory& est, const Trajectory& ref);

/// Least-squares rigid alignment of est positions onto ref positions
/// (applied to the whole trajectory).
Trajectory align_full(const Trajectory& est, const Trajectory& ref);

/// Absolute trajectory error after nearest-timestamp association within
/// `tolerance` (defaults to half the ref frame interval). Per-frame error
/// is the Euclidean distance between translations (x,y for 2D).
AteReport ate(const Trajectory& est, const Trajectory& ref, AteDim dim,
              double tolerance = -1.0);

/// Ascending (error, cumulative fraction) pairs; fractions are rank/N.
std::vector<std::pair<double, double>> cdf_export(const AteReport& report);

/// Mean ATE as a percentage of the reference path length.
double drift_percent(const AteReport& report, const Trajectory& ref);

}  // namespace radarego
