#pragma once

#include <string>
#include <vector>

#include "rlio/types.hpp"

namespace rlio {

struct TrajectoryPoint {
  double t = 0.0;  // seconds
  Pose3 pose;
};

using Trajectory = std::vector<TrajectoryPoint>;

/// TUM format: one `t x y z qx qy qz qw` line per pose, t in seconds.
void save_tum(const std::string& path, const Trajectory& traj);
Trajectory load_tum(const std::string& path);

struct ErrorStats {
  double mean = 0.0;
  double stddev = 0.0;
  size_t count = 0;
};

/// Absolute trajectory error: translational error norms over
/// nearest-neighbor timestamp associations (10 ms tolerance), optionally
/// after closed-form rigid SE(3) alignment of the estimate onto the ground
/// truth. Throws when fewer than two associations exist.
ErrorStats compute_ate(const Trajectory& est, const Trajectory& gt, bool align);

/// Relative trajectory error per meter traversed: for every ground-truth
/// segment of 1 m arc length, the difference between estimated and true
/// relative translation (expressed in the segment-start frame). Throws when
/// the ground-truth arc length is below 1 m.
ErrorStats compute_rte_per_meter(const Trajectory& est, const Trajectory& gt);

double trajectory_path_length(const Trajectory& traj);

}  // namespace rlio
