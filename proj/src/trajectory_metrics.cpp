#include "rlio/trajectory_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Geometry>

namespace rlio {

namespace {

constexpr double kAssocTolS = 0.010;  // association tolerance

/// Index of the trajectory point nearest in time, or -1 if outside the
/// association tolerance.
int nearest_index(const Trajectory& traj, double t) {
  auto it = std::lower_bound(
      traj.begin(), traj.end(), t,
      [](const TrajectoryPoint& p, double v) { return p.t < v; });
  int best = -1;
  double best_d = kAssocTolS;
  if (it != traj.end() && std::abs(it->t - t) <= best_d) {
    best = static_cast<int>(it - traj.begin());
    best_d = std::abs(it->t - t);
  }
  if (it != traj.begin()) {
    const auto prev = std::prev(it);
    if (std::abs(prev->t - t) <= best_d) {
      best = static_cast<int>(prev - traj.begin());
    }
  }
  return best;
}

ErrorStats stats_of(const std::vector<double>& errs) {
  ErrorStats out;
  out.count = errs.size();
  if (errs.empty()) return out;
  double sum = 0.0;
  for (double e : errs) sum += e;
  out.mean = sum / errs.size();
  double var = 0.0;
  for (double e : errs) var += (e - out.mean) * (e - out.mean);
  out.stddev = std::sqrt(var / errs.size());
  return out;
}

}  // namespace

void save_tum(const std::string& path, const Trajectory& traj) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_tum: cannot open " + path);
  char line[256];
  for (const auto& p : traj) {
    const Vec3& t = p.pose.translation();
    const Eigen::Quaterniond& q = p.pose.rotation().quaternion();
    std::snprintf(line, sizeof(line),
                  "%.9f %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", p.t,
                  t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
    f << line;
  }
}

Trajectory load_tum(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_tum: cannot open " + path);
  Trajectory out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double t, x, y, z, qx, qy, qz, qw;
    if (!(ss >> t >> x >> y >> z >> qx >> qy >> qz >> qw)) {
      throw std::runtime_error("load_tum: malformed line in " + path);
    }
    out.push_back({t, Pose3(Rot3(Eigen::Quaterniond(qw, qx, qy, qz)),
                            Vec3(x, y, z))});
  }
  return out;
}

ErrorStats compute_ate(const Trajectory& est, const Trajectory& gt,
                       bool align) {
  std::vector<Vec3> pe, pg;
  for (const auto& p : est) {
    const int j = nearest_index(gt, p.t);
    if (j < 0) continue;
    pe.push_back(p.pose.translation());
    pg.push_back(gt[j].pose.translation());
  }
  if (pe.size() < 2) {
    throw std::runtime_error("compute_ate: fewer than two associations");
  }

  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  if (align) {
    Eigen::MatrixXd src(3, pe.size()), dst(3, pe.size());
    for (size_t i = 0; i < pe.size(); ++i) {
      src.col(i) = pe[i];
      dst.col(i) = pg[i];
    }
    T = Eigen::umeyama(src, dst, false);
  }

  std::vector<double> errs;
  errs.reserve(pe.size());
  const Mat3 R = T.topLeftCorner<3, 3>();
  const Vec3 t = T.topRightCorner<3, 1>();
  for (size_t i = 0; i < pe.size(); ++i) {
    errs.push_back((R * pe[i] + t - pg[i]).norm());
  }
  return stats_of(errs);
}

ErrorStats compute_rte_per_meter(const Trajectory& est, const Trajectory& gt) {
  if (trajectory_path_length(gt) < 1.0) {
    throw std::runtime_error("compute_rte_per_meter: ground truth shorter than 1 m");
  }
  std::vector<double> errs;
  size_t seg_start = 0;
  double acc = 0.0;
  for (size_t i = 1; i < gt.size(); ++i) {
    acc += (gt[i].pose.translation() - gt[i - 1].pose.translation()).norm();
    if (acc < 1.0) continue;

    const int a = nearest_index(est, gt[seg_start].t);
    const int b = nearest_index(est, gt[i].t);
    if (a >= 0 && b >= 0) {
      const Pose3& ga = gt[seg_start].pose;
      const Pose3& gb = gt[i].pose;
      const Pose3& ea = est[a].pose;
      const Pose3& eb = est[b].pose;
      const Vec3 d_gt =
          ga.rotation().inverse() * (gb.translation() - ga.translation());
      const Vec3 d_est =
          ea.rotation().inverse() * (eb.translation() - ea.translation());
      errs.push_back((d_est - d_gt).norm());
    }
    seg_start = i;
    acc = 0.0;
  }
  if (errs.empty()) {
    throw std::runtime_error("compute_rte_per_meter: no associated segments");
  }
  return stats_of(errs);
}

double trajectory_path_length(const Trajectory& traj) {
  double len = 0.0;
  for (size_t i = 1; i < traj.size(); ++i) {
    len += (traj[i].pose.translation() - traj[i - 1].pose.translation()).norm();
  }
  return len;
}

}  // namespace rlio
