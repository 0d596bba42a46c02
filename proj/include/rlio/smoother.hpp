#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <variant>
#include <vector>

#include "rlio/chain_solver.hpp"
#include "rlio/factors.hpp"
#include "rlio/preintegration.hpp"

namespace rlio {

/// Node-creation policy of the window.
///  - ProposedLidarOnly: nodes at LiDAR timestamps; radar scans attach
///    preintegrated factors to the most recent node; optimization runs on
///    LiDAR messages only.
///  - BaselinePerMeasurement: a node per LiDAR and per radar measurement;
///    optimization runs on both.
///  - LidarInertialOnly: radar scans are discarded.
enum class NodePolicy { ProposedLidarOnly, BaselinePerMeasurement, LidarInertialOnly };

const char* to_string(NodePolicy policy);

struct OptimizerSettings {
  int max_iterations = 10;
  double rel_reduction_tol = 1e-5;
  double lambda_init = 1e-6;
  double lambda_up = 10.0;
  double lambda_down = 1.0 / 3.0;

  bool valid() const {
    return max_iterations > 0 && rel_reduction_tol > 0.0 &&
           rel_reduction_tol < 1.0 && lambda_init > 0.0 && lambda_up > 1.0 &&
           lambda_down > 0.0 && lambda_down < 1.0;
  }
};

struct SolveReport {
  int iterations = 0;  // linear solves attempted
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int64_t wall_ns = 0;
  std::vector<int64_t> iteration_wall_ns;
  bool converged = false;
  bool diverged = false;
};

struct SmootherConfig {
  NodePolicy policy = NodePolicy::ProposedLidarOnly;
  double lag_s = 2.5;
  OptimizerSettings optimizer;
  Extrinsics extrinsics;
  ImuNoiseParams imu_noise;
  double sigma_r = 0.15;
  double huber_delta = 1.345;
  double gravity_magnitude = 9.81;

  // First-node anchor and its prior standard deviations.
  NavState init_state;
  Vec3 init_gravity_dir = Vec3(0.0, 0.0, -1.0);
  double prior_sigma_rot = 0.05;
  double prior_sigma_pos = 0.1;
  double prior_sigma_vel = 0.3;
  double prior_sigma_ba = 0.05;
  double prior_sigma_bg = 0.01;
  double prior_sigma_grav = 0.2;
};

/// Gravity direction from a stretch of near-static IMU samples: negated and
/// normalized mean specific force.
UnitVec3 estimate_gravity_direction(const std::vector<ImuSample>& samples);

/// Fixed-lag sliding-window smoother over (pose, velocity, bias) nodes and a
/// shared gravity direction. Single-threaded by contract: feed measurements
/// in timestamp order from one thread.
class FixedLagSmoother {
 public:
  struct Node {
    int64_t id;
    int64_t t_ns;
    NavState state;
  };

  explicit FixedLagSmoother(const SmootherConfig& config);

  void addImu(const ImuSample& sample);

  /// Creates a node, IMU factor from the previous node and a LiDAR factor,
  /// then marginalizes and optimizes. Throws on out-of-order timestamps.
  void addLidar(const LidarPoseMeasurement& m);

  /// Policy-dependent radar handling; see NodePolicy. Scans older than the
  /// window are dropped (counted, not fatal).
  void addRadar(const RadarScan& scan);

  /// Latest optimized state propagated through the IMU buffer to t_ns.
  /// Throws if t_ns precedes the newest node or nothing is bootstrapped.
  NavState propagateOutput(int64_t t_ns) const;

  bool bootstrapped() const { return !nodes_.empty(); }
  bool failed() const { return failed_; }

  const std::deque<Node>& nodes() const { return nodes_; }
  const GravityVar& gravity() const { return gravity_; }
  const std::vector<SolveReport>& reports() const { return reports_; }
  const ImuBuffer& imuBuffer() const { return imu_; }

  int64_t optimizeCalls() const { return optimize_calls_; }
  int64_t totalIterations() const { return total_iterations_; }
  int64_t scansDropped() const { return scans_dropped_; }
  int64_t scansDiscarded() const { return scans_discarded_; }
  int64_t priorFloorRepairs() const { return prior_floor_repairs_; }
  size_t factorCount() const { return factors_.size(); }

  /// Robust cost of the window objective at arbitrary values (diagnostics
  /// and independent-optimizer checks). `states` must parallel nodes().
  double costAt(const std::vector<NavState>& states,
                const GravityVar& gravity) const;

  /// Stacked whitened (and Huber-weighted) residual rows of all factors at
  /// arbitrary values; same diagnostics purpose as costAt.
  Eigen::VectorXd whitenedResidualsAt(const std::vector<NavState>& states,
                                      const GravityVar& gravity) const;

  /// Cost at the current estimates.
  double currentCost() const;

 private:
  struct LidarData {
    LidarPoseMeasurement m;
    Mat6 sqrt_info;
  };
  struct ImuData {
    std::shared_ptr<const PreintegratedImu> pim;
    Mat15 sqrt_info;
  };
  struct RadarBaselineData {
    RadarScan scan;
  };
  struct RadarPreintData {
    RadarScan scan;
    std::shared_ptr<const PreintegratedImu> pim;
  };
  struct PriorData {
    PriorFactor prior;
  };

  struct Factor {
    int64_t node_a = -1;
    int64_t node_b = -1;  // second node for IMU factors
    std::variant<LidarData, ImuData, RadarBaselineData, RadarPreintData,
                 PriorData>
        data;
  };

  struct Linearized {
    Eigen::MatrixXd J_a;  // rows x 15
    Eigen::MatrixXd J_b;  // rows x 15 (IMU only)
    Eigen::MatrixXd J_g;  // rows x 2
    Eigen::VectorXd r;    // whitened, robust-weighted
    double cost = 0.0;    // robust cost at the linearization point
  };

  void bootstrap(const LidarPoseMeasurement& m);
  void pushNode(int64_t t_ns, const NavState& state);
  int slotOf(int64_t node_id) const;
  const Node* nodeAtOrBefore(int64_t t_ns) const;

  double factorCost(const Factor& f,
                    const std::vector<NavState>& states,
                    const GravityVar& gravity) const;
  Linearized linearizeFactor(const Factor& f,
                             const std::vector<NavState>& states,
                             const GravityVar& gravity) const;
  double totalCost(const std::vector<NavState>& states,
                   const GravityVar& gravity) const;

  SolveReport optimize();
  void marginalizeWhileOverLag();
  void marginalizeOldest();

  SmootherConfig cfg_;
  int64_t lag_ns_;

  ImuBuffer imu_;
  std::deque<Node> nodes_;
  GravityVar gravity_;
  std::vector<Factor> factors_;
  int64_t next_node_id_ = 0;
  bool failed_ = false;

  std::vector<SolveReport> reports_;
  int64_t optimize_calls_ = 0;
  int64_t total_iterations_ = 0;
  int64_t scans_dropped_ = 0;
  int64_t scans_discarded_ = 0;
  int64_t prior_floor_repairs_ = 0;
};

}  // namespace rlio
