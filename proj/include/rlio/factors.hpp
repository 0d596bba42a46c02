#pragma once

#include "rlio/preintegration.hpp"
#include "rlio/types.hpp"

// Residuals and analytic Jacobians for the five factor types. All Jacobians
// are with respect to the right-perturbation tangents defined in
// manifold.hpp / NavState::retract, and are finite-difference-verified in
// the test suite. Evaluations here are unwhitened; whitening and Huber
// weighting are applied by the smoother's factor wrappers.

namespace rlio {

using Mat15 = Eigen::Matrix<double, 15, 15>;
using Vec17 = Eigen::Matrix<double, 17, 1>;
using Mat17 = Eigen::Matrix<double, 17, 17>;

/// IRLS weight of the Huber loss: 1 inside the quadratic region,
/// delta/|r| outside. Applied as sqrt(weight) scaling of residual and
/// Jacobian rows.
double huber_weight(double r, double delta);

/// Huber cost rho(r): 0.5 r^2 for |r| <= delta, delta (|r| - delta/2) above.
double huber_cost(double r, double delta);

// ---------------------------------------------------------------------------
// LiDAR pose factor
// ---------------------------------------------------------------------------

struct LidarEval {
  Vec6 residual;
  Mat6 J_pose;  // w.r.t. the state's 6-dim pose tangent
};

/// e = Log((T_WL * T_LI)^-1 * T_WI): zero iff the state pose matches the
/// measured LiDAR pose composed with the extrinsics.
LidarEval eval_lidar(const NavState& x, const LidarPoseMeasurement& m,
                     const Extrinsics& ext);
Vec6 eval_lidar_residual(const NavState& x, const LidarPoseMeasurement& m,
                         const Extrinsics& ext);

// ---------------------------------------------------------------------------
// IMU factor
// ---------------------------------------------------------------------------

struct ImuEval {
  Vec15 residual;  // rows: rotation, position, velocity, bias
  Mat15 J_i;
  Mat15 J_j;
  Eigen::Matrix<double, 15, 2> J_gravity;
  Mat15 cov;  // block-diag: preintegration (R,p,v) + bias random walk * dt
};

/// Preintegrated IMU residual between consecutive states, with first-order
/// bias correction at x_i's bias. Throws if the pim spans zero time.
ImuEval eval_imu(const NavState& x_i, const NavState& x_j,
                 const GravityVar& gravity, const PreintegratedImu& pim);
Vec15 eval_imu_residual(const NavState& x_i, const NavState& x_j,
                        const GravityVar& gravity, const PreintegratedImu& pim);

// ---------------------------------------------------------------------------
// Radar velocity factors
// ---------------------------------------------------------------------------

/// Single-point Doppler residual: e = -mu^T v_R - v_r.
double radar_point_residual(const Vec3& v_R, const UnitVec3& mu, double v_r);

/// Radar ego-velocity from state quantities and a gyro measurement:
/// v_R = R_RI (R_WI^T v_WI + (omega - b_g) x p_IR).
Vec3 radar_ego_velocity(const Rot3& R_WI, const Vec3& v_WI, const Vec3& b_g,
                        const Vec3& omega, const Extrinsics& ext);

struct RadarEval {
  Eigen::VectorXd residual;                      // one row per point
  Eigen::Matrix<double, Eigen::Dynamic, 15> J_x;
  Eigen::Matrix<double, Eigen::Dynamic, 2> J_gravity;  // zero for baseline
  Eigen::VectorXd sigma;                         // per-row standard deviation
};

/// Residuals and per-row sigmas only (cost evaluation path).
struct RadarResidual {
  Eigen::VectorXd residual;
  Eigen::VectorXd sigma;
};

/// Conventional stacked radar factor evaluated at a node coincident with
/// the scan. Rows share the isotropic sigma_r.
RadarEval eval_radar_baseline(const NavState& x, const RadarScan& scan,
                              const Extrinsics& ext, double sigma_r);
RadarResidual eval_radar_baseline_residual(const NavState& x,
                                           const RadarScan& scan,
                                           const Extrinsics& ext,
                                           double sigma_r);

/// Proposed factor: the node state is propagated to the scan time with the
/// bias-corrected preintegrated deltas, so the factor constrains the past
/// node and gravity only. Per-row variance is sigma_r^2 plus first-order
/// propagation of the preintegration covariance (rotation and velocity
/// blocks).
RadarEval eval_radar_preintegrated(const NavState& x_i,
                                   const GravityVar& gravity,
                                   const PreintegratedImu& pim_ir,
                                   const RadarScan& scan,
                                   const Extrinsics& ext, double sigma_r);
RadarResidual eval_radar_preintegrated_residual(const NavState& x_i,
                                                const GravityVar& gravity,
                                                const PreintegratedImu& pim_ir,
                                                const RadarScan& scan,
                                                const Extrinsics& ext,
                                                double sigma_r);

// ---------------------------------------------------------------------------
// Marginalization prior
// ---------------------------------------------------------------------------

/// Gaussian prior over (oldest state, gravity direction) produced by
/// marginalization, stored as linearization point plus square-root
/// information (W with W^T W = Sigma_P^-1).
struct PriorFactor {
  NavState state_lin;
  UnitVec3 gravity_lin{Vec3(0.0, 0.0, -1.0)};
  Mat17 sqrt_info = Mat17::Identity();
};

struct PriorEval {
  Vec17 residual;  // rows: pose 6, velocity 3, bias 6, gravity 2
  Eigen::Matrix<double, 17, 15> J_x;
  Eigen::Matrix<double, 17, 2> J_gravity;
};

PriorEval eval_prior(const NavState& x, const GravityVar& gravity,
                     const PriorFactor& prior);
Vec17 eval_prior_residual(const NavState& x, const GravityVar& gravity,
                          const PriorFactor& prior);

}  // namespace rlio
