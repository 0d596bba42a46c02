#include "rlio/factors.hpp"

#include <cmath>
#include <stdexcept>

namespace rlio {

double huber_weight(double r, double delta) {
  if (!(delta > 0.0)) {
    throw std::invalid_argument("huber_weight: delta must be > 0");
  }
  const double a = std::abs(r);
  return (a <= delta) ? 1.0 : delta / a;
}

double huber_cost(double r, double delta) {
  const double a = std::abs(r);
  return (a <= delta) ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

// ---------------------------------------------------------------------------
// LiDAR
// ---------------------------------------------------------------------------

Vec6 eval_lidar_residual(const NavState& x, const LidarPoseMeasurement& m,
                         const Extrinsics& ext) {
  const Pose3 measured_imu_pose = m.T_WL * ext.T_IL.inverse();
  return se3_log(measured_imu_pose.inverse() * x.pose);
}

LidarEval eval_lidar(const NavState& x, const LidarPoseMeasurement& m,
                     const Extrinsics& ext) {
  LidarEval out;
  out.residual = eval_lidar_residual(x, m, ext);
  out.J_pose = se3_right_jacobian_inverse(out.residual);
  return out;
}

// ---------------------------------------------------------------------------
// IMU
// ---------------------------------------------------------------------------

namespace {

struct ImuCore {
  Vec15 residual;
  PreintegratedImu::Corrected c;
  Vec3 dbg;
  Vec3 y_p, y_v;
  Rot3 R_i_inv;
};

ImuCore imu_core(const NavState& x_i, const NavState& x_j,
                 const GravityVar& gravity, const PreintegratedImu& pim) {
  const double dt = pim.deltaT();
  if (!(dt > 0.0)) {
    throw std::invalid_argument("eval_imu: preintegration spans zero time");
  }
  ImuCore out;
  const Vec3 g_W = gravity.vector();
  out.dbg = x_i.bias.gyro - pim.biasLin().gyro;
  out.c = pim.biasCorrected(x_i.bias);
  out.R_i_inv = x_i.pose.rotation().inverse();

  out.y_p = out.R_i_inv * (x_j.pose.translation() - x_i.pose.translation() -
                           x_i.velocity * dt - 0.5 * g_W * dt * dt);
  out.y_v = out.R_i_inv * (x_j.velocity - x_i.velocity - g_W * dt);

  out.residual.segment<3>(0) =
      so3_log(out.c.dR.inverse() * out.R_i_inv * x_j.pose.rotation());
  out.residual.segment<3>(3) = out.y_p - out.c.dp;
  out.residual.segment<3>(6) = out.y_v - out.c.dv;
  out.residual.segment<6>(9) = x_j.bias.vector() - x_i.bias.vector();
  return out;
}

}  // namespace

Vec15 eval_imu_residual(const NavState& x_i, const NavState& x_j,
                        const GravityVar& gravity,
                        const PreintegratedImu& pim) {
  return imu_core(x_i, x_j, gravity, pim).residual;
}

ImuEval eval_imu(const NavState& x_i, const NavState& x_j,
                 const GravityVar& gravity, const PreintegratedImu& pim) {
  const ImuCore core = imu_core(x_i, x_j, gravity, pim);
  const double dt = pim.deltaT();
  const Rot3& R_j = x_j.pose.rotation();
  const Mat3 D = core.R_i_inv.matrix();

  ImuEval out;
  out.residual = core.residual;
  const Vec3 e_R = core.residual.segment<3>(0);

  const Mat3 Jr_inv_e = so3_right_jacobian_inverse(e_R);
  const Mat3 R_ji = (R_j.inverse() * x_i.pose.rotation()).matrix();
  const Mat3 E_R = so3_exp(e_R).matrix();
  const Mat3 Jr_b = so3_right_jacobian(pim.dRdbg() * core.dbg);

  out.J_i.setZero();
  out.J_j.setZero();
  out.J_gravity.setZero();

  // rotation rows
  out.J_i.block<3, 3>(0, 0) = -Jr_inv_e * R_ji;
  out.J_i.block<3, 3>(0, 12) = -Jr_inv_e * E_R.transpose() * Jr_b * pim.dRdbg();
  out.J_j.block<3, 3>(0, 0) = Jr_inv_e;

  // position rows
  out.J_i.block<3, 3>(3, 0) = skew(core.y_p);
  out.J_i.block<3, 3>(3, 3) = -Mat3::Identity();
  out.J_i.block<3, 3>(3, 6) = -D * dt;
  out.J_i.block<3, 3>(3, 9) = -pim.dPdba();
  out.J_i.block<3, 3>(3, 12) = -pim.dPdbg();
  out.J_j.block<3, 3>(3, 3) = R_ji.transpose();

  // velocity rows
  out.J_i.block<3, 3>(6, 0) = skew(core.y_v);
  out.J_i.block<3, 3>(6, 6) = -D;
  out.J_i.block<3, 3>(6, 9) = -pim.dVdba();
  out.J_i.block<3, 3>(6, 12) = -pim.dVdbg();
  out.J_j.block<3, 3>(6, 6) = D;

  // bias rows
  out.J_i.block<6, 6>(9, 9) = -Eigen::Matrix<double, 6, 6>::Identity();
  out.J_j.block<6, 6>(9, 9) = Eigen::Matrix<double, 6, 6>::Identity();

  // gravity (S^2 tangent at the current direction)
  const Eigen::Matrix<double, 3, 2> B = gravity.dir.basis();
  out.J_gravity.block<3, 2>(3, 0) = -0.5 * dt * dt * gravity.magnitude * D * B;
  out.J_gravity.block<3, 2>(6, 0) = -dt * gravity.magnitude * D * B;

  // covariance: permute preintegration blocks (R,v,p) -> (R,p,v)
  const Mat9& S = pim.covariance();
  out.cov.setZero();
  out.cov.block<3, 3>(0, 0) = S.block<3, 3>(0, 0);
  out.cov.block<3, 3>(0, 3) = S.block<3, 3>(0, 6);
  out.cov.block<3, 3>(0, 6) = S.block<3, 3>(0, 3);
  out.cov.block<3, 3>(3, 0) = S.block<3, 3>(6, 0);
  out.cov.block<3, 3>(3, 3) = S.block<3, 3>(6, 6);
  out.cov.block<3, 3>(3, 6) = S.block<3, 3>(6, 3);
  out.cov.block<3, 3>(6, 0) = S.block<3, 3>(3, 0);
  out.cov.block<3, 3>(6, 3) = S.block<3, 3>(3, 6);
  out.cov.block<3, 3>(6, 6) = S.block<3, 3>(3, 3);
  const ImuNoiseParams& n = pim.noise();
  out.cov.block<3, 3>(9, 9) =
      n.accel_bias_rw_density * n.accel_bias_rw_density * dt * Mat3::Identity();
  out.cov.block<3, 3>(12, 12) =
      n.gyro_bias_rw_density * n.gyro_bias_rw_density * dt * Mat3::Identity();
  return out;
}

// ---------------------------------------------------------------------------
// Radar
// ---------------------------------------------------------------------------

double radar_point_residual(const Vec3& v_R, const UnitVec3& mu, double v_r) {
  return -mu.vector().dot(v_R) - v_r;
}

Vec3 radar_ego_velocity(const Rot3& R_WI, const Vec3& v_WI, const Vec3& b_g,
                        const Vec3& omega, const Extrinsics& ext) {
  const Rot3 R_RI = ext.T_IR.rotation().inverse();
  const Vec3& p_IR = ext.T_IR.translation();
  return R_RI * (R_WI.inverse() * v_WI + (omega - b_g).cross(p_IR));
}

RadarResidual eval_radar_baseline_residual(const NavState& x,
                                           const RadarScan& scan,
                                           const Extrinsics& ext,
                                           double sigma_r) {
  const int n = static_cast<int>(scan.points.size());
  RadarResidual out;
  out.residual.resize(n);
  out.sigma = Eigen::VectorXd::Constant(n, sigma_r);
  if (n == 0) return out;
  const Vec3 v_R = radar_ego_velocity(x.pose.rotation(), x.velocity,
                                      x.bias.gyro, scan.gyro, ext);
  for (int j = 0; j < n; ++j) {
    out.residual[j] =
        -scan.points[j].bearing.vector().dot(v_R) - scan.points[j].radial_speed;
  }
  return out;
}

RadarEval eval_radar_baseline(const NavState& x, const RadarScan& scan,
                              const Extrinsics& ext, double sigma_r) {
  const int n = static_cast<int>(scan.points.size());
  RadarEval out;
  out.residual.resize(n);
  out.J_x.setZero(n, 15);
  out.J_gravity.setZero(n, 2);
  out.sigma = Eigen::VectorXd::Constant(n, sigma_r);
  if (n == 0) return out;

  const Mat3 R_RI = ext.T_IR.rotation().inverse().matrix();
  const Vec3& p_IR = ext.T_IR.translation();
  const Vec3 body_vel = x.pose.rotation().inverse() * x.velocity;
  const Vec3 v_R = R_RI * (body_vel + (scan.gyro - x.bias.gyro).cross(p_IR));

  const Mat3 dq_dtheta = skew(body_vel);
  const Mat3 dq_dv = x.pose.rotation().inverse().matrix();
  const Mat3 dq_dbg = skew(p_IR);

  for (int j = 0; j < n; ++j) {
    const Vec3& mu = scan.points[j].bearing.vector();
    out.residual[j] = -mu.dot(v_R) - scan.points[j].radial_speed;
    const Eigen::RowVector3d m = -mu.transpose() * R_RI;
    out.J_x.block<1, 3>(j, 0) = m * dq_dtheta;
    out.J_x.block<1, 3>(j, 6) = m * dq_dv;
    out.J_x.block<1, 3>(j, 12) = m * dq_dbg;
  }
  return out;
}

namespace {

struct RadarPreintCore {
  Rot3 R_hat;
  Vec3 v_hat;
  Vec3 body_vel;  // IMU velocity at t_ir in the propagated body frame
  Vec3 v_R;
  Mat3 R_RI;
  Mat3 dRc_t;  // corrected delta rotation, transposed
};

RadarPreintCore radar_preint_core(const NavState& x_i, const GravityVar& gravity,
                                  const PreintegratedImu& pim,
                                  const RadarScan& scan, const Extrinsics& ext) {
  RadarPreintCore core;
  const double dt = pim.deltaT();
  const Rot3& R_i = x_i.pose.rotation();
  const PreintegratedImu::Corrected c = pim.biasCorrected(x_i.bias);

  core.R_hat = R_i * c.dR;
  core.v_hat = x_i.velocity + gravity.vector() * dt + R_i * c.dv;
  core.body_vel = core.R_hat.inverse() * core.v_hat;
  core.R_RI = ext.T_IR.rotation().inverse().matrix();
  core.dRc_t = c.dR.inverse().matrix();
  core.v_R =
      core.R_RI * (core.body_vel +
                   (scan.gyro - x_i.bias.gyro).cross(ext.T_IR.translation()));
  return core;
}

/// Per-row sigma: radar variance plus the preintegration noise (rotation and
/// velocity blocks) propagated through the row.
double preint_row_sigma(const RadarPreintCore& core,
                        const Eigen::Matrix<double, 6, 6>& S6,
                        const Mat3& dq_dthn, const Vec3& mu, double sigma_r) {
  const Eigen::RowVector3d m = -mu.transpose() * core.R_RI;
  Eigen::Matrix<double, 1, 6> a;
  a << m * dq_dthn, m * core.dRc_t;
  return std::sqrt(sigma_r * sigma_r + (a * S6 * a.transpose())(0, 0));
}

}  // namespace

RadarResidual eval_radar_preintegrated_residual(
    const NavState& x_i, const GravityVar& gravity,
    const PreintegratedImu& pim_ir, const RadarScan& scan,
    const Extrinsics& ext, double sigma_r) {
  const int n = static_cast<int>(scan.points.size());
  RadarResidual out;
  out.residual.resize(n);
  out.sigma.resize(n);
  if (n == 0) return out;

  const RadarPreintCore core = radar_preint_core(x_i, gravity, pim_ir, scan, ext);
  const Eigen::Matrix<double, 6, 6> S6 =
      pim_ir.covariance().topLeftCorner<6, 6>();
  const Mat3 dq_dthn = skew(core.body_vel);
  for (int j = 0; j < n; ++j) {
    const Vec3& mu = scan.points[j].bearing.vector();
    out.residual[j] = -mu.dot(core.v_R) - scan.points[j].radial_speed;
    out.sigma[j] = preint_row_sigma(core, S6, dq_dthn, mu, sigma_r);
  }
  return out;
}

RadarEval eval_radar_preintegrated(const NavState& x_i,
                                   const GravityVar& gravity,
                                   const PreintegratedImu& pim_ir,
                                   const RadarScan& scan,
                                   const Extrinsics& ext, double sigma_r) {
  const int n = static_cast<int>(scan.points.size());
  RadarEval out;
  out.residual.resize(n);
  out.J_x.setZero(n, 15);
  out.J_gravity.setZero(n, 2);
  out.sigma.resize(n);
  if (n == 0) return out;

  const RadarPreintCore core = radar_preint_core(x_i, gravity, pim_ir, scan, ext);
  const double dt = pim_ir.deltaT();
  const Rot3& R_i = x_i.pose.rotation();
  const Vec3 dbg = x_i.bias.gyro - pim_ir.biasLin().gyro;
  const PreintegratedImu::Corrected c = pim_ir.biasCorrected(x_i.bias);
  const Mat3 Jr_b = so3_right_jacobian(pim_ir.dRdbg() * dbg);
  const Vec3& p_IR = ext.T_IR.translation();

  const Mat3 dq_dtheta =
      core.dRc_t * (skew(R_i.inverse() * core.v_hat) - skew(c.dv));
  const Mat3 dq_dv = core.R_hat.inverse().matrix();
  const Mat3 dq_dba = core.dRc_t * pim_ir.dVdba();
  const Mat3 dq_dbg = skew(core.body_vel) * Jr_b * pim_ir.dRdbg() +
                      core.dRc_t * pim_ir.dVdbg() + skew(p_IR);
  const Eigen::Matrix<double, 3, 2> dq_dgrav =
      dq_dv * (gravity.magnitude * dt) * gravity.dir.basis();

  const Eigen::Matrix<double, 6, 6> S6 =
      pim_ir.covariance().topLeftCorner<6, 6>();
  const Mat3 dq_dthn = skew(core.body_vel);

  for (int j = 0; j < n; ++j) {
    const Vec3& mu = scan.points[j].bearing.vector();
    out.residual[j] = -mu.dot(core.v_R) - scan.points[j].radial_speed;
    const Eigen::RowVector3d m = -mu.transpose() * core.R_RI;
    out.J_x.block<1, 3>(j, 0) = m * dq_dtheta;
    out.J_x.block<1, 3>(j, 6) = m * dq_dv;
    out.J_x.block<1, 3>(j, 9) = m * dq_dba;
    out.J_x.block<1, 3>(j, 12) = m * dq_dbg;
    out.J_gravity.row(j) = m * dq_dgrav;
    out.sigma[j] = preint_row_sigma(core, S6, dq_dthn, mu, sigma_r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prior
// ---------------------------------------------------------------------------

Vec17 eval_prior_residual(const NavState& x, const GravityVar& gravity,
                          const PriorFactor& prior) {
  Vec17 r;
  r.segment<6>(0) = se3_log(prior.state_lin.pose.inverse() * x.pose);
  r.segment<3>(6) = x.velocity - prior.state_lin.velocity;
  r.segment<6>(9) = x.bias.vector() - prior.state_lin.bias.vector();
  r.segment<2>(15) = s2_ominus(gravity.dir, prior.gravity_lin);
  return r;
}

PriorEval eval_prior(const NavState& x, const GravityVar& gravity,
                     const PriorFactor& prior) {
  PriorEval out;
  out.J_x.setZero();
  out.J_gravity.setZero();
  out.residual = eval_prior_residual(x, gravity, prior);
  out.J_x.block<6, 6>(0, 0) =
      se3_right_jacobian_inverse(out.residual.segment<6>(0));
  out.J_x.block<9, 9>(6, 6) = Eigen::Matrix<double, 9, 9>::Identity();
  out.J_gravity.block<2, 2>(15, 0) =
      s2_ominus_jacobian_a(gravity.dir, prior.gravity_lin) * gravity.dir.basis();
  return out;
}

}  // namespace rlio
