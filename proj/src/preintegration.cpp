#include "rlio/preintegration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rlio {

void PreintegratedImu::integrate(const ImuSample& sample, double dt) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("PreintegratedImu::integrate: dt must be > 0");
  }
  const Vec3 w = sample.gyro - bias_lin_.gyro;
  const Vec3 a = sample.accel - bias_lin_.accel;

  const Vec3 phi = w * dt;
  const Rot3 E = so3_exp(phi);
  const Rot3 H = so3_exp(0.5 * phi);  // half-step attitude
  const Vec3 a_mid = H * a;

  const Mat3 dR = delta_R_.matrix();
  const Mat3 Et = E.matrix().transpose();
  const Mat3 Jr_phi = so3_right_jacobian(phi);
  const Mat3 Jr_half = so3_right_jacobian(0.5 * phi);
  const Mat3 a_mid_hat = skew(a_mid);
  const Mat3 Hm = H.matrix();

  // Error-state transition over (dtheta, dv, dp) and discrete noise input
  // (gyro, accel) with covariance density/dt.
  Mat9 A = Mat9::Identity();
  A.block<3, 3>(0, 0) = Et;
  A.block<3, 3>(3, 0) = -dR * a_mid_hat * dt;
  A.block<3, 3>(6, 0) = -0.5 * dR * a_mid_hat * dt * dt;
  A.block<3, 3>(6, 3) = Mat3::Identity() * dt;

  Eigen::Matrix<double, 9, 6> B = Eigen::Matrix<double, 9, 6>::Zero();
  const Mat3 gyro_to_amid = dR * Hm * skew(a) * Jr_half;
  B.block<3, 3>(0, 0) = Jr_phi * dt;
  B.block<3, 3>(3, 0) = -gyro_to_amid * (0.5 * dt * dt);
  B.block<3, 3>(6, 0) = -gyro_to_amid * (0.25 * dt * dt * dt);
  B.block<3, 3>(3, 3) = dR * Hm * dt;
  B.block<3, 3>(6, 3) = 0.5 * dR * Hm * dt * dt;

  Eigen::Matrix<double, 6, 6> Q = Eigen::Matrix<double, 6, 6>::Zero();
  const double sg2 = noise_.gyro_noise_density * noise_.gyro_noise_density / dt;
  const double sa2 =
      noise_.accel_noise_density * noise_.accel_noise_density / dt;
  Q.topLeftCorner<3, 3>() = sg2 * Mat3::Identity();
  Q.bottomRightCorner<3, 3>() = sa2 * Mat3::Identity();

  cov_ = A * cov_ * A.transpose() + B * Q * B.transpose();

  // Bias Jacobians, first order, using pre-update values on the right.
  const Mat3 dvg_step = -dR * a_mid_hat * dR_dbg_ + gyro_to_amid * (0.5 * dt);
  dP_dba_ += dV_dba_ * dt - 0.5 * dR * Hm * dt * dt;
  dP_dbg_ += dV_dbg_ * dt + 0.5 * dt * dt * dvg_step;
  dV_dba_ += -dR * Hm * dt;
  dV_dbg_ += dvg_step * dt;
  dR_dbg_ = Et * dR_dbg_ - Jr_phi * dt;

  delta_p_ += delta_v_ * dt + 0.5 * dt * dt * (delta_R_ * a_mid);
  delta_v_ += (delta_R_ * a_mid) * dt;
  delta_R_ = delta_R_ * E;
  delta_t_ += dt;
}

PreintegratedImu::Corrected PreintegratedImu::biasCorrected(
    const ImuBias& b) const {
  const Vec3 dba = b.accel - bias_lin_.accel;
  const Vec3 dbg = b.gyro - bias_lin_.gyro;
  Corrected c;
  c.dR = delta_R_ * so3_exp(dR_dbg_ * dbg);
  c.dv = delta_v_ + dV_dba_ * dba + dV_dbg_ * dbg;
  c.dp = delta_p_ + dP_dba_ * dba + dP_dbg_ * dbg;
  return c;
}

std::pair<Rot3, Vec3> PreintegratedImu::predictAttitudeVelocity(
    const NavState& state_i, const Vec3& gravity) const {
  const Corrected c = biasCorrected(state_i.bias);
  const Rot3& R_i = state_i.pose.rotation();
  const Rot3 R = R_i * c.dR;
  const Vec3 v = state_i.velocity + gravity * delta_t_ + R_i * c.dv;
  return {R, v};
}

NavState PreintegratedImu::predictState(const NavState& state_i,
                                        const Vec3& gravity) const {
  const Corrected c = biasCorrected(state_i.bias);
  const Rot3& R_i = state_i.pose.rotation();
  NavState out;
  out.pose = Pose3(R_i * c.dR, state_i.pose.translation() +
                                   state_i.velocity * delta_t_ +
                                   0.5 * gravity * delta_t_ * delta_t_ +
                                   R_i * c.dp);
  out.velocity = state_i.velocity + gravity * delta_t_ + R_i * c.dv;
  out.bias = state_i.bias;
  return out;
}

void ImuBuffer::push(const ImuSample& sample) {
  if (!samples_.empty() && sample.t_ns <= samples_.back().t_ns) {
    throw std::invalid_argument("ImuBuffer::push: timestamps must increase");
  }
  samples_.push_back(sample);
}

PreintegratedImu ImuBuffer::integrate(int64_t t0_ns, int64_t t1_ns,
                                      const ImuBias& bias,
                                      const ImuNoiseParams& noise) const {
  if (samples_.empty()) {
    throw std::runtime_error("ImuBuffer::integrate: empty buffer");
  }
  if (t1_ns < t0_ns) {
    throw std::invalid_argument("ImuBuffer::integrate: t1 < t0");
  }
  PreintegratedImu pim(bias, noise);
  if (t1_ns == t0_ns) return pim;

  // First sample whose hold interval overlaps [t0, t1).
  auto it = std::upper_bound(
      samples_.begin(), samples_.end(), t0_ns,
      [](int64_t t, const ImuSample& s) { return t < s.t_ns; });
  if (it != samples_.begin()) --it;

  int64_t cursor = t0_ns;
  for (; it != samples_.end() && cursor < t1_ns; ++it) {
    const auto next = std::next(it);
    const int64_t hold_end =
        (next == samples_.end()) ? t1_ns : std::min(next->t_ns, t1_ns);
    if (hold_end <= cursor) continue;
    pim.integrate(*it, to_seconds(hold_end - cursor));
    cursor = hold_end;
  }
  return pim;
}

Vec3 ImuBuffer::gyroAt(int64_t t_ns) const {
  if (samples_.empty()) {
    throw std::runtime_error("ImuBuffer::gyroAt: empty buffer");
  }
  constexpr int64_t kNearest = 10'000'000;  // 10 ms
  auto it = std::lower_bound(
      samples_.begin(), samples_.end(), t_ns,
      [](const ImuSample& s, int64_t t) { return s.t_ns < t; });

  const ImuSample* after = (it != samples_.end()) ? &*it : nullptr;
  const ImuSample* before = (it != samples_.begin()) ? &*std::prev(it) : nullptr;
  const int64_t d_after =
      after ? std::llabs(after->t_ns - t_ns) : std::numeric_limits<int64_t>::max();
  const int64_t d_before =
      before ? std::llabs(before->t_ns - t_ns) : std::numeric_limits<int64_t>::max();

  const ImuSample* nearest = (d_before <= d_after) ? before : after;
  const int64_t d_nearest = std::min(d_before, d_after);
  if (d_nearest <= kNearest) return nearest->gyro;

  if (before && after) {
    const double alpha = static_cast<double>(t_ns - before->t_ns) /
                         static_cast<double>(after->t_ns - before->t_ns);
    return (1.0 - alpha) * before->gyro + alpha * after->gyro;
  }
  throw std::out_of_range("ImuBuffer::gyroAt: time outside buffer");
}

void ImuBuffer::trimBefore(int64_t t_ns) {
  auto it = std::lower_bound(
      samples_.begin(), samples_.end(), t_ns,
      [](const ImuSample& s, int64_t t) { return s.t_ns < t; });
  if (it != samples_.begin()) --it;  // keep the sample holding over t_ns
  samples_.erase(samples_.begin(), it);
}

}  // namespace rlio
