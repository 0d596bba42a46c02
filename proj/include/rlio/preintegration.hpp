#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rlio/types.hpp"

namespace rlio {

using Mat9 = Eigen::Matrix<double, 9, 9>;

/// Summary of IMU samples between two timestamps: relative rotation,
/// velocity and position deltas with covariance and first-order bias
/// Jacobians, linearized at the bias estimate given at construction.
///
/// The covariance is over the (delta-rotation, delta-velocity,
/// delta-position) tangent, in that block order. Bias random walk is not
/// part of it; the IMU factor whitens its bias rows separately.
class PreintegratedImu {
 public:
  PreintegratedImu() = default;
  PreintegratedImu(const ImuBias& bias_lin, const ImuNoiseParams& noise)
      : bias_lin_(bias_lin), noise_(noise) {}

  /// Advance by one sample held constant over dt (zero-order hold, with the
  /// acceleration rotated to the half-step attitude). Throws on dt <= 0.
  void integrate(const ImuSample& sample, double dt);

  struct Corrected {
    Rot3 dR;
    Vec3 dv;
    Vec3 dp;
  };

  /// First-order bias correction of the deltas (no re-integration).
  Corrected biasCorrected(const ImuBias& b) const;

  /// Propagated attitude and velocity at the end of the interval, starting
  /// from state_i. `gravity` is the world gravity vector (g * direction).
  std::pair<Rot3, Vec3> predictAttitudeVelocity(const NavState& state_i,
                                                const Vec3& gravity) const;

  /// Full state propagation (attitude, velocity and position); bias carried
  /// over unchanged.
  NavState predictState(const NavState& state_i, const Vec3& gravity) const;

  const Rot3& deltaR() const { return delta_R_; }
  const Vec3& deltaV() const { return delta_v_; }
  const Vec3& deltaP() const { return delta_p_; }
  double deltaT() const { return delta_t_; }
  const Mat9& covariance() const { return cov_; }
  const Mat3& dRdbg() const { return dR_dbg_; }
  const Mat3& dVdba() const { return dV_dba_; }
  const Mat3& dVdbg() const { return dV_dbg_; }
  const Mat3& dPdba() const { return dP_dba_; }
  const Mat3& dPdbg() const { return dP_dbg_; }
  const ImuBias& biasLin() const { return bias_lin_; }
  const ImuNoiseParams& noise() const { return noise_; }

 private:
  ImuBias bias_lin_;
  ImuNoiseParams noise_;

  Rot3 delta_R_;
  Vec3 delta_v_ = Vec3::Zero();
  Vec3 delta_p_ = Vec3::Zero();
  double delta_t_ = 0.0;
  Mat9 cov_ = Mat9::Zero();

  Mat3 dR_dbg_ = Mat3::Zero();
  Mat3 dV_dba_ = Mat3::Zero();
  Mat3 dV_dbg_ = Mat3::Zero();
  Mat3 dP_dba_ = Mat3::Zero();
  Mat3 dP_dbg_ = Mat3::Zero();
};

/// Time-ordered IMU sample store with zero-order-hold integration over
/// arbitrary intervals. A sample is valid from its timestamp until the next
/// one; the last sample is held indefinitely, the first extends backwards.
class ImuBuffer {
 public:
  /// Throws if the timestamp does not strictly increase.
  void push(const ImuSample& sample);

  /// Integrate the interval [t0, t1]; node timestamps falling between
  /// samples split the straddling sample proportionally, so the summed dt
  /// is exact. Throws if t1 < t0 or the buffer is empty.
  PreintegratedImu integrate(int64_t t0_ns, int64_t t1_ns, const ImuBias& bias,
                             const ImuNoiseParams& noise) const;

  /// Gyro measurement at time t: the exact or nearest sample within 10 ms
  /// if one exists, otherwise linear interpolation of the straddling pair.
  Vec3 gyroAt(int64_t t_ns) const;

  bool empty() const { return samples_.empty(); }
  size_t size() const { return samples_.size(); }
  const std::vector<ImuSample>& samples() const { return samples_; }
  int64_t firstTime() const { return samples_.front().t_ns; }
  int64_t lastTime() const { return samples_.back().t_ns; }

  /// Drop samples older than t_ns, keeping one sample at or before it so
  /// integration starting at t_ns stays well-defined.
  void trimBefore(int64_t t_ns);

 private:
  std::vector<ImuSample> samples_;
};

}  // namespace rlio
