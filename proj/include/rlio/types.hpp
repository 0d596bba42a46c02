#pragma once

#include <cstdint>
#include <vector>

#include "rlio/manifold.hpp"

namespace rlio {

using Vec15 = Eigen::Matrix<double, 15, 1>;

/// One IMU sample: specific force and body rates in the IMU frame.
struct ImuSample {
  int64_t t_ns = 0;
  Vec3 accel = Vec3::Zero();  // m/s^2
  Vec3 gyro = Vec3::Zero();   // rad/s
};

struct ImuBias {
  Vec3 accel = Vec3::Zero();  // m/s^2
  Vec3 gyro = Vec3::Zero();   // rad/s

  Vec6 vector() const {
    Vec6 v;
    v << accel, gyro;
    return v;
  }
  ImuBias operator+(const Vec6& d) const {
    return ImuBias{accel + d.head<3>(), gyro + d.tail<3>()};
  }
};

/// Continuous-time noise densities (per sqrt(Hz)).
struct ImuNoiseParams {
  double accel_noise_density = 2e-3;    // m/s^2/sqrt(Hz)
  double gyro_noise_density = 2e-4;     // rad/s/sqrt(Hz)
  double accel_bias_rw_density = 1e-4;  // m/s^3/sqrt(Hz)
  double gyro_bias_rw_density = 1e-5;   // rad/s^2/sqrt(Hz)

  bool valid() const {
    return accel_noise_density > 0.0 && gyro_noise_density > 0.0 &&
           accel_bias_rw_density > 0.0 && gyro_bias_rw_density > 0.0;
  }
};

/// Full state at a graph node: IMU pose in world, world-frame velocity,
/// IMU biases. Tangent ordering: (rot 3, trans 3, vel 3, b_a 3, b_g 3).
struct NavState {
  Pose3 pose;
  Vec3 velocity = Vec3::Zero();
  ImuBias bias;

  NavState retract(const Vec15& d) const {
    NavState out;
    out.pose = pose * se3_exp(d.head<6>());
    out.velocity = velocity + d.segment<3>(6);
    out.bias = bias + d.tail<6>();
    return out;
  }

  bool allFinite() const {
    return pose.translation().allFinite() && velocity.allFinite() &&
           bias.vector().allFinite() &&
           pose.rotation().quaternion().coeffs().allFinite();
  }
};

/// Estimated gravity direction; the magnitude is known a priori.
struct GravityVar {
  UnitVec3 dir{Vec3(0.0, 0.0, -1.0)};
  double magnitude = 9.81;

  Vec3 vector() const { return magnitude * dir.vector(); }
};

/// World-frame LiDAR pose with its (possibly degeneracy-inflated) 6x6
/// covariance in the se3 tangent (rotation, translation) at the measurement.
struct LidarPoseMeasurement {
  int64_t t_ns = 0;
  Pose3 T_WL;
  Mat6 cov = Mat6::Identity();
};

struct RadarPoint {
  UnitVec3 bearing;     // in the radar frame
  double radial_speed;  // m/s, measured Doppler
};

struct RadarScan {
  int64_t t_ns = 0;
  std::vector<RadarPoint> points;
  Vec3 gyro = Vec3::Zero();  // gyro sample at the scan time
};

/// Known sensor extrinsics.
struct Extrinsics {
  Pose3 T_IL;  // LiDAR in IMU frame
  Pose3 T_IR;  // radar in IMU frame (rotation + lever arm)
};

inline double to_seconds(int64_t t_ns) { return 1e-9 * static_cast<double>(t_ns); }
inline int64_t to_nanoseconds(double t_s) {
  return static_cast<int64_t>(std::llround(t_s * 1e9));
}

}  // namespace rlio
