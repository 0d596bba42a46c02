#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rlio/types.hpp"

namespace rlio {

/// One term of a sum-of-sinusoids signal: amp * sin(2*pi*freq*t + phase).
/// A zero-frequency term contributes the constant amp * sin(phase).
struct SinusoidTerm {
  double amp = 0.0;
  double freq_hz = 0.0;
  double phase = 0.0;
};

/// Analytic ground-truth trajectory: per-axis position sinusoids and
/// roll/pitch/yaw sinusoids (ZYX convention), twice differentiable with
/// closed-form derivatives.
struct TrajectoryModel {
  std::array<std::vector<SinusoidTerm>, 3> position;
  std::array<std::vector<SinusoidTerm>, 3> euler;  // roll, pitch, yaw
  double duration_s = 60.0;
};

struct GroundTruth {
  Pose3 pose;            // IMU in world
  Vec3 velocity;         // world frame
  Vec3 acceleration;     // world frame
  Vec3 angular_velocity; // body frame
};

/// Exact analytic evaluation; throws if t is outside [0, duration].
GroundTruth sample_ground_truth(const TrajectoryModel& model, double t);

/// Feature-rich indoor preset: bounded sinusoidal translation and attitude.
TrajectoryModel make_hall_trajectory(double duration_s);

/// Out-and-back corridor along +x with a turn at the far end; total path
/// length ~2*half_length.
TrajectoryModel make_tunnel_trajectory(double duration_s, double half_length);

/// LiDAR covariance degeneracy: inflates the translational variance along a
/// world axis (tunnel behavior).
struct DegeneracyProfile {
  bool tunnel = false;
  UnitVec3 axis{Vec3(1.0, 0.0, 0.0)};
  double inflation = 1.0;  // >= 1, applied to the variance
};

/// Default mounting: sensors near the IMU with small lever arms.
inline Extrinsics default_rig_extrinsics() {
  Extrinsics ext;
  ext.T_IL = Pose3(Rot3::identity(), Vec3(0.1, 0.0, 0.05));
  ext.T_IR = Pose3(Rot3::identity(), Vec3(0.15, 0.05, -0.02));
  return ext;
}

struct SensorRig {
  double imu_rate_hz = 200.0;
  double lidar_rate_hz = 10.0;
  double radar_rate_hz = 10.0;
  double radar_offset_s = 0.05;  // phase offset vs LiDAR, in [0, 1/lidar_rate)
  Extrinsics extrinsics = default_rig_extrinsics();
  ImuNoiseParams imu_noise;
  Vec3 init_bias_accel = Vec3::Zero();  // fixed turn-on bias, m/s^2
  Vec3 init_bias_gyro = Vec3::Zero();   // rad/s
  double init_bias_accel_sigma = 0.02;  // random part, m/s^2
  double init_bias_gyro_sigma = 0.002;  // rad/s
  double lidar_sigma_rot = 0.0035;      // rad, per axis
  double lidar_sigma_pos = 0.01;        // m, per axis
  double sigma_r = 0.15;                // m/s
  int radar_points = 20;
  double radar_outlier_frac = 0.05;
  double radar_outlier_vmax = 5.0;  // m/s
  double radar_fov_deg = 60.0;      // cone half-angle around radar +x
  double gravity_mag = 9.81;
  bool noise_enabled = true;
};

std::vector<ImuSample> synth_imu(const TrajectoryModel& model,
                                 const SensorRig& rig, uint64_t seed);

std::vector<LidarPoseMeasurement> synth_lidar(const TrajectoryModel& model,
                                              const SensorRig& rig,
                                              const DegeneracyProfile& profile,
                                              uint64_t seed);

/// Radar scans with per-point bearings and Doppler speeds; the gyro sample
/// at each scan time is looked up in the provided IMU stream.
std::vector<RadarScan> synth_radar(const TrajectoryModel& model,
                                   const SensorRig& rig, uint64_t seed,
                                   const std::vector<ImuSample>& imu_stream);

struct SensorStreams {
  std::vector<ImuSample> imu;
  std::vector<LidarPoseMeasurement> lidar;
  std::vector<RadarScan> radar;
};

/// Line-based text persistence, one record per line:
///   IMU <t_ns> ax ay az wx wy wz
///   LIDAR <t_ns> x y z qx qy qz qw <21 upper-triangular covariance entries>
///   RADAR <t_ns> wx wy wz <N> mu1x mu1y mu1z v1 ...
void save_streams(const std::string& path, const SensorStreams& streams);
SensorStreams load_streams(const std::string& path);

}  // namespace rlio
