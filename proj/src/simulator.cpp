#include "rlio/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "rlio/preintegration.hpp"

namespace rlio {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double eval_terms(const std::vector<SinusoidTerm>& terms, double t, int deriv) {
  double out = 0.0;
  for (const auto& s : terms) {
    const double w = kTwoPi * s.freq_hz;
    const double arg = w * t + s.phase;
    switch (deriv) {
      case 0: out += s.amp * std::sin(arg); break;
      case 1: out += s.amp * w * std::cos(arg); break;
      default: out += -s.amp * w * w * std::sin(arg); break;
    }
  }
  return out;
}

std::mt19937_64 seeded_engine(uint64_t seed, uint64_t stream_tag) {
  std::seed_seq seq{seed, stream_tag};
  return std::mt19937_64(seq);
}

}  // namespace

GroundTruth sample_ground_truth(const TrajectoryModel& model, double t) {
  if (t < 0.0 || t > model.duration_s + 1e-12) {
    throw std::out_of_range("sample_ground_truth: t outside trajectory span");
  }
  Vec3 p, v, a, e, edot;
  for (int k = 0; k < 3; ++k) {
    p[k] = eval_terms(model.position[k], t, 0);
    v[k] = eval_terms(model.position[k], t, 1);
    a[k] = eval_terms(model.position[k], t, 2);
    e[k] = eval_terms(model.euler[k], t, 0);
    edot[k] = eval_terms(model.euler[k], t, 1);
  }
  const double roll = e[0], pitch = e[1], yaw = e[2];
  const Rot3 R = so3_exp(Vec3(0, 0, yaw)) * so3_exp(Vec3(0, pitch, 0)) *
                 so3_exp(Vec3(roll, 0, 0));

  // body rates from ZYX Euler angle rates
  const double cr = std::cos(roll), sr = std::sin(roll);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  Vec3 omega;
  omega.x() = edot[0] - edot[2] * sp;
  omega.y() = edot[1] * cr + edot[2] * cp * sr;
  omega.z() = -edot[1] * sr + edot[2] * cp * cr;

  GroundTruth gt;
  gt.pose = Pose3(R, p);
  gt.velocity = v;
  gt.acceleration = a;
  gt.angular_velocity = omega;
  return gt;
}

TrajectoryModel make_hall_trajectory(double duration_s) {
  // zero acceleration and zero body rates at t = 0 keep the first-seconds
  // gravity estimate from IMU means accurate
  TrajectoryModel m;
  m.duration_s = duration_s;
  m.position[0] = {{1.2, 0.10, 0.0}, {0.3, 0.23, 0.0}};
  m.position[1] = {{0.9, 0.13, 0.0}, {0.25, 0.19, 0.0}};
  m.position[2] = {{0.35, 0.17, 0.0}};
  m.euler[0] = {{0.12, 0.11, 0.5 * M_PI}};
  m.euler[1] = {{0.10, 0.14, 0.5 * M_PI}};
  m.euler[2] = {{0.50, 0.08, 0.5 * M_PI}};
  return m;
}

TrajectoryModel make_tunnel_trajectory(double duration_s, double half_length) {
  TrajectoryModel m;
  m.duration_s = duration_s;
  const double f = 1.0 / duration_s;
  // x(t) = L sin^2(pi t / T) + (L/5) sin(2 pi t / T): out and back with
  // asymmetric legs (the turnaround falls past mid-run)
  m.position[0] = {{0.5 * half_length, 0.0, 0.5 * M_PI},
                   {0.5 * half_length, f, -0.5 * M_PI},
                   {0.2 * half_length, f, 0.0}};
  m.position[1] = {{0.2, 0.15, 0.8}};
  m.position[2] = {{0.1, 0.11, 0.3}};
  m.euler[0] = {{0.01, 0.12, 0.0}};
  m.euler[1] = {{0.008, 0.09, 1.1}};
  // yaw = pi sin^(2k)(pi t / T): straight legs with the turn sharply
  // localized at the far end, via the even-power harmonic expansion
  //   sin^(2k) = C(2k,k)/4^k + (2/4^k) sum_j (-1)^j C(2k,k-j) cos(2j pi t/T)
  {
    constexpr int k = 16;
    double binom = 1.0;  // C(2k, k)
    for (int i = 1; i <= k; ++i) binom *= static_cast<double>(k + i) / i;
    const double scale = M_PI / std::pow(4.0, k);
    std::vector<SinusoidTerm> yaw;
    yaw.push_back({scale * binom, 0.0, 0.5 * M_PI});
    double c = binom;  // C(2k, k-j), updated incrementally
    for (int j = 1; j <= k; ++j) {
      c *= static_cast<double>(k - j + 1) / (k + j);
      const double sign = (j % 2 == 0) ? 1.0 : -1.0;
      yaw.push_back({2.0 * scale * c, j * f, sign * 0.5 * M_PI});
    }
    m.euler[2] = yaw;
  }
  return m;
}

std::vector<ImuSample> synth_imu(const TrajectoryModel& model,
                                 const SensorRig& rig, uint64_t seed) {
  auto eng = seeded_engine(seed, 0xA11CE5);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double dt = 1.0 / rig.imu_rate_hz;
  const double sqrt_rate = std::sqrt(rig.imu_rate_hz);
  const double sqrt_dt = std::sqrt(dt);
  const Vec3 g_W(0.0, 0.0, -rig.gravity_mag);

  ImuBias bias;
  if (rig.noise_enabled) {
    bias.accel = rig.init_bias_accel;
    bias.gyro = rig.init_bias_gyro;
    for (int k = 0; k < 3; ++k) {
      bias.accel[k] += rig.init_bias_accel_sigma * gauss(eng);
      bias.gyro[k] += rig.init_bias_gyro_sigma * gauss(eng);
    }
  }

  std::vector<ImuSample> out;
  for (double t = 0.0; t < model.duration_s - 1e-9; t += dt) {
    const GroundTruth gt = sample_ground_truth(model, t);
    ImuSample s;
    s.t_ns = to_nanoseconds(t);
    s.accel = gt.pose.rotation().inverse() * (gt.acceleration - g_W) + bias.accel;
    s.gyro = gt.angular_velocity + bias.gyro;
    if (rig.noise_enabled) {
      for (int k = 0; k < 3; ++k) {
        s.accel[k] += rig.imu_noise.accel_noise_density * sqrt_rate * gauss(eng);
        s.gyro[k] += rig.imu_noise.gyro_noise_density * sqrt_rate * gauss(eng);
        bias.accel[k] += rig.imu_noise.accel_bias_rw_density * sqrt_dt * gauss(eng);
        bias.gyro[k] += rig.imu_noise.gyro_bias_rw_density * sqrt_dt * gauss(eng);
      }
    }
    out.push_back(s);
  }
  return out;
}

std::vector<LidarPoseMeasurement> synth_lidar(const TrajectoryModel& model,
                                              const SensorRig& rig,
                                              const DegeneracyProfile& profile,
                                              uint64_t seed) {
  auto eng = seeded_engine(seed, 0x71DA2);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<LidarPoseMeasurement> out;
  for (double t = 0.0; t < model.duration_s - 1e-9; t += 1.0 / rig.lidar_rate_hz) {
    const GroundTruth gt = sample_ground_truth(model, t);

    Mat6 cov = Mat6::Zero();
    cov.topLeftCorner<3, 3>() =
        rig.lidar_sigma_rot * rig.lidar_sigma_rot * Mat3::Identity();
    Mat3 trans_cov =
        rig.lidar_sigma_pos * rig.lidar_sigma_pos * Mat3::Identity();
    if (profile.tunnel && profile.inflation > 1.0) {
      // degenerate world axis expressed in the measurement tangent frame
      const Vec3 axis_body =
          gt.pose.rotation().inverse() * profile.axis.vector();
      trans_cov += rig.lidar_sigma_pos * rig.lidar_sigma_pos *
                   (profile.inflation - 1.0) * axis_body * axis_body.transpose();
    }
    cov.bottomRightCorner<3, 3>() = trans_cov;

    Vec6 xi = Vec6::Zero();
    if (rig.noise_enabled) {
      Vec6 z;
      for (int k = 0; k < 6; ++k) z[k] = gauss(eng);
      xi = Eigen::LLT<Mat6>(cov).matrixL() * z;
    }

    LidarPoseMeasurement m;
    m.t_ns = to_nanoseconds(t);
    m.T_WL = gt.pose * se3_exp(xi) * rig.extrinsics.T_IL;
    m.cov = cov;
    out.push_back(m);
  }
  return out;
}

std::vector<RadarScan> synth_radar(const TrajectoryModel& model,
                                   const SensorRig& rig, uint64_t seed,
                                   const std::vector<ImuSample>& imu_stream) {
  if (rig.radar_points < 1) {
    throw std::invalid_argument("synth_radar: need at least one point per scan");
  }
  auto eng = seeded_engine(seed, 0x44DA2);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  ImuBuffer buf;
  for (const auto& s : imu_stream) buf.push(s);

  const double cos_fov = std::cos(rig.radar_fov_deg * M_PI / 180.0);
  const Rot3 R_RI = rig.extrinsics.T_IR.rotation().inverse();
  const Vec3& p_IR = rig.extrinsics.T_IR.translation();

  std::vector<RadarScan> out;
  for (double t = rig.radar_offset_s; t < model.duration_s - 1e-9;
       t += 1.0 / rig.radar_rate_hz) {
    const GroundTruth gt = sample_ground_truth(model, t);
    const Vec3 v_R =
        R_RI * (gt.pose.rotation().inverse() * gt.velocity +
                gt.angular_velocity.cross(p_IR));

    RadarScan scan;
    scan.t_ns = to_nanoseconds(t);
    scan.gyro = buf.gyroAt(scan.t_ns);
    for (int i = 0; i < rig.radar_points; ++i) {
      const double c = cos_fov + (1.0 - cos_fov) * uni(eng);
      const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
      const double az = kTwoPi * uni(eng);
      const UnitVec3 mu(Vec3(c, s * std::cos(az), s * std::sin(az)));

      double speed = -mu.vector().dot(v_R);
      if (rig.noise_enabled) {
        if (uni(eng) < rig.radar_outlier_frac) {
          speed = rig.radar_outlier_vmax * (2.0 * uni(eng) - 1.0);
        } else {
          speed += rig.sigma_r * gauss(eng);
        }
      }
      scan.points.push_back(RadarPoint{mu, speed});
    }
    out.push_back(scan);
  }
  return out;
}

void save_streams(const std::string& path, const SensorStreams& streams) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_streams: cannot open " + path);
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };

  size_t ii = 0, il = 0, ir = 0;
  auto next_time = [&]() {
    int64_t t = INT64_MAX;
    int kind = -1;
    if (ii < streams.imu.size() && streams.imu[ii].t_ns < t) {
      t = streams.imu[ii].t_ns;
      kind = 0;
    }
    if (il < streams.lidar.size() && streams.lidar[il].t_ns < t) {
      t = streams.lidar[il].t_ns;
      kind = 1;
    }
    if (ir < streams.radar.size() && streams.radar[ir].t_ns < t) {
      t = streams.radar[ir].t_ns;
      kind = 2;
    }
    return kind;
  };

  for (int kind = next_time(); kind >= 0; kind = next_time()) {
    if (kind == 0) {
      const ImuSample& s = streams.imu[ii++];
      f << "IMU " << s.t_ns;
      for (int k = 0; k < 3; ++k) f << ' ' << num(s.accel[k]);
      for (int k = 0; k < 3; ++k) f << ' ' << num(s.gyro[k]);
      f << '\n';
    } else if (kind == 1) {
      const LidarPoseMeasurement& m = streams.lidar[il++];
      const Eigen::Quaterniond& q = m.T_WL.rotation().quaternion();
      f << "LIDAR " << m.t_ns;
      for (int k = 0; k < 3; ++k) f << ' ' << num(m.T_WL.translation()[k]);
      f << ' ' << num(q.x()) << ' ' << num(q.y()) << ' ' << num(q.z()) << ' '
        << num(q.w());
      for (int r = 0; r < 6; ++r) {
        for (int c = r; c < 6; ++c) f << ' ' << num(m.cov(r, c));
      }
      f << '\n';
    } else {
      const RadarScan& s = streams.radar[ir++];
      f << "RADAR " << s.t_ns;
      for (int k = 0; k < 3; ++k) f << ' ' << num(s.gyro[k]);
      f << ' ' << s.points.size();
      for (const auto& p : s.points) {
        for (int k = 0; k < 3; ++k) f << ' ' << num(p.bearing.vector()[k]);
        f << ' ' << num(p.radial_speed);
      }
      f << '\n';
    }
  }
}

SensorStreams load_streams(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_streams: cannot open " + path);
  SensorStreams out;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    auto fail = [&]() {
      throw std::runtime_error("load_streams: parse error at line " +
                               std::to_string(line_no));
    };
    if (tag == "IMU") {
      ImuSample s;
      ss >> s.t_ns;
      for (int k = 0; k < 3; ++k) ss >> s.accel[k];
      for (int k = 0; k < 3; ++k) ss >> s.gyro[k];
      if (!ss) fail();
      out.imu.push_back(s);
    } else if (tag == "LIDAR") {
      LidarPoseMeasurement m;
      Vec3 p;
      double qx, qy, qz, qw;
      ss >> m.t_ns >> p[0] >> p[1] >> p[2] >> qx >> qy >> qz >> qw;
      Mat6 cov;
      for (int r = 0; r < 6; ++r) {
        for (int c = r; c < 6; ++c) {
          ss >> cov(r, c);
          cov(c, r) = cov(r, c);
        }
      }
      if (!ss) fail();
      m.T_WL = Pose3(Rot3(Eigen::Quaterniond(qw, qx, qy, qz)), p);
      m.cov = cov;
      out.lidar.push_back(m);
    } else if (tag == "RADAR") {
      RadarScan s;
      size_t n = 0;
      ss >> s.t_ns >> s.gyro[0] >> s.gyro[1] >> s.gyro[2] >> n;
      for (size_t i = 0; i < n; ++i) {
        Vec3 mu;
        double v;
        ss >> mu[0] >> mu[1] >> mu[2] >> v;
        s.points.push_back(RadarPoint{UnitVec3(mu), v});
      }
      if (!ss) fail();
      out.radar.push_back(s);
    } else {
      fail();
    }
  }
  return out;
}

}  // namespace rlio
