#include "rlio/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rlio {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
  throw std::runtime_error("config: key '" + key + "': " + why);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (trim(v.substr(used)).empty() && std::isfinite(d)) return d;
  } catch (...) {
  }
  bad_key(key, "expected a number, got '" + v + "'");
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const unsigned long long d = std::stoull(v, &used);
    if (trim(v.substr(used)).empty()) return d;
  } catch (...) {
  }
  bad_key(key, "expected a non-negative integer, got '" + v + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_key(key, "expected true/false, got '" + v + "'");
}

std::vector<double> parse_doubles(const std::string& key, const std::string& v,
                                  int expect = -1) {
  std::istringstream ss(v);
  std::vector<double> out;
  double d;
  while (ss >> d) out.push_back(d);
  std::string rest;
  if (ss.bad() || (ss >> rest && !rest.empty())) {
    bad_key(key, "expected numbers, got '" + v + "'");
  }
  if (expect >= 0 && static_cast<int>(out.size()) != expect) {
    bad_key(key, "expected " + std::to_string(expect) + " numbers");
  }
  return out;
}

std::vector<SinusoidTerm> parse_terms(const std::string& key,
                                      const std::string& v) {
  const auto nums = parse_doubles(key, v);
  if (nums.size() % 3 != 0) {
    bad_key(key, "expected (amp freq phase) triples");
  }
  std::vector<SinusoidTerm> out;
  for (size_t i = 0; i < nums.size(); i += 3) {
    out.push_back({nums[i], nums[i + 1], nums[i + 2]});
  }
  return out;
}

NodePolicy parse_policy(const std::string& key, const std::string& name) {
  if (name == "proposed") return NodePolicy::ProposedLidarOnly;
  if (name == "baseline") return NodePolicy::BaselinePerMeasurement;
  if (name == "lio") return NodePolicy::LidarInertialOnly;
  bad_key(key, "unknown policy '" + name + "' (proposed|baseline|lio)");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt(const Vec3& v) {
  return fmt(v.x()) + " " + fmt(v.y()) + " " + fmt(v.z());
}

std::string fmt_terms(const std::vector<SinusoidTerm>& terms) {
  std::string out;
  for (const auto& t : terms) {
    if (!out.empty()) out += "  ";
    out += fmt(t.amp) + " " + fmt(t.freq_hz) + " " + fmt(t.phase);
  }
  return out;
}

std::string fmt_quat(const Rot3& r) {
  const auto& q = r.quaternion();
  return fmt(q.x()) + " " + fmt(q.y()) + " " + fmt(q.z()) + " " + fmt(q.w());
}

void validate(const ExperimentConfig& c) {
  auto require = [](bool ok, const char* key, const char* why) {
    if (!ok) bad_key(key, why);
  };
  require(c.duration_s > 0, "duration_s", "must be > 0");
  require(c.rig.imu_rate_hz > 0, "imu_rate_hz", "must be > 0");
  require(c.rig.lidar_rate_hz > 0, "lidar_rate_hz", "must be > 0");
  require(c.rig.radar_rate_hz > 0, "radar_rate_hz", "must be > 0");
  require(c.rig.radar_offset_s >= 0 &&
              c.rig.radar_offset_s < 1.0 / c.rig.lidar_rate_hz,
          "radar_offset_s", "must lie in [0, 1/lidar_rate)");
  require(c.rig.imu_noise.valid(), "accel_noise_density",
          "noise densities must be > 0");
  require(c.rig.init_bias_accel_sigma >= 0, "init_bias_accel_sigma",
          "must be >= 0");
  require(c.rig.init_bias_gyro_sigma >= 0, "init_bias_gyro_sigma",
          "must be >= 0");
  require(c.rig.lidar_sigma_rot > 0, "lidar_sigma_rot", "must be > 0");
  require(c.rig.lidar_sigma_pos > 0, "lidar_sigma_pos", "must be > 0");
  require(c.rig.sigma_r > 0, "radar_sigma", "must be > 0");
  require(c.rig.radar_points >= 1, "radar_points", "must be >= 1");
  require(c.rig.radar_outlier_frac >= 0 && c.rig.radar_outlier_frac <= 1,
          "radar_outlier_frac", "must lie in [0, 1]");
  require(c.rig.radar_outlier_vmax > 0, "radar_outlier_vmax", "must be > 0");
  require(c.rig.radar_fov_deg > 0 && c.rig.radar_fov_deg <= 90,
          "radar_fov_deg", "must lie in (0, 90]");
  require(c.rig.gravity_mag > 0, "gravity_mag", "must be > 0");
  require(c.degeneracy.inflation >= 1.0, "degen_inflation", "must be >= 1");
  require(c.lag_s > 0, "lag_s", "must be > 0");
  require(c.optimizer.max_iterations > 0, "max_iterations", "must be >= 1");
  require(c.optimizer.rel_reduction_tol > 0 && c.optimizer.rel_reduction_tol < 1,
          "rel_reduction_tol", "must lie in (0, 1)");
  require(c.optimizer.lambda_init > 0, "lm_lambda_init", "must be > 0");
  require(c.optimizer.lambda_up > 1, "lm_lambda_up", "must be > 1");
  require(c.optimizer.lambda_down > 0 && c.optimizer.lambda_down < 1,
          "lm_lambda_down", "must lie in (0, 1)");
  require(c.huber_delta > 0, "huber_delta", "must be > 0");
  require(c.gravity_init == "imu_mean" || c.gravity_init == "true_dir",
          "gravity_init", "must be imu_mean or true_dir");
  require(c.gravity_init_window_s > 0, "gravity_init_window_s", "must be > 0");
  require(c.prior_sigma_rot > 0 && c.prior_sigma_pos > 0 &&
              c.prior_sigma_vel > 0 && c.prior_sigma_ba > 0 &&
              c.prior_sigma_bg > 0 && c.prior_sigma_grav > 0,
          "prior_sigma_rot", "prior sigmas must be > 0");
  require(!c.policies.empty(), "policies", "must name at least one policy");
}

}  // namespace

bool ExperimentConfig::operator==(const ExperimentConfig& other) const {
  auto terms_eq = [](const std::vector<SinusoidTerm>& a,
                     const std::vector<SinusoidTerm>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
      if (a[i].amp != b[i].amp || a[i].freq_hz != b[i].freq_hz ||
          a[i].phase != b[i].phase) {
        return false;
      }
    }
    return true;
  };
  auto pose_eq = [](const Pose3& a, const Pose3& b) {
    return a.translation() == b.translation() &&
           std::abs(std::abs(a.rotation().quaternion().dot(
               b.rotation().quaternion())) - 1.0) < 1e-15;
  };
  for (int k = 0; k < 3; ++k) {
    if (!terms_eq(trajectory.position[k], other.trajectory.position[k]) ||
        !terms_eq(trajectory.euler[k], other.trajectory.euler[k])) {
      return false;
    }
  }
  const SensorRig& r = rig;
  const SensorRig& o = other.rig;
  return duration_s == other.duration_s && seed == other.seed &&
         out_dir == other.out_dir &&
         trajectory.duration_s == other.trajectory.duration_s &&
         r.imu_rate_hz == o.imu_rate_hz && r.lidar_rate_hz == o.lidar_rate_hz &&
         r.radar_rate_hz == o.radar_rate_hz &&
         r.radar_offset_s == o.radar_offset_s &&
         pose_eq(r.extrinsics.T_IL, o.extrinsics.T_IL) &&
         pose_eq(r.extrinsics.T_IR, o.extrinsics.T_IR) &&
         r.imu_noise.accel_noise_density == o.imu_noise.accel_noise_density &&
         r.imu_noise.gyro_noise_density == o.imu_noise.gyro_noise_density &&
         r.imu_noise.accel_bias_rw_density == o.imu_noise.accel_bias_rw_density &&
         r.imu_noise.gyro_bias_rw_density == o.imu_noise.gyro_bias_rw_density &&
         r.init_bias_accel == o.init_bias_accel &&
         r.init_bias_gyro == o.init_bias_gyro &&
         r.init_bias_accel_sigma == o.init_bias_accel_sigma &&
         r.init_bias_gyro_sigma == o.init_bias_gyro_sigma &&
         r.lidar_sigma_rot == o.lidar_sigma_rot &&
         r.lidar_sigma_pos == o.lidar_sigma_pos && r.sigma_r == o.sigma_r &&
         r.radar_points == o.radar_points &&
         r.radar_outlier_frac == o.radar_outlier_frac &&
         r.radar_outlier_vmax == o.radar_outlier_vmax &&
         r.radar_fov_deg == o.radar_fov_deg &&
         r.gravity_mag == o.gravity_mag && r.noise_enabled == o.noise_enabled &&
         degeneracy.tunnel == other.degeneracy.tunnel &&
         degeneracy.axis.vector() == other.degeneracy.axis.vector() &&
         degeneracy.inflation == other.degeneracy.inflation &&
         lag_s == other.lag_s &&
         optimizer.max_iterations == other.optimizer.max_iterations &&
         optimizer.rel_reduction_tol == other.optimizer.rel_reduction_tol &&
         optimizer.lambda_init == other.optimizer.lambda_init &&
         optimizer.lambda_up == other.optimizer.lambda_up &&
         optimizer.lambda_down == other.optimizer.lambda_down &&
         huber_delta == other.huber_delta && gravity_init == other.gravity_init &&
         gravity_init_window_s == other.gravity_init_window_s &&
         init_from_truth == other.init_from_truth &&
         prior_sigma_rot == other.prior_sigma_rot &&
         prior_sigma_pos == other.prior_sigma_pos &&
         prior_sigma_vel == other.prior_sigma_vel &&
         prior_sigma_ba == other.prior_sigma_ba &&
         prior_sigma_bg == other.prior_sigma_bg &&
         prior_sigma_grav == other.prior_sigma_grav &&
         policies == other.policies &&
         parallel_policies == other.parallel_policies &&
         ate_align == other.ate_align;
}

ExperimentConfig parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config: line " + std::to_string(line_no) +
                               ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error("config: line " + std::to_string(line_no) +
                               ": empty key");
    }
    if (kv.count(key)) bad_key(key, "duplicate key");
    kv[key] = val;
  }

  ExperimentConfig c;

  auto take = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    return &it->second;
  };
  auto pop = [&](const char* key) {
    kv.erase(key);
  };

  // duration and preset first: the preset expands to trajectory terms which
  // explicit term keys may then override
  if (const auto* v = take("duration_s")) c.duration_s = parse_double("duration_s", *v), pop("duration_s");
  std::string preset = "hall";
  double tunnel_half_length = 25.0;
  if (const auto* v = take("tunnel_half_length")) {
    tunnel_half_length = parse_double("tunnel_half_length", *v);
    pop("tunnel_half_length");
  }
  if (const auto* v = take("traj_preset")) {
    preset = *v;
    pop("traj_preset");
  }
  if (preset == "hall") {
    c.trajectory = make_hall_trajectory(c.duration_s);
  } else if (preset == "tunnel") {
    c.trajectory = make_tunnel_trajectory(c.duration_s, tunnel_half_length);
  } else {
    bad_key("traj_preset", "must be hall or tunnel");
  }
  c.trajectory.duration_s = c.duration_s;

  struct TermKey {
    const char* key;
    std::vector<SinusoidTerm>* dst;
  };
  const TermKey term_keys[] = {
      {"traj_pos_x", &c.trajectory.position[0]},
      {"traj_pos_y", &c.trajectory.position[1]},
      {"traj_pos_z", &c.trajectory.position[2]},
      {"traj_euler_roll", &c.trajectory.euler[0]},
      {"traj_euler_pitch", &c.trajectory.euler[1]},
      {"traj_euler_yaw", &c.trajectory.euler[2]},
  };
  for (const auto& tk : term_keys) {
    if (const auto* v = take(tk.key)) {
      *tk.dst = parse_terms(tk.key, *v);
      pop(tk.key);
    }
  }

  Vec3 t_il(0.1, 0.0, 0.05), t_ir(0.15, 0.05, -0.02);
  Eigen::Vector4d q_il(0, 0, 0, 1), q_ir(0, 0, 0, 1);
  auto vec3_key = [&](const char* key, Vec3* dst) {
    if (const auto* v = take(key)) {
      const auto nums = parse_doubles(key, *v, 3);
      *dst = Vec3(nums[0], nums[1], nums[2]);
      pop(key);
    }
  };
  auto quat_key = [&](const char* key, Eigen::Vector4d* dst) {
    if (const auto* v = take(key)) {
      const auto nums = parse_doubles(key, *v, 4);
      *dst = Eigen::Vector4d(nums[0], nums[1], nums[2], nums[3]);
      if (dst->norm() < 1e-9) bad_key(key, "quaternion must be nonzero");
      pop(key);
    }
  };
  vec3_key("init_bias_accel", &c.rig.init_bias_accel);
  vec3_key("init_bias_gyro", &c.rig.init_bias_gyro);
  vec3_key("t_il", &t_il);
  vec3_key("t_ir", &t_ir);
  quat_key("q_il", &q_il);
  quat_key("q_ir", &q_ir);
  c.rig.extrinsics.T_IL =
      Pose3(Rot3(Eigen::Quaterniond(q_il[3], q_il[0], q_il[1], q_il[2])), t_il);
  c.rig.extrinsics.T_IR =
      Pose3(Rot3(Eigen::Quaterniond(q_ir[3], q_ir[0], q_ir[1], q_ir[2])), t_ir);

  struct DoubleKey {
    const char* key;
    double* dst;
  };
  const DoubleKey double_keys[] = {
      {"imu_rate_hz", &c.rig.imu_rate_hz},
      {"lidar_rate_hz", &c.rig.lidar_rate_hz},
      {"radar_rate_hz", &c.rig.radar_rate_hz},
      {"radar_offset_s", &c.rig.radar_offset_s},
      {"accel_noise_density", &c.rig.imu_noise.accel_noise_density},
      {"gyro_noise_density", &c.rig.imu_noise.gyro_noise_density},
      {"accel_bias_rw_density", &c.rig.imu_noise.accel_bias_rw_density},
      {"gyro_bias_rw_density", &c.rig.imu_noise.gyro_bias_rw_density},
      {"init_bias_accel_sigma", &c.rig.init_bias_accel_sigma},
      {"init_bias_gyro_sigma", &c.rig.init_bias_gyro_sigma},
      {"lidar_sigma_rot", &c.rig.lidar_sigma_rot},
      {"lidar_sigma_pos", &c.rig.lidar_sigma_pos},
      {"radar_sigma", &c.rig.sigma_r},
      {"radar_outlier_frac", &c.rig.radar_outlier_frac},
      {"radar_outlier_vmax", &c.rig.radar_outlier_vmax},
      {"radar_fov_deg", &c.rig.radar_fov_deg},
      {"gravity_mag", &c.rig.gravity_mag},
      {"degen_inflation", &c.degeneracy.inflation},
      {"lag_s", &c.lag_s},
      {"rel_reduction_tol", &c.optimizer.rel_reduction_tol},
      {"lm_lambda_init", &c.optimizer.lambda_init},
      {"lm_lambda_up", &c.optimizer.lambda_up},
      {"lm_lambda_down", &c.optimizer.lambda_down},
      {"huber_delta", &c.huber_delta},
      {"gravity_init_window_s", &c.gravity_init_window_s},
      {"prior_sigma_rot", &c.prior_sigma_rot},
      {"prior_sigma_pos", &c.prior_sigma_pos},
      {"prior_sigma_vel", &c.prior_sigma_vel},
      {"prior_sigma_ba", &c.prior_sigma_ba},
      {"prior_sigma_bg", &c.prior_sigma_bg},
      {"prior_sigma_grav", &c.prior_sigma_grav},
  };
  for (const auto& dk : double_keys) {
    if (const auto* v = take(dk.key)) {
      *dk.dst = parse_double(dk.key, *v);
      pop(dk.key);
    }
  }

  if (const auto* v = take("seed")) c.seed = parse_u64("seed", *v), pop("seed");
  if (const auto* v = take("radar_points")) {
    c.rig.radar_points = static_cast<int>(parse_u64("radar_points", *v));
    pop("radar_points");
  }
  if (const auto* v = take("max_iterations")) {
    c.optimizer.max_iterations =
        static_cast<int>(parse_u64("max_iterations", *v));
    pop("max_iterations");
  }
  if (const auto* v = take("noise_enabled")) {
    c.rig.noise_enabled = parse_bool("noise_enabled", *v);
    pop("noise_enabled");
  }
  if (const auto* v = take("degen_enabled")) {
    c.degeneracy.tunnel = parse_bool("degen_enabled", *v);
    pop("degen_enabled");
  }
  if (const auto* v = take("degen_axis")) {
    const auto nums = parse_doubles("degen_axis", *v, 3);
    c.degeneracy.axis = UnitVec3(Vec3(nums[0], nums[1], nums[2]));
    pop("degen_axis");
  }
  if (const auto* v = take("out_dir")) c.out_dir = *v, pop("out_dir");
  if (const auto* v = take("gravity_init")) c.gravity_init = *v, pop("gravity_init");
  if (const auto* v = take("init_from_truth")) {
    c.init_from_truth = parse_bool("init_from_truth", *v);
    pop("init_from_truth");
  }
  if (const auto* v = take("parallel_policies")) {
    c.parallel_policies = parse_bool("parallel_policies", *v);
    pop("parallel_policies");
  }
  if (const auto* v = take("ate_align")) {
    c.ate_align = parse_bool("ate_align", *v);
    pop("ate_align");
  }
  if (const auto* v = take("policies")) {
    c.policies.clear();
    std::istringstream ss(*v);
    std::string name;
    while (ss >> name) c.policies.push_back(parse_policy("policies", name));
    pop("policies");
  }

  if (!kv.empty()) bad_key(kv.begin()->first, "unknown key");

  validate(c);
  return c;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open file " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "duration_s = " << fmt(c.duration_s) << "\n";
  o << "seed = " << c.seed << "\n";
  o << "out_dir = " << c.out_dir << "\n";
  o << "traj_pos_x = " << fmt_terms(c.trajectory.position[0]) << "\n";
  o << "traj_pos_y = " << fmt_terms(c.trajectory.position[1]) << "\n";
  o << "traj_pos_z = " << fmt_terms(c.trajectory.position[2]) << "\n";
  o << "traj_euler_roll = " << fmt_terms(c.trajectory.euler[0]) << "\n";
  o << "traj_euler_pitch = " << fmt_terms(c.trajectory.euler[1]) << "\n";
  o << "traj_euler_yaw = " << fmt_terms(c.trajectory.euler[2]) << "\n";
  o << "imu_rate_hz = " << fmt(c.rig.imu_rate_hz) << "\n";
  o << "lidar_rate_hz = " << fmt(c.rig.lidar_rate_hz) << "\n";
  o << "radar_rate_hz = " << fmt(c.rig.radar_rate_hz) << "\n";
  o << "radar_offset_s = " << fmt(c.rig.radar_offset_s) << "\n";
  o << "t_il = " << fmt(c.rig.extrinsics.T_IL.translation()) << "\n";
  o << "q_il = " << fmt_quat(c.rig.extrinsics.T_IL.rotation()) << "\n";
  o << "t_ir = " << fmt(c.rig.extrinsics.T_IR.translation()) << "\n";
  o << "q_ir = " << fmt_quat(c.rig.extrinsics.T_IR.rotation()) << "\n";
  o << "accel_noise_density = " << fmt(c.rig.imu_noise.accel_noise_density) << "\n";
  o << "gyro_noise_density = " << fmt(c.rig.imu_noise.gyro_noise_density) << "\n";
  o << "accel_bias_rw_density = " << fmt(c.rig.imu_noise.accel_bias_rw_density)
    << "\n";
  o << "gyro_bias_rw_density = " << fmt(c.rig.imu_noise.gyro_bias_rw_density)
    << "\n";
  o << "init_bias_accel = " << fmt(c.rig.init_bias_accel) << "\n";
  o << "init_bias_gyro = " << fmt(c.rig.init_bias_gyro) << "\n";
  o << "init_bias_accel_sigma = " << fmt(c.rig.init_bias_accel_sigma) << "\n";
  o << "init_bias_gyro_sigma = " << fmt(c.rig.init_bias_gyro_sigma) << "\n";
  o << "lidar_sigma_rot = " << fmt(c.rig.lidar_sigma_rot) << "\n";
  o << "lidar_sigma_pos = " << fmt(c.rig.lidar_sigma_pos) << "\n";
  o << "radar_sigma = " << fmt(c.rig.sigma_r) << "\n";
  o << "radar_points = " << c.rig.radar_points << "\n";
  o << "radar_outlier_frac = " << fmt(c.rig.radar_outlier_frac) << "\n";
  o << "radar_outlier_vmax = " << fmt(c.rig.radar_outlier_vmax) << "\n";
  o << "radar_fov_deg = " << fmt(c.rig.radar_fov_deg) << "\n";
  o << "gravity_mag = " << fmt(c.rig.gravity_mag) << "\n";
  o << "noise_enabled = " << (c.rig.noise_enabled ? "true" : "false") << "\n";
  o << "degen_enabled = " << (c.degeneracy.tunnel ? "true" : "false") << "\n";
  o << "degen_axis = " << fmt(c.degeneracy.axis.vector()) << "\n";
  o << "degen_inflation = " << fmt(c.degeneracy.inflation) << "\n";
  o << "lag_s = " << fmt(c.lag_s) << "\n";
  o << "max_iterations = " << c.optimizer.max_iterations << "\n";
  o << "rel_reduction_tol = " << fmt(c.optimizer.rel_reduction_tol) << "\n";
  o << "lm_lambda_init = " << fmt(c.optimizer.lambda_init) << "\n";
  o << "lm_lambda_up = " << fmt(c.optimizer.lambda_up) << "\n";
  o << "lm_lambda_down = " << fmt(c.optimizer.lambda_down) << "\n";
  o << "huber_delta = " << fmt(c.huber_delta) << "\n";
  o << "gravity_init = " << c.gravity_init << "\n";
  o << "gravity_init_window_s = " << fmt(c.gravity_init_window_s) << "\n";
  o << "init_from_truth = " << (c.init_from_truth ? "true" : "false") << "\n";
  o << "prior_sigma_rot = " << fmt(c.prior_sigma_rot) << "\n";
  o << "prior_sigma_pos = " << fmt(c.prior_sigma_pos) << "\n";
  o << "prior_sigma_vel = " << fmt(c.prior_sigma_vel) << "\n";
  o << "prior_sigma_ba = " << fmt(c.prior_sigma_ba) << "\n";
  o << "prior_sigma_bg = " << fmt(c.prior_sigma_bg) << "\n";
  o << "prior_sigma_grav = " << fmt(c.prior_sigma_grav) << "\n";
  o << "policies =";
  for (const auto p : c.policies) o << ' ' << to_string(p);
  o << "\n";
  o << "parallel_policies = " << (c.parallel_policies ? "true" : "false") << "\n";
  o << "ate_align = " << (c.ate_align ? "true" : "false") << "\n";
  return o.str();
}

std::string config_key_help() {
  return
      "Config file: one 'key = value' per line, '#' comments. All keys are\n"
      "optional; unknown keys are rejected. Key groups:\n"
      "  simulation ...... duration_s, seed, traj_preset (hall|tunnel),\n"
      "                    tunnel_half_length, traj_pos_{x,y,z},\n"
      "                    traj_euler_{roll,pitch,yaw} (amp freq phase triples)\n"
      "  rates ........... imu_rate_hz, lidar_rate_hz, radar_rate_hz,\n"
      "                    radar_offset_s\n"
      "  extrinsics ...... t_il, q_il (x y z w), t_ir, q_ir\n"
      "  imu noise ....... accel_noise_density, gyro_noise_density,\n"
      "                    accel_bias_rw_density, gyro_bias_rw_density,\n"
      "                    init_bias_accel_sigma, init_bias_gyro_sigma\n"
      "  lidar/radar ..... lidar_sigma_rot, lidar_sigma_pos, radar_sigma,\n"
      "                    radar_points, radar_outlier_frac, radar_outlier_vmax,\n"
      "                    radar_fov_deg, noise_enabled\n"
      "  degeneracy ...... degen_enabled, degen_axis, degen_inflation\n"
      "  smoother ........ lag_s, max_iterations, rel_reduction_tol,\n"
      "                    lm_lambda_init, lm_lambda_up, lm_lambda_down,\n"
      "                    huber_delta, gravity_mag\n"
      "  initialization .. gravity_init (imu_mean|true_dir),\n"
      "                    gravity_init_window_s, init_from_truth,\n"
      "                    prior_sigma_{rot,pos,vel,ba,bg,grav}\n"
      "  bench ........... policies (proposed baseline lio), out_dir,\n"
      "                    parallel_policies, ate_align\n";
}

}  // namespace rlio
