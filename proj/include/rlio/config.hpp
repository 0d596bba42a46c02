#pragma once

#include <string>
#include <vector>

#include "rlio/simulator.hpp"
#include "rlio/smoother.hpp"

namespace rlio {

/// Full experiment description: trajectory, rig, degeneracy, smoother and
/// benchmark settings. Parsed from a `key = value` text file (one pair per
/// line, `#` comments); unknown keys are rejected and validation errors name
/// the offending key. See serialize_config for the complete key set.
struct ExperimentConfig {
  double duration_s = 60.0;
  uint64_t seed = 1;
  std::string out_dir = "out";

  TrajectoryModel trajectory = make_hall_trajectory(60.0);
  SensorRig rig;
  DegeneracyProfile degeneracy;

  double lag_s = 2.5;
  OptimizerSettings optimizer;
  double huber_delta = 1.345;

  std::string gravity_init = "imu_mean";  // imu_mean | true_dir
  double gravity_init_window_s = 0.5;
  bool init_from_truth = true;
  double prior_sigma_rot = 0.05;
  double prior_sigma_pos = 0.1;
  double prior_sigma_vel = 0.3;
  double prior_sigma_ba = 0.05;
  double prior_sigma_bg = 0.01;
  double prior_sigma_grav = 0.2;

  std::vector<NodePolicy> policies = {NodePolicy::ProposedLidarOnly,
                                      NodePolicy::BaselinePerMeasurement,
                                      NodePolicy::LidarInertialOnly};
  bool parallel_policies = false;
  bool ate_align = true;

  bool operator==(const ExperimentConfig& other) const;
};

/// Parse a config file; missing keys keep their defaults. Throws
/// std::runtime_error naming the offending key on unknown keys, syntax
/// errors, or invariant violations.
ExperimentConfig parse_config(const std::string& path);

/// Parse from an already-loaded string (same rules).
ExperimentConfig parse_config_text(const std::string& text);

/// Serialize every key with full precision; parse(serialize(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

/// Documented key listing for --help output.
std::string config_key_help();

}  // namespace rlio
