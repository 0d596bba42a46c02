#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rlio/config.hpp"
#include "rlio/simulator.hpp"
#include "rlio/smoother.hpp"
#include "rlio/trajectory_metrics.hpp"

namespace rlio {

/// Per-policy benchmark results. Accuracy fields are absent when the policy
/// diverged (mirrored as "Failed" cells in metrics.csv).
struct PolicyMetrics {
  NodePolicy policy = NodePolicy::ProposedLidarOnly;
  bool failed = false;

  std::optional<ErrorStats> ate;
  std::optional<ErrorStats> rte;
  double final_position_error_m = 0.0;

  double total_opt_s = 0.0;
  double avg_per_100ms_ms = 0.0;
  double per_iteration_ms = 0.0;
  int64_t nodes_steady_state = 0;
  int64_t optimize_calls = 0;
  int64_t total_iterations = 0;
  int64_t scans_dropped = 0;

  std::vector<std::pair<double, double>> walltime_series;  // (tick s, opt ms)
  Trajectory estimate;  // IMU-rate propagated output
};

struct ExperimentResult {
  std::vector<PolicyMetrics> per_policy;
  Trajectory ground_truth;  // sampled at the IMU rate
  double path_length_m = 0.0;
  bool contended_timing = false;  // policies ran on shared cores
  double process_wall_s = 0.0;
};

/// Run all configured policies over identical synthesized (or provided)
/// streams. Policies run sequentially unless config.parallel_policies.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const SensorStreams* replay = nullptr);

/// Feed one policy; exposed for tests that inspect a single run.
PolicyMetrics run_policy(const ExperimentConfig& config,
                         const SensorStreams& streams, NodePolicy policy);

/// Write metrics.csv, walltime_<policy>.csv, est_<policy>.tum and gt.tum
/// into out_dir (created if missing).
void write_experiment_outputs(const ExperimentConfig& config,
                              const ExperimentResult& result,
                              const std::string& out_dir);

std::string metrics_csv(const ExperimentResult& result);

}  // namespace rlio
