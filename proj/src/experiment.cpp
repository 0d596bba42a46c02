#include "rlio/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace rlio {

namespace {

struct Event {
  int64_t t_ns;
  int kind;  // 0 imu, 1 lidar, 2 radar
  size_t index;
};

std::vector<Event> merge_events(const SensorStreams& s) {
  std::vector<Event> ev;
  ev.reserve(s.imu.size() + s.lidar.size() + s.radar.size());
  for (size_t i = 0; i < s.imu.size(); ++i) ev.push_back({s.imu[i].t_ns, 0, i});
  for (size_t i = 0; i < s.lidar.size(); ++i) ev.push_back({s.lidar[i].t_ns, 1, i});
  for (size_t i = 0; i < s.radar.size(); ++i) ev.push_back({s.radar[i].t_ns, 2, i});
  std::stable_sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) {
    return a.t_ns < b.t_ns || (a.t_ns == b.t_ns && a.kind < b.kind);
  });
  return ev;
}

SmootherConfig make_smoother_config(const ExperimentConfig& c,
                                    const SensorStreams& streams,
                                    NodePolicy policy) {
  SmootherConfig sc;
  sc.policy = policy;
  sc.lag_s = c.lag_s;
  sc.optimizer = c.optimizer;
  sc.extrinsics = c.rig.extrinsics;
  sc.imu_noise = c.rig.imu_noise;
  sc.sigma_r = c.rig.sigma_r;
  sc.huber_delta = c.huber_delta;
  sc.gravity_magnitude = c.rig.gravity_mag;
  sc.prior_sigma_rot = c.prior_sigma_rot;
  sc.prior_sigma_pos = c.prior_sigma_pos;
  sc.prior_sigma_vel = c.prior_sigma_vel;
  sc.prior_sigma_ba = c.prior_sigma_ba;
  sc.prior_sigma_bg = c.prior_sigma_bg;
  sc.prior_sigma_grav = c.prior_sigma_grav;

  const GroundTruth gt0 = sample_ground_truth(c.trajectory, 0.0);
  if (c.init_from_truth) {
    sc.init_state.pose = gt0.pose;
    sc.init_state.velocity = gt0.velocity;
  }
  sc.init_state.bias = ImuBias{};  // biases are never known a priori

  if (c.gravity_init == "true_dir") {
    sc.init_gravity_dir = Vec3(0.0, 0.0, -1.0);
  } else {
    std::vector<ImuSample> head;
    for (const auto& s : streams.imu) {
      if (to_seconds(s.t_ns) > c.gravity_init_window_s) break;
      head.push_back(s);
    }
    const UnitVec3 dir_body = estimate_gravity_direction(head);
    sc.init_gravity_dir = sc.init_state.pose.rotation() * dir_body.vector();
  }
  return sc;
}

}  // namespace

PolicyMetrics run_policy(const ExperimentConfig& c, const SensorStreams& streams,
                         NodePolicy policy) {
  PolicyMetrics m;
  m.policy = policy;

  FixedLagSmoother smoother(make_smoother_config(c, streams, policy));
  const std::vector<Event> events = merge_events(streams);

  int64_t pending_output_t = -1;
  int64_t max_nodes = 0;
  auto emit = [&]() {
    if (pending_output_t < 0 || !smoother.bootstrapped() || smoother.failed()) {
      pending_output_t = -1;
      return;
    }
    const NavState out = smoother.propagateOutput(pending_output_t);
    m.estimate.push_back({to_seconds(pending_output_t), out.pose});
    pending_output_t = -1;
  };

  // wall-time accounting over the optimize calls only, bucketed per 100 ms
  const double tick_s = 0.1;
  std::vector<double> buckets(
      static_cast<size_t>(std::ceil(c.duration_s / tick_s)) + 1, 0.0);
  size_t reports_seen = 0;

  for (const Event& ev : events) {
    if (smoother.failed()) break;
    if (pending_output_t >= 0 && ev.t_ns > pending_output_t) emit();
    switch (ev.kind) {
      case 0:
        smoother.addImu(streams.imu[ev.index]);
        pending_output_t = streams.imu[ev.index].t_ns;
        break;
      case 1:
        smoother.addLidar(streams.lidar[ev.index]);
        break;
      default:
        smoother.addRadar(streams.radar[ev.index]);
        break;
    }
    if (ev.kind != 0) {
      max_nodes = std::max<int64_t>(max_nodes,
                                    static_cast<int64_t>(smoother.nodes().size()));
      // attribute any report produced by this measurement to its tick
      const size_t bucket = std::min(
          buckets.size() - 1, static_cast<size_t>(to_seconds(ev.t_ns) / tick_s));
      while (reports_seen < smoother.reports().size()) {
        const auto& r = smoother.reports()[reports_seen++];
        buckets[bucket] += 1e-6 * static_cast<double>(r.wall_ns);
        m.total_opt_s += 1e-9 * static_cast<double>(r.wall_ns);
        if (r.final_cost > 1e12) m.failed = true;
      }
      if (m.failed) break;
    }
  }
  emit();
  m.failed = m.failed || smoother.failed();
  for (size_t i = 0; i < buckets.size(); ++i) {
    m.walltime_series.push_back({tick_s * static_cast<double>(i), buckets[i]});
  }
  m.optimize_calls = smoother.optimizeCalls();
  m.total_iterations = smoother.totalIterations();
  m.scans_dropped = smoother.scansDropped();
  m.nodes_steady_state = max_nodes;
  m.avg_per_100ms_ms =
      1e3 * m.total_opt_s / std::ceil(c.duration_s / tick_s);
  m.per_iteration_ms =
      m.total_iterations > 0
          ? 1e3 * m.total_opt_s / static_cast<double>(m.total_iterations)
          : 0.0;
  return m;
}

ExperimentResult run_experiment(const ExperimentConfig& c,
                                const SensorStreams* replay) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentResult result;

  SensorStreams streams;
  if (replay != nullptr) {
    streams = *replay;
  } else {
    streams.imu = synth_imu(c.trajectory, c.rig, c.seed);
    streams.lidar = synth_lidar(c.trajectory, c.rig, c.degeneracy, c.seed);
    streams.radar = synth_radar(c.trajectory, c.rig, c.seed, streams.imu);
  }
  if (streams.imu.empty() || streams.lidar.empty()) {
    throw std::runtime_error("run_experiment: empty IMU or LiDAR stream");
  }

  for (const auto& s : streams.imu) {
    const double t = to_seconds(s.t_ns);
    result.ground_truth.push_back(
        {t, sample_ground_truth(c.trajectory, t).pose});
  }
  result.path_length_m = trajectory_path_length(result.ground_truth);

  result.per_policy.resize(c.policies.size());
  auto run_one = [&](size_t i) {
    result.per_policy[i] = run_policy(c, streams, c.policies[i]);
  };

  if (c.parallel_policies && c.policies.size() > 1) {
    result.contended_timing = true;
    std::vector<std::thread> threads;
    for (size_t i = 0; i < c.policies.size(); ++i) {
      threads.emplace_back(run_one, i);
    }
    for (auto& t : threads) t.join();
  } else {
    for (size_t i = 0; i < c.policies.size(); ++i) run_one(i);
  }

  // accuracy metrics
  for (auto& pm : result.per_policy) {
    if (pm.failed || pm.estimate.size() < 2) {
      pm.failed = true;
      continue;
    }
    pm.ate = compute_ate(pm.estimate, result.ground_truth, c.ate_align);
    pm.rte = compute_rte_per_meter(pm.estimate, result.ground_truth);
    const double t_end = pm.estimate.back().t;
    const Vec3 gt_end =
        sample_ground_truth(c.trajectory, t_end).pose.translation();
    pm.final_position_error_m =
        (pm.estimate.back().pose.translation() - gt_end).norm();
  }

  result.process_wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

std::string metrics_csv(const ExperimentResult& result) {
  std::string out;
  if (result.contended_timing) out += "# timing: contended\n";
  out +=
      "policy,ate_mean_m,ate_std_m,rte_mean_m,rte_std_m,total_opt_s,"
      "avg_per_100ms_ms,per_iter_ms,nodes_steady_state,optimize_calls\n";
  char buf[512];
  for (const auto& pm : result.per_policy) {
    if (pm.failed) {
      std::snprintf(buf, sizeof(buf),
                    "%s,Failed,Failed,Failed,Failed,%.6f,%.6f,%.6f,%lld,%lld\n",
                    to_string(pm.policy), pm.total_opt_s, pm.avg_per_100ms_ms,
                    pm.per_iteration_ms,
                    static_cast<long long>(pm.nodes_steady_state),
                    static_cast<long long>(pm.optimize_calls));
    } else {
      std::snprintf(buf, sizeof(buf),
                    "%s,%.9f,%.9f,%.9f,%.9f,%.6f,%.6f,%.6f,%lld,%lld\n",
                    to_string(pm.policy), pm.ate->mean, pm.ate->stddev,
                    pm.rte->mean, pm.rte->stddev, pm.total_opt_s,
                    pm.avg_per_100ms_ms, pm.per_iteration_ms,
                    static_cast<long long>(pm.nodes_steady_state),
                    static_cast<long long>(pm.optimize_calls));
    }
    out += buf;
  }
  return out;
}

void write_experiment_outputs(const ExperimentConfig& config,
                              const ExperimentResult& result,
                              const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  {
    std::ofstream f(out_dir + "/metrics.csv");
    if (!f) throw std::runtime_error("cannot write metrics.csv in " + out_dir);
    f << metrics_csv(result);
  }
  save_tum(out_dir + "/gt.tum", result.ground_truth);
  for (const auto& pm : result.per_policy) {
    const std::string name = to_string(pm.policy);
    if (!pm.estimate.empty()) {
      save_tum(out_dir + "/est_" + name + ".tum", pm.estimate);
    }
    std::ofstream f(out_dir + "/walltime_" + name + ".csv");
    if (!f) throw std::runtime_error("cannot write walltime csv in " + out_dir);
    f << "tick_s,opt_ms\n";
    char buf[80];
    for (const auto& [t, ms] : pm.walltime_series) {
      std::snprintf(buf, sizeof(buf), "%.1f,%.6f\n", t, ms);
      f << buf;
    }
  }
  {
    std::ofstream f(out_dir + "/config.txt");
    f << serialize_config(config);
  }
}

}  // namespace rlio
