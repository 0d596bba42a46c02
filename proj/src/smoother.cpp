#include "rlio/smoother.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <Eigen/Dense>

namespace rlio {

namespace {

using Clock = std::chrono::steady_clock;

int64_t elapsed_ns(Clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0)
      .count();
}

/// W with W^T W = cov^-1; tiny eigenvalues are floored relative to the
/// largest so hugely anisotropic (degeneracy-inflated) covariances stay
/// finite.
Eigen::MatrixXd sqrt_info_from_cov(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const double floor = std::max(1e-16 * eig.eigenvalues().cwiseAbs().maxCoeff(),
                                1e-300);
  Eigen::VectorXd inv_sqrt = eig.eigenvalues().cwiseMax(floor).cwiseSqrt().cwiseInverse();
  return inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

const char* to_string(NodePolicy policy) {
  switch (policy) {
    case NodePolicy::ProposedLidarOnly: return "proposed";
    case NodePolicy::BaselinePerMeasurement: return "baseline";
    case NodePolicy::LidarInertialOnly: return "lio";
  }
  return "unknown";
}

UnitVec3 estimate_gravity_direction(const std::vector<ImuSample>& samples) {
  if (samples.empty()) {
    throw std::invalid_argument("estimate_gravity_direction: no samples");
  }
  Vec3 sum = Vec3::Zero();
  for (const auto& s : samples) sum += s.accel;
  return UnitVec3(-sum);  // gravity direction in the IMU frame
}

FixedLagSmoother::FixedLagSmoother(const SmootherConfig& config)
    : cfg_(config), lag_ns_(to_nanoseconds(config.lag_s)) {
  if (!(config.lag_s > 0.0)) {
    throw std::invalid_argument("FixedLagSmoother: lag must be > 0");
  }
  if (!config.optimizer.valid()) {
    throw std::invalid_argument("FixedLagSmoother: invalid optimizer settings");
  }
  if (!config.imu_noise.valid()) {
    throw std::invalid_argument("FixedLagSmoother: invalid IMU noise params");
  }
  gravity_.dir = UnitVec3(cfg_.init_gravity_dir);
  gravity_.magnitude = cfg_.gravity_magnitude;
}

void FixedLagSmoother::addImu(const ImuSample& sample) { imu_.push(sample); }

void FixedLagSmoother::bootstrap(const LidarPoseMeasurement& m) {
  pushNode(m.t_ns, cfg_.init_state);

  PriorFactor prior;
  prior.state_lin = cfg_.init_state;
  prior.gravity_lin = UnitVec3(cfg_.init_gravity_dir);
  Vec17 inv_sigma;
  inv_sigma << Vec3::Constant(1.0 / cfg_.prior_sigma_rot),
      Vec3::Constant(1.0 / cfg_.prior_sigma_pos),
      Vec3::Constant(1.0 / cfg_.prior_sigma_vel),
      Vec3::Constant(1.0 / cfg_.prior_sigma_ba),
      Vec3::Constant(1.0 / cfg_.prior_sigma_bg),
      Vec2::Constant(1.0 / cfg_.prior_sigma_grav);
  prior.sqrt_info = inv_sigma.asDiagonal();

  Factor f;
  f.node_a = nodes_.back().id;
  f.data = PriorData{prior};
  factors_.push_back(std::move(f));
}

void FixedLagSmoother::pushNode(int64_t t_ns, const NavState& state) {
  nodes_.push_back(Node{next_node_id_++, t_ns, state});
}

int FixedLagSmoother::slotOf(int64_t node_id) const {
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == node_id) return static_cast<int>(i);
  }
  return -1;
}

const FixedLagSmoother::Node* FixedLagSmoother::nodeAtOrBefore(
    int64_t t_ns) const {
  const Node* best = nullptr;
  for (const auto& n : nodes_) {
    if (n.t_ns <= t_ns) best = &n;
  }
  return best;
}

void FixedLagSmoother::addLidar(const LidarPoseMeasurement& m) {
  if (failed_) return;
  if (!nodes_.empty() && m.t_ns <= nodes_.back().t_ns) {
    throw std::invalid_argument("addLidar: out-of-order measurement");
  }

  if (nodes_.empty()) {
    bootstrap(m);
  } else {
    const Node& prev = nodes_.back();
    auto pim = std::make_shared<PreintegratedImu>(
        imu_.integrate(prev.t_ns, m.t_ns, prev.state.bias, cfg_.imu_noise));
    const NavState init = pim->predictState(prev.state, gravity_.vector());
    pushNode(m.t_ns, init);

    Factor imu_f;
    imu_f.node_a = prev.id;
    imu_f.node_b = nodes_.back().id;
    const Mat15 cov = eval_imu(prev.state, init, gravity_, *pim).cov;
    imu_f.data = ImuData{pim, Mat15(sqrt_info_from_cov(cov))};
    factors_.push_back(std::move(imu_f));
  }

  Factor lidar_f;
  lidar_f.node_a = nodes_.back().id;
  lidar_f.data = LidarData{m, Mat6(sqrt_info_from_cov(m.cov))};
  factors_.push_back(std::move(lidar_f));

  optimize();
  marginalizeWhileOverLag();
}

void FixedLagSmoother::addRadar(const RadarScan& scan) {
  if (failed_) return;
  if (cfg_.policy == NodePolicy::LidarInertialOnly) {
    ++scans_discarded_;
    return;
  }
  if (nodes_.empty() || scan.t_ns < nodes_.front().t_ns) {
    ++scans_dropped_;
    return;
  }

  if (cfg_.policy == NodePolicy::ProposedLidarOnly) {
    const Node* anchor = nodeAtOrBefore(scan.t_ns);
    if (scan.points.empty()) return;  // factor skipped
    auto pim = std::make_shared<PreintegratedImu>(imu_.integrate(
        anchor->t_ns, scan.t_ns, anchor->state.bias, cfg_.imu_noise));
    Factor f;
    f.node_a = anchor->id;
    f.data = RadarPreintData{scan, pim};
    factors_.push_back(std::move(f));
    return;  // optimized only upon LiDAR messages
  }

  // BaselinePerMeasurement
  const Node* at = nodeAtOrBefore(scan.t_ns);
  if (at->t_ns == scan.t_ns) {
    // scan coincides with an existing node: constrain it directly
    if (!scan.points.empty()) {
      Factor f;
      f.node_a = at->id;
      f.data = RadarBaselineData{scan};
      factors_.push_back(std::move(f));
    }
  } else if (scan.t_ns > nodes_.back().t_ns) {
    const Node& prev = nodes_.back();
    auto pim = std::make_shared<PreintegratedImu>(
        imu_.integrate(prev.t_ns, scan.t_ns, prev.state.bias, cfg_.imu_noise));
    const NavState init = pim->predictState(prev.state, gravity_.vector());
    pushNode(scan.t_ns, init);

    Factor imu_f;
    imu_f.node_a = prev.id;
    imu_f.node_b = nodes_.back().id;
    const Mat15 cov = eval_imu(prev.state, init, gravity_, *pim).cov;
    imu_f.data = ImuData{pim, Mat15(sqrt_info_from_cov(cov))};
    factors_.push_back(std::move(imu_f));

    if (!scan.points.empty()) {
      Factor f;
      f.node_a = nodes_.back().id;
      f.data = RadarBaselineData{scan};
      factors_.push_back(std::move(f));
    }
  } else {
    // late scan inside the window: insert a node, splitting the IMU factor
    const int slot = slotOf(at->id);
    const Node next = nodes_[slot + 1];
    const Node anchor = *at;

    auto split = std::find_if(factors_.begin(), factors_.end(), [&](const Factor& f) {
      return std::holds_alternative<ImuData>(f.data) && f.node_a == anchor.id &&
             f.node_b == next.id;
    });
    if (split != factors_.end()) factors_.erase(split);

    auto pim_a = std::make_shared<PreintegratedImu>(imu_.integrate(
        anchor.t_ns, scan.t_ns, anchor.state.bias, cfg_.imu_noise));
    const NavState init = pim_a->predictState(anchor.state, gravity_.vector());
    nodes_.insert(nodes_.begin() + slot + 1, Node{next_node_id_++, scan.t_ns, init});
    const int64_t new_id = nodes_[slot + 1].id;

    auto pim_b = std::make_shared<PreintegratedImu>(
        imu_.integrate(scan.t_ns, next.t_ns, init.bias, cfg_.imu_noise));

    Factor fa;
    fa.node_a = anchor.id;
    fa.node_b = new_id;
    fa.data = ImuData{pim_a, Mat15(sqrt_info_from_cov(
                                 eval_imu(anchor.state, init, gravity_, *pim_a).cov))};
    factors_.push_back(std::move(fa));

    Factor fb;
    fb.node_a = new_id;
    fb.node_b = next.id;
    fb.data = ImuData{pim_b, Mat15(sqrt_info_from_cov(
                                 eval_imu(init, next.state, gravity_, *pim_b).cov))};
    factors_.push_back(std::move(fb));

    if (!scan.points.empty()) {
      Factor f;
      f.node_a = new_id;
      f.data = RadarBaselineData{scan};
      factors_.push_back(std::move(f));
    }
  }

  optimize();
  marginalizeWhileOverLag();
}

NavState FixedLagSmoother::propagateOutput(int64_t t_ns) const {
  if (nodes_.empty()) {
    throw std::runtime_error("propagateOutput: no nodes yet");
  }
  const Node& newest = nodes_.back();
  if (t_ns < newest.t_ns) {
    throw std::invalid_argument("propagateOutput: query before newest node");
  }
  if (t_ns == newest.t_ns) return newest.state;
  const PreintegratedImu pim =
      imu_.integrate(newest.t_ns, t_ns, newest.state.bias, cfg_.imu_noise);
  return pim.predictState(newest.state, gravity_.vector());
}

double FixedLagSmoother::factorCost(const Factor& f,
                                    const std::vector<NavState>& states,
                                    const GravityVar& gravity) const {
  const int sa = slotOf(f.node_a);
  if (const auto* d = std::get_if<LidarData>(&f.data)) {
    const Vec6 r =
        d->sqrt_info * eval_lidar_residual(states[sa], d->m, cfg_.extrinsics);
    return 0.5 * r.squaredNorm();
  }
  if (const auto* d = std::get_if<ImuData>(&f.data)) {
    const int sb = slotOf(f.node_b);
    const Vec15 r = d->sqrt_info * eval_imu_residual(states[sa], states[sb],
                                                     gravity, *d->pim);
    return 0.5 * r.squaredNorm();
  }
  auto robust_cost = [&](const RadarResidual& e) {
    double c = 0.0;
    for (int j = 0; j < e.residual.size(); ++j) {
      c += huber_cost(e.residual[j] / e.sigma[j], cfg_.huber_delta);
    }
    return c;
  };
  if (const auto* d = std::get_if<RadarBaselineData>(&f.data)) {
    return robust_cost(eval_radar_baseline_residual(states[sa], d->scan,
                                                    cfg_.extrinsics, cfg_.sigma_r));
  }
  if (const auto* d = std::get_if<RadarPreintData>(&f.data)) {
    return robust_cost(eval_radar_preintegrated_residual(
        states[sa], gravity, *d->pim, d->scan, cfg_.extrinsics, cfg_.sigma_r));
  }
  const auto& d = std::get<PriorData>(f.data);
  const Vec17 r =
      d.prior.sqrt_info * eval_prior_residual(states[sa], gravity, d.prior);
  return 0.5 * r.squaredNorm();
}

FixedLagSmoother::Linearized FixedLagSmoother::linearizeFactor(
    const Factor& f, const std::vector<NavState>& states,
    const GravityVar& gravity) const {
  Linearized out;
  const int sa = slotOf(f.node_a);

  if (const auto* d = std::get_if<LidarData>(&f.data)) {
    const LidarEval e = eval_lidar(states[sa], d->m, cfg_.extrinsics);
    Eigen::Matrix<double, 6, 15> J = Eigen::Matrix<double, 6, 15>::Zero();
    J.leftCols<6>() = e.J_pose;
    out.J_a = d->sqrt_info * J;
    out.J_g.setZero(6, 2);
    out.r = d->sqrt_info * e.residual;
    out.cost = 0.5 * out.r.squaredNorm();
    return out;
  }

  if (const auto* d = std::get_if<ImuData>(&f.data)) {
    const int sb = slotOf(f.node_b);
    const ImuEval e = eval_imu(states[sa], states[sb], gravity, *d->pim);
    out.J_a = d->sqrt_info * e.J_i;
    out.J_b = d->sqrt_info * e.J_j;
    out.J_g = d->sqrt_info * e.J_gravity;
    out.r = d->sqrt_info * e.residual;
    out.cost = 0.5 * out.r.squaredNorm();
    return out;
  }

  auto robustify = [&](const RadarEval& e, Linearized* lin) {
    const int m = static_cast<int>(e.residual.size());
    lin->J_a.setZero(m, 15);
    lin->J_g.setZero(m, 2);
    lin->r.resize(m);
    for (int j = 0; j < m; ++j) {
      const double rw = e.residual[j] / e.sigma[j];
      const double s = std::sqrt(huber_weight(rw, cfg_.huber_delta)) / e.sigma[j];
      lin->r[j] = s * e.residual[j];
      lin->J_a.row(j) = s * e.J_x.row(j);
      lin->J_g.row(j) = s * e.J_gravity.row(j);
      lin->cost += huber_cost(rw, cfg_.huber_delta);
    }
  };

  if (const auto* d = std::get_if<RadarBaselineData>(&f.data)) {
    robustify(eval_radar_baseline(states[sa], d->scan, cfg_.extrinsics, cfg_.sigma_r),
              &out);
    out.J_g.setZero();  // baseline factor does not touch gravity
    return out;
  }
  if (const auto* d = std::get_if<RadarPreintData>(&f.data)) {
    robustify(eval_radar_preintegrated(states[sa], gravity, *d->pim, d->scan,
                                       cfg_.extrinsics, cfg_.sigma_r),
              &out);
    return out;
  }

  const auto& d = std::get<PriorData>(f.data);
  const PriorEval e = eval_prior(states[sa], gravity, d.prior);
  out.J_a = d.prior.sqrt_info * e.J_x;
  out.J_g = d.prior.sqrt_info * e.J_gravity;
  out.r = d.prior.sqrt_info * e.residual;
  out.cost = 0.5 * out.r.squaredNorm();
  return out;
}

double FixedLagSmoother::totalCost(const std::vector<NavState>& states,
                                   const GravityVar& gravity) const {
  double c = 0.0;
  for (const auto& f : factors_) c += factorCost(f, states, gravity);
  return c;
}

double FixedLagSmoother::costAt(const std::vector<NavState>& states,
                                const GravityVar& gravity) const {
  if (states.size() != nodes_.size()) {
    throw std::invalid_argument("costAt: state count must match nodes()");
  }
  return totalCost(states, gravity);
}

Eigen::VectorXd FixedLagSmoother::whitenedResidualsAt(
    const std::vector<NavState>& states, const GravityVar& gravity) const {
  if (states.size() != nodes_.size()) {
    throw std::invalid_argument(
        "whitenedResidualsAt: state count must match nodes()");
  }
  std::vector<Eigen::VectorXd> rows;
  Eigen::Index total = 0;
  for (const auto& f : factors_) {
    rows.push_back(linearizeFactor(f, states, gravity).r);
    total += rows.back().size();
  }
  Eigen::VectorXd out(total);
  Eigen::Index at = 0;
  for (const auto& r : rows) {
    out.segment(at, r.size()) = r;
    at += r.size();
  }
  return out;
}

double FixedLagSmoother::currentCost() const {
  std::vector<NavState> states;
  for (const auto& n : nodes_) states.push_back(n.state);
  return totalCost(states, gravity_);
}

SolveReport FixedLagSmoother::optimize() {
  ++optimize_calls_;
  SolveReport rep;
  const auto t_start = Clock::now();

  const size_t n = nodes_.size();
  std::vector<NavState> states;
  states.reserve(n);
  for (const auto& node : nodes_) states.push_back(node.state);
  GravityVar grav = gravity_;

  ChainSystem sys;
  double cost_cur = 0.0;
  double lambda = cfg_.optimizer.lambda_init;
  bool need_relin = true;

  std::vector<Vec15> dx;
  Vec2 dg;

  for (int it = 0; it < cfg_.optimizer.max_iterations; ++it) {
    const auto t_iter = Clock::now();

    if (need_relin) {
      sys.resize(n);
      cost_cur = 0.0;
      for (const auto& f : factors_) {
        const Linearized lin = linearizeFactor(f, states, grav);
        cost_cur += lin.cost;
        const int sa = slotOf(f.node_a);
        sys.D[sa].noalias() += lin.J_a.transpose() * lin.J_a;
        sys.b[sa].noalias() -= lin.J_a.transpose() * lin.r;
        sys.C[sa].noalias() += lin.J_a.transpose() * lin.J_g;
        sys.G.noalias() += lin.J_g.transpose() * lin.J_g;
        sys.bg.noalias() -= lin.J_g.transpose() * lin.r;
        if (f.node_b >= 0) {
          const int sb = slotOf(f.node_b);
          sys.D[sb].noalias() += lin.J_b.transpose() * lin.J_b;
          sys.B[sa].noalias() += lin.J_b.transpose() * lin.J_a;
          sys.C[sb].noalias() += lin.J_b.transpose() * lin.J_g;
          sys.b[sb].noalias() -= lin.J_b.transpose() * lin.r;
        }
      }
      need_relin = false;
    }

    if (it == 0) {
      rep.initial_cost = cost_cur;
      if (!std::isfinite(cost_cur)) {
        rep.diverged = true;
        failed_ = true;
        break;
      }
    }

    ++rep.iterations;
    ++total_iterations_;

    bool accepted = false;
    if (solve_chain(sys, lambda, &dx, &dg)) {
      std::vector<NavState> cand;
      cand.reserve(n);
      for (size_t i = 0; i < n; ++i) cand.push_back(states[i].retract(dx[i]));
      GravityVar gcand = grav;
      gcand.dir = s2_oplus(grav.dir, dg);

      const double cost_new = totalCost(cand, gcand);
      if (std::isfinite(cost_new)) {
        // denominator floor keeps already-converged (near-zero cost) windows
        // from iterating on numerical noise
        const double rel = (cost_cur - cost_new) / std::max(cost_cur, 1e-12);
        if (cost_new <= cost_cur) {
          states.swap(cand);
          grav = gcand;
          cost_cur = cost_new;
          need_relin = true;
          lambda = std::max(lambda * cfg_.optimizer.lambda_down, 1e-12);
          accepted = true;
          rep.iteration_wall_ns.push_back(elapsed_ns(t_iter));
          if (rel < cfg_.optimizer.rel_reduction_tol) {
            rep.converged = true;
            break;
          }
          continue;
        }
        if (std::abs(rel) < cfg_.optimizer.rel_reduction_tol) {
          // the step changes the cost by less than the threshold: done
          rep.converged = true;
          rep.iteration_wall_ns.push_back(elapsed_ns(t_iter));
          break;
        }
      }
    }
    if (!accepted) {
      lambda *= cfg_.optimizer.lambda_up;
      rep.iteration_wall_ns.push_back(elapsed_ns(t_iter));
      if (lambda > 1e12) break;  // damping exhausted; keep current estimates
    }
  }

  for (size_t i = 0; i < n; ++i) nodes_[i].state = states[i];
  gravity_ = grav;
  rep.final_cost = cost_cur;
  rep.wall_ns = elapsed_ns(t_start);

  bool finite = std::isfinite(cost_cur);
  for (const auto& node : nodes_) finite = finite && node.state.allFinite();
  if (!finite) {
    rep.diverged = true;
    failed_ = true;
  }

  reports_.push_back(rep);
  return rep;
}

void FixedLagSmoother::marginalizeWhileOverLag() {
  while (nodes_.size() >= 2 &&
         nodes_.back().t_ns - nodes_.front().t_ns >= lag_ns_) {
    marginalizeOldest();
  }
  if (!nodes_.empty()) imu_.trimBefore(nodes_.front().t_ns);
}

void FixedLagSmoother::marginalizeOldest() {
  const int64_t dead_id = nodes_.front().id;

  std::vector<size_t> touching;
  std::vector<int64_t> others;  // remaining nodes involved, window order
  for (size_t i = 0; i < factors_.size(); ++i) {
    const Factor& f = factors_[i];
    if (f.node_a != dead_id && f.node_b != dead_id) continue;
    touching.push_back(i);
    for (int64_t id : {f.node_a, f.node_b}) {
      if (id >= 0 && id != dead_id &&
          std::find(others.begin(), others.end(), id) == others.end()) {
        others.push_back(id);
      }
    }
  }
  std::sort(others.begin(), others.end(),
            [&](int64_t a, int64_t b) { return slotOf(a) < slotOf(b); });
  if (others.size() > 1) {
    // IMU factors only link consecutive nodes and the other factor types are
    // unary, so the marginal can never span more than the successor.
    throw std::logic_error("marginalizeOldest: unexpected factor connectivity");
  }

  const int dim = 15 + 15 * static_cast<int>(others.size()) + 2;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);

  auto local_offset = [&](int64_t id) -> int {
    if (id == dead_id) return 0;
    for (size_t k = 0; k < others.size(); ++k) {
      if (others[k] == id) return 15 + 15 * static_cast<int>(k);
    }
    return -1;
  };
  const int g_off = dim - 2;

  std::vector<NavState> states;
  for (const auto& node : nodes_) states.push_back(node.state);

  for (size_t idx : touching) {
    const Factor& f = factors_[idx];
    const Linearized lin = linearizeFactor(f, states, gravity_);
    std::vector<std::pair<int, const Eigen::MatrixXd*>> blocks;
    blocks.push_back({local_offset(f.node_a), &lin.J_a});
    if (f.node_b >= 0) blocks.push_back({local_offset(f.node_b), &lin.J_b});
    blocks.push_back({g_off, &lin.J_g});

    for (const auto& [ro, Jr] : blocks) {
      for (const auto& [co, Jc] : blocks) {
        H.block(ro, co, Jr->cols(), Jc->cols()).noalias() +=
            Jr->transpose() * (*Jc);
      }
      rhs.segment(ro, Jr->cols()).noalias() -= Jr->transpose() * lin.r;
    }
  }

  Eigen::MatrixXd H_marg;
  Eigen::VectorXd b_marg;
  schur_marginalize(H, rhs, 15, &H_marg, &b_marg);

  // Mean shift of the remaining variables implied by the eliminated node.
  Eigen::VectorXd mu;
  {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H_marg);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      mu = ldlt.solve(b_marg);
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H_marg);
      Eigen::VectorXd inv = eig.eigenvalues();
      const double floor = 1e-12 * std::max(1.0, inv.cwiseAbs().maxCoeff());
      for (int i = 0; i < inv.size(); ++i) {
        inv[i] = (inv[i] > floor) ? 1.0 / inv[i] : 0.0;
      }
      mu = eig.eigenvectors() * inv.asDiagonal() *
           eig.eigenvectors().transpose() * b_marg;
    }
    if (!mu.allFinite()) mu.setZero();
  }

  // Remove consumed factors and the node itself.
  for (auto it = touching.rbegin(); it != touching.rend(); ++it) {
    factors_.erase(factors_.begin() + static_cast<long>(*it));
  }
  nodes_.pop_front();

  if (nodes_.empty()) return;  // window reset; nothing to anchor

  // New prior over (next-oldest involved state, gravity), linearized at the
  // marginal mean.
  PriorFactor prior;
  Mat17 info = Mat17::Zero();
  int64_t anchor_id;
  if (!others.empty()) {
    anchor_id = others.front();
    const int slot = slotOf(anchor_id);
    prior.state_lin = nodes_[slot].state.retract(Vec15(mu.head<15>()));
    prior.gravity_lin = s2_oplus(gravity_.dir, Vec2(mu.tail<2>()));
    info = H_marg.topLeftCorner<17, 17>();
  } else {
    // Degenerate case: only gravity survives the marginal; anchor the new
    // oldest node with zero state information.
    anchor_id = nodes_.front().id;
    prior.state_lin = nodes_.front().state;
    prior.gravity_lin = s2_oplus(gravity_.dir, Vec2(mu.tail<2>()));
    info.bottomRightCorner<2, 2>() = H_marg.bottomRightCorner<2, 2>();
  }

  // The marginal was expressed in the S^2 tangent chart at the current
  // gravity estimate; the prior evaluates its residual in the chart at the
  // shifted linearization point, whose deterministic basis may even sit on
  // a different branch. Map the gravity block accordingly.
  {
    const Eigen::Matrix2d C =
        prior.gravity_lin.basis().transpose() * gravity_.dir.basis();
    const Eigen::Matrix2d C_inv = C.inverse();
    info.topRightCorner<15, 2>() = info.topRightCorner<15, 2>() * C_inv;
    info.bottomLeftCorner<2, 15>() =
        C_inv.transpose() * info.bottomLeftCorner<2, 15>();
    info.bottomRightCorner<2, 2>() =
        C_inv.transpose() * info.bottomRightCorner<2, 2>() * C_inv;
    info = 0.5 * (info + info.transpose());
  }

  Eigen::SelfAdjointEigenSolver<Mat17> eig(info);
  if (eig.eigenvalues().minCoeff() < 0.0) {
    ++prior_floor_repairs_;
    std::fprintf(stderr,
                 "[rlio] marginal information not PSD (min eig %.3e); "
                 "flooring at 1e-12\n",
                 eig.eigenvalues().minCoeff());
  }
  const Eigen::Matrix<double, 17, 1> vals = eig.eigenvalues().cwiseMax(1e-12);
  prior.sqrt_info =
      vals.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();

  Factor f;
  f.node_a = anchor_id;
  f.data = PriorData{prior};
  factors_.push_back(std::move(f));
}

}  // namespace rlio
