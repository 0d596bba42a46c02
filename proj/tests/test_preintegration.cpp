#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "rlio/preintegration.hpp"
#include "test_helpers.hpp"

using namespace rlio;
namespace tt = rlio::testing;

namespace {

constexpr double kGravityMag = 9.81;
const Vec3 kGravity(0.0, 0.0, -kGravityMag);

// Smooth body-frame test signals (arbitrary, just C^inf).
Vec3 omega_signal(double t) {
  return Vec3(0.8 * std::sin(2.0 * t + 0.3), 0.6 * std::cos(1.7 * t),
              0.5 * std::sin(1.1 * t + 1.0));
}
Vec3 accel_signal(double t) {
  return Vec3(1.5 * std::sin(1.3 * t), -2.0 * std::cos(0.9 * t + 0.5),
              9.0 + 0.8 * std::sin(2.2 * t));
}

std::vector<ImuSample> make_samples(double t0, double t1, double rate) {
  std::vector<ImuSample> out;
  const double dt = 1.0 / rate;
  for (double t = t0; t < t1 - 1e-12; t += dt) {
    ImuSample s;
    s.t_ns = to_nanoseconds(t);
    s.gyro = omega_signal(t);
    s.accel = accel_signal(t);
    out.push_back(s);
  }
  return out;
}

struct OracleDeltas {
  Rot3 dR;
  Vec3 dv = Vec3::Zero();
  Vec3 dp = Vec3::Zero();
};

// Brute-force integrator over the same zero-order-hold sample stream at a
// finer substep, written independently of PreintegratedImu.
OracleDeltas oracle_integrate(const std::vector<ImuSample>& samples,
                              double total_dt, const ImuBias& bias,
                              int substeps) {
  OracleDeltas o;
  const double dt = total_dt / static_cast<double>(samples.size());
  for (const ImuSample& s : samples) {
    const Vec3 w = s.gyro - bias.gyro;
    const Vec3 a = s.accel - bias.accel;
    const double h = dt / substeps;
    for (int k = 0; k < substeps; ++k) {
      const Vec3 a_rot = o.dR * (so3_exp(0.5 * h * w) * a);
      o.dp += o.dv * h + 0.5 * h * h * a_rot;
      o.dv += a_rot * h;
      o.dR = o.dR * so3_exp(h * w);
    }
  }
  return o;
}

// World-frame state propagation oracle (gravity included).
NavState oracle_propagate(const NavState& x0, const std::vector<ImuSample>& samples,
                          double total_dt, int substeps) {
  NavState x = x0;
  const double dt = total_dt / static_cast<double>(samples.size());
  for (const ImuSample& s : samples) {
    const Vec3 w = s.gyro - x0.bias.gyro;
    const Vec3 a = s.accel - x0.bias.accel;
    const double h = dt / substeps;
    for (int k = 0; k < substeps; ++k) {
      const Vec3 a_w = x.pose.rotation() * (so3_exp(0.5 * h * w) * a) + kGravity;
      x.pose = Pose3(x.pose.rotation() * so3_exp(h * w),
                     x.pose.translation() + x.velocity * h + 0.5 * h * h * a_w);
      x.velocity += a_w * h;
    }
  }
  return x;
}

PreintegratedImu integrate_all(const std::vector<ImuSample>& samples,
                               double total_dt, const ImuBias& bias,
                               const ImuNoiseParams& noise) {
  PreintegratedImu pim(bias, noise);
  const double dt = total_dt / static_cast<double>(samples.size());
  for (const ImuSample& s : samples) pim.integrate(s, dt);
  return pim;
}

}  // namespace

TEST_CASE("stationary constant-input closed form") {
  PreintegratedImu pim(ImuBias{}, ImuNoiseParams{});
  ImuSample s;
  s.accel = Vec3(0, 0, kGravityMag);
  s.gyro = Vec3::Zero();
  for (int i = 0; i < 20; ++i) pim.integrate(s, 0.005);

  CHECK(pim.deltaT() == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(pim.deltaR().isApprox(Rot3::identity(), 1e-14));
  CHECK((pim.deltaV() - Vec3(0, 0, 0.981)).norm() < 1e-12);
  CHECK((pim.deltaP() - Vec3(0, 0, 0.04905)).norm() < 1e-12);
}

TEST_CASE("pure rotation closed form") {
  PreintegratedImu pim(ImuBias{}, ImuNoiseParams{});
  ImuSample s;
  s.gyro = Vec3(0, 0, 1.0);
  for (int i = 0; i < 100; ++i) pim.integrate(s, 0.005);
  CHECK(pim.deltaR().isApprox(so3_exp(Vec3(0, 0, 0.5)), 1e-12));
}

TEST_CASE("integrate rejects nonpositive dt") {
  PreintegratedImu pim(ImuBias{}, ImuNoiseParams{});
  CHECK_THROWS_AS(pim.integrate(ImuSample{}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(pim.integrate(ImuSample{}, -0.01), std::invalid_argument);
}

TEST_CASE("deltas match 100x-finer-step oracle on a curved trajectory") {
  const ImuBias bias{Vec3(0.02, -0.01, 0.03), Vec3(0.002, 0.001, -0.003)};
  for (double t0 : {0.0, 0.35, 1.2}) {
    const auto samples = make_samples(t0, t0 + 0.1, 200.0);
    const auto pim = integrate_all(samples, 0.1, bias, ImuNoiseParams{});
    const auto oracle = oracle_integrate(samples, 0.1, bias, 100);

    CHECK(so3_log(oracle.dR.inverse() * pim.deltaR()).norm() < 1e-5);
    CHECK((pim.deltaV() - oracle.dv).norm() < 1e-5);
    CHECK((pim.deltaP() - oracle.dp).norm() < 1e-5);
  }
}

TEST_CASE("bias correction") {
  const ImuBias bias{Vec3(0.05, 0.02, -0.04), Vec3(0.004, -0.002, 0.001)};
  const auto samples = make_samples(0.2, 0.3, 200.0);
  const auto pim = integrate_all(samples, 0.1, bias, ImuNoiseParams{});

  SUBCASE("zero delta returns the raw deltas") {
    const auto c = pim.biasCorrected(bias);
    CHECK(c.dR.isApprox(pim.deltaR(), 1e-15));
    CHECK((c.dv - pim.deltaV()).norm() == 0.0);
    CHECK((c.dp - pim.deltaP()).norm() == 0.0);
  }

  SUBCASE("first-order correction matches re-integration for small deltas") {
    auto g = tt::rng(31);
    for (int i = 0; i < 10; ++i) {
      Vec6 db;
      db << tt::random_vec3(g, 1.0), tt::random_vec3(g, 1.0);
      db *= 1e-3 / db.norm();
      const ImuBias shifted = bias + db;
      const auto corrected = pim.biasCorrected(shifted);
      const auto reint = integrate_all(samples, 0.1, shifted, ImuNoiseParams{});
      CHECK(so3_log(reint.deltaR().inverse() * corrected.dR).norm() < 1e-5);
      CHECK((corrected.dv - reint.deltaV()).norm() < 1e-5);
      CHECK((corrected.dp - reint.deltaP()).norm() < 1e-5);
    }
  }

  SUBCASE("correction terms are linear in the bias delta") {
    Vec6 db;
    db << 1e-3, -2e-3, 0.5e-3, 2e-4, -1e-4, 3e-4;
    const auto plus = pim.biasCorrected(bias + db);
    const auto minus = pim.biasCorrected(bias + (-db).eval());
    CHECK((so3_log(pim.deltaR().inverse() * plus.dR) +
           so3_log(pim.deltaR().inverse() * minus.dR))
              .norm() < 1e-15);
    CHECK(((plus.dv - pim.deltaV()) + (minus.dv - pim.deltaV())).norm() < 1e-15);
    CHECK(((plus.dp - pim.deltaP()) + (minus.dp - pim.deltaP())).norm() < 1e-15);
  }
}

TEST_CASE("bias jacobians match central finite differences of re-integration") {
  const ImuBias bias{Vec3(0.03, -0.02, 0.01), Vec3(-0.003, 0.002, 0.004)};
  const auto samples = make_samples(0.6, 0.7, 200.0);
  const auto pim = integrate_all(samples, 0.1, bias, ImuNoiseParams{});

  const double h = 1e-5;
  Mat3 fd_R_bg, fd_v_ba, fd_v_bg, fd_p_ba, fd_p_bg;
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Zero();
    e[k] = h;
    const auto pa = integrate_all(samples, 0.1, ImuBias{bias.accel + e, bias.gyro},
                                  ImuNoiseParams{});
    const auto ma = integrate_all(samples, 0.1, ImuBias{bias.accel - e, bias.gyro},
                                  ImuNoiseParams{});
    fd_v_ba.col(k) = (pa.deltaV() - ma.deltaV()) / (2 * h);
    fd_p_ba.col(k) = (pa.deltaP() - ma.deltaP()) / (2 * h);

    const auto pg = integrate_all(samples, 0.1, ImuBias{bias.accel, bias.gyro + e},
                                  ImuNoiseParams{});
    const auto mg = integrate_all(samples, 0.1, ImuBias{bias.accel, bias.gyro - e},
                                  ImuNoiseParams{});
    fd_v_bg.col(k) = (pg.deltaV() - mg.deltaV()) / (2 * h);
    fd_p_bg.col(k) = (pg.deltaP() - mg.deltaP()) / (2 * h);
    fd_R_bg.col(k) =
        so3_log(mg.deltaR().inverse() * pg.deltaR()) / (2 * h);
  }
  CHECK(tt::relative_error(pim.dVdba(), fd_v_ba) < 1e-4);
  CHECK(tt::relative_error(pim.dPdba(), fd_p_ba) < 1e-4);
  CHECK(tt::relative_error(pim.dVdbg(), fd_v_bg) < 1e-4);
  CHECK(tt::relative_error(pim.dPdbg(), fd_p_bg) < 1e-4);
  CHECK(tt::relative_error(pim.dRdbg(), fd_R_bg) < 1e-4);
}

TEST_CASE("predict gravity cancellation at rest") {
  PreintegratedImu pim(ImuBias{}, ImuNoiseParams{});
  ImuSample s;
  s.accel = Vec3(0, 0, kGravityMag);
  for (int i = 0; i < 10; ++i) pim.integrate(s, 0.005);

  NavState rest;
  const auto [R, v] = pim.predictAttitudeVelocity(rest, kGravity);
  CHECK(R.isApprox(Rot3::identity(), 1e-14));
  CHECK(v.norm() < 1e-12);
}

TEST_CASE("empty pim predicts the input state") {
  PreintegratedImu pim(ImuBias{}, ImuNoiseParams{});
  auto g = tt::rng(32);
  const NavState x = tt::random_state(g);
  const auto [R, v] = pim.predictAttitudeVelocity(x, kGravity);
  CHECK(R.isApprox(x.pose.rotation(), 1e-15));
  CHECK((v - x.velocity).norm() == 0.0);
  const NavState px = pim.predictState(x, kGravity);
  CHECK(px.pose.isApprox(x.pose, 1e-15));
}

TEST_CASE("predicted velocity matches fine-step world propagation") {
  auto g = tt::rng(33);
  NavState x0 = tt::random_state(g);
  x0.bias = ImuBias{};  // signals already bias-free
  const auto samples = make_samples(0.9, 1.0, 200.0);
  const auto pim = integrate_all(samples, 0.1, ImuBias{}, ImuNoiseParams{});
  const NavState truth = oracle_propagate(x0, samples, 0.1, 100);

  const auto [R, v] = pim.predictAttitudeVelocity(x0, kGravity);
  CHECK((v - truth.velocity).norm() < 1e-4);
  CHECK(so3_log(truth.pose.rotation().inverse() * R).norm() < 1e-5);

  const NavState pred = pim.predictState(x0, kGravity);
  CHECK((pred.pose.translation() - truth.pose.translation()).norm() < 1e-4);
}

TEST_CASE("concatenation consistency") {
  const ImuBias bias{Vec3(0.01, 0.0, -0.02), Vec3(0.001, -0.001, 0.002)};
  const auto s_ab = make_samples(0.0, 0.1, 200.0);
  const auto s_bc = make_samples(0.1, 0.2, 200.0);
  auto s_ac = s_ab;
  s_ac.insert(s_ac.end(), s_bc.begin(), s_bc.end());

  const auto pim_ab = integrate_all(s_ab, 0.1, bias, ImuNoiseParams{});
  const auto pim_bc = integrate_all(s_bc, 0.1, bias, ImuNoiseParams{});
  const auto pim_ac = integrate_all(s_ac, 0.2, bias, ImuNoiseParams{});

  auto g = tt::rng(34);
  NavState x0 = tt::random_state(g);
  x0.bias = bias;
  const NavState mid = pim_ab.predictState(x0, kGravity);
  const NavState two = pim_bc.predictState(mid, kGravity);
  const NavState one = pim_ac.predictState(x0, kGravity);

  CHECK((two.pose.translation() - one.pose.translation()).norm() < 1e-8);
  CHECK((two.velocity - one.velocity).norm() < 1e-8);
  CHECK(so3_log(two.pose.rotation().inverse() * one.pose.rotation()).norm() <
        1e-8);
}

TEST_CASE("covariance grows in the PSD order; zero densities give zero") {
  ImuNoiseParams zero{};
  zero.accel_noise_density = 0.0;
  zero.gyro_noise_density = 0.0;
  PreintegratedImu quiet(ImuBias{}, zero);

  PreintegratedImu noisy(ImuBias{}, ImuNoiseParams{});
  Mat9 prev = Mat9::Zero();
  const auto samples = make_samples(0.0, 0.2, 200.0);
  for (const auto& s : samples) {
    quiet.integrate(s, 0.005);
    noisy.integrate(s, 0.005);
    const Mat9 diff = noisy.covariance() - prev;
    Eigen::SelfAdjointEigenSolver<Mat9> eig(diff);
    CHECK(eig.eigenvalues().minCoeff() > -1e-12);
    prev = noisy.covariance();
  }
  CHECK(quiet.covariance().cwiseAbs().maxCoeff() == 0.0);

  Eigen::SelfAdjointEigenSolver<Mat9> eig(noisy.covariance());
  CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
  CHECK((noisy.covariance() - noisy.covariance().transpose()).cwiseAbs().maxCoeff() <
        1e-18);
}

TEST_CASE("ImuBuffer interval integration with sample splitting") {
  ImuBuffer buf;
  for (double t = 0.0; t < 0.2; t += 0.005) {
    ImuSample s;
    s.t_ns = to_nanoseconds(t);
    s.gyro = omega_signal(t);
    s.accel = accel_signal(t);
    buf.push(s);
  }

  // node times in the middle of sample intervals
  const int64_t t0 = to_nanoseconds(0.0125), t1 = to_nanoseconds(0.1675);
  const auto pim = buf.integrate(t0, t1, ImuBias{}, ImuNoiseParams{});
  CHECK(pim.deltaT() == doctest::Approx(0.155).epsilon(1e-12));

  // degenerate interval
  const auto empty = buf.integrate(t0, t0, ImuBias{}, ImuNoiseParams{});
  CHECK(empty.deltaT() == 0.0);
  CHECK(empty.deltaR().isApprox(Rot3::identity(), 1e-16));

  CHECK_THROWS_AS(buf.integrate(t1, t0, ImuBias{}, ImuNoiseParams{}),
                  std::invalid_argument);

  ImuSample bad;
  bad.t_ns = buf.lastTime();
  CHECK_THROWS_AS(buf.push(bad), std::invalid_argument);
}

TEST_CASE("ImuBuffer gyroAt") {
  ImuBuffer buf;
  for (double t = 0.0; t <= 0.1 + 1e-12; t += 0.025) {
    ImuSample s;
    s.t_ns = to_nanoseconds(t);
    s.gyro = Vec3(t, 2 * t, -t);
    buf.push(s);
  }
  // exact hit
  CHECK((buf.gyroAt(to_nanoseconds(0.05)) - Vec3(0.05, 0.1, -0.05)).norm() <
        1e-15);
  // nearest within 10 ms
  CHECK((buf.gyroAt(to_nanoseconds(0.053)) - Vec3(0.05, 0.1, -0.05)).norm() <
        1e-15);
  // between samples, farther than 10 ms from both: interpolation
  const Vec3 mid = buf.gyroAt(to_nanoseconds(0.0125));
  CHECK((mid - Vec3(0.0125, 0.025, -0.0125)).norm() < 1e-12);
  // way outside
  CHECK_THROWS_AS(buf.gyroAt(to_nanoseconds(0.5)), std::out_of_range);
}
