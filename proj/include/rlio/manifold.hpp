#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

// Minimal Lie-group toolkit for the smoother: SO(3), SE(3) and the unit
// sphere S^2. Conventions used throughout the project:
//   - se3 tangent ordering is (rotation, translation).
//   - Retractions are right perturbations: X <- X * Exp(delta).
//   - Angles below kSmallAngle use 4th-order Taylor fallbacks.
//   - so3_log returns the principal branch (norm <= pi). At exactly pi both
//     +/-axis represent the same rotation; the representative whose first
//     nonzero axis component is positive is returned.
//   - The tangent basis at a point of S^2 is built from the coordinate axis
//     with the smallest absolute component of the point (lowest index on
//     ties), so it is deterministic and reproducible.

namespace rlio {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

inline constexpr double kSmallAngle = 1e-8;

Mat3 skew(const Vec3& v);

/// Rotation in SO(3), stored as a unit quaternion (renormalized on every
/// construction and composition).
class Rot3 {
 public:
  Rot3() : q_(Eigen::Quaterniond::Identity()) {}
  explicit Rot3(const Eigen::Quaterniond& q) : q_(q.normalized()) {}
  explicit Rot3(const Mat3& m) : q_(Eigen::Quaterniond(m).normalized()) {}

  static Rot3 identity() { return Rot3(); }

  Rot3 operator*(const Rot3& other) const { return Rot3(q_ * other.q_); }
  Vec3 operator*(const Vec3& v) const { return q_ * v; }

  Rot3 inverse() const { return Rot3(q_.conjugate()); }
  Mat3 matrix() const { return q_.toRotationMatrix(); }
  const Eigen::Quaterniond& quaternion() const { return q_; }

  bool isApprox(const Rot3& other, double tol = 1e-12) const;

 private:
  Eigen::Quaterniond q_;
};

Rot3 so3_exp(const Vec3& w);
Vec3 so3_log(const Rot3& R);

/// Right Jacobian of SO(3): Exp(w + d) ~ Exp(w) * Exp(Jr(w) d).
Mat3 so3_right_jacobian(const Vec3& w);
Mat3 so3_right_jacobian_inverse(const Vec3& w);
/// Left Jacobian: Exp(w + d) ~ Exp(Jl(w) d) * Exp(w); Jl(w) = Jr(-w).
Mat3 so3_left_jacobian(const Vec3& w);
Mat3 so3_left_jacobian_inverse(const Vec3& w);

/// Rigid transform in SE(3).
class Pose3 {
 public:
  Pose3() : t_(Vec3::Zero()) {}
  Pose3(const Rot3& R, const Vec3& t) : R_(R), t_(t) {}

  static Pose3 identity() { return Pose3(); }

  Pose3 operator*(const Pose3& other) const {
    return Pose3(R_ * other.R_, t_ + R_ * other.t_);
  }
  Vec3 operator*(const Vec3& p) const { return R_ * p + t_; }

  Pose3 inverse() const {
    const Rot3 Rinv = R_.inverse();
    return Pose3(Rinv, -(Rinv * t_));
  }

  const Rot3& rotation() const { return R_; }
  const Vec3& translation() const { return t_; }

  bool isApprox(const Pose3& other, double tol = 1e-10) const {
    return R_.isApprox(other.R_, tol) && (t_ - other.t_).norm() <= tol;
  }

 private:
  Rot3 R_;
  Vec3 t_;
};

Pose3 se3_exp(const Vec6& xi);
Vec6 se3_log(const Pose3& T);

/// Inverse right Jacobian of SE(3), for residuals of the form
/// Log(M^-1 * T * Exp(delta)).
Mat6 se3_right_jacobian_inverse(const Vec6& xi);

/// Unit-norm 3-vector (bearings, gravity direction).
class UnitVec3 {
 public:
  UnitVec3() : v_(Vec3::UnitZ()) {}
  explicit UnitVec3(const Vec3& v);

  const Vec3& vector() const { return v_; }

  /// Deterministic orthonormal tangent basis at this point (columns span
  /// the plane orthogonal to the vector).
  Eigen::Matrix<double, 3, 2> basis() const;

 private:
  Vec3 v_;
};

/// Tangent-space difference on S^2: returns d with s2_oplus(b, d) = a.
/// Throws std::invalid_argument for antipodal inputs.
Vec2 s2_ominus(const UnitVec3& a, const UnitVec3& b);

/// Retraction on S^2 along the geodesic; requires |d| < pi.
UnitVec3 s2_oplus(const UnitVec3& b, const Vec2& d);

/// d s2_ominus(a, b) / d a, a 2x3 matrix (b held fixed).
Eigen::Matrix<double, 2, 3> s2_ominus_jacobian_a(const UnitVec3& a,
                                                 const UnitVec3& b);

}  // namespace rlio
