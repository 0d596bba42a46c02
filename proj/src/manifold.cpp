#include "rlio/manifold.hpp"

#include <cmath>
#include <stdexcept>

namespace rlio {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

bool Rot3::isApprox(const Rot3& other, double tol) const {
  // Quaternions double-cover SO(3); compare up to sign.
  const double d = std::abs(q_.dot(other.q_));
  return std::abs(1.0 - d) <= tol;
}

Rot3 so3_exp(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  double scale;  // sin(theta/2) / theta
  double wq;     // cos(theta/2)
  if (theta < kSmallAngle) {
    scale = 0.5 - theta2 / 48.0 + theta2 * theta2 / 3840.0;
    wq = 1.0 - theta2 / 8.0 + theta2 * theta2 / 384.0;
  } else {
    scale = std::sin(0.5 * theta) / theta;
    wq = std::cos(0.5 * theta);
  }
  return Rot3(Eigen::Quaterniond(wq, scale * w.x(), scale * w.y(), scale * w.z()));
}

Vec3 so3_log(const Rot3& R) {
  Eigen::Quaterniond q = R.quaternion();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Vec3 v = q.vec();
  const double n = v.norm();
  const double w = q.w();
  if (n < kSmallAngle) {
    // angle ~ 2n/w; log ~ 2/w * (1 - n^2/(3 w^2)) * v
    return (2.0 / w) * (1.0 - n * n / (3.0 * w * w)) * v;
  }
  const double angle = 2.0 * std::atan2(n, w);
  Vec3 axis = v / n;
  if (w <= 0.0) {
    // angle == pi within roundoff; fix the axis-sign convention.
    for (int i = 0; i < 3; ++i) {
      if (std::abs(axis[i]) > 1e-12) {
        if (axis[i] < 0.0) axis = -axis;
        break;
      }
    }
    return M_PI * axis;
  }
  return angle * axis;
}

namespace {

// Coefficients for Jr(w) = I - c1 [w]x + c2 [w]x^2.
void right_jacobian_coeffs(double theta, double* c1, double* c2) {
  const double theta2 = theta * theta;
  if (theta < kSmallAngle) {
    *c1 = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
    *c2 = 1.0 / 6.0 - theta2 / 120.0 + theta2 * theta2 / 5040.0;
  } else {
    *c1 = (1.0 - std::cos(theta)) / theta2;
    *c2 = (theta - std::sin(theta)) / (theta2 * theta);
  }
}

}  // namespace

Mat3 so3_right_jacobian(const Vec3& w) {
  double c1, c2;
  right_jacobian_coeffs(w.norm(), &c1, &c2);
  const Mat3 W = skew(w);
  return Mat3::Identity() - c1 * W + c2 * W * W;
}

Mat3 so3_right_jacobian_inverse(const Vec3& w) {
  const double theta = w.norm();
  const double theta2 = theta * theta;
  double c;  // coefficient of [w]x^2 in Jr^-1 = I + 1/2 [w]x + c [w]x^2
  if (theta < kSmallAngle) {
    c = 1.0 / 12.0 + theta2 / 720.0;
  } else {
    // 1/theta^2 - cot(theta/2) / (2 theta); stable up to theta = pi.
    c = 1.0 / theta2 -
        std::cos(0.5 * theta) / (2.0 * theta * std::sin(0.5 * theta));
  }
  const Mat3 W = skew(w);
  return Mat3::Identity() + 0.5 * W + c * W * W;
}

Mat3 so3_left_jacobian(const Vec3& w) { return so3_right_jacobian(-w); }

Mat3 so3_left_jacobian_inverse(const Vec3& w) {
  return so3_right_jacobian_inverse(-w);
}

Pose3 se3_exp(const Vec6& xi) {
  const Vec3 w = xi.head<3>();
  const Vec3 rho = xi.tail<3>();
  return Pose3(so3_exp(w), so3_left_jacobian(w) * rho);
}

Vec6 se3_log(const Pose3& T) {
  const Vec3 w = so3_log(T.rotation());
  Vec6 xi;
  xi.head<3>() = w;
  xi.tail<3>() = so3_left_jacobian_inverse(w) * T.translation();
  return xi;
}

namespace {

// Q block of the SE(3) left Jacobian (Barfoot), with xi = (w, rho):
//   Jl_se3(xi) = [ Jl(w)   0    ]
//                [ Q(xi)   Jl(w)]
Mat3 se3_jacobian_q(const Vec3& w, const Vec3& rho) {
  const double theta = w.norm();
  const double theta2 = theta * theta;
  double cq1, cq2, cq3;
  if (theta < 1e-4) {
    cq1 = 1.0 / 6.0 - theta2 / 120.0;
    cq2 = 1.0 / 24.0 - theta2 / 720.0;
    cq3 = 1.0 / 120.0 - theta2 / 2520.0;
  } else {
    const double st = std::sin(theta);
    const double ct = std::cos(theta);
    cq1 = (theta - st) / (theta2 * theta);
    cq2 = (1.0 - 0.5 * theta2 - ct) / (theta2 * theta2);
    cq3 = (theta - st - theta2 * theta / 6.0) / (theta2 * theta2 * theta);
  }
  const Mat3 W = skew(w);
  const Mat3 P = skew(rho);
  const Mat3 WP = W * P;
  const Mat3 PW = P * W;
  const Mat3 WPW = WP * W;
  return 0.5 * P + cq1 * (WP + PW + WPW) - cq2 * (W * WP + PW * W - 3.0 * WPW) -
         0.5 * (cq2 - 3.0 * cq3) * (WPW * W + W * WPW);
}

}  // namespace

Mat6 se3_right_jacobian_inverse(const Vec6& xi) {
  const Vec3 w = xi.head<3>();
  const Vec3 rho = xi.tail<3>();
  const Mat3 Jinv = so3_right_jacobian_inverse(w);
  // Jr(xi) = Jl(-xi); Q(-xi) enters the off-diagonal of the inverse.
  const Mat3 Q = se3_jacobian_q(-w, -rho);
  Mat6 out = Mat6::Zero();
  out.topLeftCorner<3, 3>() = Jinv;
  out.bottomRightCorner<3, 3>() = Jinv;
  out.bottomLeftCorner<3, 3>() = -Jinv * Q * Jinv;
  return out;
}

UnitVec3::UnitVec3(const Vec3& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !v.allFinite()) {
    throw std::invalid_argument("UnitVec3: zero or non-finite vector");
  }
  v_ = v / n;
}

Eigen::Matrix<double, 3, 2> UnitVec3::basis() const {
  int k = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(v_[i]) < std::abs(v_[k])) k = i;
  }
  const Vec3 axis = Vec3::Unit(k);
  const Vec3 b1 = v_.cross(axis).normalized();
  const Vec3 b2 = v_.cross(b1);
  Eigen::Matrix<double, 3, 2> B;
  B.col(0) = b1;
  B.col(1) = b2;
  return B;
}

Vec2 s2_ominus(const UnitVec3& a, const UnitVec3& b) {
  const Vec3& av = a.vector();
  const Vec3& bv = b.vector();
  const double c = bv.dot(av);
  const double s = bv.cross(av).norm();
  if (c < 0.0 && s < 1e-9) {
    throw std::invalid_argument("s2_ominus: antipodal inputs");
  }
  const double theta = std::atan2(s, c);
  if (theta < kSmallAngle) {
    // a ~ b + tangent component; theta/s -> 1.
    return b.basis().transpose() * (av - c * bv);
  }
  const Vec3 u = (av - c * bv) / s;
  return theta * (b.basis().transpose() * u);
}

UnitVec3 s2_oplus(const UnitVec3& b, const Vec2& d) {
  const double theta = d.norm();
  if (theta < kSmallAngle) {
    return UnitVec3(b.vector() + b.basis() * d);
  }
  const Vec3 dir = (b.basis() * d) / theta;
  return UnitVec3(std::cos(theta) * b.vector() + std::sin(theta) * dir);
}

Eigen::Matrix<double, 2, 3> s2_ominus_jacobian_a(const UnitVec3& a,
                                                 const UnitVec3& b) {
  const Vec3& av = a.vector();
  const Vec3& bv = b.vector();
  const Eigen::Matrix<double, 3, 2> B = b.basis();
  const double c = bv.dot(av);
  const double s = bv.cross(av).norm();
  const double theta = std::atan2(s, c);
  if (theta < kSmallAngle) {
    return B.transpose();
  }
  const Vec3 w = av - c * bv;
  const Vec3 u = w / s;
  const Mat3 proj = (Mat3::Identity() - u * u.transpose()) *
                    (Mat3::Identity() - bv * bv.transpose());
  return B.transpose() *
         (-u * bv.transpose() / s + (theta / s) * proj);
}

}  // namespace rlio
