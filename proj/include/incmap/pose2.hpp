#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace incmap {

// Normalize an angle into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a <= 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

// Planar rigid transform (x, y, theta), theta kept in (-pi, pi].
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2() = default;
  Pose2(double x_, double y_, double theta_) : x(x_), y(y_), theta(wrap_angle(theta_)) {}

  static Pose2 identity() { return {}; }

  Eigen::Vector2d translation() const { return {x, y}; }

  Eigen::Matrix2d rotation() const {
    const double c = std::cos(theta), s = std::sin(theta);
    Eigen::Matrix2d r;
    r << c, -s, s, c;
    return r;
  }

  // this * other
  Pose2 compose(const Pose2& o) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return Pose2(x + c * o.x - s * o.y, y + s * o.x + c * o.y, theta + o.theta);
  }

  Pose2 inverse() const {
    const double c = std::cos(theta), s = std::sin(theta);
    return Pose2(-(c * x + s * y), -(-s * x + c * y), -theta);
  }

  // this^{-1} * other
  Pose2 between(const Pose2& o) const { return inverse().compose(o); }

  // Apply to a planar point.
  Eigen::Vector2d act(const Eigen::Vector2d& p) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {x + c * p.x() - s * p.y(), y + s * p.x() + c * p.y()};
  }
};

// Exponential map of a twist (vx, vy, omega) over unit time.
inline Pose2 exp_twist(const Eigen::Vector3d& xi) {
  const double w = xi.z();
  double a, b;  // V(theta) coefficients: sin(w)/w and (1-cos(w))/w
  if (std::abs(w) < 1e-4) {
    // Series avoids the 1-cos(w) cancellation near zero.
    const double w2 = w * w;
    a = 1.0 - w2 / 6.0 + w2 * w2 / 120.0;
    b = w / 2.0 - w * w2 / 24.0;
  } else {
    a = std::sin(w) / w;
    b = (1.0 - std::cos(w)) / w;
  }
  return Pose2(a * xi.x() - b * xi.y(), b * xi.x() + a * xi.y(), w);
}

// Adjoint of T on twists: Ad_T = [R, (t_y, -t_x)^T; 0, 1].
inline Eigen::Matrix3d adjoint(const Pose2& t) {
  Eigen::Matrix3d ad = Eigen::Matrix3d::Identity();
  ad.topLeftCorner<2, 2>() = t.rotation();
  ad(0, 2) = t.y;
  ad(1, 2) = -t.x;
  return ad;
}

}  // namespace incmap
