#include "baygaze/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "baygaze/error.hpp"

namespace baygaze {

UnitVec3::UnitVec3(const Vec3& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::kInvalidArgument, "cannot normalize a zero or non-finite vector");
  }
  v_ = v / n;
}

UnitVec3 UnitVec3::trusted(const Vec3& v) {
  if (!(std::abs(v.norm() - 1.0) <= 1e-9)) {
    throw Error(ErrorCode::kInvalidArgument, "vector is not unit length");
  }
  UnitVec3 u;
  u.v_ = v;
  return u;
}

Rotation::Rotation(const Mat3& m) : m_(m) {
  const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = m.determinant();
  if (!(ortho <= 1e-9) || !(std::abs(det - 1.0) <= 1e-9)) {
    std::ostringstream os;
    os << "not a proper rotation (orthonormality error " << ortho << ", det " << det << ")";
    throw Error(ErrorCode::kInvalidArgument, os.str());
  }
}

Rotation Rotation::from_axis_angle(const Vec3& axis_times_angle) {
  const double angle = axis_times_angle.norm();
  if (angle == 0.0) return Rotation();
  return Rotation(Eigen::AngleAxisd(angle, axis_times_angle / angle).toRotationMatrix(),
                  Unchecked{});
}

Rotation Rotation::about_x(double rad) {
  return Rotation(Eigen::AngleAxisd(rad, Vec3::UnitX()).toRotationMatrix(), Unchecked{});
}

Rotation Rotation::about_y(double rad) {
  return Rotation(Eigen::AngleAxisd(rad, Vec3::UnitY()).toRotationMatrix(), Unchecked{});
}

Rotation Rotation::about_z(double rad) {
  return Rotation(Eigen::AngleAxisd(rad, Vec3::UnitZ()).toRotationMatrix(), Unchecked{});
}

Rotation Rotation::from_yaw_pitch_roll(double yaw, double pitch, double roll) {
  return about_z(roll) * about_x(pitch) * about_y(yaw);
}

Rotation Rotation::from_quaternion(const std::array<double, 4>& q) {
  Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
  if (!(quat.norm() > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "zero quaternion");
  }
  quat.normalize();
  return Rotation(quat.toRotationMatrix(), Unchecked{});
}

std::array<double, 4> Rotation::quaternion() const {
  Eigen::Quaterniond q(m_);
  q.normalize();
  // Canonical sign: w >= 0.
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return {q.w(), q.x(), q.y(), q.z()};
}

Rotation Rotation::inverse() const { return Rotation(m_.transpose(), Unchecked{}); }

Rotation Rotation::operator*(const Rotation& o) const {
  return Rotation(m_ * o.m_, Unchecked{});
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "focal lengths must be positive");
  }
}

UnitVec3 CameraIntrinsics::backproject(const Pixel& px) const {
  return UnitVec3((px.x() - cx) / fx, (px.y() - cy) / fy, 1.0);
}

Pixel project(const Vec3& point, const CameraIntrinsics& cam) {
  if (!(point.z() > 0.0)) {
    throw Error(ErrorCode::kNonPositiveDepth, "point behind or on the camera plane");
  }
  return Pixel(cam.fx * point.x() / point.z() + cam.cx, cam.fy * point.y() / point.z() + cam.cy);
}

Vec3 ray_sphere_intersect(const Vec3& origin, const UnitVec3& dir, const Vec3& center,
                          double radius) {
  if (!(radius > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sphere radius must be positive");
  }
  // |o + t d - c|^2 = r^2 with |d| = 1: t^2 + 2 b t + c0 = 0.
  const Vec3 oc = origin - center;
  const double b = dir.vec().dot(oc);
  const double c0 = oc.squaredNorm() - radius * radius;
  const double disc = b * b - c0;
  if (disc < 0.0) {
    throw Error(ErrorCode::kNoIntersection, "ray misses the sphere");
  }
  const double root = std::sqrt(disc);
  double t = -b - root;
  if (t < 0.0) t = -b + root;  // origin inside the sphere
  if (t < 0.0) {
    throw Error(ErrorCode::kNoIntersection, "sphere lies behind the ray origin");
  }
  return origin + t * dir.vec();
}

double angular_error_deg(const UnitVec3& g1, const UnitVec3& g2) {
  const double c = std::clamp(g1.dot(g2), -1.0, 1.0);
  return rad_to_deg(std::acos(c));
}

}  // namespace baygaze
