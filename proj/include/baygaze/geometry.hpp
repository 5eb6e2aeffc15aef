#ifndef BAYGAZE_GEOMETRY_HPP_
#define BAYGAZE_GEOMETRY_HPP_

#include <array>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace baygaze {

// Millimeters for 3D points, pixels for 2D.
using Vec3 = Eigen::Vector3d;
using Pixel = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;

constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Direction vector with norm 1 (to 1e-9) by construction.
class UnitVec3 {
 public:
  UnitVec3() : v_(0.0, 0.0, 1.0) {}
  // Normalizes; throws InvalidArgument for a zero or non-finite vector.
  explicit UnitVec3(const Vec3& v);
  UnitVec3(double x, double y, double z) : UnitVec3(Vec3(x, y, z)) {}
  // Keeps the components bit-for-bit; throws unless | |v| - 1 | <= 1e-9.
  static UnitVec3 trusted(const Vec3& v);

  const Vec3& vec() const { return v_; }
  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }
  double dot(const UnitVec3& o) const { return v_.dot(o.v_); }

  bool operator==(const UnitVec3& o) const { return v_ == o.v_; }

 private:
  Vec3 v_;
};

// Proper rotation: R^T R = I and det R = +1, both to 1e-9.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}
  // Throws InvalidArgument if the matrix is not a proper rotation.
  explicit Rotation(const Mat3& m);

  static Rotation identity() { return Rotation(); }
  static Rotation from_axis_angle(const Vec3& axis_times_angle);
  static Rotation about_x(double rad);
  static Rotation about_y(double rad);
  static Rotation about_z(double rad);
  // Head pose: yaw about y, then pitch about x, then roll about z
  // (R = Rz(roll) * Rx(pitch) * Ry(yaw)).
  static Rotation from_yaw_pitch_roll(double yaw, double pitch, double roll);
  // (w, x, y, z); need not be normalized.
  static Rotation from_quaternion(const std::array<double, 4>& q);

  std::array<double, 4> quaternion() const;
  const Mat3& matrix() const { return m_; }
  Rotation inverse() const;

  Vec3 operator*(const Vec3& p) const { return m_ * p; }
  Rotation operator*(const Rotation& o) const;

 private:
  struct Unchecked {};
  Rotation(const Mat3& m, Unchecked) : m_(m) {}

  Mat3 m_;
};

struct CameraIntrinsics {
  double fx = 500.0;
  double fy = 500.0;
  double cx = 32.0;
  double cy = 32.0;

  // Throws InvalidArgument unless fx, fy > 0.
  void validate() const;
  // Unit ray through a pixel, camera frame.
  UnitVec3 backproject(const Pixel& px) const;
};

// Rigid transform from a body frame into the camera frame.
struct Pose {
  Rotation rotation;
  Vec3 translation = Vec3(0.0, 0.0, 600.0);

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

// Pinhole projection u = fx x/z + cx, v = fy y/z + cy.
// Throws NonPositiveDepth when z <= 0.
Pixel project(const Vec3& point, const CameraIntrinsics& cam);

// Nearest intersection of the ray origin + t dir (t >= 0) with the sphere.
// Throws NoIntersection when the ray misses the sphere.
Vec3 ray_sphere_intersect(const Vec3& origin, const UnitVec3& dir,
                          const Vec3& center, double radius);

// Angle between two unit vectors in degrees, in [0, 180].
double angular_error_deg(const UnitVec3& g1, const UnitVec3& g2);

}  // namespace baygaze

#endif  // BAYGAZE_GEOMETRY_HPP_
