#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "baygaze/geometry.hpp"
#include "baygaze/rng.hpp"
#include "test_util.hpp"

namespace baygaze {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

CameraIntrinsics cam500() { return CameraIntrinsics{500.0, 500.0, 32.0, 32.0}; }

Vec3 random_vec(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return Vec3(u(rng), u(rng), u(rng));
}

TEST(Geometry, UnitVecNormalizes) {
  const UnitVec3 g(Vec3(3.0, 4.0, 12.0));
  EXPECT_NEAR(g.vec().norm(), 1.0, 1e-12);
  EXPECT_NEAR(g.x(), 3.0 / 13.0, 1e-15);
}

TEST(Geometry, UnitVecRejectsZeroAndNaN) {
  EXPECT_ERROR_CODE(UnitVec3(Vec3::Zero()), ErrorCode::kInvalidArgument);
  EXPECT_ERROR_CODE(UnitVec3(Vec3(NAN, 0.0, 1.0)), ErrorCode::kInvalidArgument);
  EXPECT_ERROR_CODE(UnitVec3::trusted(Vec3(0.0, 0.0, 1.1)), ErrorCode::kInvalidArgument);
}

TEST(Geometry, UnitVecNormProperty) {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    Vec3 v = random_vec(rng, -1e3, 1e3);
    if (v.norm() < 1e-9) continue;
    EXPECT_NEAR(UnitVec3(v).vec().norm(), 1.0, 1e-9);
  }
}

TEST(Geometry, RotationRejectsImproperMatrices) {
  Mat3 reflect = Mat3::Identity();
  reflect(2, 2) = -1.0;
  EXPECT_ERROR_CODE(Rotation{reflect}, ErrorCode::kInvalidArgument);
  EXPECT_ERROR_CODE(Rotation{Mat3::Identity() * 1.01}, ErrorCode::kInvalidArgument);
}

TEST(Geometry, RotationInvariantsOnRandomDraws) {
  Rng rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    const Rotation r = Rotation::from_axis_angle(Vec3(u(rng), u(rng), u(rng)));
    const Mat3& m = r.matrix();
    EXPECT_LT((m.transpose() * m - Mat3::Identity()).norm(), 1e-9);
    EXPECT_NEAR(m.determinant(), 1.0, 1e-9);
    const Rotation yp = Rotation::from_yaw_pitch_roll(u(rng), u(rng), u(rng));
    EXPECT_NEAR(yp.matrix().determinant(), 1.0, 1e-9);
  }
}

TEST(Geometry, QuaternionRoundTrip) {
  Rng rng(6);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const Rotation r = Rotation::from_axis_angle(Vec3(u(rng), u(rng), u(rng)));
    const Rotation back = Rotation::from_quaternion(r.quaternion());
    EXPECT_LT((back.matrix() - r.matrix()).norm(), 1e-12);
  }
}

TEST(Geometry, YawPitchRollOrder) {
  const double y = 0.3, p = -0.2, r = 0.1;
  const Mat3 expected = (Rotation::about_z(r) * Rotation::about_x(p) * Rotation::about_y(y)).matrix();
  EXPECT_LT((Rotation::from_yaw_pitch_roll(y, p, r).matrix() - expected).norm(), 1e-15);
}

TEST(Geometry, ProjectOnAxisHitsPrincipalPoint) {
  const Pixel px = project(Vec3(0.0, 0.0, 600.0), cam500());
  EXPECT_DOUBLE_EQ(px.x(), 32.0);
  EXPECT_DOUBLE_EQ(px.y(), 32.0);
}

TEST(Geometry, ProjectHandArithmetic) {
  EXPECT_NEAR(project(Vec3(60.0, 0.0, 600.0), cam500()).x(), 500.0 * 60.0 / 600.0 + 32.0, 1e-12);
}

TEST(Geometry, ProjectBehindCameraThrows) {
  EXPECT_ERROR_CODE(project(Vec3(0.0, 0.0, -1.0), cam500()), ErrorCode::kNonPositiveDepth);
  EXPECT_ERROR_CODE(project(Vec3(1.0, 0.0, 0.0), cam500()), ErrorCode::kNonPositiveDepth);
}

TEST(Geometry, ProjectScaleInvariance) {
  Rng rng(7);
  std::uniform_real_distribution<double> lam(0.01, 100.0);
  for (int i = 0; i < 500; ++i) {
    Vec3 p = random_vec(rng, -200.0, 200.0);
    p.z() = std::abs(p.z()) + 1.0;
    const double l = lam(rng);
    EXPECT_LT((project(l * p, cam500()) - project(p, cam500())).norm(), 1e-9);
  }
}

TEST(Geometry, IntrinsicsValidate) {
  EXPECT_ERROR_CODE((CameraIntrinsics{0.0, 500.0, 0.0, 0.0}.validate()), ErrorCode::kInvalidArgument);
  EXPECT_ERROR_CODE((CameraIntrinsics{500.0, -1.0, 0.0, 0.0}.validate()), ErrorCode::kInvalidArgument);
  EXPECT_NO_THROW(cam500().validate());
}

TEST(Geometry, BackprojectInvertsProjection) {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    Vec3 p = random_vec(rng, -100.0, 100.0);
    p.z() += 700.0;
    const UnitVec3 ray = cam500().backproject(project(p, cam500()));
    EXPECT_LT((ray.vec() - p.normalized()).norm(), 1e-12);
  }
}

TEST(Geometry, RaySphereAxialHit) {
  const Vec3 hit = ray_sphere_intersect(Vec3::Zero(), UnitVec3(0, 0, 1), Vec3(0, 0, 600), 12.0);
  EXPECT_NEAR((hit - Vec3(0, 0, 588)).norm(), 0.0, 1e-12);
}

TEST(Geometry, RaySphereMiss) {
  EXPECT_ERROR_CODE(ray_sphere_intersect(Vec3::Zero(), UnitVec3(0, 0, 1), Vec3(100, 0, 600), 12.0),
                    ErrorCode::kNoIntersection);
}

TEST(Geometry, RaySphereTangent) {
  const Vec3 hit = ray_sphere_intersect(Vec3::Zero(), UnitVec3(0, 0, 1), Vec3(12, 0, 600), 12.0);
  EXPECT_NEAR((hit - Vec3(0, 0, 600)).norm(), 0.0, 1e-9);
}

TEST(Geometry, RaySphereRejectsBadRadius) {
  EXPECT_ERROR_CODE(ray_sphere_intersect(Vec3::Zero(), UnitVec3(0, 0, 1), Vec3(0, 0, 600), 0.0),
                    ErrorCode::kInvalidArgument);
}

TEST(Geometry, RaySpherePropertiesOnRandomRays) {
  Rng rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int hits = 0;
  for (int i = 0; i < 2000; ++i) {
    const Vec3 center(20.0 * u(rng), 20.0 * u(rng), 600.0 + 50.0 * u(rng));
    const double radius = 10.0 + 5.0 * u(rng);
    const UnitVec3 dir(Vec3(0.03 * u(rng), 0.03 * u(rng), 1.0));
    const Vec3 origin(u(rng), u(rng), u(rng));
    try {
      const Vec3 hit = ray_sphere_intersect(origin, dir, center, radius);
      ++hits;
      EXPECT_NEAR((hit - center).norm(), radius, 1e-9);
      const double t = (hit - origin).dot(dir.vec());
      EXPECT_GE(t, 0.0);
      EXPECT_LT((origin + t * dir.vec() - hit).norm(), 1e-9);
      // Nearest root: the far side is at least as far along the ray.
      const double t_far = 2.0 * (center - origin).dot(dir.vec()) - t;
      EXPECT_LE(t, t_far + 1e-9);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kNoIntersection);
    }
  }
  EXPECT_GT(hits, 100);
}

TEST(Geometry, AngularErrorExamples) {
  const UnitVec3 z(0, 0, 1);
  EXPECT_EQ(angular_error_deg(z, z), 0.0);
  EXPECT_NEAR(angular_error_deg(z, UnitVec3(0, 1, 0)), 90.0, 1e-12);
  EXPECT_NEAR(angular_error_deg(z, UnitVec3(0, std::sin(5 * kDeg), std::cos(5 * kDeg))), 5.0, 1e-9);
  EXPECT_NEAR(angular_error_deg(z, UnitVec3(0, 0, -1)), 180.0, 1e-12);
}

TEST(Geometry, AngularErrorSymmetryAndTriangle) {
  Rng rng(10);
  std::normal_distribution<double> n;
  for (int i = 0; i < 1000; ++i) {
    const UnitVec3 a(n(rng), n(rng), n(rng));
    const UnitVec3 b(n(rng), n(rng), n(rng));
    const UnitVec3 c(n(rng), n(rng), n(rng));
    const double ab = angular_error_deg(a, b);
    EXPECT_EQ(ab, angular_error_deg(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 180.0);
    EXPECT_LE(angular_error_deg(a, c), ab + angular_error_deg(b, c) + 1e-9);
  }
}

}  // namespace
}  // namespace baygaze
