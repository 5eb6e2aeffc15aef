#ifndef BAYGAZE_EYE_MODEL_HPP_
#define BAYGAZE_EYE_MODEL_HPP_

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "baygaze/geometry.hpp"

namespace baygaze {

constexpr std::size_t kFacePoints = 11;
constexpr std::size_t kLandmarks = kFacePoints + 1;  // facial points + pupil center
constexpr std::size_t kLandmarkDims = 2 * kLandmarks;

// Distance of the cornea center from the eyeball center along the optical
// axis, as a fraction of the eyeball radius.
constexpr double kCorneaOffsetFraction = 0.45;

using FaceShape = std::array<Vec3, kFacePoints>;

// Human-average rigid face template in the head frame (mm). The head frame
// has x towards image right, y down and z away from the camera for a
// frontal pose; its origin sits between the eye corners.
const FaceShape& average_face_shape();
// Center of the tracked eyeball in the head frame (mm).
Vec3 average_eyeball_offset();
constexpr double kAverageEyeballRadius = 12.0;
constexpr double kAverageKappaH = 5.0;
constexpr double kAverageKappaV = 1.2;

// Geometric parameters of the eye-face model.
struct EyeModelParams {
  FaceShape face_shape;
  Vec3 eyeball_offset;
  double eyeball_radius = kAverageEyeballRadius;
  double kappa_h_deg = kAverageKappaH;
  double kappa_v_deg = kAverageKappaV;
  CameraIntrinsics cam;
  Mat3 sigma_n = Mat3::Identity() * 1e-3;

  // Average template, 12 mm eyeball, kappa (5.0, 1.2) degrees.
  static EyeModelParams average(const CameraIntrinsics& cam);

  void validate() const;
};

struct LandmarkSet {
  std::array<Pixel, kFacePoints> facial;
  Pixel pupil;

  // Interleaved (u0, v0, u1, v1, ...), pupil last.
  static LandmarkSet from_vector(std::span<const double> z);
  std::array<double, kLandmarkDims> to_vector() const;
};

struct PoseFit {
  Pose pose;
  double rms_px = 0.0;
  int iterations = 0;
  bool converged = false;  // false: max iterations hit, best iterate returned
};

// Levenberg-damped Gauss-Newton on the facial reprojection error.
// Throws DegenerateConfiguration when the normal equations are singular at
// the initial pose and NonPositiveDepth when a model point starts behind the
// camera.
PoseFit fit_pose(const LandmarkSet& z, const EyeModelParams& theta, const Pose& init);

// Frontal pose whose depth and offset match the spread and centroid of the
// observed facial landmarks.
Pose canonical_pose_guess(const LandmarkSet& z, const EyeModelParams& theta);

// Visual axis from the optical axis: rotate about the head-frame y axis by
// kappa_h, then about the head-frame x axis by kappa_v.
UnitVec3 apply_kappa(const UnitVec3& optical, double kappa_h_deg, double kappa_v_deg,
                     const Rotation& head);
UnitVec3 remove_kappa(const UnitVec3& visual, double kappa_h_deg, double kappa_v_deg,
                      const Rotation& head);

enum class PupilRayPolicy {
  kStrict,             // NoIntersection when the pupil ray misses the eyeball
  kClampToSilhouette,  // use the sphere point closest to the missing ray
};

struct GazeSolution {
  UnitVec3 gaze;  // visual axis, camera frame
  UnitVec3 optical_axis;
  Vec3 eyeball_center;
  Vec3 pupil;
  PoseFit fit;
};

GazeSolution solve_gaze(const LandmarkSet& z, const EyeModelParams& theta, const Pose& init,
                        PupilRayPolicy policy = PupilRayPolicy::kStrict);

// h(z; theta) with a canonical initial pose.
UnitVec3 estimate_gaze(const LandmarkSet& z, const EyeModelParams& theta,
                       PupilRayPolicy policy = PupilRayPolicy::kStrict);

// log N(g; h(z; theta), sigma_n). Throws SingularCovariance unless sigma_n
// is positive definite.
double gaze_log_density(const UnitVec3& g, const LandmarkSet& z, const EyeModelParams& theta);
// Same density around a precomputed mean direction.
double gaze_log_density(const UnitVec3& g, const UnitVec3& mean, const Mat3& sigma_n);

// Covariance of the residuals h(z_gt; theta) - g_gt over validation samples.
// Throws InsufficientData for fewer than 30 samples.
Mat3 estimate_sigma_n(std::span<const LandmarkSet> landmarks, std::span<const UnitVec3> gaze_gt,
                      const EyeModelParams& theta);

}  // namespace baygaze

#endif  // BAYGAZE_EYE_MODEL_HPP_
