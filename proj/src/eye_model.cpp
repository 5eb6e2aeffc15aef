#include "baygaze/eye_model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "baygaze/error.hpp"

namespace baygaze {

namespace {

constexpr int kMaxIterations = 100;
constexpr double kStepTolerance = 1e-10;
constexpr std::size_t kResiduals = 2 * kFacePoints;

using ResidualVec = Eigen::Matrix<double, kResiduals, 1>;
using Jacobian = Eigen::Matrix<double, kResiduals, 6>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

Mat3 skew(const Vec3& a) {
  Mat3 s;
  s << 0.0, -a.z(), a.y(), a.z(), 0.0, -a.x(), -a.y(), a.x(), 0.0;
  return s;
}

// Sum of squared reprojection residuals; +inf if a point leaves the
// half-space in front of the camera.
double reprojection(const Pose& pose, const LandmarkSet& z, const EyeModelParams& theta,
                    ResidualVec& r, Jacobian* jac) {
  const CameraIntrinsics& cam = theta.cam;
  for (std::size_t k = 0; k < kFacePoints; ++k) {
    const Vec3 rp = pose.rotation * theta.face_shape[k];
    const Vec3 q = rp + pose.translation;
    if (!(q.z() > 0.0)) return std::numeric_limits<double>::infinity();
    const double iz = 1.0 / q.z();
    r(2 * k) = cam.fx * q.x() * iz + cam.cx - z.facial[k].x();
    r(2 * k + 1) = cam.fy * q.y() * iz + cam.cy - z.facial[k].y();
    if (jac != nullptr) {
      Eigen::Matrix<double, 2, 3> dpi;
      dpi << cam.fx * iz, 0.0, -cam.fx * q.x() * iz * iz, 0.0, cam.fy * iz,
          -cam.fy * q.y() * iz * iz;
      jac->block<2, 3>(2 * k, 0) = dpi * (-skew(rp));
      jac->block<2, 3>(2 * k, 3) = dpi;
    }
  }
  return r.squaredNorm();
}

}  // namespace

const FaceShape& average_face_shape() {
  static const FaceShape shape = {
      Vec3(-47.0, 0.0, 6.0),    // tracked eye, outer corner
      Vec3(-17.0, 0.0, 3.0),    // tracked eye, inner corner
      Vec3(17.0, 0.0, 3.0),     // other eye, inner corner
      Vec3(47.0, 0.0, 6.0),     // other eye, outer corner
      Vec3(0.0, 2.0, -6.0),     // nose bridge
      Vec3(0.0, 38.0, -22.0),   // nose tip
      Vec3(-14.0, 46.0, -8.0),  // nostril
      Vec3(14.0, 46.0, -8.0),   // nostril
      Vec3(-25.0, 68.0, -2.0),  // mouth corner
      Vec3(25.0, 68.0, -2.0),   // mouth corner
      Vec3(0.0, 100.0, 0.0),    // chin
  };
  return shape;
}

Vec3 average_eyeball_offset() { return Vec3(-32.0, 0.0, 11.0); }

EyeModelParams EyeModelParams::average(const CameraIntrinsics& cam) {
  EyeModelParams p;
  p.face_shape = average_face_shape();
  p.eyeball_offset = average_eyeball_offset();
  p.eyeball_radius = kAverageEyeballRadius;
  p.kappa_h_deg = kAverageKappaH;
  p.kappa_v_deg = kAverageKappaV;
  p.cam = cam;
  return p;
}

void EyeModelParams::validate() const {
  cam.validate();
  if (!(eyeball_radius > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "eyeball radius must be positive");
  }
  if (!sigma_n.isApprox(sigma_n.transpose(), 1e-12)) {
    throw Error(ErrorCode::kInvalidArgument, "sigma_n must be symmetric");
  }
}

LandmarkSet LandmarkSet::from_vector(std::span<const double> z) {
  if (z.size() != kLandmarkDims) {
    throw Error(ErrorCode::kShapeMismatch, "landmark vector must have 24 entries");
  }
  LandmarkSet s;
  for (std::size_t k = 0; k < kFacePoints; ++k) s.facial[k] = Pixel(z[2 * k], z[2 * k + 1]);
  s.pupil = Pixel(z[2 * kFacePoints], z[2 * kFacePoints + 1]);
  return s;
}

std::array<double, kLandmarkDims> LandmarkSet::to_vector() const {
  std::array<double, kLandmarkDims> z{};
  for (std::size_t k = 0; k < kFacePoints; ++k) {
    z[2 * k] = facial[k].x();
    z[2 * k + 1] = facial[k].y();
  }
  z[2 * kFacePoints] = pupil.x();
  z[2 * kFacePoints + 1] = pupil.y();
  return z;
}

Pose canonical_pose_guess(const LandmarkSet& z, const EyeModelParams& theta) {
  Vec3 model_mean = Vec3::Zero();
  Pixel image_mean = Pixel::Zero();
  for (std::size_t k = 0; k < kFacePoints; ++k) {
    model_mean += theta.face_shape[k];
    image_mean += z.facial[k];
  }
  model_mean /= static_cast<double>(kFacePoints);
  image_mean /= static_cast<double>(kFacePoints);
  double model_spread = 0.0;
  double image_spread = 0.0;
  for (std::size_t k = 0; k < kFacePoints; ++k) {
    model_spread += (theta.face_shape[k] - model_mean).head<2>().squaredNorm();
    image_spread += (z.facial[k] - image_mean).squaredNorm();
  }
  const double f = 0.5 * (theta.cam.fx + theta.cam.fy);
  double depth = 600.0;
  if (image_spread > 0.0) depth = f * std::sqrt(model_spread / image_spread);
  Pose pose;
  pose.translation = Vec3((image_mean.x() - theta.cam.cx) * depth / theta.cam.fx - model_mean.x(),
                          (image_mean.y() - theta.cam.cy) * depth / theta.cam.fy - model_mean.y(),
                          depth - model_mean.z());
  return pose;
}

PoseFit fit_pose(const LandmarkSet& z, const EyeModelParams& theta, const Pose& init) {
  ResidualVec r;
  Jacobian jac;
  Pose pose = init;
  for (const Vec3& p : theta.face_shape) {
    if (!(pose.apply(p).z() > 0.0)) {
      throw Error(ErrorCode::kNonPositiveDepth, "initial pose puts a model point behind the camera");
    }
  }
  double cost = reprojection(pose, z, theta, r, &jac);
  if (!std::isfinite(cost)) {
    throw Error(ErrorCode::kInvalidArgument, "non-finite landmarks");
  }
  Mat6 normal = jac.transpose() * jac;
  Vec6 grad = jac.transpose() * r;

  Eigen::SelfAdjointEigenSolver<Mat6> eig(normal, Eigen::EigenvaluesOnly);
  const double max_ev = eig.eigenvalues().maxCoeff();
  if (!(eig.eigenvalues().minCoeff() > 1e-12 * max_ev)) {
    throw Error(ErrorCode::kDegenerateConfiguration, "pose normal equations are singular");
  }

  PoseFit out;
  double lambda = 1e-3;
  int it = 0;
  for (; it < kMaxIterations && cost > 0.0; ++it) {
    Mat6 damped = normal;
    damped.diagonal() += lambda * normal.diagonal();
    const Vec6 step = damped.ldlt().solve(-grad);
    Pose trial;
    trial.rotation = Rotation::from_axis_angle(step.head<3>()) * pose.rotation;
    trial.translation = pose.translation + step.tail<3>();
    ResidualVec r_trial;
    Jacobian jac_trial;
    const double trial_cost = reprojection(trial, z, theta, r_trial, &jac_trial);
    const double step_norm = step.norm();
    if (trial_cost < cost) {
      pose = trial;
      cost = trial_cost;
      r = r_trial;
      jac = jac_trial;
      normal = jac.transpose() * jac;
      grad = jac.transpose() * r;
      lambda = std::max(lambda * 0.1, 1e-12);
      if (step_norm < kStepTolerance) {
        out.converged = true;
        ++it;
        break;
      }
    } else {
      lambda *= 10.0;
      if (step_norm < kStepTolerance || lambda > 1e16) {
        // No representable descent left: a local minimum.
        out.converged = true;
        ++it;
        break;
      }
    }
  }
  if (cost == 0.0) out.converged = true;
  out.pose = pose;
  out.iterations = it;
  out.rms_px = std::sqrt(cost / static_cast<double>(kResiduals));
  return out;
}

UnitVec3 apply_kappa(const UnitVec3& optical, double kappa_h_deg, double kappa_v_deg,
                     const Rotation& head) {
  const Vec3 in_head = head.matrix().transpose() * optical.vec();
  const Vec3 rotated = Rotation::about_x(deg_to_rad(kappa_v_deg)) *
                       (Rotation::about_y(deg_to_rad(kappa_h_deg)) * in_head);
  return UnitVec3(head * rotated);
}

UnitVec3 remove_kappa(const UnitVec3& visual, double kappa_h_deg, double kappa_v_deg,
                      const Rotation& head) {
  const Vec3 in_head = head.matrix().transpose() * visual.vec();
  const Vec3 rotated = Rotation::about_y(-deg_to_rad(kappa_h_deg)) *
                       (Rotation::about_x(-deg_to_rad(kappa_v_deg)) * in_head);
  return UnitVec3(head * rotated);
}

GazeSolution solve_gaze(const LandmarkSet& z, const EyeModelParams& theta, const Pose& init,
                        PupilRayPolicy policy) {
  GazeSolution sol;
  sol.fit = fit_pose(z, theta, init);
  sol.eyeball_center = sol.fit.pose.apply(theta.eyeball_offset);
  const UnitVec3 ray = theta.cam.backproject(z.pupil);
  const Vec3 origin = Vec3::Zero();
  try {
    sol.pupil = ray_sphere_intersect(origin, ray, sol.eyeball_center, theta.eyeball_radius);
  } catch (const Error& e) {
    if (policy == PupilRayPolicy::kStrict || e.code() != ErrorCode::kNoIntersection) throw;
    const double t = std::max(0.0, ray.vec().dot(sol.eyeball_center - origin));
    const Vec3 closest = origin + t * ray.vec();
    sol.pupil = sol.eyeball_center +
                theta.eyeball_radius * (closest - sol.eyeball_center).normalized();
  }
  sol.optical_axis = UnitVec3(sol.pupil - sol.eyeball_center);
  sol.gaze = apply_kappa(sol.optical_axis, theta.kappa_h_deg, theta.kappa_v_deg,
                         sol.fit.pose.rotation);
  return sol;
}

UnitVec3 estimate_gaze(const LandmarkSet& z, const EyeModelParams& theta, PupilRayPolicy policy) {
  return solve_gaze(z, theta, canonical_pose_guess(z, theta), policy).gaze;
}

double gaze_log_density(const UnitVec3& g, const UnitVec3& mean, const Mat3& sigma_n) {
  Eigen::LLT<Mat3> llt(sigma_n);
  if (llt.info() != Eigen::Success || !sigma_n.isApprox(sigma_n.transpose(), 1e-12)) {
    throw Error(ErrorCode::kSingularCovariance, "sigma_n is not positive definite");
  }
  const Mat3 lower = llt.matrixL();
  if (!(lower.diagonal().minCoeff() > 0.0)) {
    throw Error(ErrorCode::kSingularCovariance, "sigma_n is not positive definite");
  }
  const Vec3 d = g.vec() - mean.vec();
  const Vec3 w = llt.matrixL().solve(d);
  const double log_det = 2.0 * lower.diagonal().array().log().sum();
  return -0.5 * w.squaredNorm() - 0.5 * (3.0 * std::log(2.0 * kPi) + log_det);
}

double gaze_log_density(const UnitVec3& g, const LandmarkSet& z, const EyeModelParams& theta) {
  // Check the covariance before paying for the geometry.
  Eigen::LLT<Mat3> llt(theta.sigma_n);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kSingularCovariance, "sigma_n is not positive definite");
  }
  return gaze_log_density(g, estimate_gaze(z, theta), theta.sigma_n);
}

Mat3 estimate_sigma_n(std::span<const LandmarkSet> landmarks, std::span<const UnitVec3> gaze_gt,
                      const EyeModelParams& theta) {
  if (landmarks.size() != gaze_gt.size()) {
    throw Error(ErrorCode::kShapeMismatch, "landmark and gaze counts differ");
  }
  const std::size_t n = landmarks.size();
  if (n < 30) {
    std::ostringstream os;
    os << "need at least 30 validation samples, got " << n;
    throw Error(ErrorCode::kInsufficientData, os.str());
  }
  std::vector<Vec3> res(n);
  Vec3 mean = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    res[i] = estimate_gaze(landmarks[i], theta).vec() - gaze_gt[i].vec();
    mean += res[i];
  }
  mean /= static_cast<double>(n);
  Mat3 cov = Mat3::Zero();
  for (const Vec3& r : res) cov += (r - mean) * (r - mean).transpose();
  return cov / static_cast<double>(n - 1);
}

}  // namespace baygaze
