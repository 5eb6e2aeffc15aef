#include "baygaze/synth.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "baygaze/error.hpp"
#include "baygaze/parallel.hpp"

namespace baygaze {

namespace {

constexpr double kBackground = 0.15;
constexpr double kFace = 0.80;
constexpr double kSclera = 0.95;
constexpr double kIris = 0.35;
constexpr double kPupil = 0.05;
constexpr double kStroke = 0.55;
constexpr double kPupilRadiusMm = 1.8;
constexpr double kStrokeHalfWidth = 0.6;

struct Ellipse {
  Pixel center;
  double a = 0.0;  // semi-axis along `angle`
  double b = 0.0;
  double cos_t = 1.0;
  double sin_t = 0.0;

  bool contains(const Pixel& p) const {
    const Pixel d = p - center;
    const double u = d.x() * cos_t + d.y() * sin_t;
    const double v = -d.x() * sin_t + d.y() * cos_t;
    return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
  }
};

struct Disk {
  Pixel center;
  double r = 0.0;
  bool contains(const Pixel& p) const { return (p - center).squaredNorm() <= r * r; }
};

struct Segment {
  Pixel a;
  Pixel b;
  double distance(const Pixel& p) const {
    const Pixel ab = b - a;
    const double len2 = ab.squaredNorm();
    double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
  }
};

struct EyeShapes {
  Ellipse sclera;
  Disk iris;
  Disk pupil;
};

struct FaceShapes {
  Ellipse face;
  std::array<Segment, 3> strokes;
  std::array<EyeShapes, 2> eyes;

  double intensity(const Pixel& p) const {
    double value = kBackground;
    if (face.contains(p)) value = kFace;
    for (const Segment& s : strokes) {
      if (s.distance(p) <= kStrokeHalfWidth) value = kStroke;
    }
    for (const EyeShapes& e : eyes) {
      if (!e.sclera.contains(p)) continue;
      value = kSclera;
      if (e.iris.contains(p)) value = kIris;
      if (e.pupil.contains(p)) value = kPupil;
    }
    return value;
  }
};

Ellipse eye_opening(const Pixel& c0, const Pixel& c1) {
  Ellipse e;
  const Pixel d = c1 - c0;
  e.center = 0.5 * (c0 + c1);
  e.a = 0.5 * d.norm();
  e.b = 0.45 * e.a;
  const double angle = std::atan2(d.y(), d.x());
  e.cos_t = std::cos(angle);
  e.sin_t = std::sin(angle);
  return e;
}

EyeShapes eye_shapes(const Pixel& corner0, const Pixel& corner1, const Vec3& center,
                     const UnitVec3& optical, double radius, double iris_radius,
                     const CameraIntrinsics& cam) {
  EyeShapes s;
  s.sclera = eye_opening(corner0, corner1);
  const double iris_depth = std::sqrt(std::max(radius * radius - iris_radius * iris_radius, 0.0));
  const Vec3 iris_center = center + iris_depth * optical.vec();
  const Vec3 pupil = center + radius * optical.vec();
  s.iris.center = project(iris_center, cam);
  s.iris.r = iris_radius * cam.fx / iris_center.z();
  s.pupil.center = project(pupil, cam);
  s.pupil.r = kPupilRadiusMm * cam.fx / pupil.z();
  return s;
}

// Optical axis whose kappa-rotated visual axis, leaving the cornea center,
// passes through the target.
UnitVec3 optical_axis_towards(const Vec3& target, const Vec3& eyeball_center, double radius,
                              double kappa_h, double kappa_v, const Rotation& head) {
  UnitVec3 optical(target - eyeball_center);
  for (int it = 0; it < 100; ++it) {
    const Vec3 cornea = eyeball_center + kCorneaOffsetFraction * radius * optical.vec();
    const UnitVec3 visual(target - cornea);
    const UnitVec3 next = remove_kappa(visual, kappa_h, kappa_v, head);
    const double change = (next.vec() - optical.vec()).norm();
    optical = next;
    if (change < 1e-15) break;
  }
  return optical;
}

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

SubjectParams SubjectParams::average() {
  SubjectParams s;
  s.face = average_face_shape();
  s.eyeball_offset = average_eyeball_offset();
  return s;
}

EyeModelParams SubjectParams::eye_model(const CameraIntrinsics& cam) const {
  EyeModelParams p = EyeModelParams::average(cam);
  p.face_shape = face;
  p.eyeball_offset = eyeball_offset;
  p.eyeball_radius = eyeball_radius;
  p.kappa_h_deg = kappa_h_deg;
  p.kappa_v_deg = kappa_v_deg;
  return p;
}

Vec3 SubjectParams::other_eyeball_offset() const {
  return Vec3(-eyeball_offset.x(), eyeball_offset.y(), eyeball_offset.z());
}

LandmarkSet SyntheticSample::landmark_set() const {
  LandmarkSet s;
  for (std::size_t k = 0; k < kFacePoints; ++k) s.facial[k] = landmarks_gt[k];
  s.pupil = landmarks_gt[kFacePoints];
  return s;
}

std::array<double, kLandmarkDims> SyntheticSample::landmark_vector() const {
  return landmark_set().to_vector();
}

void NoiseSpec::validate() const {
  if (!(gaussian_std >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gaussian_std must be non-negative");
  }
  if (!(occlusion_frac >= 0.0 && occlusion_frac < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "occlusion_frac must lie in [0, 1)");
  }
}

SubjectParams sample_subject(Rng& rng, int id) {
  const FaceShape& tmpl = average_face_shape();
  Vec3 lo = tmpl[0];
  Vec3 hi = tmpl[0];
  for (const Vec3& p : tmpl) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 extent = hi - lo;

  SubjectParams s;
  s.id = id;
  // |(scale - 1) p| <= 0.04 extent and |jitter| <= 0.015 extent per axis,
  // since every template coordinate is within one extent of the origin.
  Vec3 scale;
  for (int a = 0; a < 3; ++a) scale[a] = uniform(rng, 0.96, 1.04);
  for (std::size_t k = 0; k < kFacePoints; ++k) {
    for (int a = 0; a < 3; ++a) {
      const double jitter = uniform(rng, -0.015, 0.015) * extent[a];
      s.face[k][a] = scale[a] * tmpl[k][a] + jitter;
    }
  }
  const Vec3 eye = average_eyeball_offset();
  for (int a = 0; a < 3; ++a) s.eyeball_offset[a] = scale[a] * eye[a] + uniform(rng, -0.3, 0.3);
  s.eyeball_radius = uniform(rng, 11.0, 13.0);
  s.kappa_h_deg = uniform(rng, 4.0, 6.0);
  s.kappa_v_deg = uniform(rng, 0.8, 1.6);
  s.iris_radius = uniform(rng, 5.6, 6.4);
  return s;
}

void quantize(Raster& raster) {
  for (double& v : raster.pixels) v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
}

SyntheticSample generate_scene(const SubjectParams& subject, const Pose& pose, const Vec3& target,
                               const CameraIntrinsics& cam, const SceneConfig& scene,
                               Rng* noise_rng) {
  cam.validate();
  if (!(pose.translation.z() > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "subject must be in front of the camera");
  }
  if (!(subject.eyeball_radius > 0.0) || !(subject.iris_radius < subject.eyeball_radius)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid eyeball or iris radius");
  }

  SyntheticSample out;
  out.subject_id = subject.id;
  out.pose_gt = pose;

  std::array<Pixel, kFacePoints> facial;
  for (std::size_t k = 0; k < kFacePoints; ++k) facial[k] = project(pose.apply(subject.face[k]), cam);

  const Vec3 center = pose.apply(subject.eyeball_offset);
  const double radius = subject.eyeball_radius;
  const UnitVec3 optical = optical_axis_towards(target, center, radius, subject.kappa_h_deg,
                                                subject.kappa_v_deg, pose.rotation);
  const Vec3 pupil = center + radius * optical.vec();
  if ((target - center).dot(pose.rotation * Vec3(0.0, 0.0, -1.0)) <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "target is behind the face");
  }
  // The pupil must be the visible (camera-side) hit of its own camera ray.
  {
    const UnitVec3 ray(pupil);
    const Vec3 hit = ray_sphere_intersect(Vec3::Zero(), ray, center, radius);
    if ((hit - pupil).norm() > 1e-6) {
      throw Error(ErrorCode::kInvalidArgument, "pupil faces away from the camera");
    }
  }
  out.gaze_gt = apply_kappa(optical, subject.kappa_h_deg, subject.kappa_v_deg, pose.rotation);

  for (std::size_t k = 0; k < kFacePoints; ++k) out.landmarks_gt[k] = facial[k];
  out.landmarks_gt[kFacePoints] = project(pupil, cam);
  for (std::size_t k = 0; k < kLandmarks; ++k) {
    const Pixel& p = out.landmarks_gt[k];
    if (!(p.x() >= 0.0 && p.x() < scene.width && p.y() >= 0.0 && p.y() < scene.height)) {
      std::ostringstream os;
      os << "landmark " << k << " at (" << p.x() << ", " << p.y() << ") is outside the raster";
      throw Error(ErrorCode::kOutOfFrame, os.str());
    }
  }

  FaceShapes shapes;
  {
    const Vec3 face_center = pose.apply(Vec3(0.0, 35.0, 8.0));
    const Pixel c = project(face_center, cam);
    const Pixel right = project(pose.apply(Vec3(50.0, 35.0, 8.0)), cam);
    const double angle = std::atan2(right.y() - c.y(), right.x() - c.x());
    shapes.face.center = c;
    shapes.face.a = 70.0 * cam.fx / face_center.z();
    shapes.face.b = 88.0 * cam.fy / face_center.z();
    shapes.face.cos_t = std::cos(angle);
    shapes.face.sin_t = std::sin(angle);
  }
  shapes.strokes[0] = Segment{facial[4], facial[5]};
  shapes.strokes[1] = Segment{facial[6], facial[7]};
  shapes.strokes[2] = Segment{facial[8], facial[9]};
  shapes.eyes[0] = eye_shapes(facial[0], facial[1], center, optical, radius, subject.iris_radius, cam);
  {
    const Vec3 other = pose.apply(subject.other_eyeball_offset());
    shapes.eyes[1] = eye_shapes(facial[2], facial[3], other, UnitVec3(target - other), radius,
                                subject.iris_radius, cam);
  }

  out.raster = Raster(scene.width, scene.height);
  constexpr double kOffsets[2] = {0.25, 0.75};
  for (int y = 0; y < scene.height; ++y) {
    for (int x = 0; x < scene.width; ++x) {
      double acc = 0.0;
      for (double oy : kOffsets) {
        for (double ox : kOffsets) acc += shapes.intensity(Pixel(x + ox, y + oy));
      }
      out.raster.at(x, y) = 0.25 * acc;
    }
  }
  if (scene.noise_floor > 0.0) {
    if (noise_rng == nullptr) {
      throw Error(ErrorCode::kInvalidArgument, "noise floor requires an RNG");
    }
    std::normal_distribution<double> normal(0.0, scene.noise_floor);
    for (double& v : out.raster.pixels) v = std::clamp(v + normal(*noise_rng), 0.0, 1.0);
  }
  quantize(out.raster);
  return out;
}

Raster corrupt(const Raster& raster, const NoiseSpec& spec, Rng& rng) {
  spec.validate();
  Raster out = raster;
  if (spec.gaussian_std > 0.0) {
    std::normal_distribution<double> normal(0.0, spec.gaussian_std / 255.0);
    for (double& v : out.pixels) v = std::clamp(v + normal(rng), 0.0, 1.0);
  }
  const int side = static_cast<int>(std::floor(spec.occlusion_frac * out.width));
  if (side > 0) {
    if (side > out.height) {
      throw Error(ErrorCode::kInvalidArgument, "occlusion block taller than the raster");
    }
    const int x0 = std::uniform_int_distribution<int>(0, out.width - side)(rng);
    const int y0 = std::uniform_int_distribution<int>(0, out.height - side)(rng);
    for (int y = y0; y < y0 + side; ++y) {
      for (int x = x0; x < x0 + side; ++x) out.at(x, y) = 0.0;
    }
  }
  return out;
}

Raster corrupt(const Raster& raster, const NoiseSpec& spec) {
  Rng rng(spec.seed);
  return corrupt(raster, spec, rng);
}

SubjectParams subject_for(std::uint64_t seed, int id) {
  Rng rng = make_rng(seed, {kStreamSubject, static_cast<std::uint64_t>(id)});
  return sample_subject(rng, id);
}

std::vector<SyntheticSample> generate_dataset(const DatasetConfig& config, int workers) {
  if (config.count > 0 && config.subjects == 0) {
    throw Error(ErrorCode::kInvalidArgument, "dataset needs at least one subject");
  }
  std::vector<SubjectParams> subjects;
  for (std::size_t s = 0; s < config.subjects; ++s) {
    subjects.push_back(subject_for(config.seed, config.first_subject_id + static_cast<int>(s)));
  }
  const SceneSampling& range = config.sampling;
  std::vector<SyntheticSample> out(config.count);
  parallel_for(config.count, workers, [&](std::size_t i) {
    Rng rng = make_rng(config.seed, {kStreamSample, config.stream, i});
    const SubjectParams& subject = subjects[i % subjects.size()];
    for (int attempt = 0; attempt < range.max_attempts; ++attempt) {
      const double yaw = deg_to_rad(uniform(rng, -range.max_yaw_deg, range.max_yaw_deg));
      const double pitch = deg_to_rad(uniform(rng, -range.max_pitch_deg, range.max_pitch_deg));
      const double roll = deg_to_rad(uniform(rng, -range.max_roll_deg, range.max_roll_deg));
      Pose pose;
      pose.rotation = Rotation::from_yaw_pitch_roll(yaw, pitch, roll);
      const Vec3 anchor(uniform(rng, -range.max_shift_x, range.max_shift_x),
                        uniform(rng, -range.max_shift_y, range.max_shift_y),
                        uniform(rng, range.min_depth, range.max_depth));
      pose.translation = anchor - pose.rotation * Vec3(0.0, range.head_center_y, 0.0);
      const Vec3 target(uniform(rng, -range.target_half_width, range.target_half_width),
                        uniform(rng, -range.target_half_height, range.target_half_height), 0.0);
      try {
        out[i] = generate_scene(subject, pose, target, config.cam, config.scene, &rng);
        return;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kOutOfFrame && e.code() != ErrorCode::kInvalidArgument) throw;
      }
    }
    std::ostringstream os;
    os << "sample " << i << ": no in-frame scene after " << range.max_attempts << " attempts";
    throw Error(ErrorCode::kOutOfFrame, os.str());
  });
  return out;
}

}  // namespace baygaze
