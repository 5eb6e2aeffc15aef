#ifndef BAYGAZE_SYNTH_HPP_
#define BAYGAZE_SYNTH_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "baygaze/eye_model.hpp"
#include "baygaze/geometry.hpp"
#include "baygaze/rng.hpp"

namespace baygaze {

// Row-major grayscale image with values in [0, 1].
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  Raster() = default;
  Raster(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return pixels.size(); }

  bool operator==(const Raster&) const = default;
};

struct SubjectParams {
  int id = 0;
  FaceShape face;          // head frame, mm
  Vec3 eyeball_offset;     // tracked eye, head frame, mm
  double eyeball_radius = kAverageEyeballRadius;
  double kappa_h_deg = kAverageKappaH;
  double kappa_v_deg = kAverageKappaV;
  double iris_radius = 6.0;

  // Template subject: average face, 12 mm eyeball, average kappa.
  static SubjectParams average();
  // Eye model with this subject's true geometry.
  EyeModelParams eye_model(const CameraIntrinsics& cam) const;
  // Second eye, mirrored through the head-frame x = 0 plane.
  Vec3 other_eyeball_offset() const;
};

struct SyntheticSample {
  Raster raster;
  std::array<Pixel, kLandmarks> landmarks_gt;  // 11 facial + pupil, pixels
  UnitVec3 gaze_gt;                            // visual axis, camera frame
  Pose pose_gt;
  int subject_id = 0;

  LandmarkSet landmark_set() const;
  std::array<double, kLandmarkDims> landmark_vector() const;
};

struct NoiseSpec {
  double gaussian_std = 0.0;   // on the 0-255 intensity scale
  double occlusion_frac = 0.0; // square side as a fraction of the width; 0 disables
  std::uint64_t seed = 0;

  void validate() const;
};

struct SceneConfig {
  int width = 64;
  int height = 64;
  double noise_floor = 0.0;  // std of baked-in sensor noise, [0, 1] units
};

// Per-subject draw: template scaled per axis and jittered per point (each
// coordinate moves by at most 10% of the template extent on that axis),
// R ~ U[11, 13] mm, kappa_h ~ U[4, 6], kappa_v ~ U[0.8, 1.6] degrees.
SubjectParams sample_subject(Rng& rng, int id = 0);

// Renders one scene. The eyes look at `target` (camera frame, mm).
// Throws OutOfFrame if a landmark projects outside the raster and
// InvalidArgument if the pupil would face away from the camera.
// `noise_rng` is only drawn from when scene.noise_floor > 0.
SyntheticSample generate_scene(const SubjectParams& subject, const Pose& pose, const Vec3& target,
                               const CameraIntrinsics& cam, const SceneConfig& scene = {},
                               Rng* noise_rng = nullptr);

// Additive Gaussian noise (std gaussian_std / 255, clamped to [0, 1]) and
// then one black square of side floor(occlusion_frac * width) at a uniform
// in-frame position. Draws W*H normals only when gaussian_std > 0.
Raster corrupt(const Raster& raster, const NoiseSpec& spec, Rng& rng);
// Uses spec.seed.
Raster corrupt(const Raster& raster, const NoiseSpec& spec);

// Ranges for random head poses and gaze targets.
struct SceneSampling {
  double max_yaw_deg = 20.0;
  double max_pitch_deg = 12.0;
  double max_roll_deg = 8.0;
  double max_shift_x = 25.0;
  double max_shift_y = 15.0;
  double min_depth = 620.0;
  double max_depth = 720.0;
  double head_center_y = 50.0;  // head-frame y kept near the optical axis
  double target_half_width = 220.0;
  double target_half_height = 160.0;
  int max_attempts = 1000;
};

struct DatasetConfig {
  std::size_t count = 0;
  std::size_t subjects = 1;
  int first_subject_id = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;  // separates datasets drawn from one seed
  CameraIntrinsics cam = default_camera();
  SceneConfig scene;
  SceneSampling sampling;

  static CameraIntrinsics default_camera() { return CameraIntrinsics{280.0, 280.0, 32.0, 32.0}; }
};

// Subject `id` is a pure function of (seed, id), so train and test sets
// built from one seed share nothing but the template.
SubjectParams subject_for(std::uint64_t seed, int id);

// Sample i uses subject first_subject_id + i % subjects and an RNG stream
// keyed by (seed, stream, i); output is independent of `workers`.
std::vector<SyntheticSample> generate_dataset(const DatasetConfig& config, int workers = 1);

// Round to the nearest multiple of 1/255.
void quantize(Raster& raster);

}  // namespace baygaze

#endif  // BAYGAZE_SYNTH_HPP_
