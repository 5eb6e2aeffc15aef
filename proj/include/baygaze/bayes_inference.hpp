#ifndef BAYGAZE_BAYES_INFERENCE_HPP_
#define BAYGAZE_BAYES_INFERENCE_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "baygaze/eye_model.hpp"
#include "baygaze/landmark_net.hpp"

namespace baygaze {

struct InferenceConfig {
  std::size_t m = 50;  // weight samples used (the first m)
  std::size_t n = 50;  // landmark draws per weight sample
  std::uint64_t seed = 0;
  PupilRayPolicy policy = PupilRayPolicy::kStrict;
  bool keep_samples = false;
  // Start every draw's pose fit from the pose fitted to the mean landmarks
  // of its weight sample instead of the canonical guess.
  bool warm_start = true;

  void validate() const;
};

struct GazeEstimate {
  UnitVec3 gaze;
  Vec3 raw_mean = Vec3::Zero();  // arithmetic mean of the per-sample gazes
  Mat3 covariance = Mat3::Zero();
  std::size_t used = 0;
  std::size_t failed = 0;
  std::vector<Vec3> per_sample_gazes;  // (i, j) order; only with keep_samples
};

// n independent draws, coordinate d ~ N(mean_d, variance_d).
std::vector<LandmarkVector> sample_landmarks(const LandmarkDistribution& dist, std::size_t n,
                                             Rng& rng);

// Mean and covariance (1/N, around the raw mean) of unit gaze vectors.
// Throws AllSamplesFailed when empty.
GazeEstimate summarize_gazes(std::span<const Vec3> gazes);

// For each of the first m weight samples: predict, draw n landmark sets and
// solve the geometry for each. Draws whose solve fails are dropped and
// counted. Landmark draws for weight sample i use an RNG keyed by
// (cfg.seed, i). Throws AllSamplesFailed if no draw survives.
GazeEstimate estimate_gaze_bayes(const Raster& raster, const LandmarkModel& model,
                                 std::span<const std::vector<double>> weight_samples,
                                 const EyeModelParams& theta, const InferenceConfig& cfg);

// Same, from already computed per-sample distributions.
GazeEstimate estimate_gaze_bayes(std::span<const LandmarkDistribution> dists,
                                 const EyeModelParams& theta, const InferenceConfig& cfg);

// Point estimate: geometry on the predicted mean landmarks.
UnitVec3 estimate_gaze_point(const Raster& raster, const LandmarkModel& model,
                             std::span<const double> w, const EyeModelParams& theta,
                             PupilRayPolicy policy = PupilRayPolicy::kClampToSilhouette);

}  // namespace baygaze

#endif  // BAYGAZE_BAYES_INFERENCE_HPP_
