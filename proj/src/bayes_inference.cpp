#include "baygaze/bayes_inference.hpp"

#include <optional>

#include "baygaze/error.hpp"

namespace baygaze {

void InferenceConfig::validate() const {
  if (m < 1 || n < 1) throw Error(ErrorCode::kInvalidArgument, "m and n must be at least 1");
}

std::vector<LandmarkVector> sample_landmarks(const LandmarkDistribution& dist, std::size_t n,
                                             Rng& rng) {
  dist.validate();
  std::normal_distribution<double> normal(0.0, 1.0);
  const LandmarkVector sd = dist.variance.cwiseSqrt();
  std::vector<LandmarkVector> out(n);
  for (auto& z : out)
    for (Eigen::Index d = 0; d < z.size(); ++d) z(d) = dist.mean(d) + sd(d) * normal(rng);
  return out;
}

GazeEstimate summarize_gazes(std::span<const Vec3> gazes) {
  if (gazes.empty()) throw Error(ErrorCode::kAllSamplesFailed, "no gaze sample survived");
  GazeEstimate est;
  for (const Vec3& g : gazes) est.raw_mean += g;
  est.raw_mean /= static_cast<double>(gazes.size());
  // Shifted by the first sample, so identical samples give exactly zero.
  const double n = static_cast<double>(gazes.size());
  Vec3 shift_mean = Vec3::Zero();
  for (const Vec3& g : gazes) {
    const Vec3 d = g - gazes.front();
    shift_mean += d;
    est.covariance += d * d.transpose();
  }
  shift_mean /= n;
  est.covariance = (est.covariance / n - shift_mean * shift_mean.transpose()).eval();
  est.covariance = 0.5 * (est.covariance + est.covariance.transpose()).eval();
  est.gaze = UnitVec3(est.raw_mean);
  est.used = gazes.size();
  return est;
}

GazeEstimate estimate_gaze_bayes(std::span<const LandmarkDistribution> dists,
                                 const EyeModelParams& theta, const InferenceConfig& cfg) {
  cfg.validate();
  if (dists.empty()) throw Error(ErrorCode::kInvalidArgument, "no weight samples");
  std::vector<Vec3> gazes;
  gazes.reserve(dists.size() * cfg.n);
  std::size_t failed = 0;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    Rng rng = make_rng(cfg.seed, {kStreamInference, i});
    std::optional<Pose> init;
    if (cfg.warm_start) {
      try {
        const LandmarkSet mean = LandmarkSet::from_vector(std::span<const double>(dists[i].mean.data(), kLandmarkDims));
        init = fit_pose(mean, theta, canonical_pose_guess(mean, theta)).pose;
      } catch (const Error&) {
      }
    }
    for (const LandmarkVector& z : sample_landmarks(dists[i], cfg.n, rng)) {
      try {
        const LandmarkSet set = LandmarkSet::from_vector(std::span<const double>(z.data(), kLandmarkDims));
        const Pose start = init ? *init : canonical_pose_guess(set, theta);
        gazes.push_back(solve_gaze(set, theta, start, cfg.policy).gaze.vec());
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kInvalidArgument || e.code() == ErrorCode::kShapeMismatch) throw;
        ++failed;
      }
    }
  }
  GazeEstimate est = summarize_gazes(gazes);
  est.failed = failed;
  if (cfg.keep_samples) est.per_sample_gazes = std::move(gazes);
  return est;
}

GazeEstimate estimate_gaze_bayes(const Raster& raster, const LandmarkModel& model,
                                 std::span<const std::vector<double>> weight_samples,
                                 const EyeModelParams& theta, const InferenceConfig& cfg) {
  cfg.validate();
  if (weight_samples.size() < cfg.m)
    throw Error(ErrorCode::kInvalidArgument, "fewer weight samples than m");
  std::vector<LandmarkDistribution> dists;
  dists.reserve(cfg.m);
  for (std::size_t i = 0; i < cfg.m; ++i) dists.push_back(model.forward(raster, weight_samples[i]));
  return estimate_gaze_bayes(dists, theta, cfg);
}

UnitVec3 estimate_gaze_point(const Raster& raster, const LandmarkModel& model,
                             std::span<const double> w, const EyeModelParams& theta,
                             PupilRayPolicy policy) {
  const LandmarkDistribution dist = model.forward(raster, w);
  const LandmarkSet set = LandmarkSet::from_vector(std::span<const double>(dist.mean.data(), kLandmarkDims));
  return estimate_gaze(set, theta, policy);
}

}  // namespace baygaze
