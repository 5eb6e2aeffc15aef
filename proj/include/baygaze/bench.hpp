#ifndef BAYGAZE_BENCH_HPP_
#define BAYGAZE_BENCH_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "baygaze/cascade.hpp"
#include "baygaze/eye_model.hpp"
#include "baygaze/sghmc.hpp"
#include "baygaze/synth.hpp"

namespace baygaze {

enum class Method { kMle, kMap, kBayes };
const char* method_name(Method m);
Method parse_method(const std::string& name);  // InvalidArgument

// cross-subject: held-out subjects, same camera. cross-dataset: held-out
// subjects seen through a 20% longer focal length with a 0.02 noise floor.
enum class Split { kCrossSubject, kCrossDataset };
const char* split_name(Split s);
Split parse_split(const std::string& name);

struct Condition {
  std::string kind;  // "clean", "noise" (std, 0-255 scale), "occlusion" (fraction)
  double level = 0.0;

  std::string label() const;
};

struct ExperimentSpec {
  std::uint64_t seed = 0;
  std::size_t train_count = 2000;
  std::size_t train_subjects = 20;
  std::size_t test_count = 400;
  std::size_t test_subjects = 5;
  double validation_fraction = 0.1;
  double label_jitter_px = 0.5;
  Split split = Split::kCrossSubject;
  SceneSampling sampling = default_sampling();

  std::vector<Method> methods = {Method::kMle, Method::kMap, Method::kBayes};
  std::size_t stages = 3;
  bool supervise_all_stages = true;
  std::vector<std::size_t> ablation_stages = {1, 2, 3};  // Bayesian, clean test set
  std::size_t m = 50;
  std::size_t n = 10;
  SamplerConfig sampler = default_sampler();
  // Point estimators get as many updates as the chain by default.
  OptimizerConfig optimizer = default_optimizer();
  double prior_sigma = 1.0;

  std::vector<double> noise_levels = {10.0, 30.0, 50.0};
  std::vector<double> occlusion_levels = {0.1, 0.2, 0.3};
  int workers = 1;

  // Roughly centered face crops.
  static SceneSampling default_sampling();
  static SamplerConfig default_sampler();
  static OptimizerConfig default_optimizer();

  void validate() const;  // InvalidArgument
  std::vector<Condition> conditions() const;  // clean first, then noise, then occlusion
};

struct ResultRow {
  std::string method;
  std::size_t stages = 0;
  std::string condition;
  std::string kind;
  double level = 0.0;
  double mean_error_deg = 0.0;
  double std_error_deg = 0.0;  // standard deviation over test samples
  std::size_t count = 0;
  std::size_t failed_draws = 0;  // Bayesian landmark draws dropped by the geometry
  std::size_t fallbacks = 0;     // samples where every draw failed
  double wall_time_s = 0.0;      // not serialized with the table

  bool operator==(const ResultRow& o) const;
};

struct Improvement {
  std::string condition;
  std::size_t stages = 0;
  std::string baseline;
  double percent = 0.0;  // (baseline - bayes) / baseline * 100

  bool operator==(const Improvement&) const = default;
};

struct ResultTable {
  ExperimentSpec spec;
  std::vector<ResultRow> rows;
  std::vector<Improvement> improvements;
  std::map<std::string, std::string> test_hashes;  // condition label -> hex digest

  const ResultRow* find(const std::string& method, std::size_t stages,
                        const std::string& condition) const;
};

using ProgressFn = std::function<void(const std::string&)>;

struct PreparedData {
  TrainingData train;
  TrainingData validation;
  std::vector<SyntheticSample> test;
  CameraIntrinsics test_cam;
  EyeModelParams theta;  // average model, test camera
  LandmarkVector output_offset;
  LandmarkVector output_scale;
  InputNormalization input_norm;
};

// Train set: spec.train_subjects subjects, stream 0, split into training and
// validation by position. Test set: the next spec.test_subjects subject ids,
// stream 1.
PreparedData prepare_data(const ExperimentSpec& spec);

struct TrainedModel {
  Method method = Method::kBayes;
  std::unique_ptr<CascadeModel> model;
  std::vector<std::vector<double>> weights;  // one for point estimators
  double seconds = 0.0;
};

TrainedModel train_model(const ExperimentSpec& spec, const PreparedData& data, Method method,
                         std::size_t stages, const ProgressFn& progress = {});

// Corrupted test rasters; the noise field and occluder position of sample i
// depend only on (seed, kind, i), so levels differ only in magnitude.
std::vector<Raster> corrupt_test_set(const ExperimentSpec& spec,
                                     const std::vector<SyntheticSample>& test,
                                     const Condition& condition);

// FNV-1a over the raster values.
std::string raster_digest(const std::vector<Raster>& rasters);

// Mean angular error of one trained model on one condition. Point methods
// use the mean landmarks (clamping pupil rays to the eyeball silhouette);
// the Bayesian method drops draws whose pupil ray misses the eyeball and
// falls back to the clamped ensemble-mean solution if none survive.
ResultRow evaluate_model(const ExperimentSpec& spec, const TrainedModel& trained,
                         const PreparedData& data, const std::vector<Raster>& rasters,
                         const Condition& condition, std::size_t condition_index);

// Every method on every condition, then the stage ablation.
ResultTable run_experiment(const ExperimentSpec& spec, const ProgressFn& progress = {});
// Requires at least two methods including bayes.
ResultTable compare_methods(const ExperimentSpec& spec, const ProgressFn& progress = {});
// Only the stage ablation.
ResultTable ablate_stages(const ExperimentSpec& spec, const ProgressFn& progress = {});

// (baseline - bayes) / baseline for every condition with a Bayesian row.
std::vector<Improvement> compute_improvements(const std::vector<ResultRow>& rows);

std::string table_to_csv(const ResultTable& table);
std::string table_to_json(const ResultTable& table);
ResultTable table_from_json(const std::string& text);  // FormatError
// One file per condition kind: level, method, stages, mean, std.
std::map<std::string, std::string> table_plot_data(const ResultTable& table);
std::string timing_json(const ResultTable& table);

// Writes <prefix>.csv, <prefix>.json, <prefix>_plot_<kind>.dat and
// <prefix>_timing.json (the only file with wall-clock data). IoError.
std::vector<std::string> emit(const ResultTable& table, const std::string& prefix);

}  // namespace baygaze

#endif  // BAYGAZE_BENCH_HPP_
