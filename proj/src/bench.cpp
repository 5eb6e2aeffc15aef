#include "baygaze/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "baygaze/bayes_inference.hpp"
#include "baygaze/error.hpp"
#include "baygaze/parallel.hpp"
#include "baygaze/training.hpp"

namespace baygaze {

using nlohmann::json;

namespace {

constexpr int kResultSchemaVersion = 1;
constexpr const char* kResultSchema = "baygaze-results";

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void say(const ProgressFn& progress, const std::string& msg) {
  if (progress) progress(msg);
}

// Corruption levels are short decimals; %.10g prints them exactly enough.
std::string level_text(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::kMle: return "mle";
    case Method::kMap: return "map";
    case Method::kBayes: return "bayes";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "mle") return Method::kMle;
  if (name == "map") return Method::kMap;
  if (name == "bayes") return Method::kBayes;
  throw Error(ErrorCode::kInvalidArgument, "unknown method '" + name + "'");
}

const char* split_name(Split s) {
  return s == Split::kCrossSubject ? "cross-subject" : "cross-dataset";
}

Split parse_split(const std::string& name) {
  if (name == "cross-subject") return Split::kCrossSubject;
  if (name == "cross-dataset") return Split::kCrossDataset;
  throw Error(ErrorCode::kInvalidArgument, "unknown split '" + name + "'");
}

std::string Condition::label() const {
  if (kind == "clean") return "clean";
  if (kind == "noise") return "noise" + fixed(level, 0);
  return "occlusion" + fixed(level * 100.0, 0);
}

SceneSampling ExperimentSpec::default_sampling() {
  SceneSampling s;
  s.max_shift_x = 6.0;
  s.max_shift_y = 4.0;
  s.min_depth = 650.0;
  s.max_depth = 690.0;
  s.target_half_width = 400.0;
  s.target_half_height = 280.0;
  return s;
}

SamplerConfig ExperimentSpec::default_sampler() {
  SamplerConfig c;
  c.eta = 4e-5;
  c.beta = 0.05;
  c.burn_in = 1000;
  c.interval = 40;
  c.num_samples = 50;
  c.batch_size = 64;
  return c;
}

OptimizerConfig ExperimentSpec::default_optimizer() {
  OptimizerConfig c;
  c.eta = 4e-5;
  c.beta = 0.1;
  c.iterations = 0;  // 0: match the chain length
  c.eval_every = 250;
  c.batch_size = 64;
  return c;
}

void ExperimentSpec::validate() const {
  if (train_count < 2 || train_subjects < 1 || test_count < 1 || test_subjects < 1)
    throw Error(ErrorCode::kInvalidArgument, "dataset sizes must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw Error(ErrorCode::kInvalidArgument, "validation fraction must lie in (0, 1)");
  if (label_jitter_px < 0.0) throw Error(ErrorCode::kInvalidArgument, "label jitter must be non-negative");
  if (methods.empty()) throw Error(ErrorCode::kInvalidArgument, "no methods requested");
  if (stages < 1) throw Error(ErrorCode::kInvalidArgument, "stages must be at least 1");
  for (std::size_t k : ablation_stages)
    if (k < 1) throw Error(ErrorCode::kInvalidArgument, "ablation stages must be at least 1");
  if (m < 1 || n < 1) throw Error(ErrorCode::kInvalidArgument, "m and n must be at least 1");
  if (m > sampler.num_samples) throw Error(ErrorCode::kInvalidArgument, "m exceeds the collected samples");
  if (!(prior_sigma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "prior sigma must be positive");
  for (double v : noise_levels)
    if (!(v >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "noise levels must be non-negative");
  for (double v : occlusion_levels)
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "occlusion levels must lie in [0, 1]");
  sampler.validate();
  OptimizerConfig o = optimizer;
  if (o.iterations == 0) o.iterations = 1;
  o.validate();
}

std::vector<Condition> ExperimentSpec::conditions() const {
  std::vector<Condition> out{{"clean", 0.0}};
  for (double v : noise_levels) out.push_back({"noise", v});
  for (double v : occlusion_levels) out.push_back({"occlusion", v});
  return out;
}

bool ResultRow::operator==(const ResultRow& o) const {
  return method == o.method && stages == o.stages && condition == o.condition && kind == o.kind &&
         level == o.level && mean_error_deg == o.mean_error_deg &&
         std_error_deg == o.std_error_deg && count == o.count && failed_draws == o.failed_draws &&
         fallbacks == o.fallbacks;
}

const ResultRow* ResultTable::find(const std::string& method, std::size_t k,
                                   const std::string& condition) const {
  for (const auto& r : rows)
    if (r.method == method && r.stages == k && r.condition == condition) return &r;
  return nullptr;
}

PreparedData prepare_data(const ExperimentSpec& spec) {
  spec.validate();
  DatasetConfig train_cfg;
  train_cfg.count = spec.train_count;
  train_cfg.subjects = spec.train_subjects;
  train_cfg.first_subject_id = 0;
  train_cfg.seed = spec.seed;
  train_cfg.stream = 0;
  train_cfg.sampling = spec.sampling;

  DatasetConfig test_cfg = train_cfg;
  test_cfg.count = spec.test_count;
  test_cfg.subjects = spec.test_subjects;
  test_cfg.first_subject_id = static_cast<int>(spec.train_subjects);
  test_cfg.stream = 1;
  if (spec.split == Split::kCrossDataset) {
    test_cfg.cam.fx *= 1.2;
    test_cfg.cam.fy *= 1.2;
    test_cfg.scene.noise_floor = 0.02;
  }

  const auto all = generate_dataset(train_cfg, spec.workers);
  auto n_val = static_cast<std::size_t>(std::llround(spec.validation_fraction * static_cast<double>(all.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, all.size() - 1);
  const std::size_t n_train = all.size() - n_val;
  const std::span<const SyntheticSample> samples(all);

  PreparedData data;
  const int w = train_cfg.scene.width, h = train_cfg.scene.height;
  data.train = make_training_data(samples.first(n_train), w, h, spec.label_jitter_px,
                                  derive_seed(spec.seed, {kStreamJitter, 0}));
  data.validation = make_training_data(samples.subspan(n_train), w, h, spec.label_jitter_px,
                                       derive_seed(spec.seed, {kStreamJitter, 1}));
  fit_output_normalization(data.train, data.output_offset, data.output_scale);
  data.input_norm = fit_input_normalization(data.train);
  data.test = generate_dataset(test_cfg, spec.workers);
  data.test_cam = test_cfg.cam;
  data.theta = EyeModelParams::average(test_cfg.cam);
  return data;
}

TrainedModel train_model(const ExperimentSpec& spec, const PreparedData& data, Method method,
                         std::size_t stages, const ProgressFn& progress) {
  CascadeArchitecture arch;
  arch.stages = stages;
  arch.supervise_all_stages = spec.supervise_all_stages;
  arch.output_offset = data.output_offset;
  arch.output_scale = data.output_scale;
  TrainedModel out;
  out.method = method;
  out.model = std::make_unique<CascadeModel>(arch);
  out.model->set_input_normalization(data.input_norm);

  // Shared initialization: every method and stage count starts from the
  // same draw for its architecture.
  Rng init_rng = make_rng(spec.seed, {kStreamInit, stages});
  std::vector<double> init = out.model->initial_weights(init_rng);
  const Prior prior{spec.prior_sigma};
  const std::string tag = std::string(method_name(method)) + " k=" + std::to_string(stages);
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t report = 1000;
  auto log = [&](std::size_t t, double u) {
    if (t % report == 0) say(progress, tag + " update " + std::to_string(t) + " U=" + fixed(u, 1));
  };
  try {
    if (method == Method::kBayes) {
      SamplerConfig cfg = spec.sampler;
      cfg.seed = derive_seed(spec.seed, {kStreamChain, stages});
      out.weights = sample_posterior(*out.model, data.train, cfg, prior, std::move(init), log);
    } else {
      OptimizerConfig cfg = spec.optimizer;
      if (cfg.iterations == 0) cfg.iterations = spec.sampler.total_updates();
      cfg.seed = derive_seed(spec.seed, {kStreamOptimizer, stages});
      OptimizeResult r =
          method == Method::kMle
              ? optimize_mle(*out.model, data.train, data.validation, cfg, std::move(init), log)
              : optimize_map(*out.model, data.train, data.validation, cfg, prior, std::move(init), log);
      say(progress, tag + " best validation NLL " + fixed(r.best_objective, 3) + " at update " +
                        std::to_string(r.best_iteration));
      out.weights.push_back(std::move(r.w));
    }
  } catch (const Error& e) {
    throw Error(e.code(), "training " + tag + ": " + e.what());
  }
  out.seconds = seconds_since(t0);
  return out;
}

std::vector<Raster> corrupt_test_set(const ExperimentSpec& spec,
                                     const std::vector<SyntheticSample>& test,
                                     const Condition& condition) {
  std::vector<Raster> out;
  out.reserve(test.size());
  const std::uint64_t kind = condition.kind == "noise" ? 1 : condition.kind == "occlusion" ? 2 : 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (kind == 0) {
      out.push_back(test[i].raster);
      continue;
    }
    NoiseSpec ns;
    ns.gaussian_std = kind == 1 ? condition.level : 0.0;
    ns.occlusion_frac = kind == 2 ? condition.level : 0.0;
    ns.seed = derive_seed(spec.seed, {kStreamCorrupt, kind, i});
    out.push_back(corrupt(test[i].raster, ns));
  }
  return out;
}

std::string raster_digest(const std::vector<Raster>& rasters) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (const Raster& r : rasters) {
    mix(static_cast<std::uint64_t>(r.width));
    mix(static_cast<std::uint64_t>(r.height));
    for (double v : r.pixels) mix(std::bit_cast<std::uint64_t>(v));
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ResultRow evaluate_model(const ExperimentSpec& spec, const TrainedModel& trained,
                         const PreparedData& data, const std::vector<Raster>& rasters,
                         const Condition& condition, std::size_t condition_index) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t count = rasters.size();
  std::vector<const Raster*> ptrs;
  for (const Raster& r : rasters) ptrs.push_back(&r);
  const Eigen::MatrixXd inputs = trained.model->encode(ptrs);

  const bool bayes = trained.method == Method::kBayes;
  const std::size_t m = bayes ? spec.m : 1;
  if (trained.weights.size() < m) throw Error(ErrorCode::kInvalidArgument, "not enough weight samples");
  // dists[s][i]: weight sample s, test sample i.
  std::vector<std::vector<LandmarkDistribution>> dists(m);
  for (std::size_t s = 0; s < m; ++s) dists[s] = trained.model->forward_batch(inputs, trained.weights[s]);

  std::vector<double> errors(count, 0.0);
  std::vector<std::size_t> failed(count, 0), fallback(count, 0);
  parallel_for(count, spec.workers, [&](std::size_t i) {
    const UnitVec3& truth = data.test[i].gaze_gt;
    try {
      if (!bayes) {
        const LandmarkSet z = LandmarkSet::from_vector(std::span<const double>(dists[0][i].mean.data(), kLandmarkDims));
        errors[i] = angular_error_deg(estimate_gaze(z, data.theta, PupilRayPolicy::kClampToSilhouette), truth);
        return;
      }
      std::vector<LandmarkDistribution> per_sample(m);
      for (std::size_t s = 0; s < m; ++s) per_sample[s] = dists[s][i];
      InferenceConfig cfg;
      cfg.m = m;
      cfg.n = spec.n;
      cfg.seed = derive_seed(spec.seed, {kStreamInference, condition_index, i});
      cfg.policy = PupilRayPolicy::kStrict;
      try {
        const GazeEstimate est = estimate_gaze_bayes(per_sample, data.theta, cfg);
        errors[i] = angular_error_deg(est.gaze, truth);
        failed[i] = est.failed;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kAllSamplesFailed) throw;
        LandmarkVector mean = LandmarkVector::Zero();
        for (const auto& d : per_sample) mean += d.mean;
        mean /= static_cast<double>(m);
        const LandmarkSet z = LandmarkSet::from_vector(std::span<const double>(mean.data(), kLandmarkDims));
        errors[i] = angular_error_deg(estimate_gaze(z, data.theta, PupilRayPolicy::kClampToSilhouette), truth);
        failed[i] = m * spec.n;
        fallback[i] = 1;
      }
    } catch (const Error& e) {
      throw Error(e.code(), std::string("evaluating ") + method_name(trained.method) + " on " +
                                condition.label() + ", test sample " + std::to_string(i) + ": " + e.what());
    }
  });

  ResultRow row;
  row.method = method_name(trained.method);
  row.stages = trained.model->stages();
  row.condition = condition.label();
  row.kind = condition.kind;
  row.level = condition.level;
  row.count = count;
  double sum = 0.0;
  for (double e : errors) sum += e;
  row.mean_error_deg = sum / static_cast<double>(count);
  double sq = 0.0;
  for (double e : errors) sq += (e - row.mean_error_deg) * (e - row.mean_error_deg);
  row.std_error_deg = count > 1 ? std::sqrt(sq / static_cast<double>(count - 1)) : 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    row.failed_draws += failed[i];
    row.fallbacks += fallback[i];
  }
  row.wall_time_s = seconds_since(t0);
  return row;
}

std::vector<Improvement> compute_improvements(const std::vector<ResultRow>& rows) {
  std::vector<Improvement> out;
  for (const auto& b : rows) {
    if (b.method != "bayes") continue;
    for (const auto& r : rows) {
      if (r.method == "bayes" || r.stages != b.stages || r.condition != b.condition) continue;
      const double pct = r.mean_error_deg > 0.0
                             ? (r.mean_error_deg - b.mean_error_deg) / r.mean_error_deg * 100.0
                             : 0.0;
      out.push_back({b.condition, b.stages, r.method, pct});
    }
  }
  return out;
}

namespace {

void run_methods(const ExperimentSpec& spec, const PreparedData& data, ResultTable& table,
                 const ProgressFn& progress) {
  const auto conditions = spec.conditions();
  std::vector<std::vector<Raster>> corrupted;
  for (const auto& c : conditions) {
    corrupted.push_back(corrupt_test_set(spec, data.test, c));
    table.test_hashes[c.label()] = raster_digest(corrupted.back());
  }
  for (Method method : spec.methods) {
    say(progress, std::string("training ") + method_name(method));
    const TrainedModel trained = train_model(spec, data, method, spec.stages, progress);
    for (std::size_t c = 0; c < conditions.size(); ++c) {
      ResultRow row = evaluate_model(spec, trained, data, corrupted[c], conditions[c], c);
      if (c == 0) row.wall_time_s += trained.seconds;
      say(progress, row.method + " " + row.condition + ": " + fixed(row.mean_error_deg, 3) + " deg");
      table.rows.push_back(std::move(row));
    }
  }
}

void run_ablation(const ExperimentSpec& spec, const PreparedData& data, ResultTable& table,
                  const ProgressFn& progress) {
  if (spec.ablation_stages.empty()) return;
  const Condition clean{"clean", 0.0};
  const auto rasters = corrupt_test_set(spec, data.test, clean);
  table.test_hashes[clean.label()] = raster_digest(rasters);
  for (std::size_t k : spec.ablation_stages) {
    if (table.find("bayes", k, clean.label())) continue;
    say(progress, "ablation: training bayes k=" + std::to_string(k));
    const TrainedModel trained = train_model(spec, data, Method::kBayes, k, progress);
    ResultRow row = evaluate_model(spec, trained, data, rasters, clean, 0);
    row.wall_time_s += trained.seconds;
    say(progress, "bayes k=" + std::to_string(k) + " clean: " + fixed(row.mean_error_deg, 3) + " deg");
    table.rows.push_back(std::move(row));
  }
}

}  // namespace

ResultTable run_experiment(const ExperimentSpec& spec, const ProgressFn& progress) {
  spec.validate();
  ResultTable table;
  table.spec = spec;
  say(progress, "generating data");
  const PreparedData data = prepare_data(spec);
  run_methods(spec, data, table, progress);
  run_ablation(spec, data, table, progress);
  table.improvements = compute_improvements(table.rows);
  return table;
}

ResultTable compare_methods(const ExperimentSpec& spec, const ProgressFn& progress) {
  bool has_bayes = false;
  for (Method m : spec.methods) has_bayes = has_bayes || m == Method::kBayes;
  if (spec.methods.size() < 2 || !has_bayes)
    throw Error(ErrorCode::kInvalidArgument, "comparison needs bayes and at least one baseline");
  return run_experiment(spec, progress);
}

ResultTable ablate_stages(const ExperimentSpec& spec, const ProgressFn& progress) {
  spec.validate();
  if (spec.ablation_stages.empty()) throw Error(ErrorCode::kInvalidArgument, "no stage counts given");
  ResultTable table;
  table.spec = spec;
  const PreparedData data = prepare_data(spec);
  run_ablation(spec, data, table, progress);
  return table;
}

namespace {

json spec_to_json(const ExperimentSpec& s) {
  json methods = json::array();
  for (Method m : s.methods) methods.push_back(method_name(m));
  return json{
      {"seed", s.seed},
      {"train_count", s.train_count},
      {"train_subjects", s.train_subjects},
      {"test_count", s.test_count},
      {"test_subjects", s.test_subjects},
      {"validation_fraction", s.validation_fraction},
      {"label_jitter_px", s.label_jitter_px},
      {"split", split_name(s.split)},
      {"sampling",
       {{"max_yaw_deg", s.sampling.max_yaw_deg},
        {"max_pitch_deg", s.sampling.max_pitch_deg},
        {"max_roll_deg", s.sampling.max_roll_deg},
        {"max_shift_x", s.sampling.max_shift_x},
        {"max_shift_y", s.sampling.max_shift_y},
        {"min_depth", s.sampling.min_depth},
        {"max_depth", s.sampling.max_depth},
        {"head_center_y", s.sampling.head_center_y},
        {"target_half_width", s.sampling.target_half_width},
        {"target_half_height", s.sampling.target_half_height},
        {"max_attempts", s.sampling.max_attempts}}},
      {"methods", methods},
      {"stages", s.stages},
      {"supervise_all_stages", s.supervise_all_stages},
      {"ablation_stages", s.ablation_stages},
      {"m", s.m},
      {"n", s.n},
      {"sampler",
       {{"eta", s.sampler.eta},
        {"beta", s.sampler.beta},
        {"burn_in", s.sampler.burn_in},
        {"interval", s.sampler.interval},
        {"num_samples", s.sampler.num_samples},
        {"batch_size", s.sampler.batch_size}}},
      {"optimizer",
       {{"eta", s.optimizer.eta},
        {"beta", s.optimizer.beta},
        {"iterations", s.optimizer.iterations},
        {"eval_every", s.optimizer.eval_every},
        {"batch_size", s.optimizer.batch_size}}},
      {"prior_sigma", s.prior_sigma},
      {"noise_levels", s.noise_levels},
      {"occlusion_levels", s.occlusion_levels},
      {"cross_dataset_shift", {{"focal_length_factor", 1.2}, {"noise_floor", 0.02}}},
  };
}

ExperimentSpec spec_from_json(const json& j) {
  ExperimentSpec s;
  j.at("seed").get_to(s.seed);
  j.at("train_count").get_to(s.train_count);
  j.at("train_subjects").get_to(s.train_subjects);
  j.at("test_count").get_to(s.test_count);
  j.at("test_subjects").get_to(s.test_subjects);
  j.at("validation_fraction").get_to(s.validation_fraction);
  j.at("label_jitter_px").get_to(s.label_jitter_px);
  s.split = parse_split(j.at("split").get<std::string>());
  const json& sp = j.at("sampling");
  sp.at("max_yaw_deg").get_to(s.sampling.max_yaw_deg);
  sp.at("max_pitch_deg").get_to(s.sampling.max_pitch_deg);
  sp.at("max_roll_deg").get_to(s.sampling.max_roll_deg);
  sp.at("max_shift_x").get_to(s.sampling.max_shift_x);
  sp.at("max_shift_y").get_to(s.sampling.max_shift_y);
  sp.at("min_depth").get_to(s.sampling.min_depth);
  sp.at("max_depth").get_to(s.sampling.max_depth);
  sp.at("head_center_y").get_to(s.sampling.head_center_y);
  sp.at("target_half_width").get_to(s.sampling.target_half_width);
  sp.at("target_half_height").get_to(s.sampling.target_half_height);
  sp.at("max_attempts").get_to(s.sampling.max_attempts);
  s.methods.clear();
  for (const auto& m : j.at("methods")) s.methods.push_back(parse_method(m.get<std::string>()));
  j.at("stages").get_to(s.stages);
  j.at("supervise_all_stages").get_to(s.supervise_all_stages);
  j.at("ablation_stages").get_to(s.ablation_stages);
  j.at("m").get_to(s.m);
  j.at("n").get_to(s.n);
  const json& sa = j.at("sampler");
  sa.at("eta").get_to(s.sampler.eta);
  sa.at("beta").get_to(s.sampler.beta);
  sa.at("burn_in").get_to(s.sampler.burn_in);
  sa.at("interval").get_to(s.sampler.interval);
  sa.at("num_samples").get_to(s.sampler.num_samples);
  sa.at("batch_size").get_to(s.sampler.batch_size);
  const json& op = j.at("optimizer");
  op.at("eta").get_to(s.optimizer.eta);
  op.at("beta").get_to(s.optimizer.beta);
  op.at("iterations").get_to(s.optimizer.iterations);
  op.at("eval_every").get_to(s.optimizer.eval_every);
  op.at("batch_size").get_to(s.optimizer.batch_size);
  j.at("prior_sigma").get_to(s.prior_sigma);
  j.at("noise_levels").get_to(s.noise_levels);
  j.at("occlusion_levels").get_to(s.occlusion_levels);
  return s;
}

}  // namespace

std::string table_to_csv(const ResultTable& table) {
  std::ostringstream os;
  os << "method,stages,condition,kind,level,mean_error_deg,std_error_deg,count,failed_draws,fallbacks\n";
  for (const auto& r : table.rows) {
    os << r.method << ',' << r.stages << ',' << r.condition << ',' << r.kind << ','
       << level_text(r.level) << ',' << fixed(r.mean_error_deg, 6) << ',' << fixed(r.std_error_deg, 6)
       << ',' << r.count << ',' << r.failed_draws << ',' << r.fallbacks << '\n';
  }
  return os.str();
}

std::string table_to_json(const ResultTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"method", r.method},
                    {"stages", r.stages},
                    {"condition", r.condition},
                    {"kind", r.kind},
                    {"level", r.level},
                    {"mean_error_deg", r.mean_error_deg},
                    {"std_error_deg", r.std_error_deg},
                    {"count", r.count},
                    {"failed_draws", r.failed_draws},
                    {"fallbacks", r.fallbacks}});
  }
  json improvements = json::array();
  for (const auto& i : table.improvements) {
    improvements.push_back({{"condition", i.condition},
                            {"stages", i.stages},
                            {"baseline", i.baseline},
                            {"percent", i.percent}});
  }
  json j{{"schema", kResultSchema},
         {"version", kResultSchemaVersion},
         {"spec", spec_to_json(table.spec)},
         {"rows", rows},
         {"improvements", improvements},
         {"test_hashes", table.test_hashes}};
  return j.dump(2) + "\n";
}

ResultTable table_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("schema").get<std::string>() != kResultSchema)
      throw Error(ErrorCode::kFormatError, "not a result table");
    if (j.at("version").get<int>() != kResultSchemaVersion)
      throw Error(ErrorCode::kFormatError, "unsupported result schema version");
    ResultTable t;
    t.spec = spec_from_json(j.at("spec"));
    for (const auto& r : j.at("rows")) {
      ResultRow row;
      r.at("method").get_to(row.method);
      r.at("stages").get_to(row.stages);
      r.at("condition").get_to(row.condition);
      r.at("kind").get_to(row.kind);
      r.at("level").get_to(row.level);
      r.at("mean_error_deg").get_to(row.mean_error_deg);
      r.at("std_error_deg").get_to(row.std_error_deg);
      r.at("count").get_to(row.count);
      r.at("failed_draws").get_to(row.failed_draws);
      r.at("fallbacks").get_to(row.fallbacks);
      t.rows.push_back(row);
    }
    for (const auto& i : j.at("improvements")) {
      Improvement imp;
      i.at("condition").get_to(imp.condition);
      i.at("stages").get_to(imp.stages);
      i.at("baseline").get_to(imp.baseline);
      i.at("percent").get_to(imp.percent);
      t.improvements.push_back(imp);
    }
    j.at("test_hashes").get_to(t.test_hashes);
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormatError, std::string("result table: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kFormatError) throw;
    throw Error(ErrorCode::kFormatError, std::string("result table: ") + e.what());
  }
}

std::map<std::string, std::string> table_plot_data(const ResultTable& table) {
  std::map<std::string, std::string> files;
  for (const std::string kind : {"noise", "occlusion"}) {
    std::ostringstream os;
    os << "# level method stages mean_error_deg std_error_deg\n";
    bool any = false;
    for (const auto& r : table.rows) {
      if (r.stages != table.spec.stages || (r.kind != kind && r.kind != "clean")) continue;
      os << level_text(r.level) << ' ' << r.method << ' ' << r.stages << ' ' << fixed(r.mean_error_deg, 6)
         << ' ' << fixed(r.std_error_deg, 6) << '\n';
      any = any || r.kind == kind;
    }
    if (any) files[kind] = os.str();
  }
  std::ostringstream os;
  os << "# stages method mean_error_deg std_error_deg\n";
  bool any = false;
  for (const auto& r : table.rows) {
    if (r.method != "bayes" || r.kind != "clean") continue;
    os << r.stages << ' ' << r.method << ' ' << fixed(r.mean_error_deg, 6) << ' '
       << fixed(r.std_error_deg, 6) << '\n';
    any = true;
  }
  if (any) files["stages"] = os.str();
  return files;
}

std::string timing_json(const ResultTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows)
    rows.push_back({{"method", r.method}, {"stages", r.stages}, {"condition", r.condition},
                    {"wall_time_s", r.wall_time_s}});
  return json{{"rows", rows}}.dump(2) + "\n";
}

std::vector<std::string> emit(const ResultTable& table, const std::string& prefix) {
  std::vector<std::pair<std::string, std::string>> files{
      {prefix + ".csv", table_to_csv(table)},
      {prefix + ".json", table_to_json(table)},
      {prefix + "_timing.json", timing_json(table)}};
  for (const auto& [kind, text] : table_plot_data(table)) files.push_back({prefix + "_plot_" + kind + ".dat", text});
  std::vector<std::string> written;
  for (const auto& [path, text] : files) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path + " for writing");
    out << text;
    out.flush();
    if (!out) throw Error(ErrorCode::kIoError, "write to " + path + " failed");
    written.push_back(path);
  }
  return written;
}

}  // namespace baygaze
