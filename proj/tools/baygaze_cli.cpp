// baygaze: dataset generation, training, sampling, inference and benchmarks.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "baygaze/bayes_inference.hpp"
#include "baygaze/bench.hpp"
#include "baygaze/checkpoint.hpp"
#include "baygaze/dataset_io.hpp"
#include "baygaze/error.hpp"
#include "baygaze/training.hpp"

using namespace baygaze;

namespace {

void log_line(const std::string& msg) { std::cerr << msg << std::endl; }

struct DataFlags {
  std::string path;
  double validation_fraction = 0.1;
  double jitter = 0.5;
  std::uint64_t seed = 0;
};

struct LoadedTraining {
  TrainingData train;
  TrainingData validation;
  CascadeArchitecture arch;
  InputNormalization input_norm;
};

LoadedTraining load_training(const DataFlags& f, std::size_t stages) {
  const DatasetFile file = read_dataset(f.path);
  if (file.samples.size() < 2) throw Error(ErrorCode::kInsufficientData, "dataset needs at least 2 samples");
  auto n_val = static_cast<std::size_t>(std::llround(f.validation_fraction * file.samples.size()));
  n_val = std::clamp<std::size_t>(n_val, 1, file.samples.size() - 1);
  const std::span<const SyntheticSample> all(file.samples);
  const std::size_t n_train = all.size() - n_val;
  LoadedTraining out;
  out.train = make_training_data(all.first(n_train), file.width, file.height, f.jitter,
                                 derive_seed(f.seed, {kStreamJitter, 0}));
  out.validation = make_training_data(all.subspan(n_train), file.width, file.height, f.jitter,
                                      derive_seed(f.seed, {kStreamJitter, 1}));
  out.arch.input_width = file.width;
  out.arch.input_height = file.height;
  out.arch.stages = stages;
  fit_output_normalization(out.train, out.arch.output_offset, out.arch.output_scale);
  out.input_norm = fit_input_normalization(out.train);
  return out;
}

void add_data_flags(CLI::App* cmd, DataFlags& f) {
  cmd->add_option("--data", f.path, "training dataset file")->required();
  cmd->add_option("--val-fraction", f.validation_fraction, "held-out tail used for validation");
  cmd->add_option("--label-jitter", f.jitter, "std of Gaussian label noise (px)");
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stod(item));
  return out;
}

void add_spec_flags(CLI::App* cmd, ExperimentSpec& spec, std::string& out, std::string& methods,
                    std::string& noise, std::string& occlusion, std::string& ablation,
                    std::string& split) {
  cmd->add_option("--seed", spec.seed, "experiment seed")->required();
  cmd->add_option("--out", out, "output prefix")->required();
  cmd->add_option("--train-count", spec.train_count);
  cmd->add_option("--train-subjects", spec.train_subjects);
  cmd->add_option("--test-count", spec.test_count);
  cmd->add_option("--test-subjects", spec.test_subjects);
  cmd->add_option("--val-fraction", spec.validation_fraction);
  cmd->add_option("--label-jitter", spec.label_jitter_px);
  cmd->add_option("--split", split, "cross-subject or cross-dataset");
  cmd->add_option("--methods", methods, "comma list of mle,map,bayes");
  cmd->add_option("--stages", spec.stages, "cascade stages for the method comparison");
  cmd->add_option("--supervise-all-stages", spec.supervise_all_stages, "add the NLL of intermediate stages");
  cmd->add_option("--ablation-stages", ablation, "comma list of stage counts, empty to skip");
  cmd->add_option("--m", spec.m, "weight samples used for inference");
  cmd->add_option("--n", spec.n, "landmark draws per weight sample");
  cmd->add_option("--eta", spec.sampler.eta, "sampler learning rate");
  cmd->add_option("--beta", spec.sampler.beta, "sampler friction");
  cmd->add_option("--burn-in", spec.sampler.burn_in);
  cmd->add_option("--interval", spec.sampler.interval);
  cmd->add_option("--num-samples", spec.sampler.num_samples);
  cmd->add_option("--batch", spec.sampler.batch_size);
  cmd->add_option("--opt-eta", spec.optimizer.eta, "point-estimator learning rate");
  cmd->add_option("--opt-beta", spec.optimizer.beta, "point-estimator friction");
  cmd->add_option("--opt-iterations", spec.optimizer.iterations, "0 matches the chain length");
  cmd->add_option("--prior-sigma", spec.prior_sigma);
  cmd->add_option("--noise", noise, "comma list of noise std levels (0-255)");
  cmd->add_option("--occlusion", occlusion, "comma list of occluder fractions");
  cmd->add_option("--workers", spec.workers, "threads for generation and inference");
}

void finish_spec(ExperimentSpec& spec, const std::string& methods, const std::string& noise,
                 const std::string& occlusion, const std::string& ablation, const std::string& split,
                 bool set_methods, bool set_noise, bool set_occlusion, bool set_ablation) {
  spec.optimizer.batch_size = spec.sampler.batch_size;
  if (!split.empty()) spec.split = parse_split(split);
  if (set_methods) {
    spec.methods.clear();
    std::stringstream ss(methods);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) spec.methods.push_back(parse_method(item));
  }
  if (set_noise) spec.noise_levels = parse_list(noise);
  if (set_occlusion) spec.occlusion_levels = parse_list(occlusion);
  if (set_ablation) {
    spec.ablation_stages.clear();
    for (double k : parse_list(ablation)) spec.ablation_stages.push_back(static_cast<std::size_t>(k));
  }
}

void print_table(const ResultTable& table) {
  std::printf("%-6s %-3s %-12s %10s %10s %6s\n", "method", "k", "condition", "mean_deg", "std_deg", "count");
  for (const auto& r : table.rows)
    std::printf("%-6s %-3zu %-12s %10.3f %10.3f %6zu\n", r.method.c_str(), r.stages, r.condition.c_str(),
                r.mean_error_deg, r.std_error_deg, r.count);
  for (const auto& i : table.improvements)
    std::printf("improvement over %s on %s (k=%zu): %.2f%%\n", i.baseline.c_str(), i.condition.c_str(),
                i.stages, i.percent);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian gaze estimation on synthetic faces"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  DatasetConfig gen_cfg;
  std::string gen_out, gen_split = "cross-subject";
  gen->add_option("--count", gen_cfg.count)->required();
  gen->add_option("--subjects", gen_cfg.subjects);
  gen->add_option("--first-subject", gen_cfg.first_subject_id);
  gen->add_option("--seed", gen_cfg.seed)->required();
  gen->add_option("--stream", gen_cfg.stream, "separates datasets drawn from one seed");
  gen->add_option("--camera", gen_split, "cross-subject (default camera) or cross-dataset (shifted)");
  gen->add_option("--out", gen_out)->required();
  int gen_workers = 1;
  gen->add_option("-j,--jobs", gen_workers, "threads");

  // train
  auto* train = app.add_subcommand("train", "fit an MLE or MAP point estimate");
  std::string train_method, train_out;
  DataFlags train_data;
  std::size_t train_stages = 1;
  OptimizerConfig opt = ExperimentSpec::default_optimizer();
  opt.iterations = 7000;
  double train_prior = 1.0;
  train->add_option("method", train_method, "mle or map")->required()->check(CLI::IsMember({"mle", "map"}));
  add_data_flags(train, train_data);
  train->add_option("--stages", train_stages);
  train->add_option("--iterations", opt.iterations);
  train->add_option("--eta", opt.eta);
  train->add_option("--beta", opt.beta);
  train->add_option("--batch", opt.batch_size);
  train->add_option("--eval-every", opt.eval_every);
  train->add_option("--prior-sigma", train_prior);
  train->add_option("--seed", opt.seed);
  train->add_option("--out", train_out)->required();

  // sample
  auto* sample = app.add_subcommand("sample", "run an SGHMC chain over the weights");
  DataFlags sample_data;
  std::string sample_out;
  std::size_t sample_stages = 1;
  SamplerConfig sampler = ExperimentSpec::default_sampler();
  double sample_prior = 1.0;
  add_data_flags(sample, sample_data);
  sample->add_option("--stages", sample_stages);
  sample->add_option("--eta", sampler.eta);
  sample->add_option("--beta", sampler.beta);
  sample->add_option("--burn-in", sampler.burn_in);
  sample->add_option("--interval", sampler.interval);
  sample->add_option("--num-samples", sampler.num_samples);
  sample->add_option("--batch", sampler.batch_size);
  sample->add_option("--prior-sigma", sample_prior);
  sample->add_option("--seed", sampler.seed);
  sample->add_option("--out", sample_out)->required();

  // infer
  auto* infer = app.add_subcommand("infer", "estimate gaze for every sample of a dataset");
  std::string infer_weights, infer_samples, infer_data, infer_out;
  InferenceConfig icfg;
  NoiseSpec infer_noise;
  infer->add_option("--weights", infer_weights, "point-estimate weights file");
  infer->add_option("--samples", infer_samples, "SGHMC sample archive");
  infer->add_option("--data", infer_data, "test dataset file")->required();
  infer->add_option("--m", icfg.m);
  infer->add_option("--n", icfg.n);
  infer->add_option("--seed", icfg.seed);
  infer->add_option("--noise", infer_noise.gaussian_std, "Gaussian noise std (0-255)");
  infer->add_option("--occlusion", infer_noise.occlusion_frac, "occluder side fraction");
  infer->add_option("--out", infer_out, "per-sample CSV");

  // bench / ablate-stages
  auto* bench = app.add_subcommand("bench", "full MLE / MAP / Bayesian comparison");
  ExperimentSpec bench_spec;
  std::string b_out, b_methods, b_noise, b_occ, b_abl, b_split;
  add_spec_flags(bench, bench_spec, b_out, b_methods, b_noise, b_occ, b_abl, b_split);

  auto* ablate = app.add_subcommand("ablate-stages", "Bayesian error against cascade stage count");
  ExperimentSpec abl_spec;
  std::string a_out, a_methods, a_noise, a_occ, a_abl, a_split;
  add_spec_flags(ablate, abl_spec, a_out, a_methods, a_noise, a_occ, a_abl, a_split);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      if (gen_split == "cross-dataset") {
        gen_cfg.cam.fx *= 1.2;
        gen_cfg.cam.fy *= 1.2;
        gen_cfg.scene.noise_floor = 0.02;
      } else if (gen_split != "cross-subject") {
        throw Error(ErrorCode::kInvalidArgument, "unknown camera '" + gen_split + "'");
      }
      gen_cfg.scene.width = 64;
      gen_cfg.sampling = ExperimentSpec::default_sampling();
      DatasetFile file;
      file.cam = gen_cfg.cam;
      file.width = gen_cfg.scene.width;
      file.height = gen_cfg.scene.height;
      file.samples = generate_dataset(gen_cfg, gen_workers);
      write_dataset(file, gen_out);
      log_line("wrote " + std::to_string(file.samples.size()) + " samples to " + gen_out);
    } else if (*train) {
      LoadedTraining d = load_training(train_data, train_stages);
      CascadeModel model(d.arch);
      model.set_input_normalization(d.input_norm);
      Rng rng = make_rng(opt.seed, {kStreamInit});
      auto init = model.initial_weights(rng);
      auto log = [](std::size_t t, double u) {
        if (t % 500 == 0) log_line("update " + std::to_string(t) + " U=" + std::to_string(u));
      };
      OptimizeResult r = train_method == "mle"
                             ? optimize_mle(model, d.train, d.validation, opt, std::move(init), log)
                             : optimize_map(model, d.train, d.validation, opt, Prior{train_prior}, std::move(init), log);
      write_weights(train_out, model, r.w);
      log_line("best validation NLL " + std::to_string(r.best_objective) + " at update " +
               std::to_string(r.best_iteration) + "; wrote " + train_out);
    } else if (*sample) {
      LoadedTraining d = load_training(sample_data, sample_stages);
      CascadeModel model(d.arch);
      model.set_input_normalization(d.input_norm);
      Rng rng = make_rng(sampler.seed, {kStreamInit});
      auto init = model.initial_weights(rng);
      auto log = [](std::size_t t, double u) {
        if (t % 500 == 0) log_line("update " + std::to_string(t) + " U=" + std::to_string(u));
      };
      auto samples = sample_posterior(model, d.train, sampler, Prior{sample_prior}, std::move(init), log);
      write_samples(sample_out, model, sampler, samples);
      log_line("wrote " + std::to_string(samples.size()) + " samples to " + sample_out);
    } else if (*infer) {
      if (infer_weights.empty() == infer_samples.empty())
        throw Error(ErrorCode::kInvalidArgument, "give exactly one of --weights and --samples");
      const DatasetFile data = read_dataset(infer_data);
      const EyeModelParams theta = EyeModelParams::average(data.cam);
      std::unique_ptr<LandmarkModel> model;
      std::vector<std::vector<double>> weights;
      if (!infer_weights.empty()) {
        WeightsFile f = read_weights(infer_weights);
        model = std::move(f.model);
        weights.push_back(std::move(f.w));
      } else {
        SampleArchive a = read_samples(infer_samples);
        model = std::move(a.model);
        weights = std::move(a.samples);
        icfg.m = std::min(icfg.m, weights.size());
      }
      std::ofstream csv;
      if (!infer_out.empty()) {
        csv.open(infer_out);
        if (!csv) throw Error(ErrorCode::kIoError, "cannot open " + infer_out);
        csv << "index,subject,error_deg,gx,gy,gz,trace_cov,failed\n";
      }
      double sum = 0.0;
      for (std::size_t i = 0; i < data.samples.size(); ++i) {
        const auto& s = data.samples[i];
        NoiseSpec ns = infer_noise;
        ns.seed = derive_seed(icfg.seed, {kStreamCorrupt, i});
        const Raster r = corrupt(s.raster, ns);
        UnitVec3 g;
        double trace = 0.0;
        std::size_t failed = 0;
        if (!infer_weights.empty()) {
          g = estimate_gaze_point(r, *model, weights[0], theta);
        } else {
          InferenceConfig c = icfg;
          c.seed = derive_seed(icfg.seed, {kStreamInference, i});
          const GazeEstimate est = estimate_gaze_bayes(r, *model, weights, theta, c);
          g = est.gaze;
          trace = est.covariance.trace();
          failed = est.failed;
        }
        const double err = angular_error_deg(g, s.gaze_gt);
        sum += err;
        if (csv) {
          csv << i << ',' << s.subject_id << ',' << err << ',' << g.x() << ',' << g.y() << ',' << g.z()
              << ',' << trace << ',' << failed << '\n';
        }
      }
      std::printf("mean angular error %.3f deg over %zu samples\n", sum / data.samples.size(),
                  data.samples.size());
    } else if (*bench || *ablate) {
      const bool is_bench = static_cast<bool>(*bench);
      ExperimentSpec& spec = is_bench ? bench_spec : abl_spec;
      CLI::App* cmd = is_bench ? bench : ablate;
      finish_spec(spec, is_bench ? b_methods : a_methods, is_bench ? b_noise : a_noise,
                  is_bench ? b_occ : a_occ, is_bench ? b_abl : a_abl, is_bench ? b_split : a_split,
                  cmd->count("--methods") > 0, cmd->count("--noise") > 0,
                  cmd->count("--occlusion") > 0, cmd->count("--ablation-stages") > 0);
      const auto t0 = std::chrono::steady_clock::now();
      const ResultTable table = is_bench ? run_experiment(spec, log_line) : ablate_stages(spec, log_line);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      print_table(table);
      for (const auto& path : emit(table, is_bench ? b_out : a_out)) log_line("wrote " + path);
      log_line("total " + std::to_string(secs) + " s");
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
