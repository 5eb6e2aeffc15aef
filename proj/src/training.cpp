#include "baygaze/training.hpp"

#include <algorithm>
#include <numeric>

#include "baygaze/error.hpp"

namespace baygaze {

TrainingData subset(const TrainingData& data, std::span<const std::size_t> index) {
  TrainingData out;
  out.inputs.resize(data.inputs.rows(), static_cast<Eigen::Index>(index.size()));
  out.targets.resize(data.targets.rows(), static_cast<Eigen::Index>(index.size()));
  for (std::size_t j = 0; j < index.size(); ++j) {
    if (index[j] >= data.size()) throw Error(ErrorCode::kInvalidArgument, "subset index out of range");
    out.inputs.col(static_cast<Eigen::Index>(j)) = data.inputs.col(static_cast<Eigen::Index>(index[j]));
    out.targets.col(static_cast<Eigen::Index>(j)) = data.targets.col(static_cast<Eigen::Index>(index[j]));
  }
  return out;
}

GradOracle make_network_oracle(const LandmarkModel& model, const TrainingData& data,
                               std::size_t batch_size, std::optional<Prior> prior) {
  if (data.size() == 0) throw Error(ErrorCode::kInsufficientData, "empty training set");
  if (batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch size must be at least 1");
  const std::size_t n = data.size();
  return [&model, &data, batch_size, prior, n](std::span<const double> w, std::span<double> grad,
                                               Rng& rng) {
    if (batch_size >= n)
      return potential_and_grad(model, w, data.inputs, data.targets, n, prior, grad);
    std::vector<std::size_t> index(batch_size);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (auto& i : index) i = pick(rng);
    const TrainingData batch = subset(data, index);
    return potential_and_grad(model, w, batch.inputs, batch.targets, n, prior, grad);
  };
}

double mean_nll(const LandmarkModel& model, std::span<const double> w, const TrainingData& data) {
  if (data.size() == 0) throw Error(ErrorCode::kInsufficientData, "empty evaluation set");
  constexpr Eigen::Index kChunk = 256;
  double total = 0.0;
  for (Eigen::Index start = 0; start < data.inputs.cols(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, data.inputs.cols() - start);
    total += model.nll_sum_and_grad(w, data.inputs.middleCols(start, len),
                                    data.targets.middleCols(start, len), {});
  }
  return total / static_cast<double>(data.size());
}

namespace {

OptimizeResult optimize(const LandmarkModel& model, const TrainingData& train,
                        const TrainingData& validation, const OptimizerConfig& cfg,
                        std::optional<Prior> prior, std::vector<double> init,
                        const ChainCallback& callback) {
  const GradOracle oracle = make_network_oracle(model, train, cfg.batch_size, prior);
  std::function<double(std::span<const double>)> objective;
  if (validation.size() > 0)
    objective = [&](std::span<const double> w) { return mean_nll(model, w, validation); };
  return optimize_point(std::move(init), oracle, cfg, objective, callback);
}

}  // namespace

OptimizeResult optimize_mle(const LandmarkModel& model, const TrainingData& train,
                            const TrainingData& validation, const OptimizerConfig& cfg,
                            std::vector<double> init, const ChainCallback& callback) {
  return optimize(model, train, validation, cfg, std::nullopt, std::move(init), callback);
}

OptimizeResult optimize_map(const LandmarkModel& model, const TrainingData& train,
                            const TrainingData& validation, const OptimizerConfig& cfg,
                            const Prior& prior, std::vector<double> init,
                            const ChainCallback& callback) {
  return optimize(model, train, validation, cfg, prior, std::move(init), callback);
}

std::vector<std::vector<double>> sample_posterior(const LandmarkModel& model,
                                                  const TrainingData& train,
                                                  const SamplerConfig& cfg, const Prior& prior,
                                                  std::vector<double> init,
                                                  const ChainCallback& callback) {
  const GradOracle oracle = make_network_oracle(model, train, cfg.batch_size, prior);
  Rng rng = make_rng(cfg.seed, {kStreamChain});
  return run_chain(std::move(init), oracle, cfg, rng, callback);
}

}  // namespace baygaze
