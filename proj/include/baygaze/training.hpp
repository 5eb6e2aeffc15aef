#ifndef BAYGAZE_TRAINING_HPP_
#define BAYGAZE_TRAINING_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "baygaze/landmark_net.hpp"
#include "baygaze/sghmc.hpp"

namespace baygaze {

// Columns `index` of the data, in that order.
TrainingData subset(const TrainingData& data, std::span<const std::size_t> index);

// Minibatch potential for a model: batch_size columns drawn uniformly with
// replacement (the whole set, in order, when batch_size >= N), rescaled by
// N / batch_size. `model` and `data` must outlive the oracle.
GradOracle make_network_oracle(const LandmarkModel& model, const TrainingData& data,
                               std::size_t batch_size, std::optional<Prior> prior);

// Average per-sample NLL over the whole set.
double mean_nll(const LandmarkModel& model, std::span<const double> w, const TrainingData& data);

// Point estimators; both select the iterate with the lowest validation NLL.
OptimizeResult optimize_mle(const LandmarkModel& model, const TrainingData& train,
                            const TrainingData& validation, const OptimizerConfig& cfg,
                            std::vector<double> init, const ChainCallback& callback = {});
OptimizeResult optimize_map(const LandmarkModel& model, const TrainingData& train,
                            const TrainingData& validation, const OptimizerConfig& cfg,
                            const Prior& prior, std::vector<double> init,
                            const ChainCallback& callback = {});

// SGHMC over the weight posterior; the chain RNG is keyed by cfg.seed.
std::vector<std::vector<double>> sample_posterior(const LandmarkModel& model,
                                                  const TrainingData& train,
                                                  const SamplerConfig& cfg, const Prior& prior,
                                                  std::vector<double> init,
                                                  const ChainCallback& callback = {});

}  // namespace baygaze

#endif  // BAYGAZE_TRAINING_HPP_
