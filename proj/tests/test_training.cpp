#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "baygaze/training.hpp"
#include "test_util.hpp"

namespace baygaze {
namespace {

NetworkArchitecture small_arch() {
  NetworkArchitecture a;
  a.input_width = 4;
  a.input_height = 3;
  a.hidden = {16};
  a.output_offset.setConstant(30.0);
  a.output_scale.setConstant(2.0);
  return a;
}

// Targets are a fixed smooth function of the inputs plus a little noise.
TrainingData learnable_data(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::normal_distribution<double> noise(0.0, 0.05);
  TrainingData d;
  d.inputs.resize(12, static_cast<Eigen::Index>(n));
  d.targets.resize(kLandmarkDims, static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < d.inputs.cols(); ++j) {
    for (Eigen::Index i = 0; i < 12; ++i) d.inputs(i, j) = u(rng);
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(kLandmarkDims); ++k)
      d.targets(k, j) = 30.0 + 2.0 * std::sin(d.inputs(k % 12, j) * 3.0 + 0.1 * static_cast<double>(k)) +
                        noise(rng);
  }
  return d;
}

TEST(Training, SubsetPicksColumnsInOrder) {
  const TrainingData d = learnable_data(10, 1);
  const std::vector<std::size_t> idx = {7, 2, 2, 9};
  const TrainingData s = subset(d, idx);
  ASSERT_EQ(s.size(), 4u);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    EXPECT_EQ(s.inputs.col(static_cast<Eigen::Index>(j)), d.inputs.col(static_cast<Eigen::Index>(idx[j])));
    EXPECT_EQ(s.targets.col(static_cast<Eigen::Index>(j)), d.targets.col(static_cast<Eigen::Index>(idx[j])));
  }
  const std::vector<std::size_t> bad = {10};
  EXPECT_ERROR_CODE(subset(d, bad), ErrorCode::kInvalidArgument);
}

TEST(Training, FullBatchOracleIsTheExactPotential) {
  const LandmarkNet net(small_arch());
  const TrainingData d = learnable_data(40, 2);
  Rng init(3);
  const std::vector<double> w = net.initial_weights(init);
  const GradOracle oracle = make_network_oracle(net, d, 40, Prior{1.5});
  std::vector<double> g1(w.size()), g2(w.size());
  Rng rng(4);
  const double u1 = oracle(w, g1, rng);
  const double u2 = potential_and_grad(net, w, d.inputs, d.targets, 40, Prior{1.5}, g2);
  EXPECT_NEAR(u1, u2, 1e-12 * std::abs(u2));
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(g1[i], g2[i], 1e-12 * (1.0 + std::abs(g2[i])));
}

TEST(Training, OracleRejectsBadArguments) {
  const LandmarkNet net(small_arch());
  const TrainingData empty;
  EXPECT_ERROR_CODE(make_network_oracle(net, empty, 8, std::nullopt), ErrorCode::kInsufficientData);
  const TrainingData d = learnable_data(5, 5);
  EXPECT_ERROR_CODE(make_network_oracle(net, d, 0, std::nullopt), ErrorCode::kInvalidArgument);
}

TEST(Training, MeanNllIsChunkInvariant) {
  const LandmarkNet net(small_arch());
  const TrainingData d = learnable_data(600, 6);
  Rng init(7);
  const std::vector<double> w = net.initial_weights(init);
  const double whole = net.nll_sum_and_grad(w, d.inputs, d.targets, {}) / 600.0;
  EXPECT_NEAR(mean_nll(net, w, d), whole, 1e-10 * std::abs(whole));
  EXPECT_ERROR_CODE(mean_nll(net, w, TrainingData{}), ErrorCode::kInsufficientData);
}

TEST(Training, MleImprovesValidationNll) {
  const LandmarkNet net(small_arch());
  const TrainingData train = learnable_data(400, 8);
  const TrainingData val = learnable_data(100, 9);
  Rng init(10);
  const std::vector<double> w0 = net.initial_weights(init);
  OptimizerConfig cfg;
  cfg.eta = 2e-5;
  cfg.beta = 0.1;
  cfg.iterations = 1500;
  cfg.eval_every = 50;
  cfg.batch_size = 32;
  const OptimizeResult r = optimize_mle(net, train, val, cfg, w0);
  EXPECT_LT(r.best_objective, mean_nll(net, w0, val) - 1.0);
  EXPECT_DOUBLE_EQ(r.best_objective, mean_nll(net, r.w, val));
}

TEST(Training, MapWithVagueOrTightPrior) {
  const LandmarkNet net(small_arch());
  const TrainingData train = learnable_data(200, 11);
  Rng init(12);
  const std::vector<double> w0 = net.initial_weights(init);
  OptimizerConfig cfg;
  cfg.eta = 2e-5;
  cfg.iterations = 300;
  cfg.eval_every = 300;
  cfg.batch_size = 1000;
  const OptimizeResult mle = optimize_mle(net, train, TrainingData{}, cfg, w0);
  const OptimizeResult vague = optimize_map(net, train, TrainingData{}, cfg, Prior{1e8}, w0);
  for (std::size_t i = 0; i < w0.size(); ++i) EXPECT_NEAR(vague.w[i], mle.w[i], 1e-8);

  const OptimizeResult tight = optimize_map(net, train, TrainingData{}, cfg, Prior{0.05}, w0);
  double n_mle = 0.0, n_tight = 0.0;
  for (std::size_t i = 0; i < w0.size(); ++i) {
    n_mle += mle.w[i] * mle.w[i];
    n_tight += tight.w[i] * tight.w[i];
  }
  EXPECT_LT(n_tight, n_mle);
}

TEST(Training, SamplePosteriorShapeAndDeterminism) {
  const LandmarkNet net(small_arch());
  const TrainingData train = learnable_data(100, 13);
  Rng init(14);
  const std::vector<double> w0 = net.initial_weights(init);
  SamplerConfig cfg;
  cfg.burn_in = 30;
  cfg.interval = 5;
  cfg.num_samples = 6;
  cfg.batch_size = 16;
  cfg.seed = 15;
  std::size_t calls = 0;
  const auto a = sample_posterior(net, train, cfg, Prior{}, w0, [&](std::size_t, double) { ++calls; });
  ASSERT_EQ(a.size(), 6u);
  for (const auto& w : a) EXPECT_EQ(w.size(), net.parameter_count());
  EXPECT_EQ(calls, cfg.total_updates());
  EXPECT_EQ(a, sample_posterior(net, train, cfg, Prior{}, w0));
  cfg.seed = 16;
  EXPECT_NE(a, sample_posterior(net, train, cfg, Prior{}, w0));
}

}  // namespace
}  // namespace baygaze
