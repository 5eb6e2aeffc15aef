#ifndef BAYGAZE_SGHMC_HPP_
#define BAYGAZE_SGHMC_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "baygaze/rng.hpp"

namespace baygaze {

// Stochastic potential: returns U(w) on a minibatch drawn from `rng` and
// writes dU/dw into `grad`. U is the negative log target density.
using GradOracle =
    std::function<double(std::span<const double> w, std::span<double> grad, Rng& rng)>;

struct SamplerConfig {
  double eta = 1e-4;      // learning rate; the mass matrix is the identity
  double beta = 0.05;     // friction
  std::size_t burn_in = 2000;
  std::size_t interval = 100;
  std::size_t num_samples = 50;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;

  // Throws InvalidArgument.
  void validate() const;
  std::size_t total_updates() const { return burn_in + interval * num_samples; }
};

struct ChainState {
  std::vector<double> w;
  std::vector<double> v;

  ChainState() = default;
  // Zero momentum.
  explicit ChainState(std::vector<double> weights)
      : w(std::move(weights)), v(w.size(), 0.0) {}
};

// One update:
//   v <- (1 - beta) v - eta dU/dw(w) + N(0, 2 eta beta I)
//   w <- w + v
// noise_scale multiplies the injected noise (1 for sampling, 0 for plain
// momentum descent). Throws NonFiniteState if w or v stops being finite.
// Returns U at the pre-update position.
double sghmc_step(ChainState& state, const GradOracle& grad_oracle, const SamplerConfig& cfg,
                  Rng& rng, double noise_scale = 1.0);

using ChainCallback = std::function<void(std::size_t update, double potential)>;

// burn_in updates, then interval * num_samples more, keeping w after every
// interval-th of those. Momentum starts at zero.
std::vector<std::vector<double>> run_chain(std::vector<double> init, const GradOracle& grad_oracle,
                                           const SamplerConfig& cfg, Rng& rng,
                                           const ChainCallback& callback = {});

struct OptimizerConfig {
  double eta = 1e-4;
  double beta = 0.1;  // 1 - momentum
  std::size_t iterations = 5000;
  std::size_t eval_every = 100;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

struct OptimizeResult {
  std::vector<double> w;
  double best_objective = 0.0;  // validation objective of w
  std::size_t best_iteration = 0;
};

// Momentum descent on the oracle (sghmc_step without noise). When a
// validation objective is given it is evaluated every eval_every updates
// (and at the start) and the best iterate is returned; otherwise the final
// iterate.
OptimizeResult optimize_point(std::vector<double> init, const GradOracle& grad_oracle,
                              const OptimizerConfig& cfg,
                              const std::function<double(std::span<const double>)>& validation = {},
                              const ChainCallback& callback = {});

}  // namespace baygaze

#endif  // BAYGAZE_SGHMC_HPP_
