#include "baygaze/sghmc.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <boost/random/normal_distribution.hpp>

#include "baygaze/error.hpp"

namespace baygaze {

void SamplerConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw Error(ErrorCode::kInvalidArgument, "eta must be positive");
  if (!(beta > 0.0 && beta < 1.0)) throw Error(ErrorCode::kInvalidArgument, "beta must lie in (0, 1)");
  if (interval < 1) throw Error(ErrorCode::kInvalidArgument, "interval must be at least 1");
  if (batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch size must be at least 1");
}

void OptimizerConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw Error(ErrorCode::kInvalidArgument, "eta must be positive");
  if (!(beta > 0.0 && beta <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "beta must lie in (0, 1]");
  if (eval_every < 1) throw Error(ErrorCode::kInvalidArgument, "eval_every must be at least 1");
  if (batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch size must be at least 1");
}

namespace {

double momentum_step(ChainState& state, std::vector<double>& grad, const GradOracle& oracle,
                     double eta, double beta, Rng& rng, double noise_scale) {
  const std::size_t p = state.w.size();
  if (state.v.size() != p) throw Error(ErrorCode::kShapeMismatch, "momentum and weights differ in length");
  grad.assign(p, 0.0);
  const double u = oracle(state.w, grad, rng);
  const double keep = 1.0 - beta;
  bool finite = std::isfinite(u);
  if (noise_scale != 0.0) {
    boost::random::normal_distribution<double> normal(0.0, noise_scale * std::sqrt(2.0 * eta * beta));
    for (std::size_t i = 0; i < p; ++i) {
      state.v[i] = keep * state.v[i] - eta * grad[i] + normal(rng);
      state.w[i] += state.v[i];
      finite = finite && std::isfinite(state.w[i]) && std::isfinite(state.v[i]);
    }
  } else {
    for (std::size_t i = 0; i < p; ++i) {
      state.v[i] = keep * state.v[i] - eta * grad[i];
      state.w[i] += state.v[i];
      finite = finite && std::isfinite(state.w[i]) && std::isfinite(state.v[i]);
    }
  }
  if (!finite) throw Error(ErrorCode::kNonFiniteState, "non-finite chain state");
  return u;
}

std::string at_update(std::size_t t, const Error& e) {
  return std::string(e.what()) + " at update " + std::to_string(t);
}

}  // namespace

double sghmc_step(ChainState& state, const GradOracle& grad_oracle, const SamplerConfig& cfg,
                  Rng& rng, double noise_scale) {
  cfg.validate();
  std::vector<double> grad;
  return momentum_step(state, grad, grad_oracle, cfg.eta, cfg.beta, rng, noise_scale);
}

std::vector<std::vector<double>> run_chain(std::vector<double> init, const GradOracle& grad_oracle,
                                           const SamplerConfig& cfg, Rng& rng,
                                           const ChainCallback& callback) {
  cfg.validate();
  ChainState state(std::move(init));
  std::vector<double> grad;
  std::vector<std::vector<double>> samples;
  samples.reserve(cfg.num_samples);
  const std::size_t total = cfg.total_updates();
  for (std::size_t t = 1; t <= total; ++t) {
    double u;
    try {
      u = momentum_step(state, grad, grad_oracle, cfg.eta, cfg.beta, rng, 1.0);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNonFiniteState) throw;
      throw Error(ErrorCode::kNonFiniteState, at_update(t, e));
    }
    if (callback) callback(t, u);
    if (t > cfg.burn_in && (t - cfg.burn_in) % cfg.interval == 0) samples.push_back(state.w);
  }
  return samples;
}

OptimizeResult optimize_point(std::vector<double> init, const GradOracle& grad_oracle,
                              const OptimizerConfig& cfg,
                              const std::function<double(std::span<const double>)>& validation,
                              const ChainCallback& callback) {
  cfg.validate();
  Rng rng = make_rng(cfg.seed, {kStreamOptimizer});
  ChainState state(std::move(init));
  std::vector<double> grad;
  OptimizeResult best;
  best.best_objective = std::numeric_limits<double>::infinity();
  auto consider = [&](std::size_t t) {
    const double obj = validation(state.w);
    if (obj < best.best_objective) {
      best.best_objective = obj;
      best.best_iteration = t;
      best.w = state.w;
    }
  };
  if (validation) consider(0);
  for (std::size_t t = 1; t <= cfg.iterations; ++t) {
    double u;
    try {
      u = momentum_step(state, grad, grad_oracle, cfg.eta, cfg.beta, rng, 0.0);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNonFiniteState) throw;
      throw Error(ErrorCode::kNonFiniteState, at_update(t, e));
    }
    if (callback) callback(t, u);
    if (validation && (t % cfg.eval_every == 0 || t == cfg.iterations)) consider(t);
  }
  if (!validation) {
    best.w = std::move(state.w);
    best.best_iteration = cfg.iterations;
    best.best_objective = std::numeric_limits<double>::quiet_NaN();
  }
  return best;
}

}  // namespace baygaze
