#include "baygaze/cascade.hpp"

#include <cmath>
#include <string>

#include "baygaze/error.hpp"
#include "dense.hpp"

namespace baygaze {

UncertaintySummary decompose_uncertainty(std::span<const LandmarkDistribution> outputs) {
  if (outputs.empty()) throw Error(ErrorCode::kInvalidArgument, "no stage outputs to summarize");
  const double m = static_cast<double>(outputs.size());
  UncertaintySummary s;
  for (const auto& o : outputs) s.mean += o.mean;
  s.mean /= m;
  for (const auto& o : outputs) {
    s.epistemic += (o.mean - s.mean).cwiseAbs2();
    s.aleatoric += o.variance;
  }
  s.epistemic /= m;
  s.aleatoric /= m;
  s.total = s.epistemic + s.aleatoric;
  return s;
}

ProbabilityMap probability_map(double x, double y, double var_x, double var_y, const MapGrid& grid) {
  if (!(var_x > 0.0) || !(var_y > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "map variances must be positive");
  if (grid.width <= 0 || grid.height <= 0 || !(grid.scale > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "invalid map grid");
  ProbabilityMap map{grid, std::vector<double>(grid.size())};
  for (int gy = 0; gy < grid.height; ++gy) {
    const double dy = grid.node_y(gy) - y;
    for (int gx = 0; gx < grid.width; ++gx) {
      const double dx = grid.node_x(gx) - x;
      map.values[static_cast<std::size_t>(gy) * grid.width + gx] =
          std::exp(-dx * dx / (2.0 * var_x) - dy * dy / (2.0 * var_y));
    }
  }
  return map;
}

struct CascadeModel::Cache {
  Eigen::MatrixXd features;
  Eigen::MatrixXd x;                    // normalized network input
  std::vector<Eigen::MatrixXd> inputs;  // stage inputs for s >= 1 (index s)
  std::vector<Eigen::MatrixXd> hidden;
  std::vector<detail::HeadOutput> heads;
};

CascadeModel::CascadeModel(CascadeArchitecture arch) : arch_(std::move(arch)) {
  if (arch_.input_width <= 0 || arch_.input_height <= 0 || arch_.features == 0 ||
      arch_.stage_hidden == 0 || arch_.stages == 0)
    throw Error(ErrorCode::kInvalidArgument, "cascade sizes must be positive");
  if (arch_.grid.width <= 0 || arch_.grid.height <= 0 || !(arch_.grid.scale > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "invalid map grid");
  if (!arch_.output_offset.allFinite() || !arch_.output_scale.allFinite() ||
      (arch_.output_scale.array() <= 0.0).any())
    throw Error(ErrorCode::kInvalidArgument, "output scale must be positive and finite");
  std::size_t offset = 0;
  auto add = [&](std::size_t in, std::size_t out, Activation act) {
    DenseLayout l{in, out, act, offset};
    offset += l.size();
    return l;
  };
  feature_layer_ = add(arch_.input_size(), arch_.features, Activation::kTanh);
  for (std::size_t s = 0; s < arch_.stages; ++s) {
    Stage st;
    st.hidden = add(s == 0 ? arch_.features : arch_.refine_input_size(), arch_.stage_hidden,
                    Activation::kTanh);
    st.mean = add(arch_.stage_hidden, kLandmarkDims, Activation::kIdentity);
    st.var = add(arch_.stage_hidden, kLandmarkDims, Activation::kIdentity);
    stages_.push_back(st);
  }
  parameter_count_ = offset;
  const double refine = static_cast<double>(arch_.refine_input_size());
  feature_gain_ = std::sqrt(refine / static_cast<double>(arch_.features));
  map_gain_ = std::sqrt(refine / static_cast<double>(kLandmarks));
}

std::pair<std::size_t, std::size_t> CascadeModel::block(std::size_t index) const {
  if (index == 0) return {feature_layer_.offset, feature_layer_.size()};
  if (index > stages_.size()) throw Error(ErrorCode::kInvalidArgument, "no such cascade block");
  const Stage& s = stages_[index - 1];
  return {s.hidden.offset, s.hidden.size() + s.mean.size() + s.var.size()};
}

Eigen::MatrixXd CascadeModel::maps(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& var) const {
  const MapGrid& g = arch_.grid;
  const auto cells = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(kLandmarks) * cells, mean.cols());
  std::vector<double> ex(static_cast<std::size_t>(g.width)), ey(static_cast<std::size_t>(g.height));
  for (Eigen::Index j = 0; j < mean.cols(); ++j) {
    for (std::size_t l = 0; l < kLandmarks; ++l) {
      const auto dx = static_cast<Eigen::Index>(2 * l);
      const double x = mean(dx, j), y = mean(dx + 1, j);
      const double vx = var(dx, j), vy = var(dx + 1, j);
      for (int gx = 0; gx < g.width; ++gx) {
        const double d = g.node_x(gx) - x;
        ex[gx] = std::exp(-d * d / (2.0 * vx));
      }
      for (int gy = 0; gy < g.height; ++gy) {
        const double d = g.node_y(gy) - y;
        ey[gy] = std::exp(-d * d / (2.0 * vy));
      }
      double* col = out.col(j).data() + static_cast<Eigen::Index>(l) * cells;
      for (int gy = 0; gy < g.height; ++gy)
        for (int gx = 0; gx < g.width; ++gx) col[gy * g.width + gx] = ey[gy] * ex[gx];
    }
  }
  return out;
}

void CascadeModel::run_forward(const Eigen::MatrixXd& inputs, std::span<const double> w,
                               Cache& cache) const {
  if (w.size() != parameter_count_) throw Error(ErrorCode::kShapeMismatch, "weight vector has wrong length");
  if (static_cast<std::size_t>(inputs.rows()) != arch_.input_size())
    throw Error(ErrorCode::kShapeMismatch, "input rows do not match the network input");
  const auto f = static_cast<Eigen::Index>(arch_.features);
  cache.x = normalize_inputs(inputs);
  cache.features = detail::dense_forward(feature_layer_, w, cache.x);
  cache.inputs.assign(stages_.size(), Eigen::MatrixXd());
  cache.hidden.clear();
  cache.heads.clear();
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    const Stage& st = stages_[s];
    if (s == 0) {
      cache.hidden.push_back(detail::dense_forward(st.hidden, w, cache.features));
    } else {
      Eigen::MatrixXd& in = cache.inputs[s];
      in.resize(static_cast<Eigen::Index>(arch_.refine_input_size()), inputs.cols());
      in.topRows(f) = feature_gain_ * cache.features;
      in.bottomRows(in.rows() - f) =
          map_gain_ * maps(cache.heads[s - 1].mean, cache.heads[s - 1].variance);
      cache.hidden.push_back(detail::dense_forward(st.hidden, w, in));
    }
    const detail::HeadLayout head{st.mean, st.var, arch_.output_offset, arch_.output_scale};
    cache.heads.push_back(detail::head_forward(head, w, cache.hidden.back()));
  }
}

std::vector<LandmarkDistribution> CascadeModel::forward_batch(const Eigen::MatrixXd& inputs,
                                                              std::span<const double> w) const {
  Cache cache;
  run_forward(inputs, w, cache);
  return detail::to_distributions(cache.heads.back());
}

std::vector<std::vector<LandmarkDistribution>> CascadeModel::forward_stages(
    const Eigen::MatrixXd& inputs, std::span<const double> w) const {
  Cache cache;
  run_forward(inputs, w, cache);
  std::vector<std::vector<LandmarkDistribution>> out;
  for (const auto& h : cache.heads) out.push_back(detail::to_distributions(h));
  return out;
}

double CascadeModel::nll_sum_and_grad(std::span<const double> w, const Eigen::MatrixXd& inputs,
                                      const Eigen::MatrixXd& targets,
                                      std::span<double> grad) const {
  Cache cache;
  run_forward(inputs, w, cache);
  const std::size_t k = stages_.size();
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != parameter_count_)
    throw Error(ErrorCode::kShapeMismatch, "gradient buffer has wrong length");

  std::vector<Eigen::MatrixXd> dmean(k), dvar(k);
  double total = 0.0;
  for (std::size_t s = 0; s < k; ++s) {
    const bool supervised = s + 1 == k || arch_.supervise_all_stages;
    if (supervised) {
      total += detail::head_nll(cache.heads[s], targets, want_grad ? &dmean[s] : nullptr,
                                want_grad ? &dvar[s] : nullptr);
    } else if (want_grad) {
      dmean[s] = Eigen::MatrixXd::Zero(kLandmarkDims, inputs.cols());
      dvar[s] = Eigen::MatrixXd::Zero(kLandmarkDims, inputs.cols());
    }
  }
  if (!want_grad) return total;

  std::fill(grad.begin(), grad.end(), 0.0);
  const auto f = static_cast<Eigen::Index>(arch_.features);
  const MapGrid& g = arch_.grid;
  const auto cells = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd dfeat = Eigen::MatrixXd::Zero(f, inputs.cols());
  std::vector<double> ex(static_cast<std::size_t>(g.width)), ey(static_cast<std::size_t>(g.height));
  for (std::size_t s = k; s-- > 0;) {
    const Stage& st = stages_[s];
    const detail::HeadLayout head{st.mean, st.var, arch_.output_offset, arch_.output_scale};
    Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(cache.hidden[s].rows(), cache.hidden[s].cols());
    detail::head_backward(head, w, cache.hidden[s], cache.heads[s], dmean[s], dvar[s], grad, dh);
    Eigen::MatrixXd din;
    const Eigen::MatrixXd& in = s == 0 ? cache.features : cache.inputs[s];
    detail::dense_backward(st.hidden, w, in, cache.hidden[s], dh, grad, &din);
    if (s == 0) {
      dfeat += din;
      continue;
    }
    dfeat += feature_gain_ * din.topRows(f);

    // Through the maps into the previous stage's mean and variance.
    const detail::HeadOutput& prev = cache.heads[s - 1];
    for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
      for (std::size_t l = 0; l < kLandmarks; ++l) {
        const auto di = static_cast<Eigen::Index>(2 * l);
        const double x = prev.mean(di, j), y = prev.mean(di + 1, j);
        const double vx = prev.variance(di, j), vy = prev.variance(di + 1, j);
        for (int gx = 0; gx < g.width; ++gx) {
          const double d = g.node_x(gx) - x;
          ex[gx] = std::exp(-d * d / (2.0 * vx));
        }
        for (int gy = 0; gy < g.height; ++gy) {
          const double d = g.node_y(gy) - y;
          ey[gy] = std::exp(-d * d / (2.0 * vy));
        }
        const double* dm = din.col(j).data() + f + static_cast<Eigen::Index>(l) * cells;
        double gx_mean = 0.0, gx_var = 0.0, gy_mean = 0.0, gy_var = 0.0;
        for (int gy = 0; gy < g.height; ++gy) {
          const double ddy = g.node_y(gy) - y;
          for (int gx = 0; gx < g.width; ++gx) {
            const double ddx = g.node_x(gx) - x;
            const double t = map_gain_ * dm[gy * g.width + gx] * ey[gy] * ex[gx];
            if (t == 0.0) continue;
            gx_mean += t * ddx;
            gx_var += t * ddx * ddx;
            gy_mean += t * ddy;
            gy_var += t * ddy * ddy;
          }
        }
        dmean[s - 1](di, j) += gx_mean / vx;
        dmean[s - 1](di + 1, j) += gy_mean / vy;
        dvar[s - 1](di, j) += gx_var / (2.0 * vx * vx);
        dvar[s - 1](di + 1, j) += gy_var / (2.0 * vy * vy);
      }
    }
  }
  detail::dense_backward(feature_layer_, w, cache.x, cache.features, dfeat, grad, nullptr);
  return total;
}

std::vector<double> CascadeModel::initial_weights(Rng& rng) const {
  std::vector<double> w(parameter_count_, 0.0);
  detail::init_dense(feature_layer_, kInitStd, rng, w);
  for (const auto& st : stages_) {
    detail::init_dense(st.hidden, kInitStd, rng, w);
    detail::init_dense(st.mean, kInitStd, rng, w);
    detail::init_dense(st.var, kInitStd, rng, w);
  }
  return w;
}

}  // namespace baygaze
