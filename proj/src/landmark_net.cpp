#include "baygaze/landmark_net.hpp"

#include <cmath>
#include <string>

#include "baygaze/error.hpp"
#include "dense.hpp"

namespace baygaze {

namespace detail {

Eigen::MatrixXd dense_forward(const DenseLayout& l, std::span<const double> w,
                              const Eigen::MatrixXd& X) {
  const double s = 1.0 / std::sqrt(static_cast<double>(l.in));
  Eigen::MatrixXd Z = (weight_of(l, w) * X) * s;
  Z.colwise() += bias_of(l, w);
  if (l.activation == Activation::kTanh) Z = Z.array().tanh().matrix();
  return Z;
}

void dense_backward(const DenseLayout& l, std::span<const double> w, const Eigen::MatrixXd& X,
                    const Eigen::MatrixXd& A, Eigen::MatrixXd& dA, std::span<double> grad,
                    Eigen::MatrixXd* dX) {
  const double s = 1.0 / std::sqrt(static_cast<double>(l.in));
  if (l.activation == Activation::kTanh) dA.array() *= 1.0 - A.array().square();
  MatMap gW(grad.data() + l.offset, static_cast<Eigen::Index>(l.out),
            static_cast<Eigen::Index>(l.in));
  VecMap gb(grad.data() + l.offset + l.in * l.out, static_cast<Eigen::Index>(l.out));
  gW.noalias() += (dA * X.transpose()) * s;
  // Summed into aligned storage first: evaluated straight into gb, the
  // rounding would depend on the address of the gradient buffer.
  const Eigen::VectorXd db = dA.rowwise().sum();
  gb += db;
  if (dX) dX->noalias() = (weight_of(l, w).transpose() * dA) * s;
}

HeadOutput head_forward(const HeadLayout& h, std::span<const double> w, const Eigen::MatrixXd& H) {
  HeadOutput out;
  out.mean = dense_forward(h.mean, w, H);
  out.mean = (out.mean.array().colwise() * h.scale.array()).matrix();
  out.mean.colwise() += h.offset;
  const Eigen::MatrixXd raw = dense_forward(h.var, w, H);
  const Eigen::ArrayXd s2 = h.scale.array().square();
  out.variance.resize(raw.rows(), raw.cols());
  out.dvar_draw.resize(raw.rows(), raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    for (Eigen::Index d = 0; d < raw.rows(); ++d) {
      const double r = raw(d, j);
      out.variance(d, j) = s2(d) * softplus(r) + kVarianceFloor;
      out.dvar_draw(d, j) = s2(d) * sigmoid(r);
    }
  }
  return out;
}

double head_nll(const HeadOutput& out, const Eigen::MatrixXd& targets, Eigen::MatrixXd* dmean,
                Eigen::MatrixXd* dvar) {
  constexpr double kLog2Pi = 1.8378770664093454836;
  if (targets.rows() != out.mean.rows() || targets.cols() != out.mean.cols())
    throw Error(ErrorCode::kShapeMismatch, "target matrix does not match the batch");
  if (dmean) dmean->resize(out.mean.rows(), out.mean.cols());
  if (dvar) dvar->resize(out.mean.rows(), out.mean.cols());
  double total = 0.0;
  for (Eigen::Index j = 0; j < out.mean.cols(); ++j) {
    for (Eigen::Index d = 0; d < out.mean.rows(); ++d) {
      const double v = out.variance(d, j);
      const double r = targets(d, j) - out.mean(d, j);
      total += 0.5 * (kLog2Pi + std::log(v)) + r * r / (2.0 * v);
      if (dmean) (*dmean)(d, j) = -r / v;
      if (dvar) (*dvar)(d, j) = 0.5 / v - r * r / (2.0 * v * v);
    }
  }
  return total;
}

void head_backward(const HeadLayout& h, std::span<const double> w, const Eigen::MatrixXd& H,
                   const HeadOutput& out, const Eigen::MatrixXd& dmean,
                   const Eigen::MatrixXd& dvar, std::span<double> grad, Eigen::MatrixXd& dH) {
  Eigen::MatrixXd dz_mean = (dmean.array().colwise() * h.scale.array()).matrix();
  Eigen::MatrixXd dz_var = (dvar.array() * out.dvar_draw.array()).matrix();
  Eigen::MatrixXd dx;
  const Eigen::MatrixXd unused;
  dense_backward(h.mean, w, H, unused, dz_mean, grad, &dx);
  dH += dx;
  dense_backward(h.var, w, H, unused, dz_var, grad, &dx);
  dH += dx;
}

std::vector<LandmarkDistribution> to_distributions(const HeadOutput& out) {
  std::vector<LandmarkDistribution> dists(static_cast<std::size_t>(out.mean.cols()));
  for (Eigen::Index j = 0; j < out.mean.cols(); ++j) {
    dists[j].mean = out.mean.col(j);
    dists[j].variance = out.variance.col(j);
  }
  return dists;
}

void init_dense(const DenseLayout& l, double std, Rng& rng, std::span<double> w) {
  std::normal_distribution<double> normal(0.0, std);
  for (std::size_t i = 0; i < l.in * l.out; ++i) w[l.offset + i] = normal(rng);
  for (std::size_t i = 0; i < l.out; ++i) w[l.offset + l.in * l.out + i] = 0.0;
}

}  // namespace detail

void LandmarkDistribution::validate() const {
  if (!mean.allFinite() || !variance.allFinite() || (variance.array() <= 0.0).any())
    throw Error(ErrorCode::kInvalidArgument, "landmark distribution must be finite with positive variances");
}

double nll(const LandmarkDistribution& dist, std::span<const double> z) {
  if (z.size() != kLandmarkDims)
    throw Error(ErrorCode::kShapeMismatch, "landmark vector must have 24 entries");
  constexpr double kLog2Pi = 1.8378770664093454836;
  double total = 0.0;
  for (std::size_t d = 0; d < kLandmarkDims; ++d) {
    const double v = dist.variance(d);
    const double r = z[d] - dist.mean(d);
    total += 0.5 * (kLog2Pi + std::log(v)) + r * r / (2.0 * v);
  }
  return total;
}

Eigen::VectorXd encode_raster(const Raster& raster, int width, int height) {
  if (raster.width != width || raster.height != height || raster.size() != static_cast<std::size_t>(width) * height)
    throw Error(ErrorCode::kShapeMismatch,
                "raster is " + std::to_string(raster.width) + "x" + std::to_string(raster.height) +
                    ", network expects " + std::to_string(width) + "x" + std::to_string(height));
  Eigen::VectorXd x(static_cast<Eigen::Index>(raster.size()));
  for (std::size_t i = 0; i < raster.size(); ++i) x(static_cast<Eigen::Index>(i)) = raster.pixels[i] - 0.5;
  return x;
}

LandmarkDistribution LandmarkModel::forward(const Raster& raster, std::span<const double> w) const {
  const Eigen::MatrixXd x = encode_raster(raster, input_width(), input_height());
  return forward_batch(x, w).front();
}

Eigen::MatrixXd LandmarkModel::encode(std::span<const Raster* const> rasters) const {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(input_size()), static_cast<Eigen::Index>(rasters.size()));
  for (std::size_t j = 0; j < rasters.size(); ++j)
    X.col(static_cast<Eigen::Index>(j)) = encode_raster(*rasters[j], input_width(), input_height());
  return X;
}

void LandmarkModel::set_input_normalization(InputNormalization norm) {
  if (!norm.empty() || norm.scale.size() != 0) {
    const auto n = static_cast<Eigen::Index>(input_size());
    if (norm.offset.size() != n || norm.scale.size() != n)
      throw Error(ErrorCode::kShapeMismatch, "input normalization has wrong length");
    if (!norm.offset.allFinite() || !norm.scale.allFinite() || !(norm.scale.array() > 0.0).all())
      throw Error(ErrorCode::kInvalidArgument, "input normalization must be finite with positive scales");
  }
  input_norm_ = std::move(norm);
}

Eigen::MatrixXd LandmarkModel::normalize_inputs(const Eigen::MatrixXd& inputs) const {
  if (input_norm_.empty()) return inputs;
  return (inputs.colwise() - input_norm_.offset).array().colwise() / input_norm_.scale.array();
}

double potential_and_grad(const LandmarkModel& model, std::span<const double> w,
                          const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                          std::size_t n_total, const std::optional<Prior>& prior,
                          std::span<double> grad) {
  const std::size_t p = model.parameter_count();
  if (w.size() != p) throw Error(ErrorCode::kShapeMismatch, "weight vector has wrong length");
  if (!grad.empty() && grad.size() != p)
    throw Error(ErrorCode::kShapeMismatch, "gradient buffer has wrong length");
  if (prior && !(prior->sigma > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "prior sigma must be positive");
  double u = 0.0;
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  if (n_total > 0) {
    const auto batch = static_cast<std::size_t>(inputs.cols());
    if (batch == 0) throw Error(ErrorCode::kInvalidArgument, "empty minibatch");
    const double scale = static_cast<double>(n_total) / static_cast<double>(batch);
    u = scale * model.nll_sum_and_grad(w, inputs, targets, grad);
    if (!grad.empty())
      for (double& g : grad) g *= scale;
  }
  if (prior) {
    const double inv = 1.0 / (prior->sigma * prior->sigma);
    double sq = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      sq += w[i] * w[i];
      if (!grad.empty()) grad[i] += w[i] * inv;
    }
    u += 0.5 * sq * inv;
  }
  return u;
}

std::vector<DenseLayout> NetworkArchitecture::layers() const {
  std::vector<DenseLayout> out;
  std::size_t in = input_size();
  std::size_t offset = 0;
  for (std::size_t h : hidden) {
    out.push_back({in, h, Activation::kTanh, offset});
    offset += out.back().size();
    in = h;
  }
  out.push_back({in, kLandmarkDims, Activation::kIdentity, offset});
  offset += out.back().size();
  out.push_back({in, kLandmarkDims, Activation::kIdentity, offset});
  return out;
}

std::size_t NetworkArchitecture::parameter_count() const {
  const auto l = layers();
  return l.back().offset + l.back().size();
}

LandmarkNet::LandmarkNet(NetworkArchitecture arch) : arch_(std::move(arch)) {
  if (arch_.input_width <= 0 || arch_.input_height <= 0)
    throw Error(ErrorCode::kInvalidArgument, "input size must be positive");
  for (std::size_t h : arch_.hidden)
    if (h == 0) throw Error(ErrorCode::kInvalidArgument, "hidden layer width must be positive");
  if (!arch_.output_offset.allFinite() || !arch_.output_scale.allFinite() ||
      (arch_.output_scale.array() <= 0.0).any())
    throw Error(ErrorCode::kInvalidArgument, "output scale must be positive and finite");
  layers_ = arch_.layers();
  parameter_count_ = arch_.parameter_count();
}

std::vector<LandmarkDistribution> LandmarkNet::forward_batch(const Eigen::MatrixXd& inputs,
                                                             std::span<const double> w) const {
  if (w.size() != parameter_count_) throw Error(ErrorCode::kShapeMismatch, "weight vector has wrong length");
  if (static_cast<std::size_t>(inputs.rows()) != arch_.input_size())
    throw Error(ErrorCode::kShapeMismatch, "input rows do not match the network input");
  Eigen::MatrixXd a = normalize_inputs(inputs);
  const std::size_t n_hidden = arch_.hidden.size();
  for (std::size_t l = 0; l < n_hidden; ++l) a = detail::dense_forward(layers_[l], w, a);
  const detail::HeadLayout head{layers_[n_hidden], layers_[n_hidden + 1], arch_.output_offset,
                                arch_.output_scale};
  return detail::to_distributions(detail::head_forward(head, w, a));
}

double LandmarkNet::nll_sum_and_grad(std::span<const double> w, const Eigen::MatrixXd& inputs,
                                     const Eigen::MatrixXd& targets, std::span<double> grad) const {
  if (w.size() != parameter_count_) throw Error(ErrorCode::kShapeMismatch, "weight vector has wrong length");
  if (static_cast<std::size_t>(inputs.rows()) != arch_.input_size())
    throw Error(ErrorCode::kShapeMismatch, "input rows do not match the network input");
  const std::size_t n_hidden = arch_.hidden.size();
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(n_hidden + 1);
  acts.push_back(normalize_inputs(inputs));
  for (std::size_t l = 0; l < n_hidden; ++l) acts.push_back(detail::dense_forward(layers_[l], w, acts.back()));
  const detail::HeadLayout head{layers_[n_hidden], layers_[n_hidden + 1], arch_.output_offset,
                                arch_.output_scale};
  const detail::HeadOutput out = detail::head_forward(head, w, acts.back());
  if (grad.empty()) return detail::head_nll(out, targets, nullptr, nullptr);

  if (grad.size() != parameter_count_) throw Error(ErrorCode::kShapeMismatch, "gradient buffer has wrong length");
  std::fill(grad.begin(), grad.end(), 0.0);
  Eigen::MatrixXd dmean, dvar;
  const double total = detail::head_nll(out, targets, &dmean, &dvar);
  Eigen::MatrixXd da = Eigen::MatrixXd::Zero(acts.back().rows(), acts.back().cols());
  detail::head_backward(head, w, acts.back(), out, dmean, dvar, grad, da);
  for (std::size_t l = n_hidden; l-- > 0;) {
    Eigen::MatrixXd dx;
    detail::dense_backward(layers_[l], w, acts[l], acts[l + 1], da, grad, l > 0 ? &dx : nullptr);
    da = std::move(dx);
  }
  return total;
}

std::vector<double> LandmarkNet::initial_weights(Rng& rng) const {
  std::vector<double> w(parameter_count_, 0.0);
  for (const auto& l : layers_) detail::init_dense(l, kInitStd, rng, w);
  return w;
}

std::vector<DenseParams> LandmarkNet::unflatten(std::span<const double> w) const {
  if (w.size() != parameter_count_) throw Error(ErrorCode::kShapeMismatch, "weight vector has wrong length");
  std::vector<DenseParams> out;
  for (const auto& l : layers_) out.push_back({detail::weight_of(l, w), detail::bias_of(l, w)});
  return out;
}

std::vector<double> LandmarkNet::flatten(const std::vector<DenseParams>& params) const {
  if (params.size() != layers_.size()) throw Error(ErrorCode::kShapeMismatch, "wrong number of layers");
  std::vector<double> w(parameter_count_);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (static_cast<std::size_t>(params[i].weight.rows()) != l.out ||
        static_cast<std::size_t>(params[i].weight.cols()) != l.in ||
        static_cast<std::size_t>(params[i].bias.size()) != l.out)
      throw Error(ErrorCode::kShapeMismatch, "layer " + std::to_string(i) + " has wrong shape");
    detail::MatMap(w.data() + l.offset, params[i].weight.rows(), params[i].weight.cols()) = params[i].weight;
    detail::VecMap(w.data() + l.offset + l.in * l.out, params[i].bias.size()) = params[i].bias;
  }
  return w;
}

TrainingData make_training_data(std::span<const SyntheticSample> samples, int width, int height,
                                double label_jitter_px, std::uint64_t jitter_seed) {
  if (label_jitter_px < 0.0) throw Error(ErrorCode::kInvalidArgument, "label jitter must be non-negative");
  TrainingData data;
  const auto n = static_cast<Eigen::Index>(samples.size());
  data.inputs.resize(static_cast<Eigen::Index>(width) * height, n);
  data.targets.resize(kLandmarkDims, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const SyntheticSample& s = samples[static_cast<std::size_t>(j)];
    data.inputs.col(j) = encode_raster(s.raster, width, height);
    const auto z = s.landmark_vector();
    for (std::size_t d = 0; d < kLandmarkDims; ++d) data.targets(static_cast<Eigen::Index>(d), j) = z[d];
    if (label_jitter_px > 0.0) {
      Rng rng = make_rng(jitter_seed, {kStreamJitter, static_cast<std::uint64_t>(j)});
      std::normal_distribution<double> normal(0.0, label_jitter_px);
      for (std::size_t d = 0; d < kLandmarkDims; ++d) data.targets(static_cast<Eigen::Index>(d), j) += normal(rng);
    }
  }
  return data;
}

void fit_output_normalization(const TrainingData& data, LandmarkVector& offset,
                              LandmarkVector& scale) {
  if (data.size() == 0) throw Error(ErrorCode::kInsufficientData, "no training targets");
  offset = data.targets.rowwise().mean();
  const Eigen::MatrixXd centered = data.targets.colwise() - offset;
  scale = (centered.array().square().rowwise().sum() / static_cast<double>(data.size())).sqrt();
  scale = scale.cwiseMax(1e-3);
}

InputNormalization fit_input_normalization(const TrainingData& data, double min_scale) {
  if (data.size() == 0) throw Error(ErrorCode::kInsufficientData, "no training inputs");
  if (!(min_scale > 0.0)) throw Error(ErrorCode::kInvalidArgument, "min_scale must be positive");
  InputNormalization norm;
  norm.offset = data.inputs.rowwise().mean();
  const Eigen::MatrixXd centered = data.inputs.colwise() - norm.offset;
  norm.scale = (centered.array().square().rowwise().sum() / static_cast<double>(data.size())).sqrt();
  norm.scale = norm.scale.cwiseMax(min_scale);
  return norm;
}

}  // namespace baygaze
