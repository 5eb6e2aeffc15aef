#ifndef BAYGAZE_LANDMARK_NET_HPP_
#define BAYGAZE_LANDMARK_NET_HPP_

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "baygaze/eye_model.hpp"
#include "baygaze/rng.hpp"
#include "baygaze/synth.hpp"

namespace baygaze {

using LandmarkVector = Eigen::Matrix<double, kLandmarkDims, 1>;

// Diagonal Gaussian over the 24 landmark coordinates (pixels, pixels^2).
struct LandmarkDistribution {
  LandmarkVector mean = LandmarkVector::Zero();
  LandmarkVector variance = LandmarkVector::Ones();

  // Throws InvalidArgument unless all entries are finite and variances > 0.
  void validate() const;
};

// Isotropic zero-mean Gaussian prior over every stored weight.
struct Prior {
  double sigma = 1.0;
};

constexpr double kVarianceFloor = 1e-6;

// Std of the stored weights at initialization. Layers divide by
// sqrt(fan_in), so the effective std is kInitStd / sqrt(fan_in).
constexpr double kInitStd = 1.0;

// -sum_d log N(z_d; mean_d, variance_d).
double nll(const LandmarkDistribution& dist, std::span<const double> z);

// Network input: raster values shifted to [-0.5, 0.5], row-major.
Eigen::VectorXd encode_raster(const Raster& raster, int width, int height);

// Per-pixel affine map applied to encoded rasters before the first layer,
// x' = (x - offset) / scale. Empty vectors mean the identity.
struct InputNormalization {
  Eigen::VectorXd offset;
  Eigen::VectorXd scale;

  bool empty() const { return offset.size() == 0; }
};

// Common surface of the single-stage regressor and the cascade, which is
// all the sampler, the optimizers and the gaze inference need.
class LandmarkModel {
 public:
  virtual ~LandmarkModel() = default;

  virtual std::size_t parameter_count() const = 0;
  virtual int input_width() const = 0;
  virtual int input_height() const = 0;
  std::size_t input_size() const {
    return static_cast<std::size_t>(input_width()) * input_height();
  }

  // Columns of `inputs` are encoded rasters.
  virtual std::vector<LandmarkDistribution> forward_batch(const Eigen::MatrixXd& inputs,
                                                          std::span<const double> w) const = 0;

  // Sum over columns of the per-sample NLL; overwrites `grad` (size P) with
  // its gradient unless `grad` is empty.
  virtual double nll_sum_and_grad(std::span<const double> w, const Eigen::MatrixXd& inputs,
                                  const Eigen::MatrixXd& targets,
                                  std::span<double> grad) const = 0;

  // i.i.d. N(0, kInitStd^2) stored weights, zero biases.
  virtual std::vector<double> initial_weights(Rng& rng) const = 0;

  // Throws ShapeMismatch when the raster does not match the input size.
  LandmarkDistribution forward(const Raster& raster, std::span<const double> w) const;
  Eigen::MatrixXd encode(std::span<const Raster* const> rasters) const;

  const InputNormalization& input_normalization() const { return input_norm_; }
  // Throws ShapeMismatch unless both vectors have input_size() entries and
  // InvalidArgument unless every scale is positive and finite.
  void set_input_normalization(InputNormalization norm);

 protected:
  Eigen::MatrixXd normalize_inputs(const Eigen::MatrixXd& inputs) const;

 private:
  InputNormalization input_norm_;
};

// U(w) = (n_total / |B|) sum_{i in B} nll_i + |w|^2 / (2 sigma^2), the
// negative log posterior up to a constant. Without a prior this is the
// (rescaled) negative log likelihood used for MLE. n_total = 0 leaves only
// the prior term. Writes dU/dw into `grad` unless it is empty.
double potential_and_grad(const LandmarkModel& model, std::span<const double> w,
                          const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                          std::size_t n_total, const std::optional<Prior>& prior,
                          std::span<double> grad);

enum class Activation { kTanh, kIdentity };

// One dense block of the flat weight vector: W (out x in, column-major)
// followed by b (out). Pre-activation W x / sqrt(in) + b.
struct DenseLayout {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::kTanh;
  std::size_t offset = 0;

  std::size_t size() const { return in * out + out; }
};

// Dense parameters unpacked from the flat vector.
struct DenseParams {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

struct NetworkArchitecture {
  int input_width = 64;
  int input_height = 64;
  std::vector<std::size_t> hidden = {128, 64};  // tanh layers
  // Affine map from the linear mean head to pixels; the variance head is
  // scaled by output_scale^2 before the floor is added.
  LandmarkVector output_offset = LandmarkVector::Zero();
  LandmarkVector output_scale = LandmarkVector::Ones();

  std::size_t input_size() const {
    return static_cast<std::size_t>(input_width) * input_height;
  }
  // Hidden layers, then the mean head, then the variance head.
  std::vector<DenseLayout> layers() const;
  std::size_t parameter_count() const;
};

// raster -> tanh hidden layers -> (mean head: linear, variance head:
// softplus + floor).
class LandmarkNet final : public LandmarkModel {
 public:
  explicit LandmarkNet(NetworkArchitecture arch);

  const NetworkArchitecture& architecture() const { return arch_; }

  std::size_t parameter_count() const override { return parameter_count_; }
  int input_width() const override { return arch_.input_width; }
  int input_height() const override { return arch_.input_height; }

  std::vector<LandmarkDistribution> forward_batch(const Eigen::MatrixXd& inputs,
                                                  std::span<const double> w) const override;
  double nll_sum_and_grad(std::span<const double> w, const Eigen::MatrixXd& inputs,
                          const Eigen::MatrixXd& targets, std::span<double> grad) const override;
  std::vector<double> initial_weights(Rng& rng) const override;

  std::vector<DenseParams> unflatten(std::span<const double> w) const;
  std::vector<double> flatten(const std::vector<DenseParams>& layers) const;

 private:
  NetworkArchitecture arch_;
  std::vector<DenseLayout> layers_;
  std::size_t parameter_count_ = 0;
};

// Training matrices built from samples: encoded rasters as columns, and
// landmark targets (optionally jittered) as columns.
struct TrainingData {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;

  std::size_t size() const { return static_cast<std::size_t>(inputs.cols()); }
};

TrainingData make_training_data(std::span<const SyntheticSample> samples, int width, int height,
                                double label_jitter_px = 0.0, std::uint64_t jitter_seed = 0);

// Per-coordinate mean and standard deviation of the targets, used as the
// output affine map of a network.
void fit_output_normalization(const TrainingData& data, LandmarkVector& offset,
                              LandmarkVector& scale);

// Per-pixel mean and standard deviation of the inputs, the latter floored
// at min_scale so flat background pixels are not blown up.
InputNormalization fit_input_normalization(const TrainingData& data, double min_scale = 0.2);

}  // namespace baygaze

#endif  // BAYGAZE_LANDMARK_NET_HPP_
