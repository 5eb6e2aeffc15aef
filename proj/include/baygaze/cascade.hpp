#ifndef BAYGAZE_CASCADE_HPP_
#define BAYGAZE_CASCADE_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "baygaze/landmark_net.hpp"

namespace baygaze {

// Cross-sample summary of m predicted landmark distributions.
struct UncertaintySummary {
  LandmarkVector mean = LandmarkVector::Zero();
  LandmarkVector epistemic = LandmarkVector::Zero();  // variance of the means
  LandmarkVector aleatoric = LandmarkVector::Zero();  // mean of the variances
  LandmarkVector total = LandmarkVector::Zero();      // epistemic + aleatoric
};

// Throws InvalidArgument for an empty list.
UncertaintySummary decompose_uncertainty(std::span<const LandmarkDistribution> outputs);

// Grid node (gx, gy) sits at pixel ((gx + 0.5) * scale, (gy + 0.5) * scale).
struct MapGrid {
  int width = 16;
  int height = 16;
  double scale = 4.0;

  double node_x(int gx) const { return (gx + 0.5) * scale; }
  double node_y(int gy) const { return (gy + 0.5) * scale; }
  std::size_t size() const { return static_cast<std::size_t>(width) * height; }
};

struct ProbabilityMap {
  MapGrid grid;
  std::vector<double> values;  // row-major, height x width

  double at(int gx, int gy) const { return values[static_cast<std::size_t>(gy) * grid.width + gx]; }
};

// exp(-(X - x)^2 / (2 var_x) - (Y - y)^2 / (2 var_y)) at every node, in
// pixel units. Throws InvalidArgument unless both variances are positive.
ProbabilityMap probability_map(double x, double y, double var_x, double var_y, const MapGrid& grid);

struct CascadeArchitecture {
  int input_width = 64;
  int input_height = 64;
  std::size_t features = 128;      // shared tanh feature block
  std::size_t stage_hidden = 64;   // one tanh layer per stage
  std::size_t stages = 3;
  MapGrid grid;
  LandmarkVector output_offset = LandmarkVector::Zero();
  LandmarkVector output_scale = LandmarkVector::Ones();
  // Add the NLL of every intermediate stage to the loss, not only the last.
  bool supervise_all_stages = false;

  std::size_t input_size() const {
    return static_cast<std::size_t>(input_width) * input_height;
  }
  // Width of the input of stage s >= 1: features, then one map per landmark.
  std::size_t refine_input_size() const { return features + kLandmarks * grid.size(); }
};

// Shared feature block followed by k stages. Stage 1 reads the features;
// stage s >= 2 reads the features concatenated with the probability maps of
// stage s - 1's own mean and variance, each block rescaled so that neither
// dominates the stage's pre-activation. With one stage the weight layout and
// outputs equal LandmarkNet with hidden {features, stage_hidden}.
class CascadeModel final : public LandmarkModel {
 public:
  explicit CascadeModel(CascadeArchitecture arch);

  const CascadeArchitecture& architecture() const { return arch_; }
  std::size_t stages() const { return arch_.stages; }
  // Flat offset and length of the feature block and of each stage.
  std::pair<std::size_t, std::size_t> block(std::size_t index) const;

  std::size_t parameter_count() const override { return parameter_count_; }
  int input_width() const override { return arch_.input_width; }
  int input_height() const override { return arch_.input_height; }

  // Final-stage distributions.
  std::vector<LandmarkDistribution> forward_batch(const Eigen::MatrixXd& inputs,
                                                  std::span<const double> w) const override;
  // [stage][column].
  std::vector<std::vector<LandmarkDistribution>> forward_stages(const Eigen::MatrixXd& inputs,
                                                                std::span<const double> w) const;
  double nll_sum_and_grad(std::span<const double> w, const Eigen::MatrixXd& inputs,
                          const Eigen::MatrixXd& targets, std::span<double> grad) const override;
  std::vector<double> initial_weights(Rng& rng) const override;

 private:
  struct Stage {
    DenseLayout hidden;
    DenseLayout mean;
    DenseLayout var;
  };
  struct Cache;

  void run_forward(const Eigen::MatrixXd& inputs, std::span<const double> w, Cache& cache) const;
  // Maps of every landmark for every column, (kLandmarks * grid cells) rows.
  Eigen::MatrixXd maps(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& var) const;

  CascadeArchitecture arch_;
  DenseLayout feature_layer_;
  std::vector<Stage> stages_;
  std::size_t parameter_count_ = 0;
  // Refine-stage input gains: after the 1/sqrt(fan_in) scaling the feature
  // block acts as fan-in `features` and each landmark's (sparse) map as
  // fan-in 1.
  double feature_gain_ = 1.0;
  double map_gain_ = 1.0;
};

}  // namespace baygaze

#endif  // BAYGAZE_CASCADE_HPP_
