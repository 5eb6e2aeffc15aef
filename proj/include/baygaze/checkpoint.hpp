#ifndef BAYGAZE_CHECKPOINT_HPP_
#define BAYGAZE_CHECKPOINT_HPP_

#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "baygaze/landmark_net.hpp"
#include "baygaze/sghmc.hpp"

namespace baygaze {

constexpr int kCheckpointVersion = 1;

// Model descriptor block shared by weight files and sample archives.
// Supports LandmarkNet and CascadeModel; the cascade block also lists the
// offset and length of the feature block and of every stage. The input
// normalization itself is not part of the text; `input_normalized` tells
// the caller that it follows the header in the payload.
void write_model_descriptor(std::ostream& out, const LandmarkModel& model);
std::unique_ptr<LandmarkModel> read_model_descriptor(std::istream& in, bool& input_normalized);

struct WeightsFile {
  std::unique_ptr<LandmarkModel> model;
  std::vector<double> w;
};

void write_weights(std::ostream& out, const LandmarkModel& model, std::span<const double> w);
void write_weights(const std::string& path, const LandmarkModel& model, std::span<const double> w);
WeightsFile read_weights(std::istream& in);
WeightsFile read_weights(const std::string& path);

struct SampleArchive {
  std::unique_ptr<LandmarkModel> model;
  SamplerConfig config;
  std::vector<std::vector<double>> samples;
};

void write_samples(std::ostream& out, const LandmarkModel& model, const SamplerConfig& cfg,
                   std::span<const std::vector<double>> samples);
void write_samples(const std::string& path, const LandmarkModel& model, const SamplerConfig& cfg,
                   std::span<const std::vector<double>> samples);
SampleArchive read_samples(std::istream& in);
SampleArchive read_samples(const std::string& path);

}  // namespace baygaze

#endif  // BAYGAZE_CHECKPOINT_HPP_
