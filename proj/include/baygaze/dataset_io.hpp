#ifndef BAYGAZE_DATASET_IO_HPP_
#define BAYGAZE_DATASET_IO_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "baygaze/synth.hpp"

namespace baygaze {

// On-disk dataset. Layout (see docs/file_formats.md):
//
//   BAYGAZE-DATASET\n
//   version 1\n
//   width <W>\n height <H>\n landmarks 12\n
//   camera <fx> <fy> <cx> <cy>\n      (%.17g)
//   count <N>\n
//   end\n
//   N records, little-endian, each:
//     i32 subject_id
//     f64 x4 pose quaternion (w, x, y, z)
//     f64 x3 pose translation (mm)
//     f64 x3 gaze_gt
//     f64 x24 landmarks (u0, v0, ..., pupil last)
//     u8  x W*H raster, row-major, round(255 * value)
struct DatasetFile {
  CameraIntrinsics cam = DatasetConfig::default_camera();
  int width = 64;
  int height = 64;
  std::vector<SyntheticSample> samples;
};

constexpr int kDatasetVersion = 1;

void write_dataset(const DatasetFile& data, std::ostream& out);
void write_dataset(const DatasetFile& data, const std::string& path);
// Throws FormatError (with the record index where relevant) or IoError.
DatasetFile read_dataset(std::istream& in);
DatasetFile read_dataset(const std::string& path);

}  // namespace baygaze

#endif  // BAYGAZE_DATASET_IO_HPP_
