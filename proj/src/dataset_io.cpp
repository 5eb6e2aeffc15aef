#include "baygaze/dataset_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "baygaze/binary_io.hpp"
#include "baygaze/error.hpp"

namespace baygaze {

namespace {

constexpr const char* kMagic = "BAYGAZE-DATASET";

template <class T>
T expect_field(std::istream& in, const std::string& key) {
  const std::string line = binio::header_line(in, key.c_str());
  std::istringstream ls(line);
  std::string name;
  T value{};
  if (!(ls >> name >> value) || name != key) {
    throw Error(ErrorCode::kFormatError, "expected header field '" + key + "', got '" + line + "'");
  }
  return value;
}

std::string record_context(std::size_t i) {
  std::ostringstream os;
  os << "record " << i;
  return os.str();
}

}  // namespace

void write_dataset(const DatasetFile& data, std::ostream& out) {
  out << kMagic << "\n";
  out << "version " << kDatasetVersion << "\n";
  out << "width " << data.width << "\n";
  out << "height " << data.height << "\n";
  out << "landmarks " << kLandmarks << "\n";
  out << "camera " << binio::format_double(data.cam.fx) << " " << binio::format_double(data.cam.fy)
      << " " << binio::format_double(data.cam.cx) << " " << binio::format_double(data.cam.cy)
      << "\n";
  out << "count " << data.samples.size() << "\n";
  out << "end\n";
  const std::size_t pixels = static_cast<std::size_t>(data.width) * data.height;
  std::string raster_bytes(pixels, '\0');
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const SyntheticSample& s = data.samples[i];
    if (s.raster.width != data.width || s.raster.height != data.height) {
      throw Error(ErrorCode::kShapeMismatch, record_context(i) + ": raster size differs from header");
    }
    binio::put_i32(out, s.subject_id);
    for (double q : s.pose_gt.rotation.quaternion()) binio::put_f64(out, q);
    for (int a = 0; a < 3; ++a) binio::put_f64(out, s.pose_gt.translation[a]);
    binio::put_f64(out, s.gaze_gt.x());
    binio::put_f64(out, s.gaze_gt.y());
    binio::put_f64(out, s.gaze_gt.z());
    for (const Pixel& p : s.landmarks_gt) {
      binio::put_f64(out, p.x());
      binio::put_f64(out, p.y());
    }
    for (std::size_t k = 0; k < pixels; ++k) {
      const double v = std::round(std::clamp(s.raster.pixels[k], 0.0, 1.0) * 255.0);
      raster_bytes[k] = static_cast<char>(static_cast<unsigned char>(v));
    }
    out.write(raster_bytes.data(), static_cast<std::streamsize>(pixels));
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed");
}

void write_dataset(const DatasetFile& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path + " for writing");
  write_dataset(data, out);
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "write to " + path + " failed");
}

DatasetFile read_dataset(std::istream& in) {
  if (binio::header_line(in, "magic") != kMagic) {
    throw Error(ErrorCode::kFormatError, "not a dataset file");
  }
  const int version = expect_field<int>(in, "version");
  if (version != kDatasetVersion) {
    throw Error(ErrorCode::kFormatError, "unsupported dataset version " + std::to_string(version));
  }
  DatasetFile data;
  data.width = expect_field<int>(in, "width");
  data.height = expect_field<int>(in, "height");
  const auto landmarks = expect_field<std::size_t>(in, "landmarks");
  if (data.width <= 0 || data.height <= 0 || landmarks != kLandmarks) {
    throw Error(ErrorCode::kFormatError, "invalid raster size or landmark count");
  }
  {
    const std::string line = binio::header_line(in, "camera");
    std::istringstream ls(line);
    std::string name;
    if (!(ls >> name >> data.cam.fx >> data.cam.fy >> data.cam.cx >> data.cam.cy) ||
        name != "camera") {
      throw Error(ErrorCode::kFormatError, "bad camera line '" + line + "'");
    }
  }
  const auto count = expect_field<std::size_t>(in, "count");
  if (binio::header_line(in, "end") != "end") {
    throw Error(ErrorCode::kFormatError, "missing end-of-header marker");
  }

  const std::size_t pixels = static_cast<std::size_t>(data.width) * data.height;
  std::vector<unsigned char> raster_bytes(pixels);
  data.samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SyntheticSample s;
    bool ok = binio::get_i32(in, s.subject_id);
    std::array<double, 4> q{};
    for (double& v : q) ok = ok && binio::get_f64(in, v);
    Vec3 t;
    for (int a = 0; a < 3; ++a) ok = ok && binio::get_f64(in, t[a]);
    Vec3 g;
    for (int a = 0; a < 3; ++a) ok = ok && binio::get_f64(in, g[a]);
    for (Pixel& p : s.landmarks_gt) {
      ok = ok && binio::get_f64(in, p.x());
      ok = ok && binio::get_f64(in, p.y());
    }
    ok = ok && binio::get_bytes(in, raster_bytes.data(), pixels);
    if (!ok) throw Error(ErrorCode::kFormatError, record_context(i) + ": truncated");
    try {
      s.pose_gt.rotation = Rotation::from_quaternion(q);
      s.pose_gt.translation = t;
      s.gaze_gt = UnitVec3::trusted(g);
    } catch (const Error& e) {
      throw Error(ErrorCode::kFormatError, record_context(i) + ": " + e.what());
    }
    s.raster = Raster(data.width, data.height);
    for (std::size_t k = 0; k < pixels; ++k) s.raster.pixels[k] = raster_bytes[k] / 255.0;
    data.samples.push_back(std::move(s));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::kFormatError, "trailing bytes after the last record");
  }
  return data;
}

DatasetFile read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  return read_dataset(in);
}

}  // namespace baygaze
