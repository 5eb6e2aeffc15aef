#include "baygaze/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "baygaze/binary_io.hpp"
#include "baygaze/cascade.hpp"
#include "baygaze/error.hpp"

namespace baygaze {

namespace {

constexpr const char* kWeightsMagic = "BAYGAZE-WEIGHTS";
constexpr const char* kSamplesMagic = "BAYGAZE-SAMPLES";

// Splits a header line and checks its key.
std::istringstream field(std::istream& in, const std::string& key) {
  const std::string line = binio::header_line(in, key.c_str());
  std::istringstream ls(line);
  std::string name;
  ls >> name;
  if (name != key)
    throw Error(ErrorCode::kFormatError, "expected header field '" + key + "', got '" + line + "'");
  return ls;
}

template <class... T>
void read_field(std::istream& in, const std::string& key, T&... values) {
  std::istringstream ls = field(in, key);
  if (!(ls >> ... >> values)) throw Error(ErrorCode::kFormatError, "malformed field '" + key + "'");
}

void write_vector(std::ostream& out, const char* key, const LandmarkVector& v) {
  out << key;
  for (Eigen::Index d = 0; d < v.size(); ++d) out << ' ' << binio::format_double(v(d));
  out << '\n';
}

LandmarkVector read_vector(std::istream& in, const std::string& key) {
  std::istringstream ls = field(in, key);
  LandmarkVector v;
  for (Eigen::Index d = 0; d < v.size(); ++d)
    if (!(ls >> v(d))) throw Error(ErrorCode::kFormatError, "malformed field '" + key + "'");
  return v;
}

void expect_line(std::istream& in, const std::string& expected) {
  if (binio::header_line(in, expected.c_str()) != expected)
    throw Error(ErrorCode::kFormatError, "expected '" + expected + "'");
}

void write_payload(std::ostream& out, std::span<const double> w) {
  for (double v : w) binio::put_f64(out, v);
}

std::vector<double> read_payload(std::istream& in, std::size_t p, const std::string& what) {
  std::vector<double> w(p);
  for (double& v : w)
    if (!binio::get_f64(in, v)) throw Error(ErrorCode::kFormatError, what + ": truncated");
  return w;
}

void write_input_normalization(std::ostream& out, const LandmarkModel& model) {
  const InputNormalization& norm = model.input_normalization();
  if (norm.empty()) return;
  write_payload(out, std::span<const double>(norm.offset.data(), static_cast<std::size_t>(norm.offset.size())));
  write_payload(out, std::span<const double>(norm.scale.data(), static_cast<std::size_t>(norm.scale.size())));
}

void read_input_normalization(std::istream& in, LandmarkModel& model) {
  const std::size_t n = model.input_size();
  const std::vector<double> offset = read_payload(in, n, "input offset");
  const std::vector<double> scale = read_payload(in, n, "input scale");
  InputNormalization norm;
  norm.offset = Eigen::Map<const Eigen::VectorXd>(offset.data(), static_cast<Eigen::Index>(n));
  norm.scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(n));
  try {
    model.set_input_normalization(std::move(norm));
  } catch (const Error& e) {
    throw Error(ErrorCode::kFormatError, std::string("invalid input normalization: ") + e.what());
  }
}

void expect_eof(std::istream& in) {
  if (in.peek() != std::char_traits<char>::eof())
    throw Error(ErrorCode::kFormatError, "trailing bytes after the payload");
}

void check_length(const LandmarkModel& model, std::span<const double> w) {
  if (w.size() != model.parameter_count())
    throw Error(ErrorCode::kShapeMismatch, "weight vector length does not match the model");
}

template <class Fn>
void to_file(const std::string& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path + " for writing");
  fn(out);
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "write to " + path + " failed");
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  return in;
}

}  // namespace

void write_model_descriptor(std::ostream& out, const LandmarkModel& model) {
  if (const auto* net = dynamic_cast<const LandmarkNet*>(&model)) {
    const NetworkArchitecture& a = net->architecture();
    out << "model mlp\n";
    out << "input " << a.input_width << ' ' << a.input_height << '\n';
    out << "hidden " << a.hidden.size();
    for (std::size_t h : a.hidden) out << ' ' << h;
    out << '\n';
    write_vector(out, "output_offset", a.output_offset);
    write_vector(out, "output_scale", a.output_scale);
  } else if (const auto* cas = dynamic_cast<const CascadeModel*>(&model)) {
    const CascadeArchitecture& a = cas->architecture();
    out << "model cascade\n";
    out << "input " << a.input_width << ' ' << a.input_height << '\n';
    out << "features " << a.features << '\n';
    out << "stage_hidden " << a.stage_hidden << '\n';
    out << "stages " << a.stages << '\n';
    out << "grid " << a.grid.width << ' ' << a.grid.height << ' ' << binio::format_double(a.grid.scale)
        << '\n';
    out << "supervise_all " << (a.supervise_all_stages ? 1 : 0) << '\n';
    write_vector(out, "output_offset", a.output_offset);
    write_vector(out, "output_scale", a.output_scale);
    for (std::size_t b = 0; b <= a.stages; ++b) {
      const auto [offset, length] = cas->block(b);
      out << "block " << (b == 0 ? std::string("features") : "stage" + std::to_string(b)) << ' '
          << offset << ' ' << length << '\n';
    }
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unsupported model type");
  }
  out << "input_normalization " << (model.input_normalization().empty() ? 0 : 1) << '\n';
  out << "parameters " << model.parameter_count() << '\n';
}

std::unique_ptr<LandmarkModel> read_model_descriptor(std::istream& in, bool& input_normalized) {
  std::string kind;
  read_field(in, "model", kind);
  std::unique_ptr<LandmarkModel> model;
  try {
    if (kind == "mlp") {
      NetworkArchitecture a;
      read_field(in, "input", a.input_width, a.input_height);
      std::istringstream ls = field(in, "hidden");
      std::size_t count = 0;
      if (!(ls >> count) || count > 64) throw Error(ErrorCode::kFormatError, "malformed hidden layers");
      a.hidden.assign(count, 0);
      for (std::size_t& h : a.hidden)
        if (!(ls >> h)) throw Error(ErrorCode::kFormatError, "malformed hidden layers");
      a.output_offset = read_vector(in, "output_offset");
      a.output_scale = read_vector(in, "output_scale");
      model = std::make_unique<LandmarkNet>(a);
    } else if (kind == "cascade") {
      CascadeArchitecture a;
      int supervise = 0;
      read_field(in, "input", a.input_width, a.input_height);
      read_field(in, "features", a.features);
      read_field(in, "stage_hidden", a.stage_hidden);
      read_field(in, "stages", a.stages);
      read_field(in, "grid", a.grid.width, a.grid.height, a.grid.scale);
      read_field(in, "supervise_all", supervise);
      a.supervise_all_stages = supervise != 0;
      a.output_offset = read_vector(in, "output_offset");
      a.output_scale = read_vector(in, "output_scale");
      if (a.stages > 64) throw Error(ErrorCode::kFormatError, "implausible stage count");
      auto cas = std::make_unique<CascadeModel>(a);
      for (std::size_t b = 0; b <= a.stages; ++b) {
        std::string name;
        std::size_t offset = 0, length = 0;
        read_field(in, "block", name, offset, length);
        const std::string expected = b == 0 ? std::string("features") : "stage" + std::to_string(b);
        if (name != expected || std::make_pair(offset, length) != cas->block(b))
          throw Error(ErrorCode::kFormatError, "stage manifest does not match the architecture");
      }
      model = std::move(cas);
    } else {
      throw Error(ErrorCode::kFormatError, "unknown model kind '" + kind + "'");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kFormatError) throw;
    throw Error(ErrorCode::kFormatError, std::string("invalid model descriptor: ") + e.what());
  }
  int normalized = 0;
  read_field(in, "input_normalization", normalized);
  if (normalized != 0 && normalized != 1)
    throw Error(ErrorCode::kFormatError, "input_normalization must be 0 or 1");
  input_normalized = normalized == 1;
  std::size_t p = 0;
  read_field(in, "parameters", p);
  if (p != model->parameter_count())
    throw Error(ErrorCode::kFormatError, "parameter count does not match the descriptor");
  return model;
}

void write_weights(std::ostream& out, const LandmarkModel& model, std::span<const double> w) {
  check_length(model, w);
  out << kWeightsMagic << "\nversion " << kCheckpointVersion << '\n';
  write_model_descriptor(out, model);
  out << "end\n";
  write_input_normalization(out, model);
  write_payload(out, w);
  if (!out) throw Error(ErrorCode::kIoError, "write failed");
}

void write_weights(const std::string& path, const LandmarkModel& model, std::span<const double> w) {
  to_file(path, [&](std::ostream& out) { write_weights(out, model, w); });
}

WeightsFile read_weights(std::istream& in) {
  if (binio::header_line(in, "magic") != kWeightsMagic)
    throw Error(ErrorCode::kFormatError, "not a weights file");
  int version = 0;
  read_field(in, "version", version);
  if (version != kCheckpointVersion)
    throw Error(ErrorCode::kFormatError, "unsupported weights version " + std::to_string(version));
  WeightsFile file;
  bool normalized = false;
  file.model = read_model_descriptor(in, normalized);
  expect_line(in, "end");
  if (normalized) read_input_normalization(in, *file.model);
  file.w = read_payload(in, file.model->parameter_count(), "weights");
  expect_eof(in);
  return file;
}

WeightsFile read_weights(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_weights(in);
}

void write_samples(std::ostream& out, const LandmarkModel& model, const SamplerConfig& cfg,
                   std::span<const std::vector<double>> samples) {
  for (const auto& w : samples) check_length(model, w);
  out << kSamplesMagic << "\nversion " << kCheckpointVersion << '\n';
  out << "sampler " << binio::format_double(cfg.eta) << ' ' << binio::format_double(cfg.beta)
      << ' ' << cfg.burn_in << ' ' << cfg.interval << ' ' << cfg.num_samples << ' '
      << cfg.batch_size << ' ' << cfg.seed << '\n';
  write_model_descriptor(out, model);
  out << "samples " << samples.size() << '\n';
  out << "end\n";
  write_input_normalization(out, model);
  for (const auto& w : samples) write_payload(out, w);
  if (!out) throw Error(ErrorCode::kIoError, "write failed");
}

void write_samples(const std::string& path, const LandmarkModel& model, const SamplerConfig& cfg,
                   std::span<const std::vector<double>> samples) {
  to_file(path, [&](std::ostream& out) { write_samples(out, model, cfg, samples); });
}

SampleArchive read_samples(std::istream& in) {
  if (binio::header_line(in, "magic") != kSamplesMagic)
    throw Error(ErrorCode::kFormatError, "not a sample archive");
  int version = 0;
  read_field(in, "version", version);
  if (version != kCheckpointVersion)
    throw Error(ErrorCode::kFormatError, "unsupported archive version " + std::to_string(version));
  SampleArchive archive;
  SamplerConfig& c = archive.config;
  read_field(in, "sampler", c.eta, c.beta, c.burn_in, c.interval, c.num_samples, c.batch_size, c.seed);
  bool normalized = false;
  archive.model = read_model_descriptor(in, normalized);
  std::size_t m = 0;
  read_field(in, "samples", m);
  expect_line(in, "end");
  if (normalized) read_input_normalization(in, *archive.model);
  const std::size_t p = archive.model->parameter_count();
  for (std::size_t i = 0; i < m; ++i)
    archive.samples.push_back(read_payload(in, p, "sample " + std::to_string(i)));
  expect_eof(in);
  return archive;
}

SampleArchive read_samples(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_samples(in);
}

}  // namespace baygaze
