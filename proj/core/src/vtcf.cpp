#include "vtckit/vtcf.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "vtckit/errors.hpp"

namespace vtckit::io {

namespace {

constexpr char kMagic[4] = {'V', 'T', 'C', 'F'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot write: " + path.string());
  }
  void u32(std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    out_.write(reinterpret_cast<char*>(b), 4);
  }
  void f32(double v) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    u32(bits);
  }
  void raw(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }
  void finish() {
    if (!out_) throw IoError("failed writing: " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open: " + path.string());
  }
  std::uint32_t u32() {
    unsigned char b[4];
    read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  }
  double f32() {
    const std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }
  void read(char* data, std::size_t n) {
    in_.read(data, static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) {
      throw FormatError("truncated VTCF file: " + path_.string());
    }
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

void write_header(Writer& w, std::span<const std::uint32_t> dims) {
  w.raw(kMagic, 4);
  w.u32(kVersion);
  for (auto d : dims) w.u32(d);
}

void read_header(Reader& r, std::span<std::uint32_t> dims) {
  char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("bad VTCF magic in " + r.path().string());
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw FormatError("unsupported VTCF version " + std::to_string(version) +
                      " in " + r.path().string());
  }
  for (auto& d : dims) d = r.u32();
}

void write_speaker(Writer& w, const std::string& speaker_id) {
  w.u32(static_cast<std::uint32_t>(speaker_id.size()));
  w.raw(speaker_id.data(), speaker_id.size());
}

std::string read_speaker(Reader& r) {
  const std::uint32_t n = r.u32();
  if (n > 4096) throw FormatError("implausible speaker id length in " + r.path().string());
  std::string s(n, '\0');
  if (n > 0) r.read(s.data(), n);
  return s;
}

}  // namespace

void write_frames_vtcf(const dsp::FrameMatrix& frames,
                       const std::filesystem::path& path) {
  Writer w(path);
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(frames.channels),
                                 static_cast<std::uint32_t>(frames.frames)};
  write_header(w, dims);
  for (double v : frames.values) w.f32(v);
  write_speaker(w, frames.speaker_id);
  w.finish();
}

dsp::FrameMatrix read_frames_vtcf(const std::filesystem::path& path) {
  Reader r(path);
  std::uint32_t dims[2];
  read_header(r, dims);
  dsp::FrameMatrix frames;
  frames.channels = static_cast<int>(dims[0]);
  frames.frames = static_cast<int>(dims[1]);
  frames.values.resize(static_cast<std::size_t>(dims[0]) * dims[1]);
  for (auto& v : frames.values) v = r.f32();
  frames.speaker_id = read_speaker(r);
  return frames;
}

void write_tensor_vtcf(const vtc::VtcTensor& tensor,
                       const std::filesystem::path& path) {
  for (std::size_t di = 1; di < tensor.delays.size(); ++di) {
    if (tensor.delays[di] - tensor.delays[di - 1] !=
        tensor.delays[1] - tensor.delays[0]) {
      throw InputError("VTCF tensors require an evenly strided delay grid");
    }
  }
  Writer w(path);
  const std::uint32_t dims[3] = {static_cast<std::uint32_t>(tensor.n_channels),
                                 static_cast<std::uint32_t>(tensor.n_channels),
                                 static_cast<std::uint32_t>(tensor.delays.size())};
  write_header(w, dims);
  // Delay grid start/stride, then segment index, then payload.
  w.u32(tensor.delays.empty() ? 0 : static_cast<std::uint32_t>(tensor.delays.front()));
  w.u32(tensor.delays.size() > 1
            ? static_cast<std::uint32_t>(tensor.delays[1] - tensor.delays[0])
            : 1);
  w.u32(static_cast<std::uint32_t>(tensor.segment_index));
  for (double v : tensor.values) w.f32(v);
  write_speaker(w, tensor.speaker_id);
  w.finish();
}

vtc::VtcTensor read_tensor_vtcf(const std::filesystem::path& path) {
  Reader r(path);
  std::uint32_t dims[3];
  read_header(r, dims);
  if (dims[0] != dims[1]) {
    throw FormatError("VTCF tensor dims are not square in " + path.string());
  }
  vtc::VtcTensor tensor;
  tensor.n_channels = static_cast<int>(dims[0]);
  const std::uint32_t start = r.u32();
  const std::uint32_t stride = r.u32();
  tensor.segment_index = static_cast<int>(r.u32());
  tensor.delays.resize(dims[2]);
  for (std::size_t di = 0; di < tensor.delays.size(); ++di) {
    tensor.delays[di] = static_cast<int>(start + di * stride);
  }
  tensor.values.resize(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]);
  for (auto& v : tensor.values) v = r.f32();
  tensor.speaker_id = read_speaker(r);
  return tensor;
}

void write_evtc_vtcf(const vtc::EvtcMatrix& matrix,
                     const std::filesystem::path& path) {
  Writer w(path);
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(matrix.n_channels),
                                 static_cast<std::uint32_t>(matrix.delays.size())};
  write_header(w, dims);
  w.u32(matrix.delays.empty() ? 0 : static_cast<std::uint32_t>(matrix.delays.front()));
  w.u32(matrix.delays.size() > 1
            ? static_cast<std::uint32_t>(matrix.delays[1] - matrix.delays[0])
            : 1);
  w.u32(static_cast<std::uint32_t>(matrix.segment_index));
  for (double v : matrix.values) w.f32(v);
  write_speaker(w, matrix.speaker_id);
  w.finish();
}

vtc::EvtcMatrix read_evtc_vtcf(const std::filesystem::path& path) {
  Reader r(path);
  std::uint32_t dims[2];
  read_header(r, dims);
  vtc::EvtcMatrix matrix;
  matrix.n_channels = static_cast<int>(dims[0]);
  const std::uint32_t start = r.u32();
  const std::uint32_t stride = r.u32();
  matrix.segment_index = static_cast<int>(r.u32());
  matrix.delays.resize(dims[1]);
  for (std::size_t di = 0; di < matrix.delays.size(); ++di) {
    matrix.delays[di] = static_cast<int>(start + di * stride);
  }
  matrix.values.resize(static_cast<std::size_t>(dims[0]) * dims[1]);
  for (auto& v : matrix.values) v = r.f32();
  matrix.speaker_id = read_speaker(r);
  return matrix;
}

void write_table_vtcf(const baseline::FeatureTable& table,
                      const std::filesystem::path& path) {
  Writer w(path);
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(table.n_rows()),
                                 static_cast<std::uint32_t>(table.dim())};
  write_header(w, dims);
  for (double v : table.values) w.f32(v);
  write_speaker(w, "");
  w.finish();

  nlohmann::json meta;
  meta["schema_version"] = 1;
  meta["kind"] = baseline::to_string(table.kind);
  meta["feature_names"] = table.feature_names;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    rows.push_back({{"speaker_id", row.speaker_id},
                    {"segment_index", row.segment_index},
                    {"target_tms", row.target_tms}});
  }
  meta["rows"] = rows;

  const auto sidecar = path.string() + ".json";
  std::ofstream out(sidecar, std::ios::binary);
  if (!out) throw IoError("cannot write sidecar: " + sidecar);
  out << meta.dump(2) << "\n";
  if (!out) throw IoError("failed writing sidecar: " + sidecar);
}

baseline::FeatureTable read_table_vtcf(const std::filesystem::path& path) {
  Reader r(path);
  std::uint32_t dims[2];
  read_header(r, dims);
  baseline::FeatureTable table;
  table.values.resize(static_cast<std::size_t>(dims[0]) * dims[1]);
  for (auto& v : table.values) v = r.f32();
  read_speaker(r);

  const auto sidecar = path.string() + ".json";
  std::ifstream in(sidecar, std::ios::binary);
  if (!in) throw IoError("cannot open sidecar: " + sidecar);
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad sidecar JSON " + sidecar + ": " + e.what());
  }
  const std::string kind = meta.at("kind").get<std::string>();
  if (kind == "raw_stats") table.kind = baseline::FeatureKind::raw_stats;
  else if (kind == "fvtc") table.kind = baseline::FeatureKind::fvtc;
  else if (kind == "evtc") table.kind = baseline::FeatureKind::evtc;
  else if (kind == "external") table.kind = baseline::FeatureKind::external;
  else throw FormatError("unknown table kind '" + kind + "' in " + sidecar);
  table.feature_names = meta.at("feature_names").get<std::vector<std::string>>();
  for (const auto& row : meta.at("rows")) {
    baseline::FeatureRow fr;
    fr.speaker_id = row.at("speaker_id").get<std::string>();
    fr.segment_index = row.at("segment_index").get<int>();
    fr.target_tms = row.at("target_tms").get<double>();
    table.rows.push_back(std::move(fr));
  }
  if (table.rows.size() != dims[0] || table.feature_names.size() != dims[1]) {
    throw FormatError("sidecar metadata does not match VTCF dims: " + sidecar);
  }
  return table;
}

}  // namespace vtckit::io
