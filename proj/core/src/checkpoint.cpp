#include "isa/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "isa/errors.hpp"

namespace isa {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'I', 'S', 'A', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint8_t kF32 = 4;
constexpr std::uint8_t kF64 = 8;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void raw(std::string_view s) { out_.append(s); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::string& bytes() { return out_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::string_view raw(std::size_t n) {
    need(n);
    std::string_view s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(raw(1)[0]); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw DataError("checkpoint is truncated");
  }
  std::uint64_t le(int n) {
    std::string_view b = raw(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

void write_tensor(Writer& w, const std::string& name, const Matrix& m, std::uint8_t dtype) {
  w.u32(static_cast<std::uint32_t>(name.size()));
  w.raw(name);
  w.u8(dtype);
  w.u64(m.rows());
  w.u64(m.cols());
  for (double x : m.flat()) {
    if (dtype == kF32) {
      w.f32(static_cast<float>(x));
    } else {
      w.f64(x);
    }
  }
}

Matrix vector_as_column(const std::vector<double>& v) {
  Matrix m(v.size(), 1);
  std::copy(v.begin(), v.end(), m.flat().begin());
  return m;
}

}  // namespace

std::string serialize_checkpoint(const Model& model) {
  const ModelDims dims = model.params.dims();
  json header{{"format_version", kCheckpointVersion},
              {"precision", to_string(model.config.precision)},
              {"hidden_size", dims.hidden},
              {"input_width", dims.input_width},
              {"head_hidden", dims.head_hidden},
              {"atom_hidden", dims.atom_hidden},
              {"stop_mechanism", to_string(model.config.stop.mechanism)},
              {"gamma", model.config.stop.gamma},
              {"alpha", model.config.alpha},
              {"normalized", model.norm.has_value()},
              {"config", json::parse(to_json_string(model.config))}};
  const std::string header_text = header.dump();
  const std::uint8_t dtype = model.config.precision == Precision::f32 ? kF32 : kF64;

  Writer w;
  w.raw(std::string_view(kMagic, sizeof kMagic));
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(header_text.size()));
  w.raw(header_text);

  std::uint32_t count = 0;
  model.params.for_each([&](const std::string&, const Matrix&) { ++count; });
  if (model.norm) count += 2;
  w.u32(count);
  model.params.for_each([&](const std::string& name, const Matrix& m) { write_tensor(w, name, m, dtype); });
  if (model.norm) {
    write_tensor(w, "norm.mean", vector_as_column(model.norm->mean), kF64);
    write_tensor(w, "norm.scale", vector_as_column(model.norm->scale), kF64);
  }
  w.u64(fnv1a(w.bytes()));
  return std::move(w.bytes());
}

Model deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.raw(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic)) {
    throw DataError("not a checkpoint file (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint version mismatch: file has version " + std::to_string(version) +
                    ", this build reads version " + std::to_string(kCheckpointVersion));
  }
  const std::uint32_t header_len = r.u32();
  json header;
  try {
    header = json::parse(r.raw(header_len));
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }

  Model model;
  ModelDims dims;
  bool normalized = false;
  try {
    model.config = train_config_from_json(header.at("config").dump());
    dims.hidden = header.at("hidden_size").get<std::size_t>();
    dims.input_width = header.at("input_width").get<std::size_t>();
    dims.head_hidden = header.at("head_hidden").get<std::size_t>();
    dims.atom_hidden = header.at("atom_hidden").get<std::size_t>();
    normalized = header.at("normalized").get<bool>();
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint header incomplete: ") + e.what());
  }
  if (dims.hidden != model.config.hidden_size) {
    throw DataError("checkpoint header hidden_size disagrees with its config");
  }
  model.params = IsaParameters{IsaTensors::zeros(dims)};

  std::map<std::string, Matrix> tensors;
  const std::uint32_t count = r.u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t name_len = r.u32();
    std::string name(r.raw(name_len));
    const std::uint8_t dtype = r.u8();
    const std::uint64_t rows = r.u64();
    const std::uint64_t cols = r.u64();
    if (dtype != kF32 && dtype != kF64) throw DataError("tensor '" + name + "' has unknown dtype");
    if (rows != 0 && cols > r.remaining() / rows / dtype) {
      throw DataError("checkpoint is truncated (tensor '" + name + "' payload)");
    }
    Matrix m(rows, cols);
    for (double& x : m.flat()) x = dtype == kF32 ? static_cast<double>(r.f32()) : r.f64();
    if (!tensors.emplace(std::move(name), std::move(m)).second) {
      throw DataError("checkpoint lists a tensor twice");
    }
  }
  const std::size_t payload_end = r.position();
  const std::uint64_t checksum = r.u64();
  if (r.remaining() != 0) throw DataError("checkpoint has trailing bytes");
  if (checksum != fnv1a(std::string_view(bytes).substr(0, payload_end))) {
    throw DataError("checkpoint checksum mismatch");
  }

  std::size_t used = 0;
  model.params.for_each([&](const std::string& name, Matrix& dst) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw DataError("checkpoint is missing tensor '" + name + "'");
    if (it->second.rows() != dst.rows() || it->second.cols() != dst.cols()) {
      throw DataError("checkpoint shape table inconsistent: tensor '" + name + "' is " +
                      it->second.shape_string() + ", header implies " + dst.shape_string());
    }
    dst = std::move(it->second);
    ++used;
  });
  if (normalized) {
    auto mean = tensors.find("norm.mean");
    auto scale = tensors.find("norm.scale");
    if (mean == tensors.end() || scale == tensors.end()) {
      throw DataError("checkpoint header declares normalization but stats are missing");
    }
    if (mean->second.rows() != scale->second.rows()) {
      throw DataError("checkpoint normalization tensors disagree in shape");
    }
    NormStats stats;
    stats.mean.assign(mean->second.flat().begin(), mean->second.flat().end());
    stats.scale.assign(scale->second.flat().begin(), scale->second.flat().end());
    model.norm = std::move(stats);
    used += 2;
  }
  if (used != tensors.size()) throw DataError("checkpoint contains unexpected tensors");
  return model;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for checkpoint " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace isa
