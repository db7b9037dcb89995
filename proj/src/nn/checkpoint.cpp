#include "bidyn/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "bidyn/common/errors.hpp"

namespace bidyn::nn {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t uint(int width) {
    need(width);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += width;
    return v;
  }

  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw IoError("checkpoint: truncated data");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

double activation_code(Activation a) { return static_cast<double>(static_cast<int>(a)); }

}  // namespace

void Checkpoint::put(const std::string& name, const Matrix& value) { records_[name] = value; }

void Checkpoint::put_scalar(const std::string& name, double value) {
  records_[name] = Matrix::Constant(1, 1, value);
}

void Checkpoint::put_store(const std::string& prefix, const ParameterStore& store) {
  for (std::size_t i = 0; i < store.size(); ++i) put(prefix + "/" + store.entry(i).name, store[i]);
}

const Matrix& Checkpoint::get(const std::string& name) const {
  auto it = records_.find(name);
  if (it == records_.end()) throw IoError("checkpoint: missing record '" + name + "'");
  return it->second;
}

double Checkpoint::get_scalar(const std::string& name) const {
  const Matrix& m = get(name);
  if (m.size() != 1) throw IoError("checkpoint: record '" + name + "' is not a scalar");
  return m(0, 0);
}

void Checkpoint::get_store(const std::string& prefix, ParameterStore* store) const {
  for (std::size_t i = 0; i < store->size(); ++i) {
    const Matrix& m = get(prefix + "/" + store->entry(i).name);
    if (m.rows() != (*store)[i].rows() || m.cols() != (*store)[i].cols())
      throw IoError("checkpoint: shape mismatch for '" + prefix + "/" + store->entry(i).name + "'");
    (*store)[i] = m;
  }
}

std::string Checkpoint::serialize() const {
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(records_.size()));
  for (const auto& [name, value] : records_) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, 2);
    put_u64(out, static_cast<std::uint64_t>(value.rows()));
    put_u64(out, static_cast<std::uint64_t>(value.cols()));
    for (Eigen::Index r = 0; r < value.rows(); ++r)
      for (Eigen::Index c = 0; c < value.cols(); ++c) put_u64(out, std::bit_cast<std::uint64_t>(value(r, c)));
  }
  return out;
}

Checkpoint Checkpoint::deserialize(const std::string& bytes) {
  ByteReader in(bytes);
  if (in.take(sizeof(kCheckpointMagic)) != std::string(kCheckpointMagic, sizeof(kCheckpointMagic)))
    throw IoError("checkpoint: bad magic");
  const auto version = in.uint(4);
  if (version != kCheckpointVersion)
    throw IoError("checkpoint: unsupported version " + std::to_string(version));
  const auto count = in.uint(4);
  Checkpoint ckpt;
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto name_len = in.uint(4);
    std::string name = in.take(name_len);
    if (ckpt.has(name)) throw IoError("checkpoint: duplicate record '" + name + "'");
    const auto ndim = in.uint(4);
    if (ndim != 2) throw IoError("checkpoint: record '" + name + "' has unsupported rank");
    const auto rows = in.uint(8);
    const auto cols = in.uint(8);
    if (rows * cols > (bytes.size() / 8)) throw IoError("checkpoint: record '" + name + "' too large");
    Matrix value(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < value.rows(); ++r)
      for (Eigen::Index c = 0; c < value.cols(); ++c) value(r, c) = std::bit_cast<double>(in.uint(8));
    ckpt.records_.emplace(std::move(name), std::move(value));
  }
  if (!in.done()) throw IoError("checkpoint: trailing bytes");
  return ckpt;
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("checkpoint: cannot open '" + path + "' for writing");
  const std::string bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("checkpoint: write to '" + path + "' failed");
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

void save_mlp(Checkpoint& ckpt, const std::string& prefix, const Mlp& mlp) {
  ckpt.put_scalar(prefix + "/activation", activation_code(mlp.spec().activation));
  ckpt.put_store(prefix, mlp.params());
}

Mlp load_mlp(const Checkpoint& ckpt, const std::string& prefix) {
  const int code = static_cast<int>(ckpt.get_scalar(prefix + "/activation"));
  if (code < 0 || code > static_cast<int>(Activation::kIdentity))
    throw IoError("checkpoint: bad activation code for '" + prefix + "'");
  MlpSpec spec;
  spec.activation = static_cast<Activation>(code);
  int layer = 0;
  while (ckpt.has(prefix + "/W" + std::to_string(layer))) ++layer;
  if (layer < 2) throw IoError("checkpoint: '" + prefix + "' has too few layers");
  spec.input_dim = static_cast<int>(ckpt.get(prefix + "/W0").cols());
  for (int l = 0; l + 1 < layer; ++l)
    spec.hidden_sizes.push_back(static_cast<int>(ckpt.get(prefix + "/W" + std::to_string(l)).rows()));
  spec.output_dim = static_cast<int>(ckpt.get(prefix + "/W" + std::to_string(layer - 1)).rows());
  Mlp mlp(spec);
  ckpt.get_store(prefix, &mlp.params());
  return mlp;
}

}  // namespace bidyn::nn
