#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "bidyn/common/types.hpp"
#include "bidyn/nn/mlp.hpp"
#include "bidyn/nn/parameter_store.hpp"

namespace bidyn::nn {

// Binary checkpoint layout (all integers and floats little-endian):
//
//   bytes 0..7   magic "BIDYNCKP"
//   u32          format version (currently 1)
//   u32          record count
//   per record:
//     u32        name length in bytes, followed by the UTF-8 name
//     u32        number of dimensions (always 2)
//     u64 u64    rows, cols
//     f64 * rows * cols, row-major
//
// Record names are unique; readers reject duplicates, truncated files, a bad
// magic or an unknown version.
inline constexpr char kCheckpointMagic[8] = {'B', 'I', 'D', 'Y', 'N', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class Checkpoint {
 public:
  void put(const std::string& name, const Matrix& value);
  void put_scalar(const std::string& name, double value);
  void put_store(const std::string& prefix, const ParameterStore& store);

  bool has(const std::string& name) const { return records_.count(name) != 0; }
  const Matrix& get(const std::string& name) const;
  double get_scalar(const std::string& name) const;
  // Copies records prefix/<entry name> into a store whose shapes must match.
  void get_store(const std::string& prefix, ParameterStore* store) const;

  const std::map<std::string, Matrix>& records() const { return records_; }

  std::string serialize() const;
  static Checkpoint deserialize(const std::string& bytes);

  // Throws IoError on failure.
  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  std::map<std::string, Matrix> records_;
};

void save_mlp(Checkpoint& ckpt, const std::string& prefix, const Mlp& mlp);
// Rebuilds the network (spec from stored shapes and activation code).
Mlp load_mlp(const Checkpoint& ckpt, const std::string& prefix);

}  // namespace bidyn::nn
