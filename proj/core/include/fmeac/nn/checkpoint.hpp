#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fmeac/nn/tensor.hpp"

namespace fmeac::nn {

// Binary container shared by every persisted model:
//
//   "FMEAC1"                                  6 magic bytes
//   repeated until end of file:
//     u32   name length (bytes)
//     bytes UTF-8 name
//     u32   rank
//     u32   dims[rank]
//     f64   payload[prod(dims)]
//
// All integers and floats are little-endian regardless of host order.
class Checkpoint {
 public:
  using Entry = std::pair<std::string, Tensor>;

  void add(std::string name, Tensor tensor);
  void add_all(std::vector<Entry> entries);
  bool contains(std::string_view name) const;
  const Tensor& get(std::string_view name) const;
  const std::vector<Entry>& entries() const { return entries_; }

  std::string serialize() const;
  static Checkpoint parse(std::string_view bytes);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;

 private:
  std::vector<Entry> entries_;
};

}  // namespace fmeac::nn
