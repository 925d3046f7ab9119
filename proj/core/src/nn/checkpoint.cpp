#include "fmeac/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "fmeac/common/errors.hpp"

namespace fmeac::nn {

namespace {

constexpr std::string_view kMagic = "FMEAC1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}

void put_f64(std::string& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }

  std::uint64_t read_le(std::size_t width) {
    need(width);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += width;
    return v;
  }

  std::string_view read_bytes(std::size_t n) {
    need(n);
    std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ContractError("checkpoint: truncated data");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void Checkpoint::add(std::string name, Tensor tensor) {
  entries_.emplace_back(std::move(name), std::move(tensor));
}

void Checkpoint::add_all(std::vector<Entry> entries) {
  for (auto& e : entries) entries_.push_back(std::move(e));
}

bool Checkpoint::contains(std::string_view name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return true;
  }
  return false;
}

const Tensor& Checkpoint::get(std::string_view name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  throw ContractError("checkpoint: no tensor named '" + std::string(name) + "'");
}

std::string Checkpoint::serialize() const {
  std::string out(kMagic);
  for (const auto& [name, t] : entries_) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.data()) put_f64(out, v);
  }
  return out;
}

Checkpoint Checkpoint::parse(std::string_view bytes) {
  if (bytes.substr(0, kMagic.size()) != kMagic) throw ContractError("checkpoint: bad magic bytes");
  Reader in(bytes.substr(kMagic.size()));
  Checkpoint ck;
  while (!in.done()) {
    const auto name_len = static_cast<std::size_t>(in.read_le(4));
    std::string name(in.read_bytes(name_len));
    const auto rank = static_cast<std::size_t>(in.read_le(4));
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(in.read_le(4));
    Tensor t(shape);
    for (double& v : t.data()) v = std::bit_cast<double>(in.read_le(8));
    ck.add(std::move(name), std::move(t));
  }
  return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StageError("cannot write checkpoint " + path.string());
  const std::string bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw StageError("failed writing checkpoint " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StageError("cannot read checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(bytes);
}

}  // namespace fmeac::nn
