#include "tfssl/numcore/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "tfssl/error.hpp"

namespace tfssl::numcore {
namespace {

template <typename T>
void PutLe(std::ostream& os, T v) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(bytes.data(), bytes.size());
}

template <typename T>
bool GetLe(std::istream& is, T& v) {
  std::array<char, sizeof(T)> bytes;
  if (!is.read(bytes.data(), bytes.size())) return false;
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  std::memcpy(&v, bytes.data(), sizeof(T));
  return true;
}

constexpr std::uint32_t kMaxNameLength = 1u << 16;
constexpr std::uint32_t kMaxRank = 8;

}  // namespace

void WriteTensors(std::ostream& os, const TensorMap& tensors) {
  for (const auto& [name, t] : tensors) {
    PutLe<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    PutLe<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) PutLe<std::uint64_t>(os, d);
    for (double v : t.values()) PutLe<double>(os, v);
  }
  Require(static_cast<bool>(os), ErrorKind::kIo, "failed writing tensor container");
}

TensorMap ReadTensors(std::istream& is) {
  TensorMap out;
  std::uint32_t name_len = 0;
  while (GetLe(is, name_len)) {
    Require(name_len <= kMaxNameLength, ErrorKind::kData, "corrupt tensor record (name length)");
    std::string name(name_len, '\0');
    std::uint32_t rank = 0;
    Require(static_cast<bool>(is.read(name.data(), name_len)) && GetLe(is, rank) &&
                rank <= kMaxRank,
            ErrorKind::kData, "truncated or corrupt tensor record");
    Shape shape(rank);
    for (auto& d : shape) {
      std::uint64_t e = 0;
      Require(GetLe(is, e), ErrorKind::kData, "truncated tensor extents for '" + name + "'");
      d = static_cast<std::size_t>(e);
    }
    std::vector<double> data(NumElements(shape));
    for (double& v : data)
      Require(GetLe(is, v), ErrorKind::kData, "truncated tensor payload for '" + name + "'");
    Require(!out.contains(name), ErrorKind::kData, "duplicate tensor name '" + name + "'");
    out.emplace(name, Tensor(std::move(shape), std::move(data)));
  }
  Require(is.eof(), ErrorKind::kIo, "failed reading tensor container");
  return out;
}

void SaveCheckpoint(const std::filesystem::path& path, const TensorMap& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  Require(static_cast<bool>(os), ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  WriteTensors(os, tensors);
}

TensorMap LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  Require(static_cast<bool>(is), ErrorKind::kIo, "cannot open checkpoint " + path.string());
  return ReadTensors(is);
}

}  // namespace tfssl::numcore
