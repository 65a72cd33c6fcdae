#pragma once

#include <filesystem>
#include <iosfwd>

#include "tfssl/numcore/tensor.hpp"

namespace tfssl::numcore {

// Flat binary container of named tensors. Each record is
//   u32 name length | name bytes | u32 rank | u64 extent x rank |
//   f64 x product(extents)
// with every integer and float little-endian. Records are written in name
// order, so equal maps produce identical files.
void WriteTensors(std::ostream& os, const TensorMap& tensors);
TensorMap ReadTensors(std::istream& is);

void SaveCheckpoint(const std::filesystem::path& path, const TensorMap& tensors);
TensorMap LoadCheckpoint(const std::filesystem::path& path);

}  // namespace tfssl::numcore
