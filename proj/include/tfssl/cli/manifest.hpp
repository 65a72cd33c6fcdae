#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace tfssl::cli {

struct ManifestRecord {
  std::string id;
  std::string split;  // train, val, test or a user tag
  std::string wav;     // relative to the manifest's directory
  std::string labels;  // relative to the manifest's directory
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  std::vector<double> room_dims;
  double rt60 = 0.0;
  double beta = 0.0;
  std::vector<std::vector<double>> mics;
  bool is_static = false;
  std::string noise;                // empty when rendered without noise
  std::optional<double> snr_db;     // requested SNR
  std::string clean_wav, noise_wav;  // optional stems

  nlohmann::json ToJson() const;
  static ManifestRecord FromJson(const nlohmann::json& j);
};

struct Manifest {
  nlohmann::json config;  // resolved run config that produced the data
  std::vector<ManifestRecord> records;
  std::filesystem::path dir;  // directory the relative paths resolve against

  std::vector<const ManifestRecord*> Split(const std::string& name) const;
  std::filesystem::path Resolve(const std::string& relative) const { return dir / relative; }
};

// Line-delimited: a header object {"config": ..., "format": ...} followed by
// one object per record. Serialization is canonical (sorted keys, shortest
// round-trip numbers), so write -> read -> write is byte-identical.
std::string ManifestText(const Manifest& m);
void WriteManifest(const std::filesystem::path& path, const Manifest& m);
// Validates unique ids and, when check_files is set, that referenced files exist.
Manifest ReadManifest(const std::filesystem::path& path, bool check_files = true);

}  // namespace tfssl::cli
