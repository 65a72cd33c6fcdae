#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tfssl/frontend/stft.hpp"
#include "tfssl/net/config.hpp"
#include "tfssl/numcore/optim.hpp"
#include "tfssl/sim/dataset.hpp"

namespace tfssl::cli {

using Json = nlohmann::json;

struct DataConfig {
  std::size_t n_train = 200;
  std::size_t n_val = 40;
  std::size_t n_test = 40;
  std::string source_dir;  // mono 16 kHz WAVs; synthetic speech when empty
  std::string noise_dir;   // mono 16 kHz WAVs; synthetic noise when empty
  bool write_stems = false;
};

struct TrainConfig {
  std::size_t batch_size = 8;
  int max_epochs = 100;
  int patience = 20;
  std::size_t crop_frames = 0;  // random training crops in STFT frames; 0 = whole clips
  int validate_every = 1;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t workers = 0;  // 0 = one per hardware thread
  sim::SimConfig sim;
  DataConfig data;
  frontend::StftOptions stft;
  net::NetConfig model;
  numcore::AdamWOptions optim;
  numcore::StepLrOptions schedule;
  TrainConfig train;
  std::size_t median_width = 5;  // SRP-PHAT smoother

  void Validate() const;
};

Json ToJson(const RunConfig& cfg);
RunConfig FromJson(const Json& doc);

// Layers `overlay` onto `base`. Every key in the overlay must already exist
// in the base document; objects merge recursively, anything else replaces.
void MergeStrict(Json& base, const Json& overlay, const std::string& path = "");

// Applies "a.b.c=value" overrides. The value is parsed as JSON when
// possible and taken as a plain string otherwise.
void ApplyOverride(Json& doc, const std::string& assignment);

// Defaults <- optional config file <- overrides, validated.
RunConfig ResolveConfig(const std::filesystem::path& config_file,
                        const std::vector<std::string>& overrides);

}  // namespace tfssl::cli
