#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tfssl/cli/manifest.hpp"
#include "tfssl/cli/records.hpp"
#include "tfssl/cli/run_config.hpp"
#include "tfssl/metrics/score.hpp"
#include "tfssl/net/model.hpp"

namespace tfssl::cli {

// One utterance prepared for the network.
struct Example {
  std::string id;
  numcore::Tensor features;          // [C][T][F], normalised
  std::vector<double> gt_frames;     // azimuth per STFT frame
  std::vector<bool> vad_frames;      // per STFT frame
  std::vector<double> gt;            // per output frame (pool-window centres)
  std::vector<bool> mask;            // per output frame
  numcore::Tensor target;            // [T / pool][181]
};

// Reads the WAV and labels of a manifest record. Throws kData on a channel
// count or sample-rate mismatch, or labels that disagree with the STFT grid.
Example LoadExample(const Manifest& m, const ManifestRecord& r, const RunConfig& cfg);
std::vector<Example> LoadSplit(const Manifest& m, const std::string& split, const RunConfig& cfg);

// Features for a bare two-channel 16 kHz recording.
numcore::Tensor FeaturesFromWav(const std::filesystem::path& wav, const RunConfig& cfg);

// Renders n_train + n_val + n_test utterances into out_dir (audio/, labels/
// and manifest.jsonl) and returns the manifest.
Manifest CmdSimulate(const RunConfig& cfg, const std::filesystem::path& out_dir);

// `checkpoint` is a training output directory (model.cfg + best.ckpt) or a
// .ckpt file with model.cfg beside it. Throws kConfig when the model does not
// match the run's STFT settings or the stored parameters.
net::TfMambaNet LoadModel(const std::filesystem::path& checkpoint, const RunConfig& cfg);

enum class Method { kModel, kSrpPhat };
Method ParseMethod(const std::string& name);
std::string MethodName(Method m);

// Scores a split with the model or the SRP-PHAT baseline on the output frame
// grid (pool-window centres). Writes report_<split>_<method>.jsonl to
// out_dir when it is non-empty.
metrics::EvalReport CmdEvaluate(const RunConfig& cfg, const Manifest& manifest,
                                const std::string& split, Method method,
                                const std::filesystem::path& checkpoint,
                                const std::filesystem::path& out_dir);

// Per-frame DOA of one recording: one line per output frame of the method.
std::vector<DoaLine> CmdLocate(const RunConfig& cfg, const std::filesystem::path& wav, Method method,
                               const std::filesystem::path& checkpoint);

}  // namespace tfssl::cli
