#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "tfssl/cli/commands.hpp"

namespace tfssl::cli {

// Stops once `patience` epochs have passed since the best loss.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}
  // Records the loss of `epoch`; returns true when training should stop.
  bool Update(int epoch, double loss);
  bool improved() const { return improved_; }
  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_; }
  void Restore(int best_epoch, double best_loss) {
    best_epoch_ = best_epoch;
    best_ = best_loss;
  }

 private:
  int patience_;
  int best_epoch_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
  bool improved_ = false;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val = 0.0;
  bool early_stopped = false;
};

// Mean masked MSE of a model over whole utterances, pooled over frames.
double ValidationLoss(const net::TfMambaNet& model, const std::vector<Example>& examples);

// Trains on the manifest's train split with validation-based early stopping.
// out_dir receives model.cfg, run_config.json, best.ckpt, last.ckpt and
// train_log.jsonl. With resume, training continues from last.ckpt.
TrainResult CmdTrain(const RunConfig& cfg, const Manifest& manifest,
                     const std::filesystem::path& out_dir, bool resume = false,
                     const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace tfssl::cli
