#include "tfssl/cli/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "tfssl/error.hpp"
#include "tfssl/net/spectrum.hpp"
#include "tfssl/numcore/checkpoint.hpp"
#include "tfssl/numcore/ops.hpp"

namespace tfssl::cli {

namespace fs = std::filesystem;
using numcore::Tensor;
using numcore::TensorMap;

namespace {

constexpr const char* kTrainState = "__train__/state";

// Independent stream per (seed, epoch) so a resumed run sees the same order.
std::mt19937_64 EpochRng(std::uint64_t seed, int epoch) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(epoch), 0x7472u};
  return std::mt19937_64(seq);
}

struct Crop {
  std::size_t first_frame = 0;  // STFT frame
  std::size_t frames = 0;
};

// Random pool-aligned crop with at least one active output frame; the whole
// clip when crops are disabled or longer than the clip.
Crop PickCrop(const Example& ex, std::size_t crop, std::size_t pool, std::mt19937_64& rng) {
  const std::size_t T = ex.features.dim(1);
  const std::size_t usable = (T / pool) * pool;
  if (crop == 0 || crop >= usable) return {0, usable};
  const std::size_t len = (crop / pool) * pool;
  const std::size_t positions = (usable - len) / pool + 1;
  std::uniform_int_distribution<std::size_t> pick(0, positions - 1);
  Crop c{0, len};
  for (int attempt = 0; attempt < 16; ++attempt) {
    c.first_frame = pick(rng) * pool;
    const std::size_t k0 = c.first_frame / pool;
    for (std::size_t k = k0; k < k0 + len / pool; ++k)
      if (ex.mask[k]) return c;
  }
  return c;
}

// Channel-last crop [frames][F][C] of the [C][T][F] feature tensor.
Tensor CropFeatures(const Tensor& f, const Crop& c) {
  const std::size_t C = f.dim(0), T = f.dim(1), F = f.dim(2);
  Tensor out({c.frames, F, C});
  for (std::size_t ch = 0; ch < C; ++ch)
    for (std::size_t t = 0; t < c.frames; ++t)
      for (std::size_t j = 0; j < F; ++j)
        out[(t * F + j) * C + ch] = f[(ch * T + c.first_frame + t) * F + j];
  return out;
}

void AddScaled(TensorMap& acc, const std::map<std::string, Tensor>& g, double s) {
  for (const auto& [name, t] : g) {
    auto it = acc.find(name);
    if (it == acc.end()) it = acc.emplace(name, Tensor(t.shape())).first;
    for (std::size_t i = 0; i < t.size(); ++i) it->second[i] += s * t[i];
  }
}

void SaveTrainingCheckpoint(const fs::path& path, const TensorMap& params,
                            const numcore::OptimState& opt, int epoch,
                            const EarlyStopping& stopper) {
  TensorMap all = params;
  numcore::ExportOptimState(opt, all);
  all[kTrainState] = Tensor::FromList(
      {double(epoch), double(stopper.best_epoch()), stopper.best_loss()});
  numcore::SaveCheckpoint(path, all);
}

nlohmann::json LogJson(const EpochLog& e) {
  return {{"epoch", e.epoch},
          {"train_loss", e.train_loss},
          {"val_loss", e.val_loss ? nlohmann::json(*e.val_loss) : nlohmann::json(nullptr)},
          {"lr", e.lr},
          {"seconds", e.seconds}};
}

}  // namespace

bool EarlyStopping::Update(int epoch, double loss) {
  improved_ = loss < best_;
  if (improved_) {
    best_ = loss;
    best_epoch_ = epoch;
  }
  return epoch - best_epoch_ >= patience_;
}

double ValidationLoss(const net::TfMambaNet& model, const std::vector<Example>& examples) {
  double sum = 0.0;
  std::size_t frames = 0;
  for (const auto& ex : examples) {
    const std::size_t n = std::count(ex.mask.begin(), ex.mask.end(), true);
    if (n == 0) continue;
    const auto pred = model.Predict(ex.features);
    sum += net::MseLoss(pred, ex.target, ex.mask) * double(n);
    frames += n;
  }
  Require(frames > 0, ErrorKind::kData, "validation split has no active frames");
  return sum / double(frames);
}

TrainResult CmdTrain(const RunConfig& cfg, const Manifest& manifest, const fs::path& out_dir,
                     bool resume, const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.Validate();
  const auto train = LoadSplit(manifest, "train", cfg);
  const auto val = LoadSplit(manifest, "val", cfg);
  fs::create_directories(out_dir);

  net::TfMambaNet model(cfg.model);
  model.Init(cfg.seed);
  auto opt = numcore::OptimState::Create(cfg.optim, cfg.schedule);
  EarlyStopping stopper(cfg.train.patience);
  TrainResult result;
  int start_epoch = 1;
  const fs::path log_path = out_dir / "train_log.jsonl";

  if (resume) {
    auto tensors = numcore::LoadCheckpoint(out_dir / "last.ckpt");
    auto state_it = tensors.find(kTrainState);
    Require(state_it != tensors.end(), ErrorKind::kData, "last.ckpt has no training state");
    const Tensor state = state_it->second;
    opt = numcore::ImportOptimState(tensors);
    TensorMap params;
    for (auto& [name, t] : tensors)
      if (name.rfind("__", 0) != 0) params.emplace(name, std::move(t));
    model.SetParams(std::move(params));
    start_epoch = int(state[0]) + 1;
    stopper.Restore(int(state[1]), state[2]);
    // Keep the log lines of the epochs that the checkpoint covers.
    std::ifstream is(log_path);
    std::string line;
    std::vector<std::string> kept;
    while (std::getline(is, line)) {
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("epoch")) {
        kept.push_back(line);
        continue;
      }
      if (j["epoch"].get<int>() >= start_epoch) continue;
      kept.push_back(line);
      EpochLog e;
      e.epoch = j["epoch"].get<int>();
      e.train_loss = j["train_loss"].get<double>();
      if (!j["val_loss"].is_null()) e.val_loss = j["val_loss"].get<double>();
      e.lr = j["lr"].get<double>();
      e.seconds = j["seconds"].get<double>();
      result.log.push_back(e);
    }
    std::ofstream os(log_path, std::ios::binary);
    for (const auto& l : kept) os << l << '\n';
  } else {
    std::ofstream cfg_os(out_dir / "model.cfg");
    cfg_os << cfg.model.ToText();
    std::ofstream run_os(out_dir / "run_config.json");
    run_os << ToJson(cfg).dump(2) << '\n';
    std::ofstream log_os(log_path, std::ios::binary);
    log_os << nlohmann::json{{"config", ToJson(cfg)}, {"n_params", model.NumParams()}}.dump() << '\n';
  }

  const std::size_t pool = cfg.model.pool_factor;
  std::vector<std::size_t> order(train.size());
  for (int epoch = start_epoch; epoch <= cfg.train.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = numcore::StepLr(opt, epoch - 1);
    auto rng = EpochRng(cfg.seed, epoch);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.train.batch_size) {
      const std::size_t b1 = std::min(order.size(), b0 + cfg.train.batch_size);
      TensorMap grads;
      std::size_t used = 0;
      std::vector<std::pair<std::size_t, Crop>> batch;
      for (std::size_t i = b0; i < b1; ++i) {
        const Example& ex = train[order[i]];
        const Crop crop = PickCrop(ex, cfg.train.crop_frames, pool, rng);
        const std::size_t k0 = crop.first_frame / pool, nk = crop.frames / pool;
        if (std::any_of(ex.mask.begin() + std::ptrdiff_t(k0),
                        ex.mask.begin() + std::ptrdiff_t(k0 + nk), [](bool m) { return m; }))
          batch.emplace_back(order[i], crop);
      }
      for (const auto& [idx, crop] : batch) {
        const Example& ex = train[idx];
        const std::size_t k0 = crop.first_frame / pool, nk = crop.frames / pool;
        Tensor target({nk, ex.target.dim(1)});
        std::copy_n(ex.target.data() + k0 * ex.target.dim(1), target.size(), target.data());
        const std::vector<bool> mask(ex.mask.begin() + std::ptrdiff_t(k0),
                                     ex.mask.begin() + std::ptrdiff_t(k0 + nk));
        try {
          numcore::Graph graph;
          numcore::ParamScope p(graph, model.params());
          const auto x = graph.Input("features", CropFeatures(ex.features, crop));
          const auto loss = numcore::ops::MaskedMse(model.Forward(p, x), target, mask);
          const double value = loss.value()[0];
          Require(std::isfinite(value), ErrorKind::kNumeric, "loss is not finite");
          AddScaled(grads, graph.Backward(loss), 1.0 / double(batch.size()));
          loss_sum += value;
          ++loss_count;
          ++used;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kNumeric) throw;
          Fail(ErrorKind::kNumeric, "epoch " + std::to_string(epoch) + ", utterance " + ex.id +
                                        ": " + e.what());
        }
      }
      if (used > 0) numcore::AdamWStep(opt, model.params(), grads);
    }
    Require(loss_count > 0, ErrorKind::kData, "no training utterance has active frames");
    entry.train_loss = loss_sum / double(loss_count);

    bool stop = false;
    if (epoch % cfg.train.validate_every == 0 || epoch == cfg.train.max_epochs) {
      entry.val_loss = ValidationLoss(model, val);
      stop = stopper.Update(epoch, *entry.val_loss);
      if (stopper.improved()) {
        numcore::SaveCheckpoint(out_dir / "best.ckpt", model.params());
      }
    }
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    SaveTrainingCheckpoint(out_dir / "last.ckpt", model.params(), opt, epoch, stopper);
    {
      std::ofstream os(log_path, std::ios::binary | std::ios::app);
      os << LogJson(entry).dump() << '\n';
    }
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
    if (stop) {
      result.early_stopped = true;
      break;
    }
  }
  result.best_epoch = stopper.best_epoch();
  result.best_val = stopper.best_loss();
  return result;
}

}  // namespace tfssl::cli
