#include "tfssl/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "tfssl/baseline/srp_phat.hpp"
#include "tfssl/cli/wav.hpp"
#include "tfssl/error.hpp"
#include "tfssl/frontend/features.hpp"
#include "tfssl/net/spectrum.hpp"
#include "tfssl/numcore/checkpoint.hpp"
#include "tfssl/sim/dataset.hpp"

namespace tfssl::cli {

namespace fs = std::filesystem;

namespace {

frontend::ComplexSpectrogram Spectrogram(const WavData& wav, const RunConfig& cfg,
                                         const std::string& what) {
  Require(wav.channels.size() == 2, ErrorKind::kData,
          what + ": expected 2 channels, found " + std::to_string(wav.channels.size()));
  Require(wav.sample_rate == int(cfg.stft.sample_rate), ErrorKind::kData,
          what + ": expected " + std::to_string(int(cfg.stft.sample_rate)) + " Hz, found " +
              std::to_string(wav.sample_rate));
  return frontend::Stft(wav.channels, cfg.stft);
}

std::vector<frontend::Waveform> LoadMonoDir(const std::string& dir, std::vector<std::string>* names) {
  std::vector<frontend::Waveform> out;
  if (dir.empty()) return out;
  Require(fs::is_directory(dir), ErrorKind::kIo, "not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  Require(!files.empty(), ErrorKind::kIo, "no .wav files in " + dir);
  for (const auto& f : files) {
    auto w = ReadWav(f);
    Require(w.channels.size() == 1, ErrorKind::kData, f.string() + ": expected a mono file");
    Require(w.sample_rate == 16000, ErrorKind::kData, f.string() + ": expected 16000 Hz");
    out.push_back(std::move(w.channels[0]));
    if (names) names->push_back(f.filename().string());
  }
  return out;
}

std::string SplitOf(const RunConfig& cfg, std::size_t i) {
  if (i < cfg.data.n_train) return "train";
  if (i < cfg.data.n_train + cfg.data.n_val) return "val";
  return "test";
}

std::string UtteranceId(const std::string& split, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%05zu", split.c_str(), i);
  return buf;
}

// Runs fn(i) for i in [0, n) on `workers` threads; rethrows the first error.
template <typename Fn>
void ParallelFor(std::size_t n, std::size_t workers, Fn fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

Example LoadExample(const Manifest& m, const ManifestRecord& r, const RunConfig& cfg) {
  Example ex;
  ex.id = r.id;
  const auto wav = ReadWav(m.Resolve(r.wav));
  const auto spec = Spectrogram(wav, cfg, r.wav);
  const auto labels = ReadLabels(m.Resolve(r.labels));
  Require(labels.azimuth.size() == spec.frames(), ErrorKind::kData,
          r.labels + ": " + std::to_string(labels.azimuth.size()) + " label frames vs " +
              std::to_string(spec.frames()) + " STFT frames");
  ex.features = frontend::AssembleFeatures(spec).values;
  ex.gt_frames = labels.azimuth;
  ex.vad_frames = labels.vad;
  ex.gt = net::AlignToOutput(ex.gt_frames, cfg.model.pool_factor);
  ex.mask = net::AlignToOutput(ex.vad_frames, cfg.model.pool_factor);
  ex.target = net::EncodeTarget(ex.gt, ex.mask);
  return ex;
}

std::vector<Example> LoadSplit(const Manifest& m, const std::string& split, const RunConfig& cfg) {
  const auto records = m.Split(split);
  Require(!records.empty(), ErrorKind::kData, "split '" + split + "' is empty");
  std::vector<Example> out(records.size());
  ParallelFor(records.size(), cfg.workers, [&](std::size_t i) { out[i] = LoadExample(m, *records[i], cfg); });
  return out;
}

numcore::Tensor FeaturesFromWav(const fs::path& wav, const RunConfig& cfg) {
  return frontend::AssembleFeatures(Spectrogram(ReadWav(wav), cfg, wav.string())).values;
}

Manifest CmdSimulate(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.Validate();
  fs::create_directories(out_dir / "audio");
  fs::create_directories(out_dir / "labels");
  Require(fs::is_directory(out_dir / "audio"), ErrorKind::kIo, "cannot create " + out_dir.string());
  sim::Corpus corpus;
  corpus.sources = LoadMonoDir(cfg.data.source_dir, nullptr);
  corpus.noises = LoadMonoDir(cfg.data.noise_dir, &corpus.noise_names);

  const std::size_t n = cfg.data.n_train + cfg.data.n_val + cfg.data.n_test;
  Manifest m;
  m.config = ToJson(cfg);
  m.dir = out_dir;
  m.records.resize(n);
  const double frame_rate = cfg.stft.sample_rate / double(cfg.stft.hop);
  ParallelFor(n, cfg.workers, [&](std::size_t i) {
    const auto u = sim::RenderUtterance(cfg.sim, cfg.seed, i, corpus);
    ManifestRecord& r = m.records[i];
    r.split = SplitOf(cfg, i);
    r.id = UtteranceId(r.split, i);
    r.seed = cfg.seed;
    r.index = i;
    r.wav = "audio/" + r.id + ".wav";
    r.labels = "labels/" + r.id + ".jsonl";
    r.room_dims = {u.room.dims.x, u.room.dims.y, u.room.dims.z};
    r.rt60 = u.room.rt60;
    r.beta = u.room.beta;
    for (const auto& mic : u.room.mics) r.mics.push_back({mic.x, mic.y, mic.z});
    r.is_static = u.is_static;
    r.noise = u.noise_name;
    if (!u.noise_name.empty()) r.snr_db = u.mixture.snr_db;
    WriteWav(out_dir / r.wav, u.mixture.channels);
    if (cfg.data.write_stems) {
      r.clean_wav = "audio/" + r.id + ".clean.wav";
      r.noise_wav = "audio/" + r.id + ".noise.wav";
      WriteWav(out_dir / r.clean_wav, u.clean);
      WriteWav(out_dir / r.noise_wav, u.noise);
    }
    WriteLabels(out_dir / r.labels, {r.id, u.mixture.azimuth, u.mixture.vad}, frame_rate);
  });
  WriteManifest(out_dir / "manifest.jsonl", m);
  return m;
}

net::TfMambaNet LoadModel(const fs::path& checkpoint, const RunConfig& cfg) {
  fs::path ckpt = checkpoint;
  if (fs::is_directory(checkpoint)) ckpt = checkpoint / "best.ckpt";
  const fs::path cfg_path = ckpt.parent_path() / "model.cfg";
  std::ifstream is(cfg_path);
  Require(bool(is), ErrorKind::kIo, "cannot open model config " + cfg_path.string());
  std::stringstream text;
  text << is.rdbuf();
  const auto model_cfg = net::NetConfig::FromText(text.str());
  Require(model_cfg.n_bins == cfg.stft.num_bins(), ErrorKind::kConfig,
          "checkpoint expects " + std::to_string(model_cfg.n_bins) + " frequency bins, run uses " +
              std::to_string(cfg.stft.num_bins()));
  net::TfMambaNet model(model_cfg);
  auto tensors = numcore::LoadCheckpoint(ckpt);
  numcore::TensorMap params;
  for (auto& [name, t] : tensors)
    if (name.rfind("__", 0) != 0) params.emplace(name, std::move(t));
  try {
    model.SetParams(std::move(params));
  } catch (const Error& e) {
    Fail(ErrorKind::kConfig, "checkpoint does not match model config: " + std::string(e.what()));
  }
  return model;
}

Method ParseMethod(const std::string& name) {
  if (name == "model") return Method::kModel;
  if (name == "srp-phat" || name == "srp") return Method::kSrpPhat;
  Fail(ErrorKind::kInvalidArgument, "unknown method '" + name + "' (model, srp-phat)");
}

std::string MethodName(Method m) { return m == Method::kModel ? "model" : "srp-phat"; }

metrics::EvalReport CmdEvaluate(const RunConfig& cfg, const Manifest& manifest,
                                const std::string& split, Method method,
                                const fs::path& checkpoint, const fs::path& out_dir) {
  const auto records = manifest.Split(split);
  Require(!records.empty(), ErrorKind::kData, "split '" + split + "' is empty");
  std::optional<net::TfMambaNet> model;
  if (method == Method::kModel) model.emplace(LoadModel(checkpoint, cfg));
  const auto grid = baseline::SteeringGrid::Build(cfg.stft, cfg.sim.room.mic_spacing);
  const std::size_t pool = model ? model->config().pool_factor : cfg.model.pool_factor;

  std::vector<std::vector<double>> preds(records.size());
  std::vector<Example> examples(records.size());
  ParallelFor(records.size(), cfg.workers, [&](std::size_t i) {
    const auto& r = *records[i];
    if (model) {
      examples[i] = LoadExample(manifest, r, cfg);
      preds[i] = net::DecodeDoa(model->Predict(examples[i].features));
    } else {
      const auto wav = ReadWav(manifest.Resolve(r.wav));
      const auto spec = Spectrogram(wav, cfg, r.wav);
      const auto labels = ReadLabels(manifest.Resolve(r.labels));
      Require(labels.azimuth.size() == spec.frames(), ErrorKind::kData,
              r.labels + ": label frames do not match the STFT grid");
      const auto track = baseline::LocateSrpPhat(spec, grid, cfg.median_width);
      examples[i].id = r.id;
      examples[i].gt = net::AlignToOutput(labels.azimuth, pool);
      examples[i].mask = net::AlignToOutput(labels.vad, pool);
      preds[i] = net::AlignToOutput(track.azimuth_deg, pool);
    }
  });
  metrics::ReportBuilder builder;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& ex = examples[i];
    if (std::none_of(ex.mask.begin(), ex.mask.end(), [](bool b) { return b; })) continue;
    builder.Add(ex.id, preds[i], ex.gt, ex.mask);
  }
  const auto report = builder.Finish();
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    nlohmann::json context = {{"split", split},
                              {"method", MethodName(method)},
                              {"checkpoint", method == Method::kModel ? checkpoint.string() : ""},
                              {"config", ToJson(cfg)}};
    WriteReport(out_dir / ("report_" + split + "_" + MethodName(method) + ".jsonl"), report, context);
  }
  return report;
}

std::vector<DoaLine> CmdLocate(const RunConfig& cfg, const fs::path& wav_path, Method method,
                               const fs::path& checkpoint) {
  const auto wav = ReadWav(wav_path);
  const auto spec = Spectrogram(wav, cfg, wav_path.string());
  std::vector<DoaLine> lines;
  const double fs_hz = cfg.stft.sample_rate;
  auto frame_time = [&](std::size_t t) {
    return (double(t * cfg.stft.hop) + 0.5 * double(cfg.stft.frame_length)) / fs_hz;
  };
  if (method == Method::kSrpPhat) {
    const auto grid = baseline::SteeringGrid::Build(cfg.stft, cfg.sim.room.mic_spacing);
    const auto track = baseline::LocateSrpPhat(spec, grid, cfg.median_width);
    for (std::size_t t = 0; t < track.azimuth_deg.size(); ++t)
      lines.push_back({frame_time(t), track.azimuth_deg[t], track.peak_value[t]});
    return lines;
  }
  const auto model = LoadModel(checkpoint, cfg);
  const auto out = model.Predict(frontend::AssembleFeatures(spec).values);
  const auto doa = net::DecodeDoa(out);
  const std::size_t pool = model.config().pool_factor;
  for (std::size_t k = 0; k < doa.size(); ++k) {
    const double* row = out.data() + k * out.dim(1);
    lines.push_back({frame_time(net::CenterFrame(k, pool)), doa[k], *std::max_element(row, row + out.dim(1))});
  }
  return lines;
}

}  // namespace tfssl::cli
