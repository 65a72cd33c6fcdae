#include "tfssl/cli/run_config.hpp"

#include <fstream>

#include "tfssl/error.hpp"

namespace tfssl::cli {
namespace {

Json Vec(const sim::Vec3& v) { return Json::array({v.x, v.y, v.z}); }

sim::Vec3 ToVec(const Json& j) {
  Require(j.is_array() && j.size() == 3, ErrorKind::kConfig, "expected a [x, y, z] triple");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

void RunConfig::Validate() const {
  sim.Validate();
  model.Validate();
  Require(stft.sample_rate == 16000.0, ErrorKind::kConfig, "sample rate must be 16000");
  Require(stft.frame_length >= 1 && stft.hop >= 1 && stft.n_fft >= stft.frame_length,
          ErrorKind::kConfig, "invalid STFT framing");
  Require(stft.first_bin <= stft.last_bin && stft.last_bin <= stft.n_fft / 2, ErrorKind::kConfig,
          "STFT band outside the spectrum");
  Require(model.n_bins == stft.num_bins(), ErrorKind::kConfig,
          "model.n_bins must equal the number of retained STFT bins (" +
              std::to_string(stft.num_bins()) + ")");
  Require(model.in_channels == 4, ErrorKind::kConfig, "model.in_channels must be 4 (two mics)");
  Require(train.batch_size >= 1, ErrorKind::kConfig, "batch_size must be >= 1");
  Require(train.max_epochs >= 1, ErrorKind::kConfig, "max_epochs must be >= 1");
  Require(train.patience >= 1, ErrorKind::kConfig, "patience must be >= 1");
  Require(train.validate_every >= 1, ErrorKind::kConfig, "validate_every must be >= 1");
  Require(train.crop_frames == 0 || train.crop_frames >= model.pool_factor, ErrorKind::kConfig,
          "crop_frames must cover at least one pooling window");
  Require(optim.lr > 0.0 && optim.eps > 0.0 && optim.weight_decay >= 0.0, ErrorKind::kConfig,
          "invalid optimizer settings");
  Require(schedule.step_size >= 1 && schedule.gamma > 0.0, ErrorKind::kConfig,
          "invalid learning-rate schedule");
}

Json ToJson(const RunConfig& c) {
  Json noise_types = Json::array();
  for (auto k : c.sim.noise_kinds) noise_types.push_back(sim::NoiseKindName(k));
  const auto& r = c.sim.room;
  const auto& t = c.sim.trajectory;
  const auto& m = c.model;
  return Json{
      {"seed", c.seed},
      {"workers", c.workers},
      {"data",
       {{"n_train", c.data.n_train},
        {"n_val", c.data.n_val},
        {"n_test", c.data.n_test},
        {"source_dir", c.data.source_dir},
        {"noise_dir", c.data.noise_dir},
        {"write_stems", c.data.write_stems}}},
      {"sim",
       {{"duration", c.sim.duration},
        {"min_snr_db", c.sim.min_snr_db},
        {"max_snr_db", c.sim.max_snr_db},
        {"add_noise", c.sim.add_noise},
        {"anechoic", c.sim.anechoic},
        {"static_fraction", c.sim.static_fraction},
        {"static_grid_deg", c.sim.static_grid_deg},
        {"static_min_distance", c.sim.static_min_distance},
        {"static_max_distance", c.sim.static_max_distance},
        {"noise_types", noise_types},
        {"peak_level", c.sim.peak_level},
        {"room",
         {{"min_dims", Vec(r.min_dims)},
          {"max_dims", Vec(r.max_dims)},
          {"min_rt60", r.min_rt60},
          {"max_rt60", r.max_rt60},
          {"mic_spacing", r.mic_spacing},
          {"wall_margin", r.wall_margin},
          {"absorption", sim::AbsorptionName(r.absorption)}}},
        {"trajectory",
         {{"max_amplitude", t.max_amplitude},
          {"min_oscillations", t.min_oscillations},
          {"max_oscillations", t.max_oscillations},
          {"min_array_distance", t.min_array_distance},
          {"max_azimuth_step", t.max_azimuth_step}}}}},
      {"stft",
       {{"frame_length", c.stft.frame_length},
        {"hop", c.stft.hop},
        {"n_fft", c.stft.n_fft},
        {"first_bin", c.stft.first_bin},
        {"last_bin", c.stft.last_bin}}},
      {"model",
       {{"n_blocks", m.n_blocks},
        {"expand_per_block", m.expand_per_block},
        {"model_width", m.model_width},
        {"pool_factor", m.pool_factor},
        {"n_doa", m.n_doa},
        {"in_channels", m.in_channels},
        {"n_bins", m.n_bins},
        {"d_state", m.d_state},
        {"conv_width", m.conv_width},
        {"dt_rank", m.dt_rank},
        {"encoder_kernel", m.encoder_kernel},
        {"dense_growth", m.dense_growth},
        {"dense_dilations", m.dense_dilations},
        {"use_t_mamba", m.use_t_mamba},
        {"use_f_mamba", m.use_f_mamba}}},
      {"optim",
       {{"lr", c.optim.lr},
        {"beta1", c.optim.beta1},
        {"beta2", c.optim.beta2},
        {"eps", c.optim.eps},
        {"weight_decay", c.optim.weight_decay},
        {"step_size", c.schedule.step_size},
        {"gamma", c.schedule.gamma}}},
      {"train",
       {{"batch_size", c.train.batch_size},
        {"max_epochs", c.train.max_epochs},
        {"patience", c.train.patience},
        {"crop_frames", c.train.crop_frames},
        {"validate_every", c.train.validate_every}}},
      {"baseline", {{"median_width", c.median_width}}},
  };
}

RunConfig FromJson(const Json& d) {
  RunConfig c;
  try {
    c.seed = d.at("seed").get<std::uint64_t>();
    c.workers = d.at("workers").get<std::size_t>();
    const auto& data = d.at("data");
    c.data.n_train = data.at("n_train").get<std::size_t>();
    c.data.n_val = data.at("n_val").get<std::size_t>();
    c.data.n_test = data.at("n_test").get<std::size_t>();
    c.data.source_dir = data.at("source_dir").get<std::string>();
    c.data.noise_dir = data.at("noise_dir").get<std::string>();
    c.data.write_stems = data.at("write_stems").get<bool>();
    const auto& s = d.at("sim");
    c.sim.duration = s.at("duration").get<double>();
    c.sim.min_snr_db = s.at("min_snr_db").get<double>();
    c.sim.max_snr_db = s.at("max_snr_db").get<double>();
    c.sim.add_noise = s.at("add_noise").get<bool>();
    c.sim.anechoic = s.at("anechoic").get<bool>();
    c.sim.static_fraction = s.at("static_fraction").get<double>();
    c.sim.static_grid_deg = s.at("static_grid_deg").get<double>();
    c.sim.static_min_distance = s.at("static_min_distance").get<double>();
    c.sim.static_max_distance = s.at("static_max_distance").get<double>();
    c.sim.noise_kinds.clear();
    for (const auto& k : s.at("noise_types")) c.sim.noise_kinds.push_back(sim::ParseNoiseKind(k.get<std::string>()));
    c.sim.peak_level = s.at("peak_level").get<double>();
    const auto& r = s.at("room");
    c.sim.room.min_dims = ToVec(r.at("min_dims"));
    c.sim.room.max_dims = ToVec(r.at("max_dims"));
    c.sim.room.min_rt60 = r.at("min_rt60").get<double>();
    c.sim.room.max_rt60 = r.at("max_rt60").get<double>();
    c.sim.room.mic_spacing = r.at("mic_spacing").get<double>();
    c.sim.room.wall_margin = r.at("wall_margin").get<double>();
    c.sim.room.absorption = sim::ParseAbsorption(r.at("absorption").get<std::string>());
    const auto& t = s.at("trajectory");
    c.sim.trajectory.max_amplitude = t.at("max_amplitude").get<double>();
    c.sim.trajectory.min_oscillations = t.at("min_oscillations").get<int>();
    c.sim.trajectory.max_oscillations = t.at("max_oscillations").get<int>();
    c.sim.trajectory.min_array_distance = t.at("min_array_distance").get<double>();
    c.sim.trajectory.max_azimuth_step = t.at("max_azimuth_step").get<double>();
    c.sim.trajectory.wall_margin = c.sim.room.wall_margin;
    const auto& f = d.at("stft");
    c.stft.frame_length = f.at("frame_length").get<std::size_t>();
    c.stft.hop = f.at("hop").get<std::size_t>();
    c.stft.n_fft = f.at("n_fft").get<std::size_t>();
    c.stft.first_bin = f.at("first_bin").get<std::size_t>();
    c.stft.last_bin = f.at("last_bin").get<std::size_t>();
    const auto& m = d.at("model");
    c.model.n_blocks = m.at("n_blocks").get<std::size_t>();
    c.model.expand_per_block = m.at("expand_per_block").get<std::vector<std::size_t>>();
    c.model.model_width = m.at("model_width").get<std::size_t>();
    c.model.pool_factor = m.at("pool_factor").get<std::size_t>();
    c.model.n_doa = m.at("n_doa").get<std::size_t>();
    c.model.in_channels = m.at("in_channels").get<std::size_t>();
    c.model.n_bins = m.at("n_bins").get<std::size_t>();
    c.model.d_state = m.at("d_state").get<std::size_t>();
    c.model.conv_width = m.at("conv_width").get<std::size_t>();
    c.model.dt_rank = m.at("dt_rank").get<std::size_t>();
    c.model.encoder_kernel = m.at("encoder_kernel").get<std::size_t>();
    c.model.dense_growth = m.at("dense_growth").get<std::size_t>();
    c.model.dense_dilations = m.at("dense_dilations").get<std::vector<std::size_t>>();
    c.model.use_t_mamba = m.at("use_t_mamba").get<bool>();
    c.model.use_f_mamba = m.at("use_f_mamba").get<bool>();
    const auto& o = d.at("optim");
    c.optim.lr = o.at("lr").get<double>();
    c.optim.beta1 = o.at("beta1").get<double>();
    c.optim.beta2 = o.at("beta2").get<double>();
    c.optim.eps = o.at("eps").get<double>();
    c.optim.weight_decay = o.at("weight_decay").get<double>();
    c.schedule.step_size = o.at("step_size").get<int>();
    c.schedule.gamma = o.at("gamma").get<double>();
    const auto& tr = d.at("train");
    c.train.batch_size = tr.at("batch_size").get<std::size_t>();
    c.train.max_epochs = tr.at("max_epochs").get<int>();
    c.train.patience = tr.at("patience").get<int>();
    c.train.crop_frames = tr.at("crop_frames").get<std::size_t>();
    c.train.validate_every = tr.at("validate_every").get<int>();
    c.median_width = d.at("baseline").at("median_width").get<std::size_t>();
  } catch (const Json::exception& e) {
    Fail(ErrorKind::kConfig, std::string("bad config value: ") + e.what());
  }
  c.Validate();
  return c;
}

void MergeStrict(Json& base, const Json& overlay, const std::string& path) {
  Require(overlay.is_object(), ErrorKind::kConfig,
          "config section '" + (path.empty() ? std::string("<root>") : path) + "' must be an object");
  for (const auto& [key, value] : overlay.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    Require(base.contains(key), ErrorKind::kConfig, "unknown config key '" + here + "'");
    Json& slot = base[key];
    if (slot.is_object()) {
      MergeStrict(slot, value, here);
    } else {
      slot = value;
    }
  }
}

void ApplyOverride(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  Require(eq != std::string::npos && eq > 0, ErrorKind::kConfig,
          "override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  // Build the nested overlay {"a": {"b": value}} and merge it strictly.
  Json overlay = value;
  std::string rest = key;
  std::vector<std::string> parts;
  for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1))
    parts.push_back(rest.substr(0, pos));
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) overlay = Json{{*it, overlay}};
  MergeStrict(doc, overlay);
}

RunConfig ResolveConfig(const std::filesystem::path& config_file,
                        const std::vector<std::string>& overrides) {
  Json doc = ToJson(RunConfig{});
  if (!config_file.empty()) {
    std::ifstream is(config_file);
    Require(bool(is), ErrorKind::kIo, "cannot open config " + config_file.string());
    Json file = Json::parse(is, nullptr, false);
    Require(!file.is_discarded(), ErrorKind::kConfig, "config " + config_file.string() + " is not valid JSON");
    MergeStrict(doc, file);
  }
  for (const auto& o : overrides) ApplyOverride(doc, o);
  return FromJson(doc);
}

}  // namespace tfssl::cli
