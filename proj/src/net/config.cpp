#include "tfssl/net/config.hpp"

#include <map>
#include <sstream>

#include "tfssl/error.hpp"

namespace tfssl::net {
namespace {

std::string JoinList(const std::vector<std::size_t>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::vector<std::size_t> ParseList(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(static_cast<std::size_t>(std::stoull(item)));
  }
  return out;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void NetConfig::Validate() const {
  Require(n_blocks >= 1, ErrorKind::kConfig, "n_blocks must be >= 1");
  Require(expand_per_block.size() == n_blocks, ErrorKind::kConfig,
          "expand_per_block must list one factor per block");
  for (auto e : expand_per_block) Require(e >= 1, ErrorKind::kConfig, "expand factors must be >= 1");
  Require(n_doa == kNumDoa, ErrorKind::kConfig, "n_doa must be 181");
  Require(pool_factor >= 1, ErrorKind::kConfig, "pool_factor must be >= 1");
  Require(model_width >= 1 && in_channels >= 1 && n_bins >= 1 && d_state >= 1 && conv_width >= 1,
          ErrorKind::kConfig, "network sizes must be >= 1");
  Require(encoder_kernel % 2 == 1, ErrorKind::kConfig, "encoder_kernel must be odd");
  for (auto d : dense_dilations) Require(d >= 1, ErrorKind::kConfig, "dilations must be >= 1");
}

std::string NetConfig::ToText() const {
  std::ostringstream os;
  os << "n_blocks = " << n_blocks << '\n'
     << "expand_per_block = " << JoinList(expand_per_block) << '\n'
     << "model_width = " << model_width << '\n'
     << "pool_factor = " << pool_factor << '\n'
     << "n_doa = " << n_doa << '\n'
     << "in_channels = " << in_channels << '\n'
     << "n_bins = " << n_bins << '\n'
     << "d_state = " << d_state << '\n'
     << "conv_width = " << conv_width << '\n'
     << "dt_rank = " << dt_rank << '\n'
     << "encoder_kernel = " << encoder_kernel << '\n'
     << "dense_growth = " << dense_growth << '\n'
     << "dense_dilations = " << JoinList(dense_dilations) << '\n'
     << "use_t_mamba = " << (use_t_mamba ? 1 : 0) << '\n'
     << "use_f_mamba = " << (use_f_mamba ? 1 : 0) << '\n';
  return os.str();
}

NetConfig NetConfig::FromText(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    line = Trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    Require(eq != std::string::npos, ErrorKind::kConfig, "malformed model config line: " + line);
    kv[Trim(line.substr(0, eq))] = Trim(line.substr(eq + 1));
  }
  NetConfig c;
  auto take = [&kv](const char* key, auto& field) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    using T = std::decay_t<decltype(field)>;
    if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
      field = ParseList(it->second);
    } else if constexpr (std::is_same_v<T, bool>) {
      field = it->second == "1" || it->second == "true";
    } else {
      field = static_cast<T>(std::stoull(it->second));
    }
    kv.erase(it);
  };
  try {
    take("n_blocks", c.n_blocks);
    take("expand_per_block", c.expand_per_block);
    take("model_width", c.model_width);
    take("pool_factor", c.pool_factor);
    take("n_doa", c.n_doa);
    take("in_channels", c.in_channels);
    take("n_bins", c.n_bins);
    take("d_state", c.d_state);
    take("conv_width", c.conv_width);
    take("dt_rank", c.dt_rank);
    take("encoder_kernel", c.encoder_kernel);
    take("dense_growth", c.dense_growth);
    take("dense_dilations", c.dense_dilations);
    take("use_t_mamba", c.use_t_mamba);
    take("use_f_mamba", c.use_f_mamba);
  } catch (const std::logic_error& e) {
    Fail(ErrorKind::kConfig, std::string("bad number in model config: ") + e.what());
  }
  Require(kv.empty(), ErrorKind::kConfig,
          "unknown model config key '" + (kv.empty() ? "" : kv.begin()->first) + "'");
  c.Validate();
  return c;
}

NetConfig DeskConfig() {
  NetConfig c;
  c.n_blocks = 1;
  c.expand_per_block = {2};
  c.model_width = 16;
  c.d_state = 8;
  return c;
}

}  // namespace tfssl::net
