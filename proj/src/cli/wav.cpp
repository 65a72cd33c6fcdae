#include "tfssl/cli/wav.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "tfssl/error.hpp"

namespace tfssl::cli {
namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

std::int16_t ToCode(double v) {
  const double s = std::round(std::clamp(v, -1.0, 32767.0 / 32768.0) * 32768.0);
  return static_cast<std::int16_t>(std::clamp(s, -32768.0, 32767.0));
}

template <typename T>
void Put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T Get(const std::vector<char>& buf, std::size_t pos) {
  Require(pos + sizeof(T) <= buf.size(), ErrorKind::kData, "truncated WAV header");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  return v;
}

}  // namespace

void WriteWav(const std::filesystem::path& path, const MultiWave& channels, int sample_rate) {
  Require(!channels.empty(), ErrorKind::kInvalidArgument, "WAV needs at least one channel");
  const std::size_t n = channels[0].size();
  for (const auto& ch : channels)
    Require(ch.size() == n, ErrorKind::kInvalidArgument, "WAV channels differ in length");
  const auto n_ch = static_cast<std::uint16_t>(channels.size());
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(n * n_ch * 2);
  std::ofstream os(path, std::ios::binary);
  Require(bool(os), ErrorKind::kIo, "cannot write " + path.string());
  os.write("RIFF", 4);
  Put<std::uint32_t>(os, 36 + data_bytes);
  os.write("WAVEfmt ", 8);
  Put<std::uint32_t>(os, 16);
  Put<std::uint16_t>(os, 1);
  Put<std::uint16_t>(os, n_ch);
  Put<std::uint32_t>(os, static_cast<std::uint32_t>(sample_rate));
  Put<std::uint32_t>(os, static_cast<std::uint32_t>(sample_rate) * n_ch * 2);
  Put<std::uint16_t>(os, static_cast<std::uint16_t>(n_ch * 2));
  Put<std::uint16_t>(os, 16);
  os.write("data", 4);
  Put<std::uint32_t>(os, data_bytes);
  std::vector<std::int16_t> frame(n * n_ch);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < n_ch; ++c) frame[i * n_ch + c] = ToCode(channels[c][i]);
  os.write(reinterpret_cast<const char*>(frame.data()), std::streamsize(frame.size() * 2));
  Require(bool(os), ErrorKind::kIo, "failed writing " + path.string());
}

WavData ReadWav(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  Require(bool(is), ErrorKind::kIo, "cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  Require(buf.size() >= 12 && std::memcmp(buf.data(), "RIFF", 4) == 0 &&
              std::memcmp(buf.data() + 8, "WAVE", 4) == 0,
          ErrorKind::kData, path.string() + " is not a RIFF/WAVE file");
  std::size_t pos = 12;
  int channels = 0, bits = 0, format = 0;
  WavData out;
  bool have_fmt = false;
  while (pos + 8 <= buf.size()) {
    const std::string id(buf.data() + pos, 4);
    const auto size = Get<std::uint32_t>(buf, pos + 4);
    const std::size_t body = pos + 8;
    Require(body + size <= buf.size(), ErrorKind::kData, "truncated WAV chunk in " + path.string());
    if (id == "fmt ") {
      format = Get<std::uint16_t>(buf, body);
      channels = Get<std::uint16_t>(buf, body + 2);
      out.sample_rate = static_cast<int>(Get<std::uint32_t>(buf, body + 4));
      bits = Get<std::uint16_t>(buf, body + 14);
      have_fmt = true;
    } else if (id == "data") {
      Require(have_fmt, ErrorKind::kData, "WAV data chunk before fmt chunk");
      Require(format == 1 && bits == 16, ErrorKind::kData,
              path.string() + ": only 16-bit PCM WAV is supported");
      Require(channels >= 1, ErrorKind::kData, path.string() + ": no channels");
      const std::size_t n = size / (2 * std::size_t(channels));
      out.channels.assign(std::size_t(channels), frontend::Waveform(n));
      for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < channels; ++c)
          out.channels[std::size_t(c)][i] =
              Get<std::int16_t>(buf, body + (i * std::size_t(channels) + std::size_t(c)) * 2) / 32768.0;
      return out;
    }
    pos = body + size + (size & 1);
  }
  Fail(ErrorKind::kData, path.string() + ": no data chunk");
}

MultiWave Quantize16(const MultiWave& channels) {
  MultiWave out = channels;
  for (auto& ch : out)
    for (double& v : ch) v = ToCode(v) / 32768.0;
  return out;
}

}  // namespace tfssl::cli
