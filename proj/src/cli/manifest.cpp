#include "tfssl/cli/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "tfssl/error.hpp"

namespace tfssl::cli {
namespace {

constexpr const char* kFormat = "tfssl-manifest/1";

}  // namespace

nlohmann::json ManifestRecord::ToJson() const {
  nlohmann::json j = {{"id", id},
                      {"split", split},
                      {"wav", wav},
                      {"labels", labels},
                      {"seed", seed},
                      {"index", index},
                      {"room_dims", room_dims},
                      {"rt60", rt60},
                      {"beta", beta},
                      {"mics", mics},
                      {"static", is_static},
                      {"noise", noise},
                      {"snr_db", snr_db ? nlohmann::json(*snr_db) : nlohmann::json(nullptr)}};
  if (!clean_wav.empty()) j["clean_wav"] = clean_wav;
  if (!noise_wav.empty()) j["noise_wav"] = noise_wav;
  return j;
}

ManifestRecord ManifestRecord::FromJson(const nlohmann::json& j) {
  ManifestRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.split = j.at("split").get<std::string>();
    r.wav = j.at("wav").get<std::string>();
    r.labels = j.at("labels").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.index = j.at("index").get<std::uint64_t>();
    r.room_dims = j.at("room_dims").get<std::vector<double>>();
    r.rt60 = j.at("rt60").get<double>();
    r.beta = j.at("beta").get<double>();
    r.mics = j.at("mics").get<std::vector<std::vector<double>>>();
    r.is_static = j.at("static").get<bool>();
    r.noise = j.at("noise").get<std::string>();
    if (!j.at("snr_db").is_null()) r.snr_db = j.at("snr_db").get<double>();
    if (j.contains("clean_wav")) r.clean_wav = j.at("clean_wav").get<std::string>();
    if (j.contains("noise_wav")) r.noise_wav = j.at("noise_wav").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kData, std::string("bad manifest record: ") + e.what());
  }
  return r;
}

std::vector<const ManifestRecord*> Manifest::Split(const std::string& name) const {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : records)
    if (r.split == name) out.push_back(&r);
  return out;
}

std::string ManifestText(const Manifest& m) {
  std::ostringstream os;
  os << nlohmann::json{{"format", kFormat}, {"config", m.config}}.dump() << '\n';
  for (const auto& r : m.records) os << r.ToJson().dump() << '\n';
  return os.str();
}

void WriteManifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream os(path, std::ios::binary);
  Require(bool(os), ErrorKind::kIo, "cannot write " + path.string());
  os << ManifestText(m);
  Require(bool(os), ErrorKind::kIo, "failed writing " + path.string());
}

Manifest ReadManifest(const std::filesystem::path& path, bool check_files) {
  std::ifstream is(path, std::ios::binary);
  Require(bool(is), ErrorKind::kIo, "cannot open manifest " + path.string());
  Manifest m;
  m.dir = path.parent_path();
  std::string line;
  bool header = true;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    Require(!j.is_discarded() && j.is_object(), ErrorKind::kData,
            path.string() + ":" + std::to_string(line_no) + ": not a JSON object");
    if (header) {
      Require(j.value("format", "") == kFormat, ErrorKind::kData,
              path.string() + ": missing manifest header");
      m.config = j.at("config");
      header = false;
      continue;
    }
    auto r = ManifestRecord::FromJson(j);
    Require(ids.insert(r.id).second, ErrorKind::kData, "duplicate utterance id '" + r.id + "'");
    if (check_files) {
      for (const auto* rel : {&r.wav, &r.labels})
        Require(std::filesystem::exists(m.Resolve(*rel)), ErrorKind::kIo,
                "manifest references missing file " + m.Resolve(*rel).string());
    }
    m.records.push_back(std::move(r));
  }
  Require(!header, ErrorKind::kData, path.string() + ": empty manifest");
  return m;
}

}  // namespace tfssl::cli
