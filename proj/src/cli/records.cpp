#include "tfssl/cli/records.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "tfssl/error.hpp"

namespace tfssl::cli {

using nlohmann::json;

void WriteLabels(const std::filesystem::path& path, const Labels& labels, double frame_rate) {
  Require(labels.azimuth.size() == labels.vad.size(), ErrorKind::kInvalidArgument,
          "label azimuth and vad lengths differ");
  std::ofstream os(path, std::ios::binary);
  Require(bool(os), ErrorKind::kIo, "cannot write " + path.string());
  os << json{{"id", labels.id}, {"frame_rate", frame_rate}}.dump() << '\n';
  for (std::size_t t = 0; t < labels.azimuth.size(); ++t)
    os << json{{"frame", t}, {"azimuth", labels.azimuth[t]}, {"vad", bool(labels.vad[t])}}.dump()
       << '\n';
  Require(bool(os), ErrorKind::kIo, "failed writing " + path.string());
}

Labels ReadLabels(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  Require(bool(is), ErrorKind::kIo, "cannot open labels " + path.string());
  Labels out;
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto j = json::parse(line, nullptr, false);
    Require(!j.is_discarded(), ErrorKind::kData, path.string() + ": malformed line");
    try {
      if (header) {
        out.id = j.at("id").get<std::string>();
        header = false;
        continue;
      }
      Require(j.at("frame").get<std::size_t>() == out.azimuth.size(), ErrorKind::kData,
              path.string() + ": frames out of order");
      const double az = j.at("azimuth").get<double>();
      Require(az >= 0.0 && az <= 180.0, ErrorKind::kData, path.string() + ": azimuth outside [0, 180]");
      out.azimuth.push_back(az);
      out.vad.push_back(j.at("vad").get<bool>());
    } catch (const json::exception& e) {
      Fail(ErrorKind::kData, path.string() + ": " + e.what());
    }
  }
  Require(!header, ErrorKind::kData, path.string() + ": empty label file");
  return out;
}

void WriteReport(const std::filesystem::path& path, const metrics::EvalReport& r,
                 const json& context) {
  std::ofstream os(path, std::ios::binary);
  Require(bool(os), ErrorKind::kIo, "cannot write " + path.string());
  json summary = {{"kind", "summary"},
                  {"mae_deg", r.mae_deg},
                  {"acc10", r.acc10},
                  {"acc15", r.acc15},
                  {"n_frames", r.n_frames},
                  {"n_utterances", r.per_utterance.size()},
                  {"mean_utterance_mae_deg", r.mean_utterance_mae()},
                  {"mean_utterance_acc10", r.mean_utterance_acc10()},
                  {"mean_utterance_acc15", r.mean_utterance_acc15()},
                  {"context", context}};
  os << summary.dump() << '\n';
  for (const auto& u : r.per_utterance)
    os << json{{"kind", "utterance"}, {"id", u.id},      {"mae_deg", u.mae_deg},
               {"acc10", u.acc10},    {"acc15", u.acc15}, {"n_frames", u.n_frames}}
              .dump()
       << '\n';
  Require(bool(os), ErrorKind::kIo, "failed writing " + path.string());
}

std::string FormatReport(const metrics::EvalReport& r, const std::string& title) {
  char buf[256];
  std::ostringstream os;
  os << title << '\n';
  std::snprintf(buf, sizeof buf, "  %-22s %10s %10s %10s %8s\n", "", "MAE(deg)", "ACC10(%)",
                "ACC15(%)", "frames");
  os << buf;
  std::snprintf(buf, sizeof buf, "  %-22s %10.2f %10.2f %10.2f %8zu\n", "pooled frames", r.mae_deg,
                r.acc10, r.acc15, r.n_frames);
  os << buf;
  std::snprintf(buf, sizeof buf, "  %-22s %10.2f %10.2f %10.2f %8zu\n", "utterance mean",
                r.mean_utterance_mae(), r.mean_utterance_acc10(), r.mean_utterance_acc15(),
                r.per_utterance.size());
  os << buf;
  return os.str();
}

void WriteDoaStream(std::ostream& os, const std::vector<DoaLine>& lines) {
  for (const auto& l : lines)
    os << json{{"time", l.time_s}, {"azimuth", l.azimuth_deg}, {"peak", l.peak}}.dump() << '\n';
}

}  // namespace tfssl::cli
