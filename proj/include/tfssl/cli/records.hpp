#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "tfssl/metrics/score.hpp"

namespace tfssl::cli {

// Per-frame ground truth of one utterance at the STFT frame rate.
struct Labels {
  std::string id;
  std::vector<double> azimuth;
  std::vector<bool> vad;
};

// Header line {"id", "frame_rate"} then {"frame", "azimuth", "vad"} per frame.
void WriteLabels(const std::filesystem::path& path, const Labels& labels, double frame_rate = 100.0);
Labels ReadLabels(const std::filesystem::path& path);

// Summary line with the pooled scores and run context, then one line per
// utterance.
void WriteReport(const std::filesystem::path& path, const metrics::EvalReport& report,
                 const nlohmann::json& context);
std::string FormatReport(const metrics::EvalReport& report, const std::string& title);

struct DoaLine {
  double time_s = 0.0;
  double azimuth_deg = 0.0;
  double peak = 0.0;
};
void WriteDoaStream(std::ostream& os, const std::vector<DoaLine>& lines);

}  // namespace tfssl::cli
