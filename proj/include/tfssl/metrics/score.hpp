#pragma once

#include <string>
#include <vector>

namespace tfssl::metrics {

struct UtteranceScore {
  std::string id;
  double mae_deg = 0.0;
  double acc10 = 0.0;
  double acc15 = 0.0;
  std::size_t n_frames = 0;
};

// Frame-level scores pooled over everything scored, plus per-utterance
// breakdown. Accuracies are percentages; a frame counts as correct when
// |pred - gt| <= tolerance (inclusive).
struct EvalReport {
  double mae_deg = 0.0;
  double acc10 = 0.0;
  double acc15 = 0.0;
  std::size_t n_frames = 0;
  std::vector<UtteranceScore> per_utterance;

  double mean_utterance_mae() const;
  double mean_utterance_acc10() const;
  double mean_utterance_acc15() const;
};

// Absolute error without wrap-around (the azimuth domain is [0, 180]).
// Throws when the mask selects no frame or lengths differ.
EvalReport Score(const std::vector<double>& pred, const std::vector<double>& gt,
                 const std::vector<bool>& mask);

// Accumulates utterances and produces the pooled report.
class ReportBuilder {
 public:
  void Add(const std::string& id, const std::vector<double>& pred, const std::vector<double>& gt,
           const std::vector<bool>& mask);
  EvalReport Finish() const;

 private:
  std::vector<double> errors_;
  std::vector<UtteranceScore> utts_;
};

}  // namespace tfssl::metrics
