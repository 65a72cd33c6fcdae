#include "tfssl/metrics/score.hpp"

#include <cmath>

#include "tfssl/error.hpp"

namespace tfssl::metrics {
namespace {

struct Tally {
  double abs_sum = 0.0;
  std::size_t within10 = 0;
  std::size_t within15 = 0;
  std::size_t n = 0;

  void Add(double err) {
    abs_sum += err;
    within10 += err <= 10.0 ? 1 : 0;
    within15 += err <= 15.0 ? 1 : 0;
    ++n;
  }
  double mae() const { return abs_sum / static_cast<double>(n); }
  double acc10() const { return 100.0 * static_cast<double>(within10) / static_cast<double>(n); }
  double acc15() const { return 100.0 * static_cast<double>(within15) / static_cast<double>(n); }
};

std::vector<double> ActiveErrors(const std::vector<double>& pred, const std::vector<double>& gt,
                                 const std::vector<bool>& mask) {
  Require(pred.size() == gt.size() && gt.size() == mask.size(), ErrorKind::kShape,
          "score: prediction, ground truth and mask lengths differ (" +
              std::to_string(pred.size()) + ", " + std::to_string(gt.size()) + ", " +
              std::to_string(mask.size()) + ")");
  std::vector<double> errs;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (mask[i]) errs.push_back(std::abs(pred[i] - gt[i]));
  return errs;
}

}  // namespace

double EvalReport::mean_utterance_mae() const {
  double s = 0.0;
  for (const auto& u : per_utterance) s += u.mae_deg;
  return per_utterance.empty() ? 0.0 : s / static_cast<double>(per_utterance.size());
}

double EvalReport::mean_utterance_acc10() const {
  double s = 0.0;
  for (const auto& u : per_utterance) s += u.acc10;
  return per_utterance.empty() ? 0.0 : s / static_cast<double>(per_utterance.size());
}

double EvalReport::mean_utterance_acc15() const {
  double s = 0.0;
  for (const auto& u : per_utterance) s += u.acc15;
  return per_utterance.empty() ? 0.0 : s / static_cast<double>(per_utterance.size());
}

EvalReport Score(const std::vector<double>& pred, const std::vector<double>& gt,
                 const std::vector<bool>& mask) {
  ReportBuilder b;
  b.Add("", pred, gt, mask);
  EvalReport r = b.Finish();
  r.per_utterance.clear();
  return r;
}

void ReportBuilder::Add(const std::string& id, const std::vector<double>& pred,
                        const std::vector<double>& gt, const std::vector<bool>& mask) {
  const auto errs = ActiveErrors(pred, gt, mask);
  Require(!errs.empty(), ErrorKind::kData, "score: no active frames in utterance '" + id + "'");
  Tally t;
  for (double e : errs) t.Add(e);
  utts_.push_back({id, t.mae(), t.acc10(), t.acc15(), t.n});
  errors_.insert(errors_.end(), errs.begin(), errs.end());
}

EvalReport ReportBuilder::Finish() const {
  Require(!errors_.empty(), ErrorKind::kData, "score: no active frames");
  Tally t;
  for (double e : errors_) t.Add(e);
  EvalReport r;
  r.mae_deg = t.mae();
  r.acc10 = t.acc10();
  r.acc15 = t.acc15();
  r.n_frames = t.n;
  r.per_utterance = utts_;
  return r;
}

}  // namespace tfssl::metrics
