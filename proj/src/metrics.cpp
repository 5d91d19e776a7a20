#include "lovit/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace lovit {

namespace {

void require_aligned(const PhaseTrack& pred, const PhaseTrack& gt) {
  if (pred.size() != gt.size()) {
    throw std::invalid_argument("metrics: length mismatch (pred " + std::to_string(pred.size()) +
                                ", gt " + std::to_string(gt.size()) + ")");
  }
  if (gt.size() == 0) throw std::invalid_argument("metrics: empty tracks");
}

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

double video_accuracy(const PhaseTrack& pred, const PhaseTrack& gt) {
  require_aligned(pred, gt);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) hits += pred.labels[i] == gt.labels[i];
  return 100.0 * static_cast<double>(hits) / static_cast<double>(gt.size());
}

EvalReport phase_level_metrics(const PhaseTrack& pred, const PhaseTrack& gt, std::size_t num_phases) {
  require_aligned(pred, gt);
  pred.validate(num_phases);
  gt.validate(num_phases);
  std::vector<std::size_t> n_pred(num_phases), n_gt(num_phases), n_both(num_phases);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    ++n_pred[pred.labels[i]];
    ++n_gt[gt.labels[i]];
    if (pred.labels[i] == gt.labels[i]) ++n_both[gt.labels[i]];
  }

  EvalReport report;
  report.accuracy_pct = video_accuracy(pred, gt);
  double sum_pr = 0.0, sum_re = 0.0, sum_ja = 0.0;
  std::size_t count_re = 0;
  for (std::size_t k = 0; k < num_phases; ++k) {
    if (n_pred[k] == 0 && n_gt[k] == 0) continue;
    PhaseScore s;
    s.phase = k;
    const double inter = static_cast<double>(n_both[k]);
    s.precision_pct = n_pred[k] ? 100.0 * inter / static_cast<double>(n_pred[k]) : 0.0;
    if (n_gt[k]) {
      s.recall_pct = 100.0 * inter / static_cast<double>(n_gt[k]);
      sum_re += *s.recall_pct;
      ++count_re;
    }
    const double uni = static_cast<double>(n_pred[k] + n_gt[k] - n_both[k]);
    s.jaccard_pct = 100.0 * inter / uni;
    sum_pr += s.precision_pct;
    sum_ja += s.jaccard_pct;
    report.per_phase.push_back(s);
  }
  const auto n = static_cast<double>(report.per_phase.size());
  report.mean_precision = sum_pr / n;
  report.mean_jaccard = sum_ja / n;
  report.mean_recall = count_re ? sum_re / static_cast<double>(count_re) : 0.0;
  return report;
}

PhaseTrack relax_predictions(const PhaseTrack& pred, const PhaseTrack& gt, std::size_t fps,
                             std::size_t window_s) {
  require_aligned(pred, gt);
  const auto reach = static_cast<std::int64_t>(fps * window_s);
  const auto n = static_cast<std::int64_t>(gt.size());
  PhaseTrack relaxed = pred;
  for (std::size_t boundary : phase_boundaries(gt)) {
    const auto b = static_cast<std::int64_t>(boundary);
    const std::size_t before = gt.labels[boundary - 1];
    const std::size_t after = gt.labels[boundary];
    for (std::int64_t i = std::max<std::int64_t>(0, b - reach); i <= std::min(n - 1, b + reach); ++i) {
      const std::size_t p = pred.labels[static_cast<std::size_t>(i)];
      if (p == before || p == after) relaxed.labels[static_cast<std::size_t>(i)] = gt.labels[static_cast<std::size_t>(i)];
    }
  }
  return relaxed;
}

EvalReport relaxed_boundary_eval(const PhaseTrack& pred, const PhaseTrack& gt,
                                 std::size_t num_phases, std::size_t fps, std::size_t window_s) {
  EvalReport report = phase_level_metrics(relax_predictions(pred, gt, fps, window_s), gt, num_phases);
  report.relaxed = true;
  return report;
}

namespace {
MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}
}  // namespace

CorpusSummary summarize(const std::vector<EvalReport>& reports) {
  std::vector<double> ac, pr, re, ja;
  for (const auto& r : reports) {
    ac.push_back(r.accuracy_pct);
    pr.push_back(r.mean_precision);
    re.push_back(r.mean_recall);
    ja.push_back(r.mean_jaccard);
  }
  return {reports.size(), mean_std(ac), mean_std(pr), mean_std(re), mean_std(ja)};
}

std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os << "relaxed=" << (r.relaxed ? 1 : 0) << '\n'
     << "accuracy=" << fixed(r.accuracy_pct) << '\n'
     << "precision=" << fixed(r.mean_precision) << '\n'
     << "recall=" << fixed(r.mean_recall) << '\n'
     << "jaccard=" << fixed(r.mean_jaccard) << '\n'
     << "phases=" << r.per_phase.size() << '\n';
  return os.str();
}

std::string format_summary(const CorpusSummary& s) {
  std::ostringstream os;
  os << "videos=" << s.videos << '\n'
     << "accuracy_mean=" << fixed(s.accuracy.mean) << '\n'
     << "accuracy_std=" << fixed(s.accuracy.stddev) << '\n'
     << "precision_mean=" << fixed(s.precision.mean) << '\n'
     << "precision_std=" << fixed(s.precision.stddev) << '\n'
     << "recall_mean=" << fixed(s.recall.mean) << '\n'
     << "recall_std=" << fixed(s.recall.stddev) << '\n'
     << "jaccard_mean=" << fixed(s.jaccard.mean) << '\n'
     << "jaccard_std=" << fixed(s.jaccard.stddev) << '\n';
  return os.str();
}

std::string per_phase_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "phase,precision,recall,jaccard\n";
  for (const auto& s : r.per_phase) {
    os << s.phase << ',' << fixed(s.precision_pct) << ','
       << (s.recall_pct ? fixed(*s.recall_pct) : std::string("nan")) << ',' << fixed(s.jaccard_pct)
       << '\n';
  }
  return os.str();
}

}  // namespace lovit
