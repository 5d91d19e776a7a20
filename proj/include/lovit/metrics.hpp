#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lovit/transition_map.hpp"

namespace lovit {

struct PhaseScore {
  std::size_t phase = 0;
  double precision_pct = 0.0;
  // Undefined (0/0) when the phase never occurs in the ground truth.
  std::optional<double> recall_pct;
  double jaccard_pct = 0.0;
};

struct EvalReport {
  double accuracy_pct = 0.0;
  // Phases present in the prediction or the ground truth, ascending.
  std::vector<PhaseScore> per_phase;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_jaccard = 0.0;
  bool relaxed = false;
};

double video_accuracy(const PhaseTrack& pred, const PhaseTrack& gt);

EvalReport phase_level_metrics(const PhaseTrack& pred, const PhaseTrack& gt, std::size_t num_phases);

// A prediction within window_s * fps frames of a ground-truth transition that
// names either adjacent phase counts as correct; the report is then computed
// on the relaxed prediction.
PhaseTrack relax_predictions(const PhaseTrack& pred, const PhaseTrack& gt, std::size_t fps = 1,
                             std::size_t window_s = 10);
EvalReport relaxed_boundary_eval(const PhaseTrack& pred, const PhaseTrack& gt,
                                 std::size_t num_phases, std::size_t fps = 1,
                                 std::size_t window_s = 10);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

struct CorpusSummary {
  std::size_t videos = 0;
  MeanStd accuracy, precision, recall, jaccard;
};

// Mean and sample standard deviation across videos.
CorpusSummary summarize(const std::vector<EvalReport>& reports);

// `key=value` lines.
std::string format_report(const EvalReport& report);
std::string format_summary(const CorpusSummary& summary);
// `phase,precision,recall,jaccard`; undefined recall is written as `nan`.
std::string per_phase_csv(const EvalReport& report);

}  // namespace lovit
