#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lovit/matrix.hpp"

namespace lovit {

// Per-frame phase labels in [0, K). Position i holds frame i + 1.
struct PhaseTrack {
  std::vector<std::size_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  // Throws if empty or any label >= num_phases.
  void validate(std::size_t num_phases) const;
  bool operator==(const PhaseTrack&) const = default;
};

struct TransitionMap {
  std::vector<double> values;
  double sigma_l = 3.0;
  double sigma_r = 12.0;
};

// Positions b > 0 with labels[b] != labels[b - 1].
std::vector<std::size_t> phase_boundaries(const PhaseTrack& track);

// Asymmetric Gaussian heat around every boundary b: left tail on
// (b - 3 sigma_l, b), right tail on (b, b + 3 sigma_r), h_b = 1, zero
// elsewhere. Overlapping kernels combine by max.
TransitionMap build_transition_map(const PhaseTrack& track, double sigma_l, double sigma_r);

struct LossTerms {
  double heat_l1 = 0.0;
  double phase_ce = 0.0;
  double total = 0.0;
};

// Per-frame mean L1 between predicted and target heat plus per-frame mean
// cross-entropy of softmax(logits) against the labels. `heat_weight` scales the
// L1 term (1 reproduces the unit-weighted sum).
LossTerms joint_loss_terms(const std::vector<Vector>& logits_seq, const std::vector<double>& heat_pred,
                           const PhaseTrack& track, const TransitionMap& map, double heat_weight = 1.0);
double joint_loss(const std::vector<Vector>& logits_seq, const std::vector<double>& heat_pred,
                  const PhaseTrack& track, const TransitionMap& map, double heat_weight = 1.0);

struct SamplerConfig {
  std::size_t alpha = 30;
};

// Frame indices (1-based) of the alpha-frame clip used to supervise frame t
// when the current phase began at frame b: stride w = max(1, ceil((t - b) / alpha)),
// indices t - w * (alpha - 1 - i), clamped to frame 1.
std::vector<std::int64_t> clip_indices(std::int64_t t, std::int64_t b, const SamplerConfig& cfg = {});

}  // namespace lovit
