#include "lovit/transition_map.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lovit {

void PhaseTrack::validate(std::size_t num_phases) const {
  if (labels.empty()) throw std::invalid_argument("phase track is empty");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_phases) {
      throw std::invalid_argument("phase track: label " + std::to_string(labels[i]) + " at frame " +
                                  std::to_string(i + 1) + " >= K=" + std::to_string(num_phases));
    }
  }
}

std::vector<std::size_t> phase_boundaries(const PhaseTrack& track) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i < track.labels.size(); ++i) {
    if (track.labels[i] != track.labels[i - 1]) out.push_back(i);
  }
  return out;
}

TransitionMap build_transition_map(const PhaseTrack& track, double sigma_l, double sigma_r) {
  if (!(sigma_l > 0.0) || !(sigma_r > 0.0)) {
    throw std::invalid_argument("transition map: sigmas must be > 0");
  }
  TransitionMap map{std::vector<double>(track.size(), 0.0), sigma_l, sigma_r};
  const auto n = static_cast<std::int64_t>(track.size());
  for (std::size_t boundary : phase_boundaries(track)) {
    const auto b = static_cast<std::int64_t>(boundary);
    map.values[boundary] = 1.0;
    // Open intervals: the largest integer offset strictly inside 3 sigma.
    const double left_reach = 3.0 * sigma_l;
    for (std::int64_t t = b - 1; t >= 0 && static_cast<double>(b - t) < left_reach; --t) {
      const double d = static_cast<double>(t - b);
      map.values[t] = std::max(map.values[t], std::exp(-(d * d) / (2.0 * sigma_l * sigma_l)));
    }
    const double right_reach = 3.0 * sigma_r;
    for (std::int64_t t = b + 1; t < n && static_cast<double>(t - b) < right_reach; ++t) {
      const double d = static_cast<double>(t - b);
      map.values[t] = std::max(map.values[t], std::exp(-(d * d) / (2.0 * sigma_r * sigma_r)));
    }
  }
  return map;
}

LossTerms joint_loss_terms(const std::vector<Vector>& logits_seq, const std::vector<double>& heat_pred,
                           const PhaseTrack& track, const TransitionMap& map, double heat_weight) {
  const std::size_t n = track.size();
  if (n == 0) throw std::invalid_argument("joint_loss: empty track");
  if (logits_seq.size() != n || heat_pred.size() != n || map.values.size() != n) {
    throw std::invalid_argument("joint_loss: misaligned sequences (logits " +
                                std::to_string(logits_seq.size()) + ", heat " +
                                std::to_string(heat_pred.size()) + ", map " +
                                std::to_string(map.values.size()) + ", labels " +
                                std::to_string(n) + ")");
  }
  LossTerms terms;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector& logits = logits_seq[i];
    const std::size_t label = track.labels[i];
    if (label >= logits.size()) throw std::invalid_argument("joint_loss: label outside logits");
    const double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double l : logits) total += std::exp(l - peak);
    terms.phase_ce += peak + std::log(total) - logits[label];
    terms.heat_l1 += std::abs(heat_pred[i] - map.values[i]);
  }
  terms.phase_ce /= static_cast<double>(n);
  terms.heat_l1 /= static_cast<double>(n);
  terms.total = heat_weight * terms.heat_l1 + terms.phase_ce;
  return terms;
}

double joint_loss(const std::vector<Vector>& logits_seq, const std::vector<double>& heat_pred,
                  const PhaseTrack& track, const TransitionMap& map, double heat_weight) {
  return joint_loss_terms(logits_seq, heat_pred, track, map, heat_weight).total;
}

std::vector<std::int64_t> clip_indices(std::int64_t t, std::int64_t b, const SamplerConfig& cfg) {
  if (cfg.alpha < 1) throw std::invalid_argument("clip_indices: alpha must be >= 1");
  if (b > t) {
    throw std::invalid_argument("clip_indices: phase start " + std::to_string(b) +
                                " after frame " + std::to_string(t));
  }
  if (t < 1) throw std::invalid_argument("clip_indices: frames are 1-based");
  const auto alpha = static_cast<std::int64_t>(cfg.alpha);
  const std::int64_t span = t - b;
  const std::int64_t stride = std::max<std::int64_t>(1, (span + alpha - 1) / alpha);
  std::vector<std::int64_t> out(cfg.alpha);
  for (std::int64_t i = 0; i < alpha; ++i) {
    out[static_cast<std::size_t>(i)] = std::max<std::int64_t>(1, t - stride * (alpha - 1 - i));
  }
  return out;
}

}  // namespace lovit
