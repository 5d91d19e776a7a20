#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lovit/config.hpp"
#include "lovit/matrix.hpp"
#include "lovit/transition_map.hpp"
#include "lovit/weights.hpp"

namespace lovit {

// linear: every phase once, in index order. recurring: phases revisited after
// later ones, so some phase spans two or more disjoint runs.
enum class PhaseProfile { linear, recurring };
PhaseProfile parse_profile(const std::string& name);
std::string to_string(PhaseProfile p);

struct SynthSpec {
  std::uint64_t seed = 0;
  std::size_t frames = 300;
  std::size_t num_phases = 7;
  std::size_t feature_dim = 768;
  PhaseProfile profile = PhaseProfile::linear;
  // Class means depend only on this seed, so videos of one corpus share them.
  std::uint64_t class_seed = 0;
  double separation = 1.0;
  double noise = 0.5;
};

struct SynthVideo {
  Matrix features;  // frames x feature_dim, float-representable
  PhaseTrack labels;
};

// K x D matrix of per-phase feature means; entries uniform in +-separation.
Matrix class_means(std::uint64_t class_seed, std::size_t num_phases, std::size_t dim,
                   double separation);

// Features are the phase mean plus Gaussian noise. Throws when frames < K, and
// for the recurring profile when frames == K (no room for a repeat).
SynthVideo synth_gen(const SynthSpec& spec);

// Replaces the phase head with a nearest-centroid classifier. A noise-free
// linear-profile video built from the corpus class means (corpus.class_seed,
// num_phases, feature_dim, separation) is run through the model; c_k is the
// mean pre-head feature over frames of phase k, and
// logit_k = c_k . x - |c_k|^2 / 2. Values are rounded to float.
void fit_phase_head(WeightStore& store, const ModelConfig& cfg, const SynthSpec& corpus,
                    std::uint64_t seed_root);

}  // namespace lovit
