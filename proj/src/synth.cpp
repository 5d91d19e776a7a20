#include "lovit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "lovit/aggregator.hpp"
#include "lovit/rng.hpp"

namespace lovit {

namespace {

enum Stream : std::uint64_t { kMeans = 1, kNoise = 2, kSegments = 3, kLengths = 4, kCalibration = 5 };

double gaussian(std::uint64_t key, std::uint64_t n) {
  // Box-Muller on two counter draws; 1 - u keeps the log argument positive.
  const double u1 = 1.0 - rng::uniform_real(key, 2 * n);
  const double u2 = rng::uniform_real(key, 2 * n + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double to_float(double v) { return static_cast<double>(static_cast<float>(v)); }

// Phase order of the segments. Recurring tracks insert revisits of an earlier
// phase right after its successor, keeping neighbouring segments distinct.
std::vector<std::size_t> segment_phases(const SynthSpec& spec) {
  const std::size_t k = spec.num_phases;
  std::vector<std::size_t> seq(k);
  for (std::size_t i = 0; i < k; ++i) seq[i] = i;
  if (spec.profile == PhaseProfile::linear || k < 2) return seq;
  const std::size_t repeats = std::min(std::max<std::size_t>(1, k / 3), spec.frames - k);
  const std::uint64_t key = rng::derive(spec.seed, kSegments);
  std::uint64_t draw = 0;
  for (std::size_t r = 0; r < repeats; ++draw) {
    const std::size_t pos = 2 + rng::uniform_index(key, draw, seq.size() - 1);
    const std::size_t phase = seq[pos - 2];
    if (seq[pos - 1] == phase || (pos < seq.size() && seq[pos] == phase)) continue;
    seq.insert(seq.begin() + static_cast<std::ptrdiff_t>(pos), phase);
    ++r;
  }
  return seq;
}

}  // namespace

PhaseProfile parse_profile(const std::string& name) {
  if (name == "linear") return PhaseProfile::linear;
  if (name == "recurring") return PhaseProfile::recurring;
  throw std::invalid_argument("unknown phase profile '" + name + "' (linear|recurring)");
}

std::string to_string(PhaseProfile p) {
  return p == PhaseProfile::linear ? "linear" : "recurring";
}

Matrix class_means(std::uint64_t class_seed, std::size_t num_phases, std::size_t dim,
                   double separation) {
  Matrix means(num_phases, dim);
  for (std::size_t k = 0; k < num_phases; ++k) {
    const std::uint64_t key = rng::derive(class_seed, kMeans, k);
    for (std::size_t d = 0; d < dim; ++d) {
      means(k, d) = to_float(separation * (2.0 * rng::uniform_real(key, d) - 1.0));
    }
  }
  return means;
}

SynthVideo synth_gen(const SynthSpec& spec) {
  if (spec.num_phases == 0 || spec.feature_dim == 0) {
    throw std::invalid_argument("synth_gen: num_phases and feature_dim must be >= 1");
  }
  if (spec.frames < spec.num_phases) {
    throw std::invalid_argument("synth_gen: T=" + std::to_string(spec.frames) + " < K=" +
                                std::to_string(spec.num_phases));
  }
  if (spec.profile == PhaseProfile::recurring && spec.frames == spec.num_phases) {
    throw std::invalid_argument("synth_gen: recurring profile needs T > K");
  }
  const std::vector<std::size_t> phases = segment_phases(spec);

  // One frame per segment, the rest split by random weights in [0.5, 1.5).
  const std::uint64_t len_key = rng::derive(spec.seed, kLengths);
  std::vector<double> weight(phases.size());
  double total = 0.0;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] = 0.5 + rng::uniform_real(len_key, i);
    total += weight[i];
  }
  const std::size_t spare = spec.frames - phases.size();
  std::vector<std::size_t> length(phases.size(), 1);
  std::size_t used = phases.size();
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const auto extra = static_cast<std::size_t>(std::floor(spare * weight[i] / total));
    length[i] += extra;
    used += extra;
  }
  for (std::size_t i = 0; used < spec.frames; i = (i + 1) % length.size(), ++used) ++length[i];

  SynthVideo video;
  for (std::size_t i = 0; i < phases.size(); ++i) video.labels.labels.insert(video.labels.labels.end(), length[i], phases[i]);

  const Matrix means = class_means(spec.class_seed, spec.num_phases, spec.feature_dim, spec.separation);
  video.features = Matrix(spec.frames, spec.feature_dim);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    const std::uint64_t key = rng::derive(spec.seed, kNoise, t);
    const std::size_t p = video.labels.labels[t];
    for (std::size_t d = 0; d < spec.feature_dim; ++d) {
      video.features(t, d) = to_float(means(p, d) + spec.noise * gaussian(key, d));
    }
  }
  return video;
}

void fit_phase_head(WeightStore& store, const ModelConfig& cfg, const SynthSpec& corpus,
                    std::uint64_t seed_root) {
  if (corpus.num_phases != cfg.num_phases || corpus.feature_dim != cfg.feature_dim) {
    throw std::invalid_argument("fit_phase_head: corpus phases/width differ from the config");
  }
  const ModelWeights w = ModelWeights::load(store, cfg);
  SynthSpec calib = corpus;
  calib.seed = rng::derive(corpus.class_seed, kCalibration);
  calib.profile = PhaseProfile::linear;
  calib.noise = 0.0;
  calib.frames = std::max<std::size_t>(corpus.frames, 10 * cfg.num_phases);
  const SynthVideo video = synth_gen(calib);

  Matrix feats;
  lovit_forward_all({Role::e, 1, video.features}, w, cfg, seed_root, &feats);
  Matrix weight(cfg.num_phases, cfg.head_fusion_dim);
  std::vector<std::size_t> count(cfg.num_phases, 0);
  for (std::size_t t = 0; t < feats.rows(); ++t) {
    const std::size_t k = video.labels.labels[t];
    ++count[k];
    for (std::size_t d = 0; d < weight.cols(); ++d) weight(k, d) += feats(t, d);
  }
  Vector bias(cfg.num_phases);
  for (std::size_t k = 0; k < cfg.num_phases; ++k) {
    double sq = 0.0;
    for (std::size_t d = 0; d < weight.cols(); ++d) {
      weight(k, d) = to_float(weight(k, d) / static_cast<double>(count[k]));
      sq += weight(k, d) * weight(k, d);
    }
    bias[k] = to_float(-0.5 * sq);
  }
  const std::string name = names::kPhaseHead;
  store.set(name + ".weight", Tensor{{cfg.num_phases, cfg.head_fusion_dim}, weight.data()});
  store.set(name + ".bias", Tensor{{cfg.num_phases}, bias});
}

}  // namespace lovit
