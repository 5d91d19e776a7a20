#pragma once

#include <cstdint>
#include <vector>

#include "lovit/config.hpp"
#include "lovit/fusion.hpp"
#include "lovit/sequence.hpp"
#include "lovit/weights.hpp"

namespace lovit {

struct ModelWeights {
  BlockWeights ls0, ls1, ll0, ll1, global, head_local, head_global;
  LinearLayer phase_head;
  LinearLayer heat_head;

  // Requires the store to match required_tensors(cfg) exactly.
  static ModelWeights load(const WeightStore& store, const ModelConfig& cfg);
  const BlockWeights& block(Block b) const;
};

struct PhaseOutput {
  std::int64_t frame = 0;
  Vector logits;
  double heat = 0.0;
  std::size_t predicted_phase = 0;
  double confidence = 0.0;

  bool operator==(const PhaseOutput&) const = default;
};

// Argmax with lowest-index tie-break, plus the winning softmax probability.
PhaseOutput make_phase_output(std::int64_t frame, Vector logits, double heat_logit);

// One L-Trans level: an e window yields s (L_s-Trans), an s window yields l
// (L_l-Trans). The first fusion module reads the previous clip's output on its
// auxiliary branch; the second reads the first module's output. An empty
// previous clip becomes a single zero row at frame 0.
FeatureSequence l_trans_forward(const FeatureSequence& input, const FeatureSequence& prev_clip_out,
                                const ModelWeights& w, const ModelConfig& cfg);

// G-Informer: ProbSparse encoder over the whole l history, decoder over the
// current window (the last lambda1 frames of the history). Sampler seeds are
// derived from (seed_root, current frame, encoder layer).
FeatureSequence g_informer_forward(const FeatureSequence& full_l_history,
                                   const FeatureSequence& current_window, const ModelWeights& w,
                                   const ModelConfig& cfg, std::uint64_t seed_root);

// Fuses s with l, then the result with g. Rows are the pre-head features.
Matrix multiscale_features(const FeatureSequence& s_win, const FeatureSequence& l_win,
                           const FeatureSequence& g_win, const ModelWeights& w,
                           const ModelConfig& cfg);

// multiscale_features followed by the phase and heat heads on every frame.
std::vector<PhaseOutput> multiscale_head(const FeatureSequence& s_win, const FeatureSequence& l_win,
                                         const FeatureSequence& g_win, const ModelWeights& w,
                                         const ModelConfig& cfg);

// Frames of the window ending at `t` with length `lambda`, clipped at frame 1.
struct FrameRange {
  std::int64_t first;
  std::int64_t last;
  bool empty() const noexcept { return last < first; }
};
FrameRange current_window(std::int64_t t, std::size_t lambda);
// The clip the feedback path reads at frame t: the window ending at t - lambda.
FrameRange previous_clip(std::int64_t t, std::size_t lambda);

// Batch evaluation of the online model on frames 1..T of `e_prefix`.
// Entry t-1 is the output the model produces at frame t. When `head_features`
// is given, row t-1 receives the pre-head feature vector of frame t.
std::vector<PhaseOutput> lovit_forward_all(const FeatureSequence& e_prefix, const ModelWeights& w,
                                           const ModelConfig& cfg, std::uint64_t seed_root,
                                           Matrix* head_features = nullptr);

// Output at the last frame of `e_prefix`.
PhaseOutput lovit_forward(const FeatureSequence& e_prefix, const ModelWeights& w,
                          const ModelConfig& cfg, std::uint64_t seed_root);

}  // namespace lovit
