#include "lovit/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "lovit/attention.hpp"
#include "lovit/rng.hpp"
#include "lovit/streaming.hpp"
#include "lovit/synth.hpp"

namespace lovit::verify {

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t key) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = 4.0 * rng::uniform_real(key, i) - 2.0;
  return m;
}

struct AttentionCase {
  Matrix q, k, v;
  AttentionConfig cfg;
};

// L <= 64, widths <= 32. Causal cases either share q/k length or place the
// queries at the end of a longer key range.
AttentionCase random_case(std::uint64_t seed, std::size_t index) {
  const std::uint64_t key = rng::derive(seed, index);
  std::uint64_t n = 0;
  auto draw = [&](std::uint64_t lo, std::uint64_t hi) { return lo + rng::uniform_index(key, n++, hi - lo + 1); };
  AttentionCase c;
  const std::size_t heads = draw(1, 4);
  const std::size_t width = heads * draw(1, 32 / heads);
  const std::size_t lq = draw(1, 64);
  c.cfg = {width, heads, draw(0, 1) == 1, 0};
  std::size_t lk = lq;
  if (draw(0, 1) == 1) {
    lk = c.cfg.causal ? draw(lq, 64) : draw(1, 64);
    if (c.cfg.causal) c.cfg.causal_offset = static_cast<std::int64_t>(lk - lq);
  }
  c.q = random_matrix(lq, width, rng::derive(key, 100));
  c.k = random_matrix(lk, width, rng::derive(key, 101));
  c.v = random_matrix(lk, width, rng::derive(key, 102));
  return c;
}

oracle::Mask mask_of(const AttentionConfig& cfg) { return {cfg.causal, cfg.causal_offset}; }

FeatureSequence random_stream(const ModelConfig& cfg, std::size_t frames, std::uint64_t seed) {
  SynthSpec spec;
  spec.seed = seed;
  spec.frames = std::max(frames, cfg.num_phases);
  spec.num_phases = cfg.num_phases;
  spec.feature_dim = cfg.feature_dim;
  Matrix f = synth_gen(spec).features;
  return {Role::e, 1, f.slice_rows(0, frames)};
}

double output_diff(const PhaseOutput& a, const oracle::OraclePhaseOutput& b) {
  if (a.frame != b.frame || a.predicted_phase != b.predicted_phase || a.logits.size() != b.logits.size())
    return std::numeric_limits<double>::infinity();
  double d = std::max(std::abs(a.heat - b.heat), std::abs(a.confidence - b.confidence));
  for (std::size_t i = 0; i < a.logits.size(); ++i) d = std::max(d, std::abs(a.logits[i] - b.logits[i]));
  return d;
}

// Bitwise comparison; any difference is reported as infinite.
double exact_diff(const PhaseOutput& a, const PhaseOutput& b) {
  return a == b ? 0.0 : std::numeric_limits<double>::infinity();
}

}  // namespace

OracleReport dense_vs_naive(std::size_t instances, std::uint64_t seed) {
  double worst = 0.0;
  for (std::size_t i = 0; i < instances; ++i) {
    const auto c = random_case(seed, i);
    const Matrix fast = dense_attention(c.q, c.k, c.v, c.cfg);
    const Matrix slow = oracle::naive_attention(c.q, c.k, c.v, c.cfg.num_heads, mask_of(c.cfg));
    worst = std::max(worst, max_abs_diff(fast, slow));
  }
  return oracle::make_report("dense_attention_vs_naive", worst, 1e-9);
}

OracleReport probsparse_degenerate(std::size_t instances, std::uint64_t seed) {
  double worst = 0.0;
  for (std::size_t i = 0; i < instances; ++i) {
    const auto c = random_case(seed, i);
    const Matrix sparse = probsparse_attention(c.q, c.k, c.v, c.cfg, SparseConfig::degenerate(seed + i));
    worst = std::max(worst, max_abs_diff(sparse, dense_attention(c.q, c.k, c.v, c.cfg)));
  }
  return oracle::make_report("probsparse_degenerate_vs_dense", worst, 1e-9);
}

OracleReport topu_vs_exhaustive(std::size_t instances, std::uint64_t seed) {
  double mismatches = 0.0;
  for (std::size_t i = 0; i < instances; ++i) {
    auto c = random_case(seed, i);
    c.cfg.num_heads = 1;
    const std::size_t u = 1 + rng::uniform_index(rng::derive(seed, i, 7), 0, c.q.rows());
    const auto lists = sample_keys(c.q.rows(), c.k.rows(), c.cfg, SparseConfig::degenerate(), 0);
    const auto chosen = select_top_queries(sparsity_measure(c.q, c.k, lists, c.q.cols()), u);
    const auto rank = oracle::exhaustive_sparsity_rank(c.q, c.k, c.q.cols(), mask_of(c.cfg));
    for (std::size_t n = 0; n < u; ++n) mismatches += chosen.at(n) != rank.order.at(n);
  }
  return oracle::make_report("topu_vs_exhaustive_rank", mismatches, 0.0);
}

OracleReport probsparse_vs_naive(std::size_t instances, std::uint64_t seed) {
  double worst = 0.0;
  for (std::size_t i = 0; i < instances; ++i) {
    const auto c = random_case(seed, i);
    const SparseConfig sp{5.0, 1.0, rng::derive(seed, i, 9)};
    const Matrix fast = probsparse_attention(c.q, c.k, c.v, c.cfg, sp);
    const Matrix slow = oracle::naive_probsparse(c.q, c.k, c.v, c.cfg.num_heads, mask_of(c.cfg), sp);
    worst = std::max(worst, max_abs_diff(fast, slow));
  }
  return oracle::make_report("probsparse_vs_naive", worst, 0.0);
}

OracleReport model_vs_straightline(const ModelConfig& base, std::size_t frames, bool sparse,
                                   std::uint64_t seed) {
  ModelConfig cfg = base;
  if (!sparse) cfg.global_sparse = SparseConfig::degenerate();
  const WeightStore store = synth_weights(cfg, seed);
  const ModelWeights w = ModelWeights::load(store, cfg);
  const FeatureSequence e = random_stream(cfg, frames, seed);
  const auto fast = lovit_forward_all(e, w, cfg, seed);
  const auto slow = oracle::straightline_lovit(e.rows, store, cfg, seed);
  double worst = fast.size() == slow.size() ? 0.0 : std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < std::min(fast.size(), slow.size()); ++t) {
    worst = std::max(worst, output_diff(fast[t], slow[t]));
  }
  return oracle::make_report(sparse ? "model_vs_straightline_sparse" : "model_vs_straightline_dense",
                             worst, sparse ? 0.0 : 1e-9);
}

OracleReport streaming_vs_batch(const ModelConfig& cfg, std::size_t streams, std::size_t frames,
                                bool with_checkpoint, std::uint64_t seed) {
  const WeightStore store = synth_weights(cfg, seed);
  const StreamEngine engine(store, cfg);
  double worst = 0.0;
  for (std::size_t s = 0; s < streams; ++s) {
    const std::uint64_t stream_seed = rng::derive(seed, s);
    const FeatureSequence e = random_stream(cfg, frames, stream_seed);
    const auto batch = lovit_forward_all(e, engine.weights(), cfg, stream_seed);
    StreamState state = engine.init_stream(stream_seed);
    for (std::size_t t = 0; t < frames; ++t) {
      if (with_checkpoint && t == frames / 2) state = restore(checkpoint(state));
      const PhaseOutput out = engine.push_frame(state, e.rows.row(t));
      worst = std::max(worst, exact_diff(out, batch[t]));
    }
  }
  return oracle::make_report(with_checkpoint ? "streaming_vs_batch_checkpoint" : "streaming_vs_batch",
                             worst, 0.0);
}

std::vector<OracleReport> run_all() {
  const ModelConfig toy = ModelConfig::toy();
  return {dense_vs_naive(),
          probsparse_degenerate(),
          topu_vs_exhaustive(),
          probsparse_vs_naive(),
          model_vs_straightline(toy, 150, false),
          model_vs_straightline(toy, 150, true),
          streaming_vs_batch(toy, 3, 120, false),
          streaming_vs_batch(toy, 3, 120, true)};
}

std::string format(const OracleReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s %s max_abs_diff=%.3e tolerance=%.1e", r.pass ? "PASS" : "FAIL",
                r.case_id.c_str(), r.max_abs_diff, r.tolerance);
  return buf;
}

}  // namespace lovit::verify
