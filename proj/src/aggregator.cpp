#include "lovit/aggregator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "lovit/rng.hpp"

namespace lovit {

ModelWeights ModelWeights::load(const WeightStore& store, const ModelConfig& cfg) {
  cfg.validate();
  validate_weights(store, cfg);
  auto linear = [&](const std::string& name) {
    return LinearLayer(store.matrix(name + ".weight"), store.vector(name + ".bias"));
  };
  auto blk = [&](Block b) { return BlockWeights::load(store, cfg.block(b)); };
  return {blk(Block::ls0),        blk(Block::ls1),         blk(Block::ll0),
          blk(Block::ll1),        blk(Block::global),      blk(Block::head_local),
          blk(Block::head_global), linear(names::kPhaseHead), linear(names::kHeatHead)};
}

const BlockWeights& ModelWeights::block(Block b) const {
  switch (b) {
    case Block::ls0: return ls0;
    case Block::ls1: return ls1;
    case Block::ll0: return ll0;
    case Block::ll1: return ll1;
    case Block::global: return global;
    case Block::head_local: return head_local;
    case Block::head_global: return head_global;
  }
  throw std::logic_error("unknown block");
}

PhaseOutput make_phase_output(std::int64_t frame, Vector logits, double heat_logit) {
  if (logits.empty()) throw std::invalid_argument("phase output: no logits");
  std::size_t best = 0;
  for (std::size_t k = 1; k < logits.size(); ++k) {
    if (logits[k] > logits[best]) best = k;
  }
  double total = 0.0;
  for (double l : logits) total += std::exp(l - logits[best]);
  PhaseOutput out;
  out.frame = frame;
  out.logits = std::move(logits);
  out.heat = 1.0 / (1.0 + std::exp(-heat_logit));
  out.predicted_phase = best;
  out.confidence = 1.0 / total;
  return out;
}

namespace {

void require_dim(const FeatureSequence& seq, std::size_t dim, const char* what) {
  if (seq.dim() != dim) {
    throw std::invalid_argument(std::string(what) + ": role " + to_string(seq.role) + " width " +
                                std::to_string(seq.dim()) + " != expected " + std::to_string(dim));
  }
}

}  // namespace

FeatureSequence l_trans_forward(const FeatureSequence& input, const FeatureSequence& prev_clip_out,
                                const ModelWeights& w, const ModelConfig& cfg) {
  Block first_block, second_block;
  Role out_role;
  std::size_t in_dim, out_dim, lambda;
  if (input.role == Role::e) {
    first_block = Block::ls0, second_block = Block::ls1, out_role = Role::s;
    in_dim = cfg.feature_dim, out_dim = cfg.dim_s, lambda = cfg.lambda1;
  } else if (input.role == Role::s) {
    first_block = Block::ll0, second_block = Block::ll1, out_role = Role::l;
    in_dim = cfg.dim_s, out_dim = cfg.dim_l, lambda = cfg.lambda2;
  } else {
    throw std::invalid_argument(std::string("l_trans_forward: input role must be e or s, got ") +
                                to_string(input.role));
  }
  require_dim(input, in_dim, "l_trans_forward input");
  if (input.length() == 0 || input.length() > lambda) {
    throw std::invalid_argument("l_trans_forward: window length " +
                                std::to_string(input.length()) + " outside [1, " +
                                std::to_string(lambda) + "]");
  }

  FeatureSequence aux = prev_clip_out;
  if (aux.length() == 0) {
    aux = FeatureSequence{out_role, 0, Matrix(1, out_dim)};
  } else {
    if (aux.role != out_role) {
      throw std::invalid_argument(std::string("l_trans_forward: previous clip has role ") +
                                  to_string(aux.role) + ", expected " + to_string(out_role));
    }
    require_dim(aux, out_dim, "l_trans_forward previous clip");
  }

  const Matrix first = fusion_forward(aux.rows, aux.start_frame, input.rows, input.start_frame,
                                      w.block(first_block), cfg.block(first_block).fusion);
  Matrix second = fusion_forward(first, input.start_frame, input.rows, input.start_frame,
                                 w.block(second_block), cfg.block(second_block).fusion);
  return {out_role, input.start_frame, std::move(second)};
}

FeatureSequence g_informer_forward(const FeatureSequence& full_l_history,
                                   const FeatureSequence& current_window, const ModelWeights& w,
                                   const ModelConfig& cfg, std::uint64_t seed_root) {
  if (full_l_history.role != Role::l || current_window.role != Role::l) {
    throw std::invalid_argument("g_informer_forward: inputs must carry role l");
  }
  require_dim(full_l_history, cfg.dim_l, "g_informer_forward history");
  require_dim(current_window, cfg.dim_l, "g_informer_forward window");
  const std::size_t expect = std::min(cfg.lambda1, full_l_history.length());
  const bool suffix =
      full_l_history.length() > 0 && current_window.length() == expect &&
      current_window.end_frame() == full_l_history.end_frame() &&
      std::equal(current_window.rows.data().begin(), current_window.rows.data().end(),
                 full_l_history.rows.data().end() -
                     static_cast<std::ptrdiff_t>(current_window.rows.size()));
  if (!suffix) {
    throw std::invalid_argument("g_informer_forward: window not suffix of history");
  }
  const std::int64_t t = full_l_history.end_frame() - 1;
  FusionConfig fusion = cfg.block(Block::global).fusion;
  fusion.sparse.seed = rng::derive(seed_root, static_cast<std::uint64_t>(t));
  Matrix g = fusion_forward(full_l_history.rows, full_l_history.start_frame, current_window.rows,
                            current_window.start_frame, w.global, fusion);
  return {Role::g, current_window.start_frame, std::move(g)};
}

Matrix multiscale_features(const FeatureSequence& s_win, const FeatureSequence& l_win,
                           const FeatureSequence& g_win, const ModelWeights& w,
                           const ModelConfig& cfg) {
  if (s_win.role != Role::s || l_win.role != Role::l || g_win.role != Role::g) {
    throw std::invalid_argument("multiscale_head: expected s, l, g windows");
  }
  require_dim(s_win, cfg.dim_s, "multiscale_head");
  require_dim(l_win, cfg.dim_l, "multiscale_head");
  require_dim(g_win, cfg.dim_g, "multiscale_head");
  if (s_win.start_frame != l_win.start_frame || s_win.start_frame != g_win.start_frame ||
      s_win.length() != l_win.length() || s_win.length() != g_win.length()) {
    throw std::invalid_argument("multiscale_head: misaligned windows");
  }
  if (s_win.length() == 0 || s_win.length() > cfg.lambda1) {
    throw std::invalid_argument("multiscale_head: window length must be in [1, lambda1]");
  }
  const std::int64_t start = s_win.start_frame;
  const Matrix local = fusion_forward(l_win.rows, start, s_win.rows, start, w.head_local,
                                      cfg.block(Block::head_local).fusion);
  return fusion_forward(g_win.rows, start, local, start, w.head_global,
                        cfg.block(Block::head_global).fusion);
}

std::vector<PhaseOutput> multiscale_head(const FeatureSequence& s_win, const FeatureSequence& l_win,
                                         const FeatureSequence& g_win, const ModelWeights& w,
                                         const ModelConfig& cfg) {
  const Matrix fused = multiscale_features(s_win, l_win, g_win, w, cfg);
  const std::int64_t start = s_win.start_frame;
  const Matrix logits = linear_apply(w.phase_head, fused);
  const Matrix heat = linear_apply(w.heat_head, fused);
  std::vector<PhaseOutput> out;
  out.reserve(fused.rows());
  for (std::size_t r = 0; r < fused.rows(); ++r) {
    auto row = logits.row(r);
    out.push_back(make_phase_output(start + static_cast<std::int64_t>(r),
                                    Vector(row.begin(), row.end()), heat(r, 0)));
  }
  return out;
}

FrameRange current_window(std::int64_t t, std::size_t lambda) {
  return {std::max<std::int64_t>(1, t - static_cast<std::int64_t>(lambda) + 1), t};
}

FrameRange previous_clip(std::int64_t t, std::size_t lambda) {
  const auto lam = static_cast<std::int64_t>(lambda);
  return {std::max<std::int64_t>(1, t - 2 * lam + 1), t - lam};
}

namespace {

FeatureSequence take(const FeatureSequence& history, FrameRange r) {
  if (r.empty()) return {history.role, 0, Matrix(0, history.dim())};
  return history.frames(r.first, r.last);
}

}  // namespace

std::vector<PhaseOutput> lovit_forward_all(const FeatureSequence& e_prefix, const ModelWeights& w,
                                           const ModelConfig& cfg, std::uint64_t seed_root,
                                           Matrix* head_features) {
  if (e_prefix.length() == 0) throw std::invalid_argument("lovit_forward: empty prefix");
  if (e_prefix.role != Role::e || e_prefix.start_frame != 1) {
    throw std::invalid_argument("lovit_forward: prefix must be e features starting at frame 1");
  }
  require_dim(e_prefix, cfg.feature_dim, "lovit_forward");
  const auto total = static_cast<std::int64_t>(e_prefix.length());
  FeatureSequence s_hist{Role::s, 1, Matrix(0, cfg.dim_s)};
  FeatureSequence l_hist{Role::l, 1, Matrix(0, cfg.dim_l)};
  std::vector<PhaseOutput> outputs;
  outputs.reserve(e_prefix.length());
  for (std::int64_t t = 1; t <= total; ++t) {
    const FrameRange small = current_window(t, cfg.lambda1);
    const FeatureSequence s_out = l_trans_forward(take(e_prefix, small),
                                                  take(s_hist, previous_clip(t, cfg.lambda1)), w, cfg);
    s_hist.rows.append_row(s_out.rows.row(s_out.length() - 1));

    const FeatureSequence l_out =
        l_trans_forward(take(s_hist, current_window(t, cfg.lambda2)),
                        take(l_hist, previous_clip(t, cfg.lambda2)), w, cfg);
    l_hist.rows.append_row(l_out.rows.row(l_out.length() - 1));

    const FeatureSequence l_win = take(l_hist, small);
    const FeatureSequence g_win = g_informer_forward(l_hist, l_win, w, cfg, seed_root);
    const Matrix fused = multiscale_features(take(s_hist, small), l_win, g_win, w, cfg);
    auto last = fused.slice_rows(fused.rows() - 1, fused.rows());
    if (head_features) head_features->append_row(last.row(0));
    const Matrix logits = linear_apply(w.phase_head, last);
    auto row = logits.row(0);
    outputs.push_back(
        make_phase_output(t, Vector(row.begin(), row.end()), linear_apply(w.heat_head, last)(0, 0)));
  }
  return outputs;
}

PhaseOutput lovit_forward(const FeatureSequence& e_prefix, const ModelWeights& w,
                          const ModelConfig& cfg, std::uint64_t seed_root) {
  return lovit_forward_all(e_prefix, w, cfg, seed_root).back();
}

}  // namespace lovit
