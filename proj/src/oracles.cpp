#include "lovit/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "lovit/rng.hpp"

namespace lovit::oracle {

OracleReport make_report(std::string case_id, double max_abs_diff, double tolerance) {
  return {std::move(case_id), max_abs_diff, tolerance,
          std::isfinite(max_abs_diff) && max_abs_diff <= tolerance};
}

namespace {

using Row = std::vector<double>;
using Rows = std::vector<Row>;

Rows to_rows(const Matrix& m) {
  Rows out(m.rows(), Row(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

Matrix to_matrix(const Rows& r, std::size_t cols) {
  Matrix m(r.size(), cols);
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = r[i][j];
  return m;
}

std::size_t visible(std::size_t i, std::size_t key_len, Mask mask) {
  if (!mask.causal) return key_len;
  const std::int64_t lim = static_cast<std::int64_t>(i) + mask.offset + 1;
  if (lim <= 0) throw std::invalid_argument("oracle: query without visible keys");
  return std::min<std::size_t>(key_len, static_cast<std::size_t>(lim));
}

double head_dot(const Row& a, const Row& b, std::size_t off, std::size_t width) {
  double s = 0.0;
  for (std::size_t d = 0; d < width; ++d) s += a[off + d] * b[off + d];
  return s;
}

// Exact attention of query i in one head, written into out[i].
void exact_row(const Rows& q, const Rows& k, const Rows& v, std::size_t i, std::size_t limit,
               std::size_t qo, std::size_t hd, std::size_t vo, std::size_t vw, Row& out) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  Row w(limit);
  for (std::size_t j = 0; j < limit; ++j) w[j] = head_dot(q[i], k[j], qo, hd) * scale;
  const double peak = *std::max_element(w.begin(), w.end());
  double z = 0.0;
  for (double& x : w) {
    x = std::exp(x - peak);
    z += x;
  }
  for (std::size_t c = 0; c < vw; ++c) {
    double acc = 0.0;
    for (std::size_t j = 0; j < limit; ++j) acc += (w[j] * (1.0 / z)) * v[j][vo + c];
    out[vo + c] = acc;
  }
}

void check_heads(const Matrix& q, const Matrix& v, std::size_t num_heads) {
  if (num_heads == 0 || q.cols() % num_heads || v.cols() % num_heads) {
    throw std::invalid_argument("oracle: widths not divisible by head count");
  }
}

}  // namespace

Matrix naive_attention(const Matrix& q, const Matrix& k, const Matrix& v, std::size_t num_heads,
                       Mask mask) {
  check_heads(q, v, num_heads);
  const Rows Q = to_rows(q), K = to_rows(k), V = to_rows(v);
  const std::size_t hd = q.cols() / num_heads, vw = v.cols() / num_heads;
  Rows out(Q.size(), Row(v.cols(), 0.0));
  for (std::size_t h = 0; h < num_heads; ++h)
    for (std::size_t i = 0; i < Q.size(); ++i)
      exact_row(Q, K, V, i, visible(i, K.size(), mask), h * hd, hd, h * vw, vw, out[i]);
  return to_matrix(out, v.cols());
}

SparsityRank exhaustive_sparsity_rank(const Matrix& q, const Matrix& k, std::size_t d_k, Mask mask) {
  const Rows Q = to_rows(q), K = to_rows(k);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_k));
  SparsityRank r;
  for (std::size_t i = 0; i < Q.size(); ++i) {
    const std::size_t limit = visible(i, K.size(), mask);
    double peak = -std::numeric_limits<double>::infinity(), sum = 0.0;
    for (std::size_t j = 0; j < limit; ++j) {
      const double s = head_dot(Q[i], K[j], 0, q.cols()) * scale;
      peak = std::max(peak, s);
      sum += s;
    }
    r.scores.push_back(std::max(0.0, peak - sum / static_cast<double>(limit)));
    r.order.push_back(i);
  }
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](std::size_t a, std::size_t b) { return r.scores[a] > r.scores[b]; });
  return r;
}

Matrix naive_probsparse(const Matrix& q, const Matrix& k, const Matrix& v, std::size_t num_heads,
                        Mask mask, const SparseConfig& sp) {
  check_heads(q, v, num_heads);
  const Rows Q = to_rows(q), K = to_rows(k), V = to_rows(v);
  const std::size_t hd = q.cols() / num_heads, vw = v.cols() / num_heads;
  const std::size_t u = sp.top_u(Q.size());
  const std::size_t count = sp.samples_per_query(Q.size(), K.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  Rows out(Q.size(), Row(v.cols(), 0.0));
  for (std::size_t h = 0; h < num_heads; ++h) {
    std::vector<double> score(Q.size());
    for (std::size_t i = 0; i < Q.size(); ++i) {
      const std::size_t limit = visible(i, K.size(), mask);
      std::vector<std::size_t> keys;
      if (count >= limit) {
        for (std::size_t j = 0; j < limit; ++j) keys.push_back(j);
      } else {
        const std::uint64_t key = rng::derive(sp.seed, h, i);
        for (std::size_t r = 0; r < count; ++r) keys.push_back(rng::uniform_index(key, r, limit));
      }
      double peak = -std::numeric_limits<double>::infinity(), sum = 0.0;
      for (std::size_t j : keys) {
        const double s = head_dot(Q[i], K[j], h * hd, hd) * scale;
        peak = std::max(peak, s);
        sum += s;
      }
      score[i] = std::max(0.0, peak - sum / static_cast<double>(keys.size()));
    }
    std::vector<std::size_t> order(Q.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    std::vector<bool> active(Q.size(), false);
    for (std::size_t n = 0; n < std::min(u, order.size()); ++n) active[order[n]] = true;

    for (std::size_t i = 0; i < Q.size(); ++i) {
      const std::size_t limit = visible(i, K.size(), mask);
      if (active[i]) {
        exact_row(Q, K, V, i, limit, h * hd, hd, h * vw, vw, out[i]);
        continue;
      }
      for (std::size_t c = 0; c < vw; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < limit; ++j) acc += V[j][h * vw + c];
        out[i][h * vw + c] = acc * (1.0 / static_cast<double>(limit));
      }
    }
  }
  return to_matrix(out, v.cols());
}

namespace {

// Raw-tensor model evaluation. Every sequence carries its first absolute frame.
struct Seq {
  Rows rows;
  std::int64_t start = 0;
};

class Model {
 public:
  Model(const WeightStore& store, const ModelConfig& cfg) : store_(store), cfg_(cfg) {}

  Rows linear(const std::string& name, const Rows& x) const {
    const Tensor& w = store_.at(name + ".weight");
    const Tensor& b = store_.at(name + ".bias");
    const std::size_t out = w.shape.at(0), in = w.shape.at(1);
    Rows y(x.size(), Row(out));
    for (std::size_t r = 0; r < x.size(); ++r) {
      if (x[r].size() != in) throw std::invalid_argument("oracle: width mismatch at " + name);
      for (std::size_t o = 0; o < out; ++o) {
        double acc = 0.0;
        for (std::size_t i = 0; i < in; ++i) acc += x[r][i] * w.values[o * in + i];
        y[r][o] = acc + b.values[o];
      }
    }
    return y;
  }

  Rows norm(const std::string& name, const Rows& x) const {
    const auto& g = store_.at(name + ".gain").values;
    const auto& s = store_.at(name + ".shift").values;
    Rows y = x;
    for (auto& row : y) {
      const double n = static_cast<double>(row.size());
      double mean = 0.0;
      for (double v : row) mean += v;
      mean /= n;
      double var = 0.0;
      for (double v : row) var += (v - mean) * (v - mean);
      var /= n;
      const double inv = 1.0 / std::sqrt(var + cfg_.norm_eps);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - mean) * inv * g[c] + s[c];
    }
    return y;
  }

  static void add(Rows& a, const Rows& b) {
    for (std::size_t r = 0; r < a.size(); ++r)
      for (std::size_t c = 0; c < a[r].size(); ++c) a[r][c] += b[r][c];
  }

  static void add_positions(Rows& x, std::int64_t start) {
    const double dim = static_cast<double>(x.empty() ? 0 : x[0].size());
    for (std::size_t r = 0; r < x.size(); ++r) {
      const double pos = static_cast<double>(start + static_cast<std::int64_t>(r));
      for (std::size_t c = 0; c < x[r].size(); ++c) {
        const double angle = pos / std::pow(10000.0, static_cast<double>(c / 2 * 2) / dim);
        x[r][c] += (c % 2 == 0) ? std::sin(angle) : std::cos(angle);
      }
    }
  }

  Rows attention(const std::string& name, const Rows& qsrc, const Rows& kvsrc, std::size_t heads,
                 Mask mask, const SparseConfig* sp) const {
    const Rows q = linear(name + ".q", qsrc), k = linear(name + ".k", kvsrc),
               v = linear(name + ".v", kvsrc);
    const std::size_t w = q[0].size();
    const Matrix qm = to_matrix(q, w), km = to_matrix(k, w), vm = to_matrix(v, v[0].size());
    const Matrix mixed = sp ? naive_probsparse(qm, km, vm, heads, mask, *sp)
                            : naive_attention(qm, km, vm, heads, mask);
    return linear(name + ".o", to_rows(mixed));
  }

  Rows ff(const std::string& name, const Rows& x) const {
    Rows h = linear(name + ".up", x);
    for (auto& row : h)
      for (double& v : row) v = 0.5 * v * (1.0 + std::tanh(0.7978845608028654 * (v + 0.044715 * v * v * v)));
    return linear(name + ".down", h);
  }

  Rows fusion(Block b, const Seq& aux, const Seq& main, std::uint64_t sparse_seed = 0) const {
    const BlockSpec spec = cfg_.block(b);
    const FusionConfig& f = spec.fusion;
    const std::string& p = spec.prefix;
    auto enter = [&](const Seq& s, std::size_t in_dim, const char* proj) {
      Rows h = in_dim != f.model_dim ? linear(p + proj, s.rows) : s.rows;
      add_positions(h, s.start);
      return h;
    };
    Rows enc = enter(aux, spec.aux_in_dim, ".aux_proj");
    Rows dec = enter(main, spec.main_in_dim, ".main_proj");
    const Mask self{f.causal, 0};
    const Mask cross{f.causal, main.start - aux.start};
    for (std::size_t i = 0; i < f.encoder_layers; ++i) {
      const std::string l = p + ".enc." + std::to_string(i);
      SparseConfig sp = f.sparse;
      sp.seed = rng::derive(sparse_seed, i);
      const bool sparse = f.encoder_attention == EncoderAttention::probsparse;
      add(enc, attention(l + ".attn", norm(l + ".norm1", enc), norm(l + ".norm1", enc), f.num_heads,
                         self, sparse ? &sp : nullptr));
      add(enc, ff(l + ".ff", norm(l + ".norm2", enc)));
    }
    enc = norm(p + ".enc_norm", enc);
    for (std::size_t i = 0; i < f.decoder_layers; ++i) {
      const std::string l = p + ".dec." + std::to_string(i);
      const Rows n1 = norm(l + ".norm1", dec);
      add(dec, attention(l + ".self", n1, n1, f.num_heads, self, nullptr));
      add(dec, attention(l + ".cross", norm(l + ".norm2", dec), enc, f.num_heads, cross, nullptr));
      add(dec, ff(l + ".ff", norm(l + ".norm3", dec)));
    }
    return norm(p + ".dec_norm", dec);
  }

 private:
  const WeightStore& store_;
  const ModelConfig& cfg_;
};

Seq window(const Rows& history, std::int64_t first, std::int64_t last) {
  Seq s;
  s.start = first;
  for (std::int64_t f = first; f <= last; ++f) s.rows.push_back(history[static_cast<std::size_t>(f - 1)]);
  return s;
}

// Output of the clip before the current window, or one zero row at frame 0.
Seq previous(const Rows& history, std::int64_t t, std::int64_t lambda, std::size_t dim) {
  const std::int64_t last = t - lambda;
  if (last < 1) return {Rows{Row(dim, 0.0)}, 0};
  return window(history, std::max<std::int64_t>(1, last - lambda + 1), last);
}

}  // namespace

std::vector<OraclePhaseOutput> straightline_lovit(const Matrix& e_prefix, const WeightStore& weights,
                                                  const ModelConfig& cfg, std::uint64_t seed_root) {
  cfg.validate();
  validate_weights(weights, cfg);
  if (e_prefix.rows() == 0 || e_prefix.cols() != cfg.feature_dim) {
    throw std::invalid_argument("straightline_lovit: bad feature prefix");
  }
  const Model m(weights, cfg);
  const auto l1 = static_cast<std::int64_t>(cfg.lambda1);
  const auto l2 = static_cast<std::int64_t>(cfg.lambda2);
  const Rows e = to_rows(e_prefix);
  Rows s_hist, l_hist;
  std::vector<OraclePhaseOutput> outputs;
  for (std::int64_t t = 1; t <= static_cast<std::int64_t>(e.size()); ++t) {
    const std::int64_t a1 = std::max<std::int64_t>(1, t - l1 + 1);
    const std::int64_t a2 = std::max<std::int64_t>(1, t - l2 + 1);

    const Seq e_win = window(e, a1, t);
    const Seq s_first{m.fusion(Block::ls0, previous(s_hist, t, l1, cfg.dim_s), e_win), a1};
    s_hist.push_back(m.fusion(Block::ls1, s_first, e_win).back());

    const Seq s_long = window(s_hist, a2, t);
    const Seq l_first{m.fusion(Block::ll0, previous(l_hist, t, l2, cfg.dim_l), s_long), a2};
    l_hist.push_back(m.fusion(Block::ll1, l_first, s_long).back());

    const Seq l_all{l_hist, 1};
    const Seq l_win = window(l_hist, a1, t);
    const Seq g_win{m.fusion(Block::global, l_all, l_win, rng::derive(seed_root, static_cast<std::uint64_t>(t))), a1};
    const Seq local{m.fusion(Block::head_local, l_win, window(s_hist, a1, t)), a1};
    const Rows fused = m.fusion(Block::head_global, g_win, local);

    const Rows last{fused.back()};
    OraclePhaseOutput o;
    o.frame = t;
    o.logits = m.linear("out.phase", last)[0];
    const double heat_logit = m.linear("out.heat", last)[0][0];
    o.heat = 1.0 / (1.0 + std::exp(-heat_logit));
    o.predicted_phase = static_cast<std::size_t>(
        std::max_element(o.logits.begin(), o.logits.end()) - o.logits.begin());
    const double top = o.logits[o.predicted_phase];
    double z = 0.0;
    for (double v : o.logits) z += std::exp(v - top);
    o.confidence = 1.0 / z;
    outputs.push_back(std::move(o));
  }
  return outputs;
}

}  // namespace lovit::oracle
