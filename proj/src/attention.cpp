#include "lovit/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "lovit/rng.hpp"

namespace lovit {

namespace {

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

std::size_t key_limit(std::size_t row, std::size_t key_len, const AttentionConfig& cfg) {
  if (!cfg.causal) return key_len;
  const std::int64_t lim = static_cast<std::int64_t>(row) + cfg.causal_offset + 1;
  if (lim <= 0) {
    throw std::invalid_argument("causal attention: query row " + std::to_string(row) +
                                " has no visible keys");
  }
  return std::min<std::size_t>(key_len, static_cast<std::size_t>(lim));
}

void check_inputs(const Matrix& q, const Matrix& k, const Matrix& v, const AttentionConfig& cfg) {
  cfg.validate();
  if (q.empty() || k.empty() || v.empty()) throw std::invalid_argument("attention: empty input");
  if (q.cols() != k.cols()) {
    throw std::invalid_argument("attention: q " + dims(q) + " and k " + dims(k) +
                                " disagree on width");
  }
  if (q.cols() != cfg.model_dim) {
    throw std::invalid_argument("attention: q width " + std::to_string(q.cols()) +
                                " != model_dim " + std::to_string(cfg.model_dim));
  }
  if (k.rows() != v.rows()) {
    throw std::invalid_argument("attention: k " + dims(k) + " and v " + dims(v) +
                                " disagree on length");
  }
  if (v.cols() % cfg.num_heads != 0) {
    throw std::invalid_argument("attention: v width " + std::to_string(v.cols()) +
                                " not divisible by " + std::to_string(cfg.num_heads) + " heads");
  }
  if (cfg.causal && cfg.causal_offset == 0 && q.rows() != k.rows()) {
    throw std::invalid_argument("causal self-attention needs q.rows == k.rows, got " +
                                std::to_string(q.rows()) + " vs " + std::to_string(k.rows()));
  }
}

// Key columns of one head, transposed to (head_dim x L_K).
Matrix head_keys_t(const Matrix& k, std::size_t offset, std::size_t width) {
  Matrix kt(width, k.rows());
  for (std::size_t j = 0; j < k.rows(); ++j) {
    auto row = k.row(j);
    for (std::size_t d = 0; d < width; ++d) kt(d, j) = row[offset + d];
  }
  return kt;
}

struct HeadView {
  std::size_t q_off;
  std::size_t v_off;
  std::size_t v_width;
  double scale;
};

// Exact softmax attention of query `row` of one head, written into out[row].
void attend_row(const Matrix& q, const Matrix& kt, const Matrix& v, const HeadView& h,
                std::size_t row, std::size_t limit, std::vector<double>& logits, Matrix& out) {
  logits.assign(limit, 0.0);
  const double* qrow = q.row(row).data() + h.q_off;
  for (std::size_t d = 0; d < kt.rows(); ++d) {
    const double s = qrow[d];
    const double* krow = kt.row(d).data();
    for (std::size_t j = 0; j < limit; ++j) logits[j] += s * krow[j];
  }
  for (double& l : logits) l *= h.scale;
  softmax_inplace(logits);
  double* dst = out.row(row).data() + h.v_off;
  for (std::size_t j = 0; j < limit; ++j) {
    const double p = logits[j];
    const double* vrow = v.row(j).data() + h.v_off;
    for (std::size_t c = 0; c < h.v_width; ++c) dst[c] += p * vrow[c];
  }
}

}  // namespace

std::uint64_t sampled_pair_budget(std::size_t query_len, std::size_t key_len) {
  return static_cast<std::uint64_t>(
      std::floor(static_cast<double>(key_len) * std::log(static_cast<double>(query_len))));
}

Matrix dense_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                       const AttentionConfig& cfg) {
  check_inputs(q, k, v, cfg);
  const std::size_t hd = cfg.head_dim();
  const std::size_t vw = v.cols() / cfg.num_heads;
  Matrix out(q.rows(), v.cols());
  std::vector<double> logits;
  for (std::size_t h = 0; h < cfg.num_heads; ++h) {
    const Matrix kt = head_keys_t(k, h * hd, hd);
    const HeadView view{h * hd, h * vw, vw, 1.0 / std::sqrt(static_cast<double>(hd))};
    for (std::size_t i = 0; i < q.rows(); ++i) {
      attend_row(q, kt, v, view, i, key_limit(i, k.rows(), cfg), logits, out);
    }
  }
  return out;
}

std::vector<double> sparsity_measure(const Matrix& q, const Matrix& k,
                                     const std::vector<std::vector<std::size_t>>& sampled_key_idx,
                                     std::size_t d_k) {
  if (sampled_key_idx.size() != q.rows()) {
    throw std::invalid_argument("sparsity_measure: " + std::to_string(sampled_key_idx.size()) +
                                " sample lists for " + std::to_string(q.rows()) + " queries");
  }
  if (q.cols() != k.cols()) throw std::invalid_argument("sparsity_measure: q/k width mismatch");
  if (d_k == 0) throw std::invalid_argument("sparsity_measure: d_k must be >= 1");
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_k));
  std::vector<double> scores(q.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    const auto& idx = sampled_key_idx[i];
    if (idx.empty()) {
      throw std::invalid_argument("sparsity_measure: empty sample list for query " +
                                  std::to_string(i));
    }
    auto qrow = q.row(i);
    double peak = -std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (std::size_t j : idx) {
      if (j >= k.rows()) throw std::out_of_range("sparsity_measure: key index out of range");
      auto krow = k.row(j);
      double dot = 0.0;
      for (std::size_t d = 0; d < qrow.size(); ++d) dot += qrow[d] * krow[d];
      dot *= scale;
      peak = std::max(peak, dot);
      total += dot;
    }
    // Clamp the rounding residue so max >= mean holds exactly.
    scores[i] = std::max(0.0, peak - total / static_cast<double>(idx.size()));
  }
  return scores;
}

std::vector<std::vector<std::size_t>> sample_keys(std::size_t query_len, std::size_t key_len,
                                                  const AttentionConfig& cfg,
                                                  const SparseConfig& sp, std::size_t head) {
  const std::size_t count = sp.samples_per_query(query_len, key_len);
  std::vector<std::vector<std::size_t>> lists(query_len);
  for (std::size_t i = 0; i < query_len; ++i) {
    const std::size_t limit = key_limit(i, key_len, cfg);
    auto& idx = lists[i];
    if (count >= limit) {
      idx.resize(limit);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      continue;
    }
    const std::uint64_t key = rng::derive(sp.seed, head, i);
    idx.reserve(count);
    for (std::size_t r = 0; r < count; ++r) {
      idx.push_back(static_cast<std::size_t>(rng::uniform_index(key, r, limit)));
    }
  }
  return lists;
}

std::vector<std::size_t> select_top_queries(const std::vector<double>& scores, std::size_t u) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  u = std::min(u, order.size());
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(u), order.end(),
                    better);
  order.resize(u);
  return order;
}

Matrix probsparse_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                            const AttentionConfig& cfg, const SparseConfig& sp) {
  check_inputs(q, k, v, cfg);
  sp.validate();
  const std::size_t hd = cfg.head_dim();
  const std::size_t vw = v.cols() / cfg.num_heads;
  const std::size_t u = sp.top_u(q.rows());
  Matrix out(q.rows(), v.cols());
  std::vector<double> logits;
  std::vector<char> active(q.rows());
  std::vector<double> prefix(vw);
  for (std::size_t h = 0; h < cfg.num_heads; ++h) {
    const Matrix qh = q.slice_cols(h * hd, (h + 1) * hd);
    const Matrix kh = k.slice_cols(h * hd, (h + 1) * hd);
    const auto samples = sample_keys(q.rows(), k.rows(), cfg, sp, h);
    const auto scores = sparsity_measure(qh, kh, samples, hd);
    const auto chosen = select_top_queries(scores, u);

    const Matrix kt = head_keys_t(k, h * hd, hd);
    const HeadView view{h * hd, h * vw, vw, 1.0 / std::sqrt(static_cast<double>(hd))};
    std::fill(active.begin(), active.end(), 0);
    for (std::size_t i : chosen) {
      active[i] = 1;
      attend_row(q, kt, v, view, i, key_limit(i, k.rows(), cfg), logits, out);
    }

    // Lazy rows: mean of visible values. Limits are non-decreasing in the row
    // index, so one running sum over v serves every row.
    std::fill(prefix.begin(), prefix.end(), 0.0);
    std::size_t summed = 0;
    for (std::size_t i = 0; i < q.rows(); ++i) {
      if (active[i]) continue;
      const std::size_t limit = key_limit(i, k.rows(), cfg);
      for (; summed < limit; ++summed) {
        const double* vrow = v.row(summed).data() + view.v_off;
        for (std::size_t c = 0; c < vw; ++c) prefix[c] += vrow[c];
      }
      const double inv = 1.0 / static_cast<double>(limit);
      double* dst = out.row(i).data() + view.v_off;
      for (std::size_t c = 0; c < vw; ++c) dst[c] = prefix[c] * inv;
    }
  }
  return out;
}

namespace {
AttentionConfig projected_config(const AttentionConfig& cfg, const AttentionWeights& w) {
  AttentionConfig c = cfg;
  c.model_dim = w.query.out_dim();
  return c;
}
}  // namespace

Matrix self_attention(const Matrix& x, const AttentionWeights& w, const AttentionConfig& cfg,
                      const SparseConfig* sparse) {
  const Matrix q = linear_apply(w.query, x);
  const Matrix k = linear_apply(w.key, x);
  const Matrix v = linear_apply(w.value, x);
  const AttentionConfig c = projected_config(cfg, w);
  const Matrix mixed = sparse ? probsparse_attention(q, k, v, c, *sparse) : dense_attention(q, k, v, c);
  return linear_apply(w.output, mixed);
}

Matrix cross_attention(const Matrix& q_src, const Matrix& kv_src, const AttentionWeights& w,
                       const AttentionConfig& cfg) {
  const Matrix q = linear_apply(w.query, q_src);
  const Matrix k = linear_apply(w.key, kv_src);
  const Matrix v = linear_apply(w.value, kv_src);
  return linear_apply(w.output, dense_attention(q, k, v, projected_config(cfg, w)));
}

}  // namespace lovit
