#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lovit/config.hpp"
#include "lovit/matrix.hpp"
#include "lovit/numeric.hpp"

namespace lovit {

struct AttentionWeights {
  LinearLayer query;
  LinearLayer key;
  LinearLayer value;
  LinearLayer output;
};

// Softmax(Q K^T / sqrt(d_k)) V on already-projected q, k, v. Heads are column
// slices of width model_dim / num_heads; per-head results are concatenated.
Matrix dense_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                       const AttentionConfig& cfg);

// Max-minus-mean of scaled logits q_i . k_j / sqrt(d_k) over each query's sampled keys.
std::vector<double> sparsity_measure(const Matrix& q, const Matrix& k,
                                     const std::vector<std::vector<std::size_t>>& sampled_key_idx,
                                     std::size_t d_k);

// Key sample lists for one head. Query i draws from its visible keys
// [0, limit_i); if the requested count reaches limit_i the full range is used.
std::vector<std::vector<std::size_t>> sample_keys(std::size_t query_len, std::size_t key_len,
                                                  const AttentionConfig& cfg,
                                                  const SparseConfig& sp, std::size_t head);

// Indices of the u highest scores, highest first; ties go to the lower index.
std::vector<std::size_t> select_top_queries(const std::vector<double>& scores, std::size_t u);

// Top-u queries get exact attention; the rest output the mean of their visible
// values (all of v, or the running prefix under causal masking).
Matrix probsparse_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                            const AttentionConfig& cfg, const SparseConfig& sp);

// Total sampled dot-product pairs floor(L_K ln L_Q).
std::uint64_t sampled_pair_budget(std::size_t query_len, std::size_t key_len);

// Projected multi-head attention. `sparse` switches the core to ProbSparse.
Matrix self_attention(const Matrix& x, const AttentionWeights& w, const AttentionConfig& cfg,
                      const SparseConfig* sparse = nullptr);
Matrix cross_attention(const Matrix& q_src, const Matrix& kv_src, const AttentionWeights& w,
                       const AttentionConfig& cfg);

}  // namespace lovit
