#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "lovit/attention.hpp"
#include "lovit/rng.hpp"
#include "test_util.hpp"

using namespace lovit;
using test::random_matrix;

namespace {
AttentionConfig cfg(std::size_t dim, std::size_t heads = 1, bool causal = false, std::int64_t off = 0) {
  return {dim, heads, causal, off};
}
}  // namespace

TEST(DenseAttention, SingleKeyReturnsValueRow) {
  const Matrix q = random_matrix(5, 4, 1), k = random_matrix(1, 4, 2), v = random_matrix(1, 6, 3);
  const Matrix out = dense_attention(q, k, v, cfg(4, 2));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t c = 0; c < 6; ++c) EXPECT_EQ(out(i, c), v(0, c));
}

TEST(DenseAttention, ZeroQueriesGiveColumnMean) {
  const Matrix q(3, 4), k = random_matrix(8, 4, 4), v = random_matrix(8, 4, 5);
  const Matrix out = dense_attention(q, k, v, cfg(4));
  const Vector mean = column_mean(v);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(out(i, c), mean[c], 1e-15);
}

TEST(DenseAttention, CausalRowsIgnoreFutureKeys) {
  const Matrix q = random_matrix(12, 8, 6), k = random_matrix(12, 8, 7), v = random_matrix(12, 8, 8);
  const Matrix base = dense_attention(q, k, v, cfg(8, 2, true));
  for (std::size_t t = 0; t < 12; ++t) {
    Matrix k2 = k, v2 = v;
    for (std::size_t j = t + 1; j < 12; ++j)
      for (std::size_t c = 0; c < 8; ++c) {
        k2(j, c) += 3.0;
        v2(j, c) -= 5.0;
      }
    const Matrix pert = dense_attention(q, k2, v2, cfg(8, 2, true));
    for (std::size_t i = 0; i <= t; ++i)
      for (std::size_t c = 0; c < 8; ++c) EXPECT_EQ(pert(i, c), base(i, c));
  }
}

TEST(DenseAttention, CausalOffsetWidensVisibleRange) {
  // With offset 2, query 0 sees keys 0..2: same as the first row of an
  // unmasked call restricted to those keys.
  const Matrix q = random_matrix(2, 4, 9), k = random_matrix(5, 4, 10), v = random_matrix(5, 4, 11);
  const Matrix out = dense_attention(q, k, v, cfg(4, 1, true, 2));
  const Matrix ref = dense_attention(q.slice_rows(0, 1), k.slice_rows(0, 3), v.slice_rows(0, 3), cfg(4));
  for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(out(0, c), ref(0, c));
}

TEST(DenseAttention, RejectsBadShapes) {
  const Matrix a = random_matrix(3, 4, 1);
  EXPECT_THROW(dense_attention(a, random_matrix(3, 5, 2), a, cfg(4)), std::invalid_argument);
  EXPECT_THROW(dense_attention(a, a, random_matrix(2, 4, 3), cfg(4)), std::invalid_argument);
  EXPECT_THROW(dense_attention(a, a, a, cfg(4, 3)), std::invalid_argument);
  EXPECT_THROW(dense_attention(Matrix(0, 4), a, a, cfg(4)), std::invalid_argument);
  EXPECT_THROW(dense_attention(a, random_matrix(5, 4, 2), random_matrix(5, 4, 3), cfg(4, 1, true)),
               std::invalid_argument);
  EXPECT_THROW(dense_attention(a, a, a, cfg(4, 1, true, -3)), std::invalid_argument);
}

TEST(DenseAttention, Deterministic) {
  const Matrix q = random_matrix(9, 6, 1), k = random_matrix(9, 6, 2), v = random_matrix(9, 6, 3);
  EXPECT_EQ(dense_attention(q, k, v, cfg(6, 3)), dense_attention(q, k, v, cfg(6, 3)));
}

TEST(SparsityMeasure, HandCases) {
  // q = [1], keys give scaled logits [0, 0, 3] with d_k = 1.
  const Matrix q(1, 1, {1.0}), k(3, 1, {0.0, 0.0, 3.0});
  EXPECT_DOUBLE_EQ(sparsity_measure(q, k, {{0, 1, 2}}, 1)[0], 2.0);
  const Matrix kc(3, 1, {2.0, 2.0, 2.0});
  EXPECT_EQ(sparsity_measure(q, kc, {{0, 1, 2}}, 1)[0], 0.0);
}

TEST(SparsityMeasure, NonNegativeAndValidated) {
  const Matrix q = random_matrix(20, 4, 3), k = random_matrix(20, 4, 4);
  const auto lists = sample_keys(20, 20, cfg(4), SparseConfig{}, 0);
  for (double s : sparsity_measure(q, k, lists, 4)) EXPECT_GE(s, 0.0);
  EXPECT_THROW(sparsity_measure(q.slice_rows(0, 1), k, {{}}, 4), std::invalid_argument);
  EXPECT_THROW(sparsity_measure(q.slice_rows(0, 1), k, {{25}}, 4), std::out_of_range);
  EXPECT_THROW(sparsity_measure(q, k, {{0}}, 4), std::invalid_argument);
}

TEST(SparseConfig, SizingRules) {
  const SparseConfig sp;
  EXPECT_EQ(sp.top_u(3000), 41u);
  EXPECT_EQ(sp.samples_per_query(3000, 3000), 9u);
  EXPECT_EQ(sp.top_u(1), 1u);
  EXPECT_EQ(sp.samples_per_query(1, 5), 1u);
  EXPECT_EQ(sp.top_u(3), 3u);  // ceil(5 ln 3) = 6, clamped to L_Q
  const SparseConfig all = SparseConfig::degenerate();
  EXPECT_EQ(all.top_u(77), 77u);
  EXPECT_EQ(all.samples_per_query(77, 12), 12u);
  EXPECT_EQ(sampled_pair_budget(3000, 3000), 24019u);
}

TEST(SampleKeys, DeterministicAndInVisibleRange) {
  const SparseConfig sp{5.0, 1.0, 42};
  const auto a = sample_keys(200, 200, cfg(4, 1, true), sp, 1);
  EXPECT_EQ(a, sample_keys(200, 200, cfg(4, 1, true), sp, 1));
  EXPECT_NE(a, sample_keys(200, 200, cfg(4, 1, true), sp, 2));
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_FALSE(a[i].empty());
    for (std::size_t j : a[i]) EXPECT_LE(j, i);
  }
  // Early queries with few visible keys use all of them.
  EXPECT_EQ(a[2], (std::vector<std::size_t>{0, 1, 2}));
}

TEST(TopQueries, OrderAndTieBreak) {
  EXPECT_EQ(select_top_queries({0.5, 2.0, 2.0, 1.0}, 3), (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(select_top_queries({0.0, 0.0, 0.0}, 2), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(select_top_queries({1.0}, 5).size(), 1u);
}

TEST(TopQueries, SelectedDominateUnselected) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix q = random_matrix(40, 4, s), k = random_matrix(40, 4, s + 100);
    const auto scores = sparsity_measure(q, k, sample_keys(40, 40, cfg(4), SparseConfig::degenerate(), 0), 4);
    const auto top = select_top_queries(scores, 9);
    const std::set<std::size_t> chosen(top.begin(), top.end());
    double worst_chosen = 1e300, best_other = -1.0;
    for (std::size_t i = 0; i < 40; ++i) {
      if (chosen.count(i)) worst_chosen = std::min(worst_chosen, scores[i]);
      else best_other = std::max(best_other, scores[i]);
    }
    EXPECT_GE(worst_chosen, best_other);
  }
}

TEST(ProbSparse, LargeNormQueryIsSelected) {
  Matrix q = random_matrix(30, 4, 1, 0.1);
  for (std::size_t c = 0; c < 4; ++c) q(17, c) *= 100.0;
  const Matrix k = random_matrix(30, 4, 2);
  const auto scores = sparsity_measure(q, k, sample_keys(30, 30, cfg(4), SparseConfig::degenerate(), 0), 4);
  const auto top = select_top_queries(scores, SparseConfig{}.top_u(30));
  EXPECT_NE(std::find(top.begin(), top.end(), 17u), top.end());
}

TEST(ProbSparse, DegenerateMatchesDense) {
  for (std::uint64_t s = 0; s < 25; ++s) {
    const bool causal = s % 2;
    const Matrix q = random_matrix(13, 8, s), k = random_matrix(13, 8, s + 50), v = random_matrix(13, 8, s + 90);
    const Matrix dense = dense_attention(q, k, v, cfg(8, 2, causal));
    const Matrix sparse = probsparse_attention(q, k, v, cfg(8, 2, causal), SparseConfig::degenerate(s));
    EXPECT_LE(max_abs_diff(dense, sparse), 1e-9);
  }
}

TEST(ProbSparse, LazyRowsUseMeanOfVisibleValues) {
  // top_u_factor small enough that u = 1, so all but one row are lazy.
  const Matrix q = random_matrix(10, 4, 3), k = random_matrix(10, 4, 4), v = random_matrix(10, 4, 5);
  const SparseConfig sp{1e-9, 1.0, 7};
  const Matrix plain = probsparse_attention(q, k, v, cfg(4), sp);
  const Matrix causal = probsparse_attention(q, k, v, cfg(4, 1, true), sp);
  const Vector mean = column_mean(v);
  std::size_t lazy_plain = 0, lazy_causal = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    bool is_mean = true, is_prefix = true;
    const Vector prefix = column_mean(v.slice_rows(0, i + 1));
    for (std::size_t c = 0; c < 4; ++c) {
      is_mean = is_mean && std::abs(plain(i, c) - mean[c]) < 1e-14;
      is_prefix = is_prefix && std::abs(causal(i, c) - prefix[c]) < 1e-14;
    }
    lazy_plain += is_mean;
    lazy_causal += is_prefix;
  }
  EXPECT_GE(lazy_plain, 9u);
  EXPECT_GE(lazy_causal, 9u);
}

TEST(ProbSparse, CausalRowsIgnoreFutureKeys) {
  const Matrix q = random_matrix(24, 4, 1), k = random_matrix(24, 4, 2), v = random_matrix(24, 4, 3);
  const SparseConfig sp{5.0, 1.0, 11};
  const Matrix base = probsparse_attention(q, k, v, cfg(4, 1, true), sp);
  Matrix v2 = v;
  for (std::size_t c = 0; c < 4; ++c) v2(23, c) = 99.0;
  const Matrix pert = probsparse_attention(q, k, v2, cfg(4, 1, true), sp);
  // Top-u membership can shift only through k; v changes leave rows < 23 intact.
  for (std::size_t i = 0; i < 23; ++i)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(pert(i, c), base(i, c));
}

TEST(ProbSparse, DeterministicPerSeed) {
  const Matrix q = random_matrix(100, 8, 1), k = random_matrix(100, 8, 2), v = random_matrix(100, 8, 3);
  const SparseConfig sp{5.0, 1.0, 5};
  EXPECT_EQ(probsparse_attention(q, k, v, cfg(8, 2), sp), probsparse_attention(q, k, v, cfg(8, 2), sp));
}

TEST(CrossAttention, SingleSourceRowGivesProjectedValue) {
  const AttentionWeights w{LinearLayer(random_matrix(4, 3, 1), {0, 0, 0, 0}),
                           LinearLayer(random_matrix(4, 3, 2), {0, 0, 0, 0}),
                           LinearLayer(random_matrix(4, 3, 3), {0.1, 0.2, 0.3, 0.4}),
                           LinearLayer(Matrix(4, 4, {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1}), {0, 0, 0, 0})};
  const Matrix src = random_matrix(1, 3, 4);
  const Matrix out = cross_attention(random_matrix(6, 3, 5), src, w, cfg(4, 2));
  const Matrix value = linear_apply(w.value, src);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(out(i, c), value(0, c), 1e-15);
  const Matrix x = random_matrix(5, 3, 6);
  EXPECT_EQ(cross_attention(x, x, w, cfg(4, 2)), self_attention(x, w, cfg(4, 2)));
}
