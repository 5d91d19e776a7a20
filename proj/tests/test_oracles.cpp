#include <gtest/gtest.h>

#include <cmath>

#include "lovit/aggregator.hpp"
#include "lovit/attention.hpp"
#include "lovit/oracles.hpp"
#include "lovit/synth.hpp"
#include "lovit/verify.hpp"
#include "test_util.hpp"

using namespace lovit;
using test::random_matrix;

namespace {

double max_diff(const Matrix& a, const Matrix& b) {
  EXPECT_EQ(a.rows(), b.rows());
  EXPECT_EQ(a.cols(), b.cols());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
  return d;
}

}  // namespace

TEST(NaiveAttention, HandExample) {
  // q.k = {0, 2}, scaled by 1/sqrt(2).
  const Matrix q(1, 2, {1.0, 1.0});
  const Matrix k(2, 2, {0.0, 0.0, 1.0, 1.0});
  const Matrix v(2, 2, {1.0, 0.0, 0.0, 1.0});
  const Matrix out = oracle::naive_attention(q, k, v);
  const double a = std::exp(2.0 / std::sqrt(2.0));
  EXPECT_NEAR(out(0, 0), 1.0 / (1.0 + a), 1e-15);
  EXPECT_NEAR(out(0, 1), a / (1.0 + a), 1e-15);
}

TEST(NaiveAttention, CausalFirstRowCopiesFirstValue) {
  const Matrix q = random_matrix(4, 4, 1), k = random_matrix(4, 4, 2), v = random_matrix(4, 4, 3);
  const Matrix out = oracle::naive_attention(q, k, v, 2, {true, 0});
  for (std::size_t c = 0; c < 4; ++c) EXPECT_DOUBLE_EQ(out(0, c), v(0, c));
  const Matrix shifted = oracle::naive_attention(q, k, v, 2, {true, 3});
  EXPECT_LT(max_diff(shifted.slice_rows(3, 4), oracle::naive_attention(q, k, v, 2).slice_rows(3, 4)), 1e-15);
}

TEST(ExhaustiveRank, ConstantLogitsGiveZerosInIndexOrder) {
  const Matrix q(3, 2), k = random_matrix(5, 2, 7);
  const auto r = oracle::exhaustive_sparsity_rank(q, k, 2);
  for (double s : r.scores) EXPECT_EQ(s, 0.0);
  EXPECT_EQ(r.order, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(ExhaustiveRank, HandCase) {
  // d_k = 1, keys {0, 0, 1}; the first query's logits are {0, 0, 3}.
  const Matrix q(2, 1, {3.0, -1.0});
  const Matrix k(3, 1, {0.0, 0.0, 1.0});
  const auto r = oracle::exhaustive_sparsity_rank(q, k, 1);
  EXPECT_DOUBLE_EQ(r.scores[0], 3.0 - 1.0);
  EXPECT_DOUBLE_EQ(r.scores[1], 0.0 - (-1.0 / 3.0));
  EXPECT_EQ(r.order, (std::vector<std::size_t>{0, 1}));
}

TEST(ExhaustiveRank, AgreesWithFullSampledMeasure) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::size_t lq = 5 + s, lk = 9 + 2 * s;
    const Matrix q = random_matrix(lq, 6, s), k = random_matrix(lk, 6, s + 50);
    const AttentionConfig cfg{6, 1, false, 0};
    const auto samples = sample_keys(lq, lk, cfg, SparseConfig::degenerate(), 0);
    const auto measure = sparsity_measure(q, k, samples, 6);
    const auto r = oracle::exhaustive_sparsity_rank(q, k, 6);
    for (std::size_t i = 0; i < lq; ++i) EXPECT_NEAR(measure[i], r.scores[i], 1e-12);
    EXPECT_EQ(select_top_queries(measure, lq), r.order);
  }
}

TEST(NaiveProbsparse, DegenerateMatchesNaiveDense) {
  const Matrix q = random_matrix(12, 8, 1), k = random_matrix(12, 8, 2), v = random_matrix(12, 8, 3);
  for (bool causal : {false, true}) {
    const oracle::Mask m{causal, 0};
    EXPECT_LT(max_diff(oracle::naive_probsparse(q, k, v, 2, m, SparseConfig::degenerate()),
                       oracle::naive_attention(q, k, v, 2, m)),
              1e-12);
  }
}

TEST(Straightline, FirstFrameMatchesModel) {
  const ModelConfig cfg = ModelConfig::toy();
  const WeightStore store = synth_weights(cfg, 2);
  const Matrix e = random_matrix(1, cfg.feature_dim, 8);
  const auto oracle_out = oracle::straightline_lovit(e, store, cfg, 0);
  const auto model_out = lovit_forward_all({Role::e, 1, e}, ModelWeights::load(store, cfg), cfg, 0);
  ASSERT_EQ(oracle_out.size(), 1u);
  EXPECT_EQ(oracle_out[0].frame, 1);
  EXPECT_EQ(oracle_out[0].logits, model_out[0].logits);
  EXPECT_EQ(oracle_out[0].heat, model_out[0].heat);
}

TEST(Straightline, ZeroWeightsGiveUniformOutput) {
  const ModelConfig cfg = ModelConfig::toy();
  const auto out = oracle::straightline_lovit(random_matrix(5, cfg.feature_dim, 4), zero_weights(cfg), cfg, 0);
  ASSERT_EQ(out.size(), 5u);
  for (const auto& o : out) {
    for (double l : o.logits) EXPECT_EQ(l, 0.0);
    EXPECT_EQ(o.heat, 0.5);
    EXPECT_EQ(o.predicted_phase, 0u);
    EXPECT_DOUBLE_EQ(o.confidence, 1.0 / static_cast<double>(cfg.num_phases));
  }
}

TEST(VerifySuites, AttentionSuitesPass) {
  for (const auto& r : {verify::dense_vs_naive(), verify::probsparse_degenerate(),
                        verify::topu_vs_exhaustive(), verify::probsparse_vs_naive()}) {
    EXPECT_TRUE(r.pass) << verify::format(r);
    EXPECT_LE(r.max_abs_diff, r.tolerance) << r.case_id;
  }
}

TEST(VerifySuites, ModelSuitesPass) {
  const ModelConfig cfg = ModelConfig::toy();
  for (const auto& r : {verify::model_vs_straightline(cfg, 90, false), verify::model_vs_straightline(cfg, 90, true),
                        verify::streaming_vs_batch(cfg, 2, 70, true)}) {
    EXPECT_TRUE(r.pass) << verify::format(r);
  }
  EXPECT_EQ(verify::model_vs_straightline(cfg, 90, true).tolerance, 0.0);
}

TEST(VerifySuites, ReportFormat) {
  const auto r = oracle::make_report("case", 2.0, 1.0);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(verify::format(r).rfind("FAIL case", 0), 0u);
  EXPECT_TRUE(oracle::make_report("ok", 0.0, 0.0).pass);
}

// The straight-line oracle must notice a perturbed tensor that the model sees.
// Short windows give both previous clips at least two rows within 30 frames.
TEST(Straightline, DetectsWeightPerturbation) {
  ModelConfig cfg = ModelConfig::toy();
  cfg.lambda1 = 5;
  cfg.lambda2 = 10;
  const WeightStore store = synth_weights(cfg, 6);
  const Matrix e = random_matrix(30, cfg.feature_dim, 3);
  const auto base = oracle::straightline_lovit(e, store, cfg, 0);
  std::size_t sensitive = 0, probed = 0;
  for (const auto& spec : required_tensors(cfg)) {
    if (spec.name.find(".weight") == std::string::npos) continue;
    ++probed;
    WeightStore mutated = store;
    mutated.at(spec.name).values[0] += 0.25;
    const auto out = oracle::straightline_lovit(e, mutated, cfg, 0);
    bool changed = false;
    for (std::size_t t = 0; t < out.size() && !changed; ++t) {
      changed = out[t].logits != base[t].logits || out[t].heat != base[t].heat;
    }
    sensitive += changed;
    if (!changed) ADD_FAILURE() << spec.name;
  }
  EXPECT_EQ(sensitive, probed);
}
