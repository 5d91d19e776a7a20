#include <gtest/gtest.h>

#include <cmath>

#include "lovit/errors.hpp"
#include "lovit/fusion.hpp"
#include "lovit/rng.hpp"
#include "test_util.hpp"

using namespace lovit;
using test::random_matrix;

namespace {

// Random tensors for every name of one block; gains near 1.
WeightStore block_store(const BlockSpec& spec, std::uint64_t seed) {
  WeightStore store;
  std::uint64_t n = 0;
  for (const auto& t : block_tensors(spec)) {
    Tensor tensor{t.shape, {}};
    const bool gain = t.name.size() > 5 && t.name.substr(t.name.size() - 5) == ".gain";
    for (std::size_t i = 0; i < tensor.numel(); ++i) {
      const double u = 2.0 * rng::uniform_real(seed, n++) - 1.0;
      tensor.values.push_back(gain ? 1.0 + 0.2 * u : 0.5 * u);
    }
    store.insert(t.name, std::move(tensor));
  }
  return store;
}

BlockSpec spec(std::size_t aux_in, std::size_t main_in, std::size_t dim, std::size_t heads,
               std::size_t m, std::size_t n, bool causal = true) {
  BlockSpec s;
  s.prefix = "blk";
  s.aux_in_dim = aux_in;
  s.main_in_dim = main_in;
  s.fusion.encoder_layers = m;
  s.fusion.decoder_layers = n;
  s.fusion.model_dim = dim;
  s.fusion.num_heads = heads;
  s.fusion.causal = causal;
  return s;
}

}  // namespace

TEST(PositionalEncoding, Values) {
  const Matrix pe = positional_encoding(0, 2, 4);
  EXPECT_EQ(pe(0, 0), 0.0);
  EXPECT_EQ(pe(0, 1), 1.0);
  EXPECT_NEAR(pe(1, 0), 0.841470984807896507, 1e-15);
  EXPECT_NEAR(pe(1, 3), 0.999950000416665278, 1e-15);
  // Absolute indexing: a later start is a row shift of the same table.
  const Matrix a = positional_encoding(5, 3, 6), b = positional_encoding(3, 5, 6);
  EXPECT_EQ(a, b.slice_rows(2, 5));
}

TEST(Fusion, SingleRowHandComposition) {
  const BlockSpec s = spec(2, 2, 2, 1, 1, 1);
  const WeightStore store = block_store(s, 3);
  const BlockWeights w = BlockWeights::load(store, s);
  const Matrix aux(1, 2, {0.3, -0.7}), main(1, 2, {1.5, 0.25});
  const Matrix out = fusion_forward(aux, 4, main, 4, w, s.fusion);

  // Single-row attention passes the value row through, so each attention
  // sublayer is o(v(.)).
  auto attn = [](const AttentionWeights& a, const Matrix& kv) {
    return linear_apply(a.output, linear_apply(a.value, kv));
  };
  auto ff = [](const FeedForwardWeights& f, const Matrix& x) {
    return linear_apply(f.down, gelu(linear_apply(f.up, x)));
  };
  Matrix enc = add(aux, positional_encoding(4, 1, 2));
  const auto& el = w.encoder[0];
  enc = add(enc, attn(el.attn, layer_norm(enc, el.norm_attn)));
  enc = add(enc, ff(el.ff, layer_norm(enc, el.norm_ff)));
  enc = layer_norm(enc, w.encoder_norm);
  Matrix dec = add(main, positional_encoding(4, 1, 2));
  const auto& dl = w.decoder[0];
  dec = add(dec, attn(dl.self, layer_norm(dec, dl.norm_self)));
  dec = add(dec, attn(dl.cross, enc));
  dec = add(dec, ff(dl.ff, layer_norm(dec, dl.norm_ff)));
  const Matrix ref = layer_norm(dec, w.decoder_norm);
  EXPECT_LE(max_abs_diff(out, ref), 1e-12);
}

TEST(Fusion, OutputShapeFollowsMainBranch) {
  const BlockSpec s = spec(5, 7, 4, 2, 2, 2);
  const BlockWeights w = BlockWeights::load(block_store(s, 1), s);
  const Matrix out = fusion_forward(random_matrix(9, 5, 1), 1, random_matrix(6, 7, 2), 4, w, s.fusion);
  EXPECT_EQ(out.rows(), 6u);
  EXPECT_EQ(out.cols(), 4u);
}

TEST(Fusion, ZeroWeightsIgnoreAuxBranch) {
  ModelConfig cfg = ModelConfig::toy();
  const BlockSpec s = cfg.block(Block::ls0);
  const WeightStore zero = zero_weights(cfg);
  const BlockWeights w = BlockWeights::load(zero, s);
  const Matrix main = random_matrix(5, s.main_in_dim, 3);
  const Matrix a = fusion_forward(random_matrix(4, s.aux_in_dim, 4), 1, main, 3, w, s.fusion);
  const Matrix b = fusion_forward(random_matrix(2, s.aux_in_dim, 5), 0, main, 3, w, s.fusion);
  EXPECT_EQ(a, b);
  // Zero projection: the decoder sees only positions, normalised.
  const Matrix pe = positional_encoding(3, 5, s.fusion.model_dim);
  const Vector g(s.fusion.model_dim, 1.0), z(s.fusion.model_dim, 0.0);
  EXPECT_LE(max_abs_diff(a, layer_norm(pe, g, z)), 1e-12);
}

TEST(Fusion, CausalPrefixConsistency) {
  const BlockSpec s = spec(3, 3, 4, 2, 2, 2);
  const BlockWeights w = BlockWeights::load(block_store(s, 8), s);
  const Matrix aux = random_matrix(12, 3, 6), main = random_matrix(12, 3, 7);
  const Matrix full = fusion_forward(aux, 1, main, 1, w, s.fusion);
  for (std::size_t t = 1; t <= 12; ++t) {
    const Matrix part = fusion_forward(aux.slice_rows(0, t), 1, main.slice_rows(0, t), 1, w, s.fusion);
    EXPECT_EQ(part, full.slice_rows(0, t)) << "t=" << t;
  }
}

TEST(Fusion, DegenerateSparseEncoderMatchesDense) {
  BlockSpec s = spec(4, 4, 4, 2, 2, 1);
  const BlockWeights w = BlockWeights::load(block_store(s, 9), s);
  const Matrix aux = random_matrix(6, 4, 1), main = random_matrix(6, 4, 2);
  const Matrix dense = fusion_forward(aux, 1, main, 1, w, s.fusion);
  s.fusion.encoder_attention = EncoderAttention::probsparse;
  s.fusion.sparse = SparseConfig::degenerate(17);
  EXPECT_LE(max_abs_diff(dense, fusion_forward(aux, 1, main, 1, w, s.fusion)), 1e-9);
}

TEST(Fusion, LoaderEnforcesLayerCounts) {
  const BlockSpec two = spec(4, 4, 4, 1, 2, 2);
  const BlockSpec one = spec(4, 4, 4, 1, 1, 2);
  WeightStore store = block_store(two, 2);
  try {
    BlockWeights::load(store, one);
    FAIL() << "surplus layer accepted";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.code(), ErrorCode::unexpected_tensor);
    EXPECT_NE(std::string(e.what()).find("blk.enc.1"), std::string::npos);
  }
  store.erase("blk.dec.1.ff.up.bias");
  try {
    BlockWeights::load(store, two);
    FAIL() << "missing tensor accepted";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.code(), ErrorCode::missing_tensor);
    EXPECT_NE(std::string(e.what()).find("blk.dec.1.ff.up.bias"), std::string::npos);
  }
  WeightStore bad = block_store(two, 2);
  bad.at("blk.enc_norm.gain").shape = {3};
  bad.at("blk.enc_norm.gain").values.resize(3);
  try {
    BlockWeights::load(bad, two);
    FAIL() << "misshapen tensor accepted";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.code(), ErrorCode::shape_mismatch);
  }
}

TEST(Fusion, ProjectionsOnlyWhenWidthsDiffer) {
  const BlockWeights same = BlockWeights::load(block_store(spec(4, 4, 4, 1, 1, 1), 1), spec(4, 4, 4, 1, 1, 1));
  EXPECT_FALSE(same.aux_proj.has_value());
  EXPECT_FALSE(same.main_proj.has_value());
  const BlockWeights diff = BlockWeights::load(block_store(spec(3, 5, 4, 1, 1, 1), 1), spec(3, 5, 4, 1, 1, 1));
  EXPECT_TRUE(diff.aux_proj.has_value());
  EXPECT_TRUE(diff.main_proj.has_value());
}

TEST(Fusion, RejectsBadInputs) {
  const BlockSpec s = spec(4, 4, 4, 1, 1, 1);
  const BlockWeights w = BlockWeights::load(block_store(s, 1), s);
  EXPECT_THROW(fusion_forward(Matrix(0, 4), 1, random_matrix(2, 4, 1), 1, w, s.fusion), std::invalid_argument);
  EXPECT_THROW(fusion_forward(random_matrix(2, 5, 1), 1, random_matrix(2, 4, 1), 1, w, s.fusion),
               std::invalid_argument);
  FusionConfig wrong = s.fusion;
  wrong.decoder_layers = 2;
  EXPECT_THROW(fusion_forward(random_matrix(2, 4, 1), 1, random_matrix(2, 4, 1), 1, w, wrong),
               std::invalid_argument);
}
