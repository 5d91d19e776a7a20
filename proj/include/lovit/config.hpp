#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace lovit {

struct AttentionConfig {
  std::size_t model_dim = 0;
  std::size_t num_heads = 1;
  bool causal = false;
  // Under causal masking, query row i may attend key rows j <= i + causal_offset.
  // The offset is (first query frame - first key frame); zero for self-attention.
  std::int64_t causal_offset = 0;

  std::size_t head_dim() const { return num_heads ? model_dim / num_heads : 0; }
  void validate() const;
};

// ProbSparse controls. u = ceil(top_u_factor * ln L_Q) queries receive exact
// attention; each query's sparsity score uses ceil(sample_factor * ln L_Q)
// sampled keys. An infinite factor selects every query / every key.
struct SparseConfig {
  double top_u_factor = 5.0;
  double sample_factor = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t top_u(std::size_t query_len) const;
  std::size_t samples_per_query(std::size_t query_len, std::size_t key_len) const;

  static SparseConfig degenerate(std::uint64_t seed = 0) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {inf, inf, seed};
  }
  bool operator==(const SparseConfig&) const = default;
};

enum class EncoderAttention { dense, probsparse };

struct FusionConfig {
  std::size_t encoder_layers = 2;
  std::size_t decoder_layers = 2;
  std::size_t model_dim = 0;
  std::size_t num_heads = 1;
  EncoderAttention encoder_attention = EncoderAttention::dense;
  bool causal = true;
  double ff_multiplier = 4.0;
  double norm_eps = 1e-5;
  // Base seed is mixed with the encoder layer index for each ProbSparse layer.
  SparseConfig sparse{};

  std::size_t ff_dim() const;
  void validate() const;
};

// One fusion module inside the model: where its weights live and the widths
// of the sequences it consumes.
struct BlockSpec {
  std::string prefix;
  std::size_t aux_in_dim = 0;
  std::size_t main_in_dim = 0;
  FusionConfig fusion;
};

enum class Block { ls0, ls1, ll0, ll1, global, head_local, head_global };
inline constexpr Block kAllBlocks[] = {Block::ls0,    Block::ls1,        Block::ll0,
                                       Block::ll1,    Block::global,     Block::head_local,
                                       Block::head_global};

struct ModelConfig {
  std::size_t lambda1 = 100;
  std::size_t lambda2 = 500;
  std::size_t feature_dim = 768;
  std::size_t dim_s = 512;
  std::size_t dim_l = 64;
  std::size_t dim_g = 8;
  // Model width of the two multi-scale head fusion modules.
  std::size_t head_fusion_dim = 64;
  std::size_t num_phases = 7;

  std::size_t heads_s = 8;
  std::size_t heads_l = 4;
  std::size_t heads_g = 2;
  std::size_t heads_head = 4;

  std::size_t ls_encoder_layers = 2, ls_decoder_layers = 2;
  std::size_t ll_encoder_layers = 2, ll_decoder_layers = 2;
  std::size_t g_encoder_layers = 2, g_decoder_layers = 1;
  std::size_t head_encoder_layers = 2, head_decoder_layers = 1;

  double ff_multiplier = 4.0;
  double norm_eps = 1e-5;
  bool causal = true;
  // Seed field is ignored; samplers are seeded per frame from the stream root.
  SparseConfig global_sparse{};

  static ModelConfig full_defaults() { return {}; }
  // Desk-scale configuration used by the equivalence suites.
  static ModelConfig toy();

  void validate() const;
  BlockSpec block(Block b) const;

  // Line-oriented `key = value` text; '#' starts a comment. Unknown keys are errors.
  static ModelConfig parse(const std::string& text);
  static ModelConfig load(const std::string& path);
  std::string to_text() const;

  bool operator==(const ModelConfig&) const = default;
};

}  // namespace lovit
