#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lovit/attention.hpp"
#include "lovit/config.hpp"
#include "lovit/numeric.hpp"
#include "lovit/weights.hpp"

namespace lovit {

struct FeedForwardWeights {
  LinearLayer up;
  LinearLayer down;
};

struct EncoderLayerWeights {
  LayerNormParams norm_attn;
  AttentionWeights attn;
  LayerNormParams norm_ff;
  FeedForwardWeights ff;
};

struct DecoderLayerWeights {
  LayerNormParams norm_self;
  AttentionWeights self;
  LayerNormParams norm_cross;
  AttentionWeights cross;
  LayerNormParams norm_ff;
  FeedForwardWeights ff;
};

// Parameters of one fusion module: optional input projections, the encoder
// stack for the auxiliary branch and the decoder stack for the main branch.
struct BlockWeights {
  std::optional<LinearLayer> aux_proj;
  std::optional<LinearLayer> main_proj;
  std::vector<EncoderLayerWeights> encoder;
  LayerNormParams encoder_norm;
  std::vector<DecoderLayerWeights> decoder;
  LayerNormParams decoder_norm;

  // Builds the block from `prefix.*` tensors. Any missing, misshapen or
  // surplus tensor under the prefix is a FormatError naming it.
  static BlockWeights load(const WeightStore& store, const BlockSpec& spec);
};

// Sinusoidal encoding of absolute frame indices [start_frame, start_frame + rows).
Matrix positional_encoding(std::int64_t start_frame, std::size_t rows, std::size_t dim);

Matrix feed_forward(const Matrix& x, const FeedForwardWeights& w);

// Pre-norm fusion module. The encoder runs `encoder_layers` self-attention
// layers over the auxiliary branch; each decoder layer applies self-attention
// to the main branch and then cross-attends to the encoder output. Causal
// masks compare absolute frame indices. Output has the main branch's length
// and the module's model width.
Matrix fusion_forward(const Matrix& aux, std::int64_t aux_start_frame, const Matrix& main,
                      std::int64_t main_start_frame, const BlockWeights& w,
                      const FusionConfig& cfg);

}  // namespace lovit
