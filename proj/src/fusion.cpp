#include "lovit/fusion.hpp"

#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "lovit/errors.hpp"
#include "lovit/rng.hpp"

namespace lovit {

namespace {

class BlockReader {
 public:
  BlockReader(const WeightStore& store, const BlockSpec& spec) : store_(store) {
    for (const auto& t : block_tensors(spec)) expected_.emplace(t.name, t.shape);
    const std::string prefix = spec.prefix + ".";
    for (const auto& [name, tensor] : store.tensors()) {
      if (name.compare(0, prefix.size(), prefix) == 0 && !expected_.count(name)) {
        throw FormatError(ErrorCode::unexpected_tensor,
                          "unexpected tensor for this config: " + name);
      }
    }
  }

  const Tensor& get(const std::string& name) const {
    const Tensor& t = store_.at(name);
    const auto it = expected_.find(name);
    if (it == expected_.end() || it->second != t.shape || t.values.size() != t.numel()) {
      throw FormatError(ErrorCode::shape_mismatch, "tensor " + name + " has the wrong shape");
    }
    return t;
  }

  LinearLayer linear(const std::string& name) const {
    const Tensor& w = get(name + ".weight");
    const Tensor& b = get(name + ".bias");
    return LinearLayer(Matrix(w.shape[0], w.shape[1], w.values), b.values);
  }

  LayerNormParams norm(const std::string& name, double eps) const {
    return {get(name + ".gain").values, get(name + ".shift").values, eps};
  }

  AttentionWeights attention(const std::string& name) const {
    return {linear(name + ".q"), linear(name + ".k"), linear(name + ".v"), linear(name + ".o")};
  }

  FeedForwardWeights ff(const std::string& name) const {
    return {linear(name + ".up"), linear(name + ".down")};
  }

 private:
  const WeightStore& store_;
  std::map<std::string, std::vector<std::size_t>> expected_;
};

}  // namespace

BlockWeights BlockWeights::load(const WeightStore& store, const BlockSpec& spec) {
  spec.fusion.validate();
  const BlockReader r(store, spec);
  const auto& f = spec.fusion;
  const double eps = f.norm_eps;
  const std::string& p = spec.prefix;
  BlockWeights w;
  if (spec.aux_in_dim != f.model_dim) w.aux_proj = r.linear(p + ".aux_proj");
  if (spec.main_in_dim != f.model_dim) w.main_proj = r.linear(p + ".main_proj");
  for (std::size_t i = 0; i < f.encoder_layers; ++i) {
    const std::string l = p + ".enc." + std::to_string(i);
    w.encoder.push_back({r.norm(l + ".norm1", eps), r.attention(l + ".attn"),
                         r.norm(l + ".norm2", eps), r.ff(l + ".ff")});
  }
  w.encoder_norm = r.norm(p + ".enc_norm", eps);
  for (std::size_t i = 0; i < f.decoder_layers; ++i) {
    const std::string l = p + ".dec." + std::to_string(i);
    w.decoder.push_back({r.norm(l + ".norm1", eps), r.attention(l + ".self"),
                         r.norm(l + ".norm2", eps), r.attention(l + ".cross"),
                         r.norm(l + ".norm3", eps), r.ff(l + ".ff")});
  }
  w.decoder_norm = r.norm(p + ".dec_norm", eps);
  return w;
}

Matrix positional_encoding(std::int64_t start_frame, std::size_t rows, std::size_t dim) {
  Matrix pe(rows, dim);
  for (std::size_t r = 0; r < rows; ++r) {
    const double pos = static_cast<double>(start_frame + static_cast<std::int64_t>(r));
    for (std::size_t c = 0; c < dim; ++c) {
      const double pair = static_cast<double>(c - c % 2);
      const double angle = pos / std::pow(10000.0, pair / static_cast<double>(dim));
      pe(r, c) = (c % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

Matrix feed_forward(const Matrix& x, const FeedForwardWeights& w) {
  return linear_apply(w.down, gelu(linear_apply(w.up, x)));
}

namespace {

Matrix enter_branch(const Matrix& x, std::int64_t start, const std::optional<LinearLayer>& proj,
                    std::size_t model_dim, const char* branch) {
  if (x.rows() == 0) throw std::invalid_argument(std::string("fusion: empty ") + branch + " sequence");
  Matrix h = proj ? linear_apply(*proj, x) : x;
  if (h.cols() != model_dim) {
    throw std::invalid_argument(std::string("fusion: ") + branch + " width " +
                                std::to_string(h.cols()) + " != model_dim " +
                                std::to_string(model_dim));
  }
  add_inplace(h, positional_encoding(start, h.rows(), model_dim));
  return h;
}

}  // namespace

Matrix fusion_forward(const Matrix& aux, std::int64_t aux_start_frame, const Matrix& main,
                      std::int64_t main_start_frame, const BlockWeights& w,
                      const FusionConfig& cfg) {
  cfg.validate();
  if (w.encoder.size() != cfg.encoder_layers || w.decoder.size() != cfg.decoder_layers) {
    throw std::invalid_argument("fusion: weights carry " + std::to_string(w.encoder.size()) + "/" +
                                std::to_string(w.decoder.size()) + " layers, config wants " +
                                std::to_string(cfg.encoder_layers) + "/" +
                                std::to_string(cfg.decoder_layers));
  }
  Matrix enc = enter_branch(aux, aux_start_frame, w.aux_proj, cfg.model_dim, "aux");
  Matrix dec = enter_branch(main, main_start_frame, w.main_proj, cfg.model_dim, "main");

  const AttentionConfig self_cfg{cfg.model_dim, cfg.num_heads, cfg.causal, 0};
  const AttentionConfig cross_cfg{cfg.model_dim, cfg.num_heads, cfg.causal,
                                  main_start_frame - aux_start_frame};
  const bool sparse = cfg.encoder_attention == EncoderAttention::probsparse;

  for (std::size_t i = 0; i < w.encoder.size(); ++i) {
    const auto& layer = w.encoder[i];
    SparseConfig sp = cfg.sparse;
    sp.seed = rng::derive(cfg.sparse.seed, i);
    add_inplace(enc, self_attention(layer_norm(enc, layer.norm_attn), layer.attn, self_cfg,
                                    sparse ? &sp : nullptr));
    add_inplace(enc, feed_forward(layer_norm(enc, layer.norm_ff), layer.ff));
  }
  enc = layer_norm(enc, w.encoder_norm);

  for (const auto& layer : w.decoder) {
    add_inplace(dec, self_attention(layer_norm(dec, layer.norm_self), layer.self, self_cfg));
    add_inplace(dec, cross_attention(layer_norm(dec, layer.norm_cross), enc, layer.cross, cross_cfg));
    add_inplace(dec, feed_forward(layer_norm(dec, layer.norm_ff), layer.ff));
  }
  return layer_norm(dec, w.decoder_norm);
}

}  // namespace lovit
