#include "lovit/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <variant>

namespace lovit {

void AttentionConfig::validate() const {
  if (num_heads == 0 || model_dim == 0) {
    throw std::invalid_argument("attention config: model_dim and num_heads must be >= 1");
  }
  if (model_dim % num_heads != 0) {
    throw std::invalid_argument("attention config: model_dim " + std::to_string(model_dim) +
                                " not divisible by num_heads " + std::to_string(num_heads));
  }
}

void SparseConfig::validate() const {
  if (!(top_u_factor > 0.0) || !(sample_factor > 0.0)) {
    throw std::invalid_argument("sparse config: factors must be > 0");
  }
}

namespace {
std::size_t ceil_log_count(double factor, std::size_t log_arg, std::size_t cap) {
  if (std::isinf(factor)) return cap;
  const double want = std::ceil(factor * std::log(static_cast<double>(log_arg)));
  if (want >= static_cast<double>(cap)) return cap;
  return std::max<std::size_t>(1, static_cast<std::size_t>(want));
}
}  // namespace

std::size_t SparseConfig::top_u(std::size_t query_len) const {
  return ceil_log_count(top_u_factor, query_len, query_len);
}

std::size_t SparseConfig::samples_per_query(std::size_t query_len, std::size_t key_len) const {
  return ceil_log_count(sample_factor, query_len, key_len);
}

std::size_t FusionConfig::ff_dim() const {
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(ff_multiplier * static_cast<double>(model_dim))));
}

void FusionConfig::validate() const {
  if (encoder_layers < 1 || decoder_layers < 1) {
    throw std::invalid_argument("fusion config: need at least one encoder and decoder layer");
  }
  AttentionConfig{model_dim, num_heads}.validate();
  if (!(ff_multiplier > 0.0)) throw std::invalid_argument("fusion config: ff_multiplier must be > 0");
  if (!(norm_eps > 0.0)) throw std::invalid_argument("fusion config: norm_eps must be > 0");
  if (encoder_attention == EncoderAttention::probsparse) sparse.validate();
}

ModelConfig ModelConfig::toy() {
  ModelConfig c;
  c.lambda1 = 20;
  c.lambda2 = 60;
  c.feature_dim = 32;
  c.dim_s = 16;
  c.dim_l = 8;
  c.dim_g = 4;
  c.head_fusion_dim = 8;
  c.heads_s = 2;
  c.heads_l = 2;
  c.heads_g = 1;
  c.heads_head = 2;
  return c;
}

void ModelConfig::validate() const {
  if (lambda1 < 1 || lambda2 < 1) throw std::invalid_argument("model config: windows must be >= 1");
  if (lambda1 > lambda2) throw std::invalid_argument("model config: lambda1 must be <= lambda2");
  if (num_phases < 2) throw std::invalid_argument("model config: num_phases must be >= 2");
  for (std::size_t d : {feature_dim, dim_s, dim_l, dim_g, head_fusion_dim}) {
    if (d < 1) throw std::invalid_argument("model config: all dims must be >= 1");
  }
  for (Block b : kAllBlocks) block(b).fusion.validate();
}

BlockSpec ModelConfig::block(Block b) const {
  auto fusion = [&](std::size_t enc, std::size_t dec, std::size_t dim, std::size_t heads) {
    FusionConfig f;
    f.encoder_layers = enc;
    f.decoder_layers = dec;
    f.model_dim = dim;
    f.num_heads = heads;
    f.causal = causal;
    f.ff_multiplier = ff_multiplier;
    f.norm_eps = norm_eps;
    return f;
  };
  switch (b) {
    case Block::ls0:
    case Block::ls1:
      return {b == Block::ls0 ? "ls.0" : "ls.1", dim_s, feature_dim,
              fusion(ls_encoder_layers, ls_decoder_layers, dim_s, heads_s)};
    case Block::ll0:
    case Block::ll1:
      return {b == Block::ll0 ? "ll.0" : "ll.1", dim_l, dim_s,
              fusion(ll_encoder_layers, ll_decoder_layers, dim_l, heads_l)};
    case Block::global: {
      BlockSpec spec{"g", dim_l, dim_l, fusion(g_encoder_layers, g_decoder_layers, dim_g, heads_g)};
      spec.fusion.encoder_attention = EncoderAttention::probsparse;
      spec.fusion.sparse = global_sparse;
      return spec;
    }
    case Block::head_local:
      return {"head.0", dim_l, dim_s,
              fusion(head_encoder_layers, head_decoder_layers, head_fusion_dim, heads_head)};
    case Block::head_global:
      return {"head.1", dim_g, head_fusion_dim,
              fusion(head_encoder_layers, head_decoder_layers, head_fusion_dim, heads_head)};
  }
  throw std::logic_error("unknown block");
}

namespace {

using Field = std::variant<std::size_t ModelConfig::*, double ModelConfig::*, bool ModelConfig::*>;

struct NamedField {
  const char* key;
  Field field;
};

const NamedField kFields[] = {
    {"lambda1", &ModelConfig::lambda1},
    {"lambda2", &ModelConfig::lambda2},
    {"feature_dim", &ModelConfig::feature_dim},
    {"dim_s", &ModelConfig::dim_s},
    {"dim_l", &ModelConfig::dim_l},
    {"dim_g", &ModelConfig::dim_g},
    {"head_fusion_dim", &ModelConfig::head_fusion_dim},
    {"num_phases", &ModelConfig::num_phases},
    {"heads_s", &ModelConfig::heads_s},
    {"heads_l", &ModelConfig::heads_l},
    {"heads_g", &ModelConfig::heads_g},
    {"heads_head", &ModelConfig::heads_head},
    {"ls_encoder_layers", &ModelConfig::ls_encoder_layers},
    {"ls_decoder_layers", &ModelConfig::ls_decoder_layers},
    {"ll_encoder_layers", &ModelConfig::ll_encoder_layers},
    {"ll_decoder_layers", &ModelConfig::ll_decoder_layers},
    {"g_encoder_layers", &ModelConfig::g_encoder_layers},
    {"g_decoder_layers", &ModelConfig::g_decoder_layers},
    {"head_encoder_layers", &ModelConfig::head_encoder_layers},
    {"head_decoder_layers", &ModelConfig::head_decoder_layers},
    {"ff_multiplier", &ModelConfig::ff_multiplier},
    {"norm_eps", &ModelConfig::norm_eps},
    {"causal", &ModelConfig::causal},
};

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::size_t parse_count(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw std::invalid_argument("config: `" + key + "` expects a non-negative integer, got `" + v + "`");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) {
    throw std::invalid_argument("config: `" + key + "` expects a real number, got `" + v + "`");
  }
  return out;
}

bool parse_flag(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: `" + key + "` expects true/false, got `" + v + "`");
}

std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

ModelConfig ModelConfig::parse(const std::string& text) {
  ModelConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected `key = value`");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "top_u_factor") {
      cfg.global_sparse.top_u_factor = parse_real(key, value);
      continue;
    }
    if (key == "sample_factor") {
      cfg.global_sparse.sample_factor = parse_real(key, value);
      continue;
    }
    const auto it = std::find_if(std::begin(kFields), std::end(kFields),
                                 [&](const NamedField& f) { return key == f.key; });
    if (it == std::end(kFields)) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key `" + key + "`");
    }
    std::visit(
        [&](auto member) {
          using T = std::remove_reference_t<decltype(cfg.*member)>;
          if constexpr (std::is_same_v<T, std::size_t>) {
            cfg.*member = parse_count(key, value);
          } else if constexpr (std::is_same_v<T, double>) {
            cfg.*member = parse_real(key, value);
          } else {
            cfg.*member = parse_flag(key, value);
          }
        },
        it->field);
  }
  cfg.validate();
  return cfg;
}

ModelConfig ModelConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  for (const auto& f : kFields) {
    os << f.key << " = ";
    std::visit(
        [&](auto member) {
          using T = std::remove_reference_t<decltype(this->*member)>;
          if constexpr (std::is_same_v<T, bool>) {
            os << ((this->*member) ? "true" : "false");
          } else if constexpr (std::is_same_v<T, double>) {
            os << format_real(this->*member);
          } else {
            os << this->*member;
          }
        },
        f.field);
    os << '\n';
  }
  os << "top_u_factor = " << format_real(global_sparse.top_u_factor) << '\n';
  os << "sample_factor = " << format_real(global_sparse.sample_factor) << '\n';
  return os.str();
}

}  // namespace lovit
