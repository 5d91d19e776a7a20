#include "lovit/weights.hpp"

#include <cmath>
#include <set>

#include "lovit/errors.hpp"
#include "lovit/rng.hpp"

namespace lovit {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::io_failure: return "io_failure";
    case ErrorCode::bad_magic: return "bad_magic";
    case ErrorCode::bad_version: return "bad_version";
    case ErrorCode::truncated: return "truncated";
    case ErrorCode::shape_mismatch: return "shape_mismatch";
    case ErrorCode::missing_tensor: return "missing_tensor";
    case ErrorCode::duplicate_tensor: return "duplicate_tensor";
    case ErrorCode::unexpected_tensor: return "unexpected_tensor";
    case ErrorCode::bad_format: return "bad_format";
  }
  return "unknown";
}

namespace {

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void linear(std::vector<TensorSpec>& out, const std::string& name, std::size_t in, std::size_t outd) {
  out.push_back({name + ".weight", {outd, in}});
  out.push_back({name + ".bias", {outd}});
}

void norm(std::vector<TensorSpec>& out, const std::string& name, std::size_t dim) {
  out.push_back({name + ".gain", {dim}});
  out.push_back({name + ".shift", {dim}});
}

void attention(std::vector<TensorSpec>& out, const std::string& name, std::size_t dim) {
  for (const char* p : {"q", "k", "v", "o"}) linear(out, name + "." + p, dim, dim);
}

std::uint64_t name_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool ends_with(const std::string& s, const char* suffix) {
  const std::string suf(suffix);
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

}  // namespace

void WeightStore::insert(const std::string& name, Tensor t) {
  if (!tensors_.emplace(name, std::move(t)).second) {
    throw FormatError(ErrorCode::duplicate_tensor, "duplicate tensor: " + name);
  }
}

void WeightStore::set(const std::string& name, Tensor t) { tensors_[name] = std::move(t); }

const Tensor& WeightStore::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw FormatError(ErrorCode::missing_tensor, "missing tensor: " + name);
  return it->second;
}

Tensor& WeightStore::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw FormatError(ErrorCode::missing_tensor, "missing tensor: " + name);
  return it->second;
}

Matrix WeightStore::matrix(const std::string& name) const {
  const Tensor& t = at(name);
  if (t.shape.size() == 2) return Matrix(t.shape[0], t.shape[1], t.values);
  if (t.shape.size() == 1) return Matrix(1, t.shape[0], t.values);
  throw FormatError(ErrorCode::shape_mismatch, "tensor " + name + " is not 1-D or 2-D");
}

std::vector<double> WeightStore::vector(const std::string& name) const {
  const Tensor& t = at(name);
  if (t.shape.size() != 1) {
    throw FormatError(ErrorCode::shape_mismatch, "tensor " + name + " is not 1-D");
  }
  return t.values;
}

std::vector<TensorSpec> block_tensors(const BlockSpec& spec) {
  std::vector<TensorSpec> out;
  const auto& f = spec.fusion;
  const std::string& p = spec.prefix;
  const std::size_t d = f.model_dim;
  const std::size_t ff = f.ff_dim();
  if (spec.aux_in_dim != d) linear(out, p + ".aux_proj", spec.aux_in_dim, d);
  if (spec.main_in_dim != d) linear(out, p + ".main_proj", spec.main_in_dim, d);
  for (std::size_t i = 0; i < f.encoder_layers; ++i) {
    const std::string l = p + ".enc." + std::to_string(i);
    norm(out, l + ".norm1", d);
    attention(out, l + ".attn", d);
    norm(out, l + ".norm2", d);
    linear(out, l + ".ff.up", d, ff);
    linear(out, l + ".ff.down", ff, d);
  }
  norm(out, p + ".enc_norm", d);
  for (std::size_t i = 0; i < f.decoder_layers; ++i) {
    const std::string l = p + ".dec." + std::to_string(i);
    norm(out, l + ".norm1", d);
    attention(out, l + ".self", d);
    norm(out, l + ".norm2", d);
    attention(out, l + ".cross", d);
    norm(out, l + ".norm3", d);
    linear(out, l + ".ff.up", d, ff);
    linear(out, l + ".ff.down", ff, d);
  }
  norm(out, p + ".dec_norm", d);
  return out;
}

std::vector<TensorSpec> required_tensors(const ModelConfig& cfg) {
  std::vector<TensorSpec> out;
  for (Block b : kAllBlocks) {
    auto part = block_tensors(cfg.block(b));
    out.insert(out.end(), part.begin(), part.end());
  }
  linear(out, names::kPhaseHead, cfg.head_fusion_dim, cfg.num_phases);
  linear(out, names::kHeatHead, cfg.head_fusion_dim, 1);
  return out;
}

void validate_weights(const WeightStore& store, const ModelConfig& cfg) {
  const auto required = required_tensors(cfg);
  std::set<std::string> expected;
  for (const auto& spec : required) {
    expected.insert(spec.name);
    auto it = store.tensors().find(spec.name);
    if (it == store.tensors().end()) {
      throw FormatError(ErrorCode::missing_tensor, "missing tensor: " + spec.name);
    }
    if (it->second.shape != spec.shape || it->second.values.size() != it->second.numel()) {
      throw FormatError(ErrorCode::shape_mismatch,
                        "tensor " + spec.name + " has shape " + shape_str(it->second.shape) +
                            ", expected " + shape_str(spec.shape));
    }
  }
  for (const auto& [name, t] : store.tensors()) {
    if (!expected.count(name)) {
      throw FormatError(ErrorCode::unexpected_tensor, "unexpected tensor for this config: " + name);
    }
  }
}

WeightStore synth_weights(const ModelConfig& cfg, std::uint64_t seed) {
  WeightStore store;
  for (const auto& spec : required_tensors(cfg)) {
    Tensor t{spec.shape, std::vector<double>(Tensor{spec.shape, {}}.numel())};
    if (ends_with(spec.name, ".gain")) {
      std::fill(t.values.begin(), t.values.end(), 1.0);
    } else if (!ends_with(spec.name, ".shift")) {
      // Weight shape is (out, in); the bias shares its layer's fan-in.
      const std::size_t fan_in =
          spec.shape.size() == 2 ? spec.shape[1]
                                 : store.at(spec.name.substr(0, spec.name.size() - 5) + ".weight").shape[1];
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      const std::uint64_t key = rng::derive(seed, name_hash(spec.name));
      for (std::size_t n = 0; n < t.values.size(); ++n) {
        const double u = 2.0 * rng::uniform_real(key, n) - 1.0;
        t.values[n] = static_cast<double>(static_cast<float>(u * bound));
      }
    }
    store.insert(spec.name, std::move(t));
  }
  return store;
}

WeightStore zero_weights(const ModelConfig& cfg) {
  WeightStore store;
  for (const auto& spec : required_tensors(cfg)) {
    Tensor t{spec.shape, std::vector<double>(Tensor{spec.shape, {}}.numel(), 0.0)};
    if (ends_with(spec.name, ".gain")) std::fill(t.values.begin(), t.values.end(), 1.0);
    store.insert(spec.name, std::move(t));
  }
  return store;
}

}  // namespace lovit
