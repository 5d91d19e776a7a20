#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lovit/config.hpp"
#include "lovit/matrix.hpp"

namespace lovit {

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t numel() const noexcept {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
  }
  bool operator==(const Tensor&) const = default;
};

struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;
};

// Named tensors, ordered by name.
class WeightStore {
 public:
  // Throws FormatError(duplicate_tensor) if the name exists.
  void insert(const std::string& name, Tensor t);
  void set(const std::string& name, Tensor t);
  bool erase(const std::string& name) { return tensors_.erase(name) > 0; }
  bool contains(const std::string& name) const { return tensors_.count(name) > 0; }
  std::size_t size() const noexcept { return tensors_.size(); }

  // Throws FormatError(missing_tensor) naming the tensor.
  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);

  // 2-D tensors as-is; 1-D tensors as a single row.
  Matrix matrix(const std::string& name) const;
  std::vector<double> vector(const std::string& name) const;

  const std::map<std::string, Tensor>& tensors() const noexcept { return tensors_; }

  bool operator==(const WeightStore&) const = default;

 private:
  std::map<std::string, Tensor> tensors_;
};

// Tensor names of one fusion module under its prefix.
std::vector<TensorSpec> block_tensors(const BlockSpec& spec);
// Every tensor the model needs, in a fixed order.
std::vector<TensorSpec> required_tensors(const ModelConfig& cfg);

// Exact-match check of names and shapes against the required set. Throws
// FormatError with missing_tensor, shape_mismatch or unexpected_tensor.
void validate_weights(const WeightStore& store, const ModelConfig& cfg);

// Seeded synthetic weights: linear weights and biases uniform in
// +-1/sqrt(fan_in), norm gains 1, shifts 0. Values are float-representable so
// a save/load cycle is lossless.
WeightStore synth_weights(const ModelConfig& cfg, std::uint64_t seed);

// Linear weights and biases zero; norm gains 1, shifts 0.
WeightStore zero_weights(const ModelConfig& cfg);

namespace names {
inline constexpr const char* kPhaseHead = "out.phase";
inline constexpr const char* kHeatHead = "out.heat";
}  // namespace names

}  // namespace lovit
