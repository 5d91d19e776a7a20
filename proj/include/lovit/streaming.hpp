#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "lovit/aggregator.hpp"
#include "lovit/config.hpp"
#include "lovit/weights.hpp"

namespace lovit {

// Fixed-capacity FIFO of feature rows.
class RowRing {
 public:
  RowRing() = default;
  RowRing(std::size_t capacity, std::size_t dim)
      : capacity_(capacity), dim_(dim), data_(capacity * dim) {}

  void push(std::span<const double> row);
  std::size_t size() const noexcept { return count_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t dim() const noexcept { return dim_; }
  // Oldest row first.
  Matrix to_matrix() const;

  bool operator==(const RowRing& other) const {
    return capacity_ == other.capacity_ && dim_ == other.dim_ && to_matrix() == other.to_matrix();
  }

 private:
  std::size_t capacity_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
  std::size_t head_ = 0;  // slot of the oldest row
  std::size_t count_ = 0;
};

// Everything a stream needs between frames. Previous-clip inputs are slices of
// the histories, so they are not stored separately.
struct StreamState {
  std::int64_t frame_count = 0;
  std::uint64_t seed_root = 0;
  ModelConfig config;
  RowRing e_window;  // last lambda1 spatial features
  FeatureSequence s_history{Role::s, 1, {}};
  FeatureSequence l_history{Role::l, 1, {}};
  std::vector<PhaseOutput> outputs;

  bool operator==(const StreamState&) const = default;
};

// Validates the weights against the config and returns an empty stream.
StreamState init_stream(const WeightStore& weights, const ModelConfig& cfg, std::uint64_t seed);

// Online per-frame recognizer. One engine can drive any number of streams;
// each StreamState has a single owner.
class StreamEngine {
 public:
  StreamEngine(const WeightStore& weights, ModelConfig cfg);
  StreamEngine(std::shared_ptr<const ModelWeights> weights, ModelConfig cfg);

  const ModelConfig& config() const noexcept { return cfg_; }
  const ModelWeights& weights() const noexcept { return *weights_; }

  StreamState init_stream(std::uint64_t seed) const;
  // Consumes e_t (length feature_dim) and returns the output for the new frame.
  PhaseOutput push_frame(StreamState& state, std::span<const double> e_t) const;

 private:
  ModelConfig cfg_;
  std::shared_ptr<const ModelWeights> weights_;
};

inline constexpr std::uint16_t kCheckpointVersion = 1;

// "LVCK", u16 version, u32 section count, then sections of
// (u16 name length, name, u64 payload length, payload). Little-endian.
std::vector<std::uint8_t> checkpoint(const StreamState& state);
StreamState restore(std::span<const std::uint8_t> bytes);

}  // namespace lovit
