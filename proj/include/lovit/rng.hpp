#pragma once

#include <cstdint>

namespace lovit::rng {

// Counter-based generator built on the splitmix64 finalizer. Every random
// draw is a pure function of (key, counter), so sampling for any
// (frame, layer, head, query) can be reproduced without replaying a stream.

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t a) noexcept {
  return splitmix64(key ^ splitmix64(a * kGolden + 0x632BE59BD9B4E019ULL));
}

constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t a, std::uint64_t b) noexcept {
  return derive(derive(key, a), b);
}

constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t a, std::uint64_t b,
                               std::uint64_t c) noexcept {
  return derive(derive(derive(key, a), b), c);
}

// Uniform integer in [0, bound) for counter `n` under `key` (multiply-high reduction).
inline std::uint64_t uniform_index(std::uint64_t key, std::uint64_t n, std::uint64_t bound) noexcept {
  const std::uint64_t r = splitmix64(key + n * kGolden);
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(r) * bound) >> 64);
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_real(std::uint64_t key, std::uint64_t n) noexcept {
  return static_cast<double>(splitmix64(key + n * kGolden) >> 11) * 0x1.0p-53;
}

// Seed for the sparse sampler of a given frame and encoder layer. Streaming
// and batch evaluation both derive sampler seeds through this function.
constexpr std::uint64_t sparse_layer_seed(std::uint64_t root, std::uint64_t frame,
                                          std::uint64_t layer) noexcept {
  return derive(root, frame, layer);
}

}  // namespace lovit::rng
