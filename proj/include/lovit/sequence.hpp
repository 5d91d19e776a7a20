#pragma once

#include <cstdint>
#include <stdexcept>

#include "lovit/matrix.hpp"

namespace lovit {

// e: spatial features, s/l: small/large local features, g: global features.
enum class Role : std::uint8_t { e, s, l, g };

inline const char* to_string(Role r) noexcept {
  switch (r) {
    case Role::e: return "e";
    case Role::s: return "s";
    case Role::l: return "l";
    case Role::g: return "g";
  }
  return "?";
}

// Contiguous run of frames. Frames are 1-based; frame 0 is reserved for the
// placeholder row that stands in for a missing previous clip.
struct FeatureSequence {
  Role role = Role::e;
  std::int64_t start_frame = 1;
  Matrix rows;

  std::size_t length() const noexcept { return rows.rows(); }
  std::size_t dim() const noexcept { return rows.cols(); }
  // One past the last frame.
  std::int64_t end_frame() const noexcept {
    return start_frame + static_cast<std::int64_t>(rows.rows());
  }

  // Frames [first, last] (inclusive) of this sequence.
  FeatureSequence frames(std::int64_t first, std::int64_t last) const {
    if (first < start_frame || last >= end_frame() || first > last + 1) {
      throw std::out_of_range("feature sequence: frames [" + std::to_string(first) + ", " +
                              std::to_string(last) + "] outside [" + std::to_string(start_frame) +
                              ", " + std::to_string(end_frame() - 1) + "]");
    }
    return {role, first,
            rows.slice_rows(static_cast<std::size_t>(first - start_frame),
                            static_cast<std::size_t>(last + 1 - start_frame))};
  }

  bool operator==(const FeatureSequence&) const = default;
};

}  // namespace lovit
