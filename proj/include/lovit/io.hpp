#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lovit/aggregator.hpp"
#include "lovit/matrix.hpp"
#include "lovit/transition_map.hpp"
#include "lovit/weights.hpp"

// On-disk formats. All binary formats are little-endian and versioned; values
// are stored as 32-bit floats, so writing rounds doubles to float.
namespace lovit::io {

inline constexpr std::uint16_t kFeatureVersion = 1;
inline constexpr std::uint16_t kWeightVersion = 1;

std::vector<std::uint8_t> read_bytes(const std::string& path);
void write_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

// Feature file: "LVFE", u16 version, u32 frame_count, u32 dim, then the
// row-major f32 payload.
std::vector<std::uint8_t> encode_features(const Matrix& features);
Matrix decode_features(std::span<const std::uint8_t> bytes);
void write_features(const std::string& path, const Matrix& features);
// `expected_dim`, when set, must match the stored width (shape_mismatch otherwise).
Matrix read_features(const std::string& path, std::optional<std::size_t> expected_dim = {});

// Weight file: "LVWT", u16 version, u32 tensor count, a directory of
// (u16 name length, name, u8 rank, u32 dims[rank], u64 payload offset) and
// then the f32 payloads in directory order.
std::vector<std::uint8_t> encode_weights(const WeightStore& store);
WeightStore decode_weights(std::span<const std::uint8_t> bytes);
void write_weights(const std::string& path, const WeightStore& store);
WeightStore read_weights(const std::string& path);

// `frame,phase` CSV with a header row; frames contiguous from 1.
std::string format_labels(const PhaseTrack& track);
PhaseTrack parse_labels(const std::string& text);
void write_labels(const std::string& path, const PhaseTrack& track);
PhaseTrack read_labels(const std::string& path);

// `frame,phase,heat,confidence` CSV.
std::string format_predictions(const std::vector<PhaseOutput>& outputs);
// Reads the `phase` column of a label or prediction CSV.
PhaseTrack parse_phase_column(const std::string& text);
PhaseTrack read_phase_column(const std::string& path);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace lovit::io
