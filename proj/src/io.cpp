#include "lovit/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "lovit/binary.hpp"
#include "lovit/errors.hpp"

namespace lovit::io {

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(ErrorCode::io_failure, "cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(ErrorCode::io_failure, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(ErrorCode::io_failure, "write failed: " + path);
}

std::string read_text(const std::string& path) {
  auto b = read_bytes(path);
  return std::string(b.begin(), b.end());
}

void write_text(const std::string& path, const std::string& text) {
  write_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

namespace {
void check_version(std::uint16_t got, std::uint16_t want, const char* what) {
  if (got != want) {
    throw FormatError(ErrorCode::bad_version, std::string(what) + ": unsupported version " +
                                                  std::to_string(got));
  }
}
}  // namespace

std::vector<std::uint8_t> encode_features(const Matrix& features) {
  binary::Writer w;
  w.put_tag("LVFE");
  w.put(kFeatureVersion);
  w.put(static_cast<std::uint32_t>(features.rows()));
  w.put(static_cast<std::uint32_t>(features.cols()));
  for (double v : features.data()) w.put(static_cast<float>(v));
  return std::move(w.bytes());
}

Matrix decode_features(std::span<const std::uint8_t> bytes) {
  binary::Reader r(bytes, "feature file");
  r.expect_tag("LVFE");
  check_version(r.get<std::uint16_t>(), kFeatureVersion, "feature file");
  const auto frames = r.get<std::uint32_t>();
  const auto dim = r.get<std::uint32_t>();
  const std::uint64_t payload = std::uint64_t{frames} * dim * 4;
  if (r.remaining() < payload) throw FormatError(ErrorCode::truncated, "feature file: truncated payload");
  if (r.remaining() > payload) throw FormatError(ErrorCode::bad_format, "feature file: trailing bytes");
  Matrix m(frames, dim);
  for (double& v : m.data()) v = static_cast<double>(r.get<float>());
  return m;
}

void write_features(const std::string& path, const Matrix& features) {
  write_bytes(path, encode_features(features));
}

Matrix read_features(const std::string& path, std::optional<std::size_t> expected_dim) {
  Matrix m = decode_features(read_bytes(path));
  if (expected_dim && m.cols() != *expected_dim) {
    throw FormatError(ErrorCode::shape_mismatch, path + ": feature width " + std::to_string(m.cols()) +
                                                     " != expected " + std::to_string(*expected_dim));
  }
  return m;
}

std::vector<std::uint8_t> encode_weights(const WeightStore& store) {
  binary::Writer w;
  w.put_tag("LVWT");
  w.put(kWeightVersion);
  w.put(static_cast<std::uint32_t>(store.size()));
  std::uint64_t offset = 0;
  for (const auto& [name, t] : store.tensors()) {
    w.put_string16(name);
    w.put(static_cast<std::uint8_t>(t.shape.size()));
    for (std::size_t d : t.shape) w.put(static_cast<std::uint32_t>(d));
    w.put(offset);
    offset += 4 * std::uint64_t{t.values.size()};
  }
  for (const auto& [name, t] : store.tensors()) {
    for (double v : t.values) w.put(static_cast<float>(v));
  }
  return std::move(w.bytes());
}

WeightStore decode_weights(std::span<const std::uint8_t> bytes) {
  binary::Reader r(bytes, "weight file");
  r.expect_tag("LVWT");
  check_version(r.get<std::uint16_t>(), kWeightVersion, "weight file");
  const auto count = r.get<std::uint32_t>();
  struct Entry {
    std::string name;
    std::vector<std::size_t> shape;
    std::uint64_t offset;
  };
  std::vector<Entry> dir;
  std::set<std::string> seen;
  std::uint64_t expected_offset = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    Entry e;
    e.name = r.get_string16();
    if (!seen.insert(e.name).second) {
      throw FormatError(ErrorCode::duplicate_tensor, "weight file: duplicate tensor " + e.name);
    }
    const auto rank = r.get<std::uint8_t>();
    std::uint64_t numel = 1;
    for (std::uint8_t d = 0; d < rank; ++d) {
      e.shape.push_back(r.get<std::uint32_t>());
      numel *= e.shape.back();
    }
    e.offset = r.get<std::uint64_t>();
    if (e.offset != expected_offset) {
      throw FormatError(ErrorCode::shape_mismatch,
                        "weight file: directory offset of " + e.name + " inconsistent with shapes");
    }
    expected_offset += 4 * numel;
    dir.push_back(std::move(e));
  }
  if (r.remaining() < expected_offset) throw FormatError(ErrorCode::truncated, "weight file: truncated payload");
  if (r.remaining() > expected_offset) throw FormatError(ErrorCode::bad_format, "weight file: trailing bytes");
  WeightStore store;
  for (auto& e : dir) {
    Tensor t{std::move(e.shape), {}};
    t.values.resize(t.numel());
    for (double& v : t.values) v = static_cast<double>(r.get<float>());
    store.insert(e.name, std::move(t));
  }
  return store;
}

void write_weights(const std::string& path, const WeightStore& store) {
  write_bytes(path, encode_weights(store));
}

WeightStore read_weights(const std::string& path) { return decode_weights(read_bytes(path)); }

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::int64_t to_int(const std::string& s, std::size_t lineno) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw FormatError(ErrorCode::bad_format,
                      "csv line " + std::to_string(lineno) + ": expected integer, got `" + s + "`");
  }
  return v;
}

// Parses a CSV with a header naming `frame` and `phase`; frames must run 1..T.
PhaseTrack parse_track(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(ErrorCode::bad_format, "csv: missing header");
  const auto header = split(line, ',');
  std::ptrdiff_t frame_col = -1, phase_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "frame") frame_col = static_cast<std::ptrdiff_t>(i);
    if (header[i] == "phase") phase_col = static_cast<std::ptrdiff_t>(i);
  }
  if (frame_col < 0 || phase_col < 0) {
    throw FormatError(ErrorCode::bad_format, "csv: header must name `frame` and `phase`");
  }
  PhaseTrack track;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw FormatError(ErrorCode::bad_format, "csv line " + std::to_string(lineno) + ": wrong column count");
    }
    const auto frame = to_int(cells[static_cast<std::size_t>(frame_col)], lineno);
    if (frame != static_cast<std::int64_t>(track.labels.size()) + 1) {
      throw FormatError(ErrorCode::bad_format, "csv line " + std::to_string(lineno) +
                                                   ": frames must be contiguous from 1");
    }
    const auto phase = to_int(cells[static_cast<std::size_t>(phase_col)], lineno);
    if (phase < 0) throw FormatError(ErrorCode::bad_format, "csv line " + std::to_string(lineno) + ": negative phase");
    track.labels.push_back(static_cast<std::size_t>(phase));
  }
  return track;
}

}  // namespace

std::string format_labels(const PhaseTrack& track) {
  std::string out = "frame,phase\n";
  for (std::size_t i = 0; i < track.labels.size(); ++i) {
    out += std::to_string(i + 1) + "," + std::to_string(track.labels[i]) + "\n";
  }
  return out;
}

PhaseTrack parse_labels(const std::string& text) { return parse_track(text); }

void write_labels(const std::string& path, const PhaseTrack& track) { write_text(path, format_labels(track)); }

PhaseTrack read_labels(const std::string& path) { return parse_labels(read_text(path)); }

std::string format_predictions(const std::vector<PhaseOutput>& outputs) {
  std::string out = "frame,phase,heat,confidence\n";
  char buf[128];
  for (const auto& o : outputs) {
    std::snprintf(buf, sizeof buf, "%lld,%zu,%.9f,%.9f\n", static_cast<long long>(o.frame),
                  o.predicted_phase, o.heat, o.confidence);
    out += buf;
  }
  return out;
}

PhaseTrack parse_phase_column(const std::string& text) { return parse_track(text); }

PhaseTrack read_phase_column(const std::string& path) { return parse_phase_column(read_text(path)); }

}  // namespace lovit::io
