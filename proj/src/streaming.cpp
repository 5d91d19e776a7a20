#include "lovit/streaming.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

#include "lovit/binary.hpp"
#include "lovit/errors.hpp"

namespace lovit {

void RowRing::push(std::span<const double> row) {
  if (row.size() != dim_) throw std::invalid_argument("ring: row width mismatch");
  if (capacity_ == 0) return;
  std::size_t slot;
  if (count_ < capacity_) {
    slot = (head_ + count_) % capacity_;
    ++count_;
  } else {
    slot = head_;
    head_ = (head_ + 1) % capacity_;
  }
  std::copy(row.begin(), row.end(), data_.begin() + static_cast<std::ptrdiff_t>(slot * dim_));
}

Matrix RowRing::to_matrix() const {
  Matrix out(count_, dim_);
  for (std::size_t i = 0; i < count_; ++i) {
    const std::size_t slot = (head_ + i) % capacity_;
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(slot * dim_), dim_, out.row(i).begin());
  }
  return out;
}

namespace {

StreamState empty_state(const ModelConfig& cfg, std::uint64_t seed) {
  StreamState st;
  st.seed_root = seed;
  st.config = cfg;
  st.e_window = RowRing(cfg.lambda1, cfg.feature_dim);
  st.s_history = {Role::s, 1, Matrix(0, cfg.dim_s)};
  st.l_history = {Role::l, 1, Matrix(0, cfg.dim_l)};
  return st;
}

FeatureSequence slice(const FeatureSequence& history, FrameRange r) {
  if (r.empty()) return {history.role, 0, Matrix(0, history.dim())};
  return history.frames(r.first, r.last);
}

}  // namespace

StreamState init_stream(const WeightStore& weights, const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  validate_weights(weights, cfg);
  return empty_state(cfg, seed);
}

StreamEngine::StreamEngine(const WeightStore& weights, ModelConfig cfg)
    : cfg_(std::move(cfg)),
      weights_(std::make_shared<const ModelWeights>(ModelWeights::load(weights, cfg_))) {}

StreamEngine::StreamEngine(std::shared_ptr<const ModelWeights> weights, ModelConfig cfg)
    : cfg_(std::move(cfg)), weights_(std::move(weights)) {
  cfg_.validate();
  if (!weights_) throw std::invalid_argument("stream engine: null weights");
}

StreamState StreamEngine::init_stream(std::uint64_t seed) const { return empty_state(cfg_, seed); }

PhaseOutput StreamEngine::push_frame(StreamState& state, std::span<const double> e_t) const {
  if (!(state.config == cfg_)) {
    throw std::invalid_argument("push_frame: stream state belongs to a different model config");
  }
  if (e_t.size() != cfg_.feature_dim) {
    throw std::invalid_argument("push_frame: feature width " + std::to_string(e_t.size()) +
                                " != D_s " + std::to_string(cfg_.feature_dim));
  }
  const ModelWeights& w = *weights_;
  const std::int64_t t = state.frame_count + 1;

  state.e_window.push(e_t);
  const FeatureSequence e_win{Role::e, t - static_cast<std::int64_t>(state.e_window.size()) + 1,
                              state.e_window.to_matrix()};
  const FeatureSequence s_out =
      l_trans_forward(e_win, slice(state.s_history, previous_clip(t, cfg_.lambda1)), w, cfg_);
  state.s_history.rows.append_row(s_out.rows.row(s_out.length() - 1));

  const FeatureSequence l_out =
      l_trans_forward(slice(state.s_history, current_window(t, cfg_.lambda2)),
                      slice(state.l_history, previous_clip(t, cfg_.lambda2)), w, cfg_);
  state.l_history.rows.append_row(l_out.rows.row(l_out.length() - 1));

  const FrameRange small = current_window(t, cfg_.lambda1);
  const FeatureSequence l_win = slice(state.l_history, small);
  const FeatureSequence g_win = g_informer_forward(state.l_history, l_win, w, cfg_, state.seed_root);
  auto frame_outputs = multiscale_head(slice(state.s_history, small), l_win, g_win, w, cfg_);

  state.frame_count = t;
  state.outputs.push_back(std::move(frame_outputs.back()));
  return state.outputs.back();
}

namespace {

void put_matrix(binary::Writer& w, const Matrix& m) {
  w.put(static_cast<std::uint64_t>(m.rows()));
  w.put(static_cast<std::uint64_t>(m.cols()));
  for (double v : m.data()) w.put(v);
}

Matrix get_matrix(binary::Reader& r) {
  const auto rows = r.get<std::uint64_t>();
  const auto cols = r.get<std::uint64_t>();
  if (cols != 0 && rows > r.remaining() / 8 / cols) {
    throw FormatError(ErrorCode::truncated, "checkpoint: truncated matrix");
  }
  Matrix m(rows, cols);
  for (double& v : m.data()) v = r.get<double>();
  return m;
}

void put_section(binary::Writer& out, const std::string& name, binary::Writer& payload) {
  out.put_string16(name);
  out.put(static_cast<std::uint64_t>(payload.size()));
  out.put_bytes(payload.bytes());
}

}  // namespace

std::vector<std::uint8_t> checkpoint(const StreamState& state) {
  binary::Writer meta, cfg, ewin, shist, lhist, outs;
  meta.put(state.frame_count);
  meta.put(state.seed_root);
  const std::string text = state.config.to_text();
  cfg.put(static_cast<std::uint64_t>(text.size()));
  cfg.put_bytes({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
  put_matrix(ewin, state.e_window.to_matrix());
  put_matrix(shist, state.s_history.rows);
  put_matrix(lhist, state.l_history.rows);
  outs.put(static_cast<std::uint64_t>(state.outputs.size()));
  for (const auto& o : state.outputs) {
    outs.put(o.frame);
    outs.put(static_cast<std::uint64_t>(o.logits.size()));
    for (double l : o.logits) outs.put(l);
    outs.put(o.heat);
    outs.put(static_cast<std::uint64_t>(o.predicted_phase));
    outs.put(o.confidence);
  }

  binary::Writer out;
  out.put_tag("LVCK");
  out.put(kCheckpointVersion);
  out.put(static_cast<std::uint32_t>(6));
  put_section(out, "meta", meta);
  put_section(out, "config", cfg);
  put_section(out, "e_window", ewin);
  put_section(out, "s_history", shist);
  put_section(out, "l_history", lhist);
  put_section(out, "outputs", outs);
  return std::move(out.bytes());
}

StreamState restore(std::span<const std::uint8_t> bytes) {
  binary::Reader in(bytes, "checkpoint");
  in.expect_tag("LVCK");
  const auto version = in.get<std::uint16_t>();
  if (version != kCheckpointVersion) {
    throw FormatError(ErrorCode::bad_version,
                      "checkpoint: unsupported version " + std::to_string(version));
  }
  const auto sections = in.get<std::uint32_t>();
  std::map<std::string, std::span<const std::uint8_t>> payloads;
  for (std::uint32_t i = 0; i < sections; ++i) {
    const std::string name = in.get_string16();
    const auto len = in.get<std::uint64_t>();
    if (len > in.remaining()) throw FormatError(ErrorCode::truncated, "checkpoint: truncated section " + name);
    payloads[name] = in.get_bytes(static_cast<std::size_t>(len));
  }
  if (in.remaining() != 0) throw FormatError(ErrorCode::bad_format, "checkpoint: trailing bytes");
  auto section = [&](const char* name) {
    auto it = payloads.find(name);
    if (it == payloads.end()) {
      throw FormatError(ErrorCode::bad_format, std::string("checkpoint: missing section ") + name);
    }
    return binary::Reader(it->second, std::string("checkpoint section ") + name);
  };

  auto meta = section("meta");
  const auto frame_count = meta.get<std::int64_t>();
  const auto seed_root = meta.get<std::uint64_t>();
  auto cfg_r = section("config");
  const auto text_len = cfg_r.get<std::uint64_t>();
  auto text_bytes = cfg_r.get_bytes(static_cast<std::size_t>(text_len));
  ModelConfig cfg;
  try {
    cfg = ModelConfig::parse(std::string(text_bytes.begin(), text_bytes.end()));
  } catch (const std::invalid_argument& e) {
    throw FormatError(ErrorCode::bad_format, std::string("checkpoint: bad config: ") + e.what());
  }

  StreamState st = empty_state(cfg, seed_root);
  st.frame_count = frame_count;
  auto ew = section("e_window");
  const Matrix e_rows = get_matrix(ew);
  auto sh = section("s_history");
  st.s_history.rows = get_matrix(sh);
  auto lh = section("l_history");
  st.l_history.rows = get_matrix(lh);
  const auto expect_rows = static_cast<std::size_t>(frame_count < 0 ? 0 : frame_count);
  if (frame_count < 0 || e_rows.cols() != cfg.feature_dim || e_rows.rows() > cfg.lambda1 ||
      e_rows.rows() != std::min(expect_rows, cfg.lambda1) ||
      st.s_history.rows.rows() != expect_rows || st.s_history.rows.cols() != cfg.dim_s ||
      st.l_history.rows.rows() != expect_rows || st.l_history.rows.cols() != cfg.dim_l) {
    throw FormatError(ErrorCode::shape_mismatch, "checkpoint: state shapes inconsistent with config");
  }
  for (std::size_t r = 0; r < e_rows.rows(); ++r) st.e_window.push(e_rows.row(r));

  auto outs = section("outputs");
  const auto n = outs.get<std::uint64_t>();
  if (n != expect_rows) throw FormatError(ErrorCode::shape_mismatch, "checkpoint: output log length mismatch");
  for (std::uint64_t i = 0; i < n; ++i) {
    PhaseOutput o;
    o.frame = outs.get<std::int64_t>();
    const auto k = outs.get<std::uint64_t>();
    if (k != cfg.num_phases) throw FormatError(ErrorCode::shape_mismatch, "checkpoint: logits width mismatch");
    o.logits.resize(k);
    for (double& l : o.logits) l = outs.get<double>();
    o.heat = outs.get<double>();
    o.predicted_phase = static_cast<std::size_t>(outs.get<std::uint64_t>());
    o.confidence = outs.get<double>();
    st.outputs.push_back(std::move(o));
  }
  return st;
}

}  // namespace lovit
