#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lovit/aggregator.hpp"
#include "lovit/attention.hpp"
#include "lovit/errors.hpp"
#include "lovit/io.hpp"
#include "lovit/metrics.hpp"
#include "lovit/streaming.hpp"
#include "lovit/synth.hpp"
#include "lovit/verify.hpp"

namespace py = pybind11;
using namespace lovit;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

Array to_array(const Matrix& m) {
  Array a({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), a.mutable_data());
  return a;
}

Array to_array(const std::vector<double>& v) {
  Array a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

PhaseTrack track(const std::vector<std::size_t>& labels) { return PhaseTrack{labels}; }

py::dict output_dict(const PhaseOutput& o) {
  py::dict d;
  d["frame"] = o.frame;
  d["logits"] = to_array(o.logits);
  d["heat"] = o.heat;
  d["phase"] = o.predicted_phase;
  d["confidence"] = o.confidence;
  return d;
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["accuracy"] = r.accuracy_pct;
  d["precision"] = r.mean_precision;
  d["recall"] = r.mean_recall;
  d["jaccard"] = r.mean_jaccard;
  py::list phases;
  for (const auto& p : r.per_phase) {
    py::dict q;
    q["phase"] = p.phase;
    q["precision"] = p.precision_pct;
    q["recall"] = p.recall_pct ? py::cast(*p.recall_pct) : py::none();
    q["jaccard"] = p.jaccard_pct;
    phases.append(q);
  }
  d["per_phase"] = phases;
  return d;
}

AttentionConfig attn_cfg(const Matrix& q, std::size_t heads, bool causal, std::int64_t offset) {
  return {q.cols(), heads, causal, offset};
}

}  // namespace

PYBIND11_MODULE(lovit, m) {
  m.doc() = "Online surgical phase recognition engine";

  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_static("toy", &ModelConfig::toy)
      .def_static("parse", &ModelConfig::parse)
      .def_static("load", &ModelConfig::load)
      .def("to_text", &ModelConfig::to_text)
      .def("validate", &ModelConfig::validate)
      .def_readwrite("lambda1", &ModelConfig::lambda1)
      .def_readwrite("lambda2", &ModelConfig::lambda2)
      .def_readwrite("feature_dim", &ModelConfig::feature_dim)
      .def_readwrite("dim_s", &ModelConfig::dim_s)
      .def_readwrite("dim_l", &ModelConfig::dim_l)
      .def_readwrite("dim_g", &ModelConfig::dim_g)
      .def_readwrite("head_fusion_dim", &ModelConfig::head_fusion_dim)
      .def_readwrite("num_phases", &ModelConfig::num_phases)
      .def("__eq__", [](const ModelConfig& a, const ModelConfig& b) { return a == b; });

  py::class_<WeightStore>(m, "WeightStore")
      .def("__len__", &WeightStore::size)
      .def("__contains__", &WeightStore::contains)
      .def("names", [](const WeightStore& w) {
        std::vector<std::string> out;
        for (const auto& [name, t] : w.tensors()) out.push_back(name);
        return out;
      });

  m.def("synth_weights", &synth_weights, py::arg("config"), py::arg("seed") = 0);
  m.def("read_weights", &io::read_weights);
  m.def("write_weights", &io::write_weights);
  m.def("read_features", [](const std::string& p) { return to_array(io::read_features(p)); });
  m.def("write_features", [](const std::string& p, const Array& a) { io::write_features(p, to_matrix(a)); });

  m.def(
      "dense_attention",
      [](const Array& q, const Array& k, const Array& v, std::size_t heads, bool causal, std::int64_t offset) {
        const Matrix Q = to_matrix(q);
        return to_array(dense_attention(Q, to_matrix(k), to_matrix(v), attn_cfg(Q, heads, causal, offset)));
      },
      py::arg("q"), py::arg("k"), py::arg("v"), py::arg("num_heads") = 1, py::arg("causal") = false,
      py::arg("causal_offset") = 0);
  m.def(
      "probsparse_attention",
      [](const Array& q, const Array& k, const Array& v, std::size_t heads, bool causal, std::int64_t offset,
         double top_u_factor, double sample_factor, std::uint64_t seed) {
        const Matrix Q = to_matrix(q);
        return to_array(probsparse_attention(Q, to_matrix(k), to_matrix(v), attn_cfg(Q, heads, causal, offset),
                                             SparseConfig{top_u_factor, sample_factor, seed}));
      },
      py::arg("q"), py::arg("k"), py::arg("v"), py::arg("num_heads") = 1, py::arg("causal") = false,
      py::arg("causal_offset") = 0, py::arg("top_u_factor") = 5.0, py::arg("sample_factor") = 1.0,
      py::arg("seed") = 0);

  m.def(
      "transition_map",
      [](const std::vector<std::size_t>& labels, double sl, double sr) {
        return to_array(build_transition_map(track(labels), sl, sr).values);
      },
      py::arg("labels"), py::arg("sigma_l") = 3.0, py::arg("sigma_r") = 12.0);
  m.def(
      "joint_loss",
      [](const Array& logits, const std::vector<double>& heat, const std::vector<std::size_t>& labels,
         double sl, double sr) {
        const Matrix L = to_matrix(logits);
        std::vector<Vector> rows;
        for (std::size_t r = 0; r < L.rows(); ++r) rows.emplace_back(L.row(r).begin(), L.row(r).end());
        const PhaseTrack t = track(labels);
        return joint_loss(rows, heat, t, build_transition_map(t, sl, sr));
      },
      py::arg("logits"), py::arg("heat"), py::arg("labels"), py::arg("sigma_l") = 3.0,
      py::arg("sigma_r") = 12.0);
  m.def(
      "clip_indices", [](std::int64_t t, std::int64_t b, std::size_t alpha) { return clip_indices(t, b, {alpha}); },
      py::arg("t"), py::arg("b"), py::arg("alpha") = 30);
  m.def(
      "evaluate",
      [](const std::vector<std::size_t>& pred, const std::vector<std::size_t>& gt, std::size_t k, bool relaxed) {
        return report_dict(relaxed ? relaxed_boundary_eval(track(pred), track(gt), k)
                                   : phase_level_metrics(track(pred), track(gt), k));
      },
      py::arg("pred"), py::arg("gt"), py::arg("num_phases") = 7, py::arg("relaxed") = false);

  m.def(
      "synth_gen",
      [](std::uint64_t seed, std::size_t frames, std::size_t k, std::size_t dim, const std::string& profile,
         std::uint64_t class_seed) {
        SynthSpec s;
        s.seed = seed;
        s.frames = frames;
        s.num_phases = k;
        s.feature_dim = dim;
        s.profile = parse_profile(profile);
        s.class_seed = class_seed;
        const SynthVideo v = synth_gen(s);
        return py::make_tuple(to_array(v.features), v.labels.labels);
      },
      py::arg("seed"), py::arg("frames"), py::arg("num_phases") = 7, py::arg("feature_dim") = 768,
      py::arg("profile") = "linear", py::arg("class_seed") = 0);

  m.def(
      "forward_all",
      [](const Array& e, const WeightStore& store, const ModelConfig& cfg, std::uint64_t seed) {
        const ModelWeights w = ModelWeights::load(store, cfg);
        py::list out;
        for (const auto& o : lovit_forward_all({Role::e, 1, to_matrix(e)}, w, cfg, seed)) out.append(output_dict(o));
        return out;
      },
      py::arg("features"), py::arg("weights"), py::arg("config"), py::arg("seed") = 0);

  py::class_<StreamState>(m, "StreamState")
      .def_readonly("frame_count", &StreamState::frame_count)
      .def("__eq__", [](const StreamState& a, const StreamState& b) { return a == b; });

  py::class_<StreamEngine>(m, "StreamEngine")
      .def(py::init<const WeightStore&, ModelConfig>(), py::arg("weights"), py::arg("config"))
      .def("init_stream", &StreamEngine::init_stream, py::arg("seed") = 0)
      .def("push_frame", [](const StreamEngine& e, StreamState& s, const Array& row) {
        if (row.ndim() != 1) throw std::invalid_argument("expected a 1-d feature row");
        return output_dict(e.push_frame(s, std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))));
      });

  m.def("checkpoint", [](const StreamState& s) {
    const auto bytes = checkpoint(s);
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  });
  m.def("restore", [](const py::bytes& b) {
    const std::string s = b;
    return restore(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  });

  m.def("verify", [] {
    py::list out;
    for (const auto& r : verify::run_all()) {
      py::dict d;
      d["case"] = r.case_id;
      d["max_abs_diff"] = r.max_abs_diff;
      d["tolerance"] = r.tolerance;
      d["pass"] = r.pass;
      out.append(d);
    }
    return out;
  });
}
