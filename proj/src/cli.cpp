#include "lovit/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "lovit/bench.hpp"
#include "lovit/errors.hpp"
#include "lovit/io.hpp"
#include "lovit/metrics.hpp"
#include "lovit/rng.hpp"
#include "lovit/streaming.hpp"
#include "lovit/synth.hpp"
#include "lovit/verify.hpp"

namespace lovit {

namespace {

ModelConfig load_config(const std::string& path) {
  return path.empty() ? ModelConfig::full_defaults() : ModelConfig::load(path);
}

std::vector<std::size_t> parse_lengths(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad length '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw std::invalid_argument("--lengths is empty");
  return out;
}

struct GenArgs {
  std::string out_dir, config, weights, profile = "linear";
  std::size_t videos = 1, frames = 300, phases = 0, dim = 0;
  std::uint64_t seed = 0;
  double noise = 0.5, separation = 1.0;
};

int run_gen(const GenArgs& a) {
  ModelConfig cfg = load_config(a.config);
  SynthSpec spec;
  spec.frames = a.frames;
  spec.num_phases = a.phases ? a.phases : cfg.num_phases;
  spec.feature_dim = a.dim ? a.dim : cfg.feature_dim;
  spec.profile = parse_profile(a.profile);
  spec.class_seed = a.seed;
  spec.noise = a.noise;
  spec.separation = a.separation;
  std::filesystem::create_directories(a.out_dir);
  for (std::size_t i = 0; i < a.videos; ++i) {
    spec.seed = rng::derive(a.seed, i);
    const SynthVideo v = synth_gen(spec);
    char stem[32];
    std::snprintf(stem, sizeof stem, "video_%03zu", i);
    const std::filesystem::path base = std::filesystem::path(a.out_dir) / stem;
    io::write_features(base.string() + ".lvfe", v.features);
    io::write_labels(base.string() + ".csv", v.labels);
  }
  if (!a.weights.empty()) {
    if (cfg.num_phases != spec.num_phases || cfg.feature_dim != spec.feature_dim) {
      throw std::invalid_argument("gen --weights: config num_phases/feature_dim differ from the corpus");
    }
    WeightStore store = synth_weights(cfg, a.seed);
    fit_phase_head(store, cfg, spec, 0);
    io::write_weights(a.weights, store);
  }
  return 0;
}

int run_infer(const std::string& features, const std::string& weights, const std::string& out,
              const std::string& config, std::uint64_t seed) {
  const ModelConfig cfg = load_config(config);
  const Matrix e = io::read_features(features, cfg.feature_dim);
  const StreamEngine engine(io::read_weights(weights), cfg);
  StreamState state = engine.init_stream(seed);
  std::vector<PhaseOutput> outputs;
  outputs.reserve(e.rows());
  for (std::size_t t = 0; t < e.rows(); ++t) outputs.push_back(engine.push_frame(state, e.row(t)));
  io::write_text(out, io::format_predictions(outputs));
  return 0;
}

struct EvalArgs {
  std::vector<std::string> pred, gt;
  std::string per_phase_csv;
  bool relaxed = false;
  std::size_t phases = 7, fps = 1, window = 10;
};

int run_eval(const EvalArgs& a) {
  if (a.pred.size() != a.gt.size()) throw std::invalid_argument("eval: --pred and --gt counts differ");
  std::vector<EvalReport> reports;
  std::string csv;
  for (std::size_t i = 0; i < a.pred.size(); ++i) {
    const PhaseTrack pred = io::read_phase_column(a.pred[i]);
    const PhaseTrack gt = io::read_labels(a.gt[i]);
    reports.push_back(a.relaxed ? relaxed_boundary_eval(pred, gt, a.phases, a.fps, a.window)
                                : phase_level_metrics(pred, gt, a.phases));
    if (a.pred.size() > 1) std::cout << "video=" << a.pred[i] << "\n";
    std::cout << format_report(reports.back());
    csv += per_phase_csv(reports.back());
  }
  if (reports.size() > 1) std::cout << format_summary(summarize(reports));
  if (!a.per_phase_csv.empty()) io::write_text(a.per_phase_csv, csv);
  return 0;
}

int run_heatmap(const std::string& labels, double sigma_l, double sigma_r, const std::string& out) {
  const TransitionMap map = build_transition_map(io::read_labels(labels), sigma_l, sigma_r);
  std::string text = "frame,heat\n";
  char buf[64];
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.9f\n", i + 1, map.values[i]);
    text += buf;
  }
  if (out.empty()) {
    std::cout << text;
  } else {
    io::write_text(out, text);
  }
  return 0;
}

int run_verify() {
  bool ok = true;
  for (const auto& r : verify::run_all()) {
    std::cout << verify::format(r) << "\n";
    ok = ok && r.pass;
  }
  return ok ? 0 : 1;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Online surgical phase recognition engine"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Write a seeded synthetic corpus (features, labels, weights)");
  g->add_option("--out-dir", gen.out_dir, "Output directory")->required();
  g->add_option("--videos", gen.videos, "Number of videos");
  g->add_option("--frames", gen.frames, "Frames per video");
  g->add_option("--phases", gen.phases, "Phase count (default: config)");
  g->add_option("--dim", gen.dim, "Feature width (default: config)");
  g->add_option("--profile", gen.profile, "linear | recurring");
  g->add_option("--noise", gen.noise, "Feature noise standard deviation");
  g->add_option("--separation", gen.separation, "Class mean amplitude");
  g->add_option("--seed", gen.seed, "Corpus seed");
  g->add_option("--config", gen.config, "Model config file");
  g->add_option("--weights", gen.weights, "Also write seeded weights with a fitted phase head");

  std::string features, weights, out, config;
  std::uint64_t seed = 0;
  auto* inf = app.add_subcommand("infer", "Stream features through the model");
  inf->add_option("--features", features)->required();
  inf->add_option("--weights", weights)->required();
  inf->add_option("--out", out, "Prediction CSV")->required();
  inf->add_option("--config", config, "Model config file");
  inf->add_option("--seed", seed, "Sampler seed root");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score predictions against labels");
  e->add_option("--pred", ev.pred, "Prediction CSVs")->required();
  e->add_option("--gt", ev.gt, "Label CSVs, paired with --pred")->required();
  e->add_flag("--relaxed", ev.relaxed, "Relaxed boundary evaluation");
  e->add_option("--phases", ev.phases, "Phase count");
  e->add_option("--fps", ev.fps, "Frames per second");
  e->add_option("--window", ev.window, "Relaxation window in seconds");
  e->add_option("--per-phase-csv", ev.per_phase_csv, "Write per-phase scores");

  std::string labels, heat_out;
  double sigma_l = 3.0, sigma_r = 12.0;
  auto* h = app.add_subcommand("heatmap", "Transition map of a label track");
  h->add_option("--labels", labels)->required();
  h->add_option("--sigma-l", sigma_l);
  h->add_option("--sigma-r", sigma_r);
  h->add_option("--out", heat_out, "CSV path (default: stdout)");

  std::string lengths = "512,1024,2048,4096,8192", mode = "dense";
  std::size_t reps = 5, dim = 64;
  auto* b = app.add_subcommand("bench", "Time attention cores over sequence lengths");
  b->add_option("--lengths", lengths, "Comma-separated lengths");
  b->add_option("--mode", mode, "dense | sparse");
  b->add_option("--reps", reps, "Repetitions per length");
  b->add_option("--dim", dim, "Model width");
  b->add_option("--seed", seed, "Input seed");

  auto* v = app.add_subcommand("verify", "Run the oracle-equivalence suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  }

  try {
    if (*g) return run_gen(gen);
    if (*inf) return run_infer(features, weights, out, config, seed);
    if (*e) return run_eval(ev);
    if (*h) return run_heatmap(labels, sigma_l, sigma_r, heat_out);
    if (*b) {
      std::cout << format_bench(run_attention_bench(parse_lengths(lengths), parse_bench_mode(mode), dim, reps, seed));
      return 0;
    }
    if (*v) return run_verify();
  } catch (const FormatError& err) {
    std::cerr << "error [" << to_string(err.code()) << "]: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace lovit
