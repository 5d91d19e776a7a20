#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "lovit/errors.hpp"
#include "lovit/io.hpp"
#include "lovit/synth.hpp"
#include "test_util.hpp"

using namespace lovit;
namespace fs = std::filesystem;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const FormatError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no FormatError thrown";
  return ErrorCode::io_failure;
}

Matrix float_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix m = test::random_matrix(rows, cols, seed);
  for (double& v : m.data()) v = static_cast<float>(v);
  return m;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "lovit_test_io";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Features, RoundTripIsLossless) {
  const Matrix m = float_matrix(7, 5, 1);
  const auto bytes = io::encode_features(m);
  EXPECT_EQ(bytes.size(), 4u + 2 + 4 + 4 + 7 * 5 * 4);
  EXPECT_EQ(io::decode_features(bytes), m);
  EXPECT_EQ(io::encode_features(io::decode_features(bytes)), bytes);

  const auto path = scratch("f.lvfe").string();
  io::write_features(path, m);
  EXPECT_EQ(io::read_features(path, 5), m);
  EXPECT_EQ(code_of([&] { io::read_features(path, 6); }), ErrorCode::shape_mismatch);
}

TEST(Features, CorruptionCodes) {
  const auto good = io::encode_features(float_matrix(3, 2, 2));
  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(code_of([&] { io::decode_features(bad_magic); }), ErrorCode::bad_magic);
  auto bad_version = good;
  bad_version[4] = 9;
  EXPECT_EQ(code_of([&] { io::decode_features(bad_version); }), ErrorCode::bad_version);
  for (std::size_t cut : {std::size_t{2}, std::size_t{8}, good.size() - 1}) {
    std::vector<std::uint8_t> t(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_EQ(code_of([&] { io::decode_features(t); }), ErrorCode::truncated) << cut;
  }
  auto trailing = good;
  trailing.push_back(0);
  EXPECT_EQ(code_of([&] { io::decode_features(trailing); }), ErrorCode::bad_format);
  EXPECT_EQ(code_of([] { io::read_features("/nonexistent/dir/x.lvfe"); }), ErrorCode::io_failure);
}

TEST(Weights, RoundTripAndValidation) {
  const ModelConfig cfg = ModelConfig::toy();
  const WeightStore store = synth_weights(cfg, 11);
  const auto bytes = io::encode_weights(store);
  const WeightStore back = io::decode_weights(bytes);
  EXPECT_EQ(back, store);
  EXPECT_EQ(io::encode_weights(back), bytes);
  EXPECT_NO_THROW(validate_weights(back, cfg));

  WeightStore missing = store;
  const std::string victim = required_tensors(cfg)[3].name;
  missing.erase(victim);
  try {
    validate_weights(missing, cfg);
    FAIL() << "missing tensor accepted";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.code(), ErrorCode::missing_tensor);
    EXPECT_NE(std::string(e.what()).find(victim), std::string::npos);
  }

  WeightStore extra = store;
  extra.insert("stray.tensor", Tensor{{1}, {0.0}});
  EXPECT_EQ(code_of([&] { validate_weights(extra, cfg); }), ErrorCode::unexpected_tensor);

  WeightStore reshaped = store;
  reshaped.at(victim).shape.push_back(1);
  EXPECT_EQ(code_of([&] { validate_weights(reshaped, cfg); }), ErrorCode::shape_mismatch);
}

TEST(Weights, DirectoryErrors) {
  WeightStore s;
  s.insert("a", Tensor{{2}, {1.0, 2.0}});
  s.insert("b", Tensor{{1, 1}, {3.0}});
  EXPECT_EQ(code_of([&] { s.insert("a", Tensor{{1}, {0.0}}); }), ErrorCode::duplicate_tensor);
  EXPECT_EQ(code_of([&] { s.at("zz"); }), ErrorCode::missing_tensor);

  const auto good = io::encode_weights(s);
  // Rename "b" to "a" in the directory: header(4+2+4), entry a = 2+1+1+4+8.
  auto dup = good;
  dup[10 + 16 + 2] = 'a';
  EXPECT_EQ(code_of([&] { io::decode_weights(dup); }), ErrorCode::duplicate_tensor);

  auto bad_offset = good;
  bad_offset[10 + 8] = 1;  // low byte of entry a's offset
  EXPECT_EQ(code_of([&] { io::decode_weights(bad_offset); }), ErrorCode::shape_mismatch);

  std::vector<std::uint8_t> cut(good.begin(), good.end() - 1);
  EXPECT_EQ(code_of([&] { io::decode_weights(cut); }), ErrorCode::truncated);
  auto trailing = good;
  trailing.push_back(7);
  EXPECT_EQ(code_of([&] { io::decode_weights(trailing); }), ErrorCode::bad_format);
  auto bad_version = good;
  bad_version[4] = 2;
  EXPECT_EQ(code_of([&] { io::decode_weights(bad_version); }), ErrorCode::bad_version);
}

TEST(Weights, SynthValuesAreFloatsWithUnitGains) {
  const ModelConfig cfg = ModelConfig::toy();
  const WeightStore a = synth_weights(cfg, 3);
  EXPECT_EQ(a, synth_weights(cfg, 3));
  EXPECT_FALSE(a == synth_weights(cfg, 4));
  for (const auto& [name, t] : a.tensors()) {
    for (double v : t.values) ASSERT_EQ(v, static_cast<double>(static_cast<float>(v))) << name;
    const bool gain = name.size() > 5 && name.compare(name.size() - 5, 5, ".gain") == 0;
    const bool shift = name.size() > 6 && name.compare(name.size() - 6, 6, ".shift") == 0;
    for (double v : t.values) {
      if (gain) {
        EXPECT_EQ(v, 1.0) << name;
      }
      if (shift) {
        EXPECT_EQ(v, 0.0) << name;
      }
    }
  }
}

TEST(Csv, LabelsRoundTripAndErrors) {
  const PhaseTrack t{{0, 0, 3, 1}};
  const std::string text = io::format_labels(t);
  EXPECT_EQ(text, "frame,phase\n1,0\n2,0\n3,3\n4,1\n");
  EXPECT_EQ(io::parse_labels(text), t);
  EXPECT_EQ(io::parse_labels("phase,frame\r\n0,1\r\n2,2\r\n"), (PhaseTrack{{0, 2}}));

  for (const char* bad : {"", "frame,label\n1,0\n", "frame,phase\n2,0\n", "frame,phase\n1,x\n",
                          "frame,phase\n1,-1\n", "frame,phase\n1,0,5\n"}) {
    EXPECT_EQ(code_of([&] { io::parse_labels(bad); }), ErrorCode::bad_format) << bad;
  }
}

TEST(Csv, PredictionsCarryPhaseColumn) {
  std::vector<PhaseOutput> outs{make_phase_output(1, {0.0, 2.0}, 0.0),
                                make_phase_output(2, {3.0, 1.0}, 100.0)};
  const std::string text = io::format_predictions(outs);
  EXPECT_EQ(text.substr(0, text.find('\n')), "frame,phase,heat,confidence");
  EXPECT_NE(text.find("1,1,0.500000000,"), std::string::npos);
  EXPECT_EQ(io::parse_phase_column(text), (PhaseTrack{{1, 0}}));
}

TEST(Config, TextRoundTripAndErrors) {
  const ModelConfig toy = ModelConfig::toy();
  EXPECT_EQ(ModelConfig::parse(toy.to_text()), toy);
  EXPECT_EQ(ModelConfig::parse(ModelConfig::full_defaults().to_text()), ModelConfig::full_defaults());
  const ModelConfig c = ModelConfig::parse("# comment\nlambda1 = 7 # trailing\n\nlambda2=9\n");
  EXPECT_EQ(c.lambda1, 7u);
  EXPECT_EQ(c.lambda2, 9u);
  EXPECT_THROW(ModelConfig::parse("bogus = 1\n"), std::invalid_argument);
  EXPECT_THROW(ModelConfig::parse("lambda1 = -2\n"), std::invalid_argument);
  EXPECT_THROW(ModelConfig::parse("lambda1\n"), std::invalid_argument);
  EXPECT_THROW(ModelConfig::parse("causal = maybe\n"), std::invalid_argument);
}

TEST(Synth, DeterministicAndFloatValued) {
  SynthSpec spec;
  spec.seed = 5;
  spec.frames = 120;
  spec.feature_dim = 16;
  const SynthVideo a = synth_gen(spec), b = synth_gen(spec);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  ASSERT_EQ(a.features.rows(), 120u);
  ASSERT_EQ(a.labels.size(), 120u);
  for (double v : a.features.data()) ASSERT_EQ(v, static_cast<double>(static_cast<float>(v)));
  spec.seed = 6;
  EXPECT_FALSE(synth_gen(spec).features == a.features);
}

TEST(Synth, LinearProfileVisitsEveryPhaseInOrder) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SynthSpec spec{seed, 7 + seed * 13, 7, 4, PhaseProfile::linear};
    const SynthVideo v = synth_gen(spec);
    std::set<std::size_t> seen(v.labels.labels.begin(), v.labels.labels.end());
    EXPECT_EQ(seen.size(), 7u);
    for (std::size_t i = 1; i < v.labels.size(); ++i) {
      EXPECT_GE(v.labels.labels[i], v.labels.labels[i - 1]);
    }
    EXPECT_EQ(v.labels.labels.front(), 0u);
  }
}

TEST(Synth, RecurringProfileRevisitsAPhase) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SynthSpec spec{seed, 8 + seed * 11, 7, 4, PhaseProfile::recurring};
    const SynthVideo v = synth_gen(spec);
    std::set<std::size_t> seen(v.labels.labels.begin(), v.labels.labels.end());
    EXPECT_EQ(seen.size(), 7u);
    std::size_t runs = 1;
    for (std::size_t i = 1; i < v.labels.size(); ++i) runs += v.labels.labels[i] != v.labels.labels[i - 1];
    EXPECT_GT(runs, seen.size()) << seed;
  }
}

TEST(Synth, RejectsShortVideos) {
  EXPECT_THROW(synth_gen(SynthSpec{0, 6, 7, 4}), std::invalid_argument);
  EXPECT_NO_THROW(synth_gen(SynthSpec{0, 7, 7, 4}));
  EXPECT_THROW(synth_gen(SynthSpec{0, 7, 7, 4, PhaseProfile::recurring}), std::invalid_argument);
  EXPECT_THROW(parse_profile("spiral"), std::invalid_argument);
  EXPECT_EQ(parse_profile(to_string(PhaseProfile::recurring)), PhaseProfile::recurring);
}

TEST(Synth, ClassMeansSharedAcrossVideos) {
  const Matrix a = class_means(9, 7, 8, 1.0);
  EXPECT_EQ(a, class_means(9, 7, 8, 1.0));
  for (double v : a.data()) EXPECT_LE(std::abs(v), 1.0);
  SynthSpec s1{1, 50, 7, 8}, s2{2, 50, 7, 8};
  s1.class_seed = s2.class_seed = 9;
  s1.noise = s2.noise = 0.0;
  const SynthVideo v1 = synth_gen(s1), v2 = synth_gen(s2);
  // Noise-free frames of a phase equal its (float-rounded) mean in both videos.
  for (std::size_t c = 0; c < 8; ++c) EXPECT_EQ(v1.features(0, c), v2.features(0, c));
}
