#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace lovit {

enum class BenchMode { dense, sparse };
BenchMode parse_bench_mode(const std::string& name);

struct BenchPoint {
  std::size_t length = 0;
  double median_seconds = 0.0;
  std::vector<double> samples;
};

struct BenchResult {
  BenchMode mode = BenchMode::dense;
  std::vector<BenchPoint> points;
  double slope = 0.0;  // least-squares fit of log(time) against log(L)
};

// Least-squares slope of log(y) on log(x). Needs >= 2 points and positive values.
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Times self-attention cores on random L x model_dim inputs (one head,
// non-causal). Each length is timed `reps` times on the calling thread.
BenchResult run_attention_bench(const std::vector<std::size_t>& lengths, BenchMode mode,
                                std::size_t model_dim = 64, std::size_t reps = 5,
                                std::uint64_t seed = 0);

std::string format_bench(const BenchResult& r);

}  // namespace lovit
