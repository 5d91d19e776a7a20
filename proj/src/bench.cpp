#include "lovit/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "lovit/attention.hpp"
#include "lovit/rng.hpp"

namespace lovit {

BenchMode parse_bench_mode(const std::string& name) {
  if (name == "dense") return BenchMode::dense;
  if (name == "sparse") return BenchMode::sparse;
  throw std::invalid_argument("unknown bench mode '" + name + "' (dense|sparse)");
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("fit_loglog_slope: need >= 2 paired points");
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("fit_loglog_slope: values must be > 0");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_loglog_slope: lengths must differ");
  return sxy / sxx;
}

BenchResult run_attention_bench(const std::vector<std::size_t>& lengths, BenchMode mode,
                                std::size_t model_dim, std::size_t reps, std::uint64_t seed) {
  if (lengths.empty() || reps == 0 || model_dim == 0) {
    throw std::invalid_argument("bench: need lengths, reps >= 1 and model_dim >= 1");
  }
  BenchResult result;
  result.mode = mode;
  const AttentionConfig cfg{model_dim, 1, false, 0};
  const SparseConfig sp{5.0, 1.0, seed};
  for (std::size_t len : lengths) {
    if (len < 2) throw std::invalid_argument("bench: lengths must be >= 2");
    auto random = [&](std::uint64_t tag) {
      Matrix m(len, model_dim);
      const std::uint64_t key = rng::derive(seed, len, tag);
      for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = 2.0 * rng::uniform_real(key, i) - 1.0;
      return m;
    };
    const Matrix q = random(0), k = random(1), v = random(2);
    BenchPoint pt;
    pt.length = len;
    double sink = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      const Matrix out = mode == BenchMode::dense ? dense_attention(q, k, v, cfg)
                                                  : probsparse_attention(q, k, v, cfg, sp);
      const auto t1 = std::chrono::steady_clock::now();
      sink += out(0, 0);
      pt.samples.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::vector<double> sorted = pt.samples;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    pt.median_seconds = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    if (!std::isfinite(sink)) throw std::runtime_error("bench: non-finite output");
    result.points.push_back(std::move(pt));
  }
  if (result.points.size() >= 2) {
    std::vector<double> xs, ys;
    for (const auto& p : result.points) {
      xs.push_back(static_cast<double>(p.length));
      ys.push_back(p.median_seconds);
    }
    result.slope = fit_loglog_slope(xs, ys);
  }
  return result;
}

std::string format_bench(const BenchResult& r) {
  std::string out;
  char buf[128];
  for (const auto& p : r.points) {
    std::snprintf(buf, sizeof buf, "length=%zu median_s=%.6e\n", p.length, p.median_seconds);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "mode=%s slope=%.4f\n", r.mode == BenchMode::dense ? "dense" : "sparse",
                r.slope);
  out += buf;
  return out;
}

}  // namespace lovit
