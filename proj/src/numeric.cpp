#include "lovit/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lovit {

LinearLayer::LinearLayer(Matrix weight, Vector bias)
    : weight_(std::move(weight)), bias_(std::move(bias)) {
  if (bias_.size() != weight_.rows()) {
    throw std::invalid_argument("linear layer: bias length " + std::to_string(bias_.size()) +
                                " != out_dim " + std::to_string(weight_.rows()));
  }
  weight_t_ = weight_.transposed();
}

void softmax_inplace(std::span<double> row) {
  double peak = row[0];
  for (double v : row) peak = std::max(peak, v);
  double total = 0.0;
  for (double& v : row) {
    v = std::exp(v - peak);
    total += v;
  }
  const double inv = 1.0 / total;
  for (double& v : row) v *= inv;
}

Matrix softmax_rows(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) throw std::invalid_argument("softmax_rows: empty input");
  require_finite(m, "softmax_rows");
  Matrix out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) softmax_inplace(out.row(r));
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dims " + std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()));
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Matrix out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double* dst = out.row(i).data();
    const double* src = a.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double s = src[p];
      const double* brow = b.row(p).data();
      for (std::size_t j = 0; j < m; ++j) dst[j] += s * brow[j];
    }
  }
  return out;
}

Matrix linear_apply(const LinearLayer& layer, const Matrix& x) {
  if (x.cols() != layer.in_dim()) {
    throw std::invalid_argument("linear_apply: input dim " + std::to_string(x.cols()) +
                                " != layer in_dim " + std::to_string(layer.in_dim()));
  }
  Matrix out = matmul(x, layer.weight_t());
  const auto& b = layer.bias();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += b[c];
  }
  return out;
}

Matrix layer_norm(const Matrix& x, std::span<const double> gain, std::span<const double> shift,
                  double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("layer_norm: eps must be > 0");
  if (gain.size() != x.cols() || shift.size() != x.cols()) {
    throw std::invalid_argument("layer_norm: gain/shift length " + std::to_string(gain.size()) +
                                "/" + std::to_string(shift.size()) + " != width " +
                                std::to_string(x.cols()));
  }
  Matrix out(x.rows(), x.cols());
  const double n = static_cast<double>(x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= n;
    const double inv = 1.0 / std::sqrt(var + eps);
    auto dst = out.row(r);
    for (std::size_t c = 0; c < in.size(); ++c) dst[c] = (in[c] - mean) * inv * gain[c] + shift[c];
  }
  return out;
}

double gelu(double x) noexcept {
  constexpr double kSqrt2OverPi = 0.7978845608028654;
  return 0.5 * x * (1.0 + std::tanh(kSqrt2OverPi * (x + 0.044715 * x * x * x)));
}

Matrix gelu(const Matrix& x) {
  Matrix out = x;
  for (double& v : out.data()) v = gelu(v);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  Matrix out = a;
  add_inplace(out, b);
  return out;
}

void add_inplace(Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("add: shape mismatch");
  }
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += b.data()[i];
}

Vector column_mean(const Matrix& m) {
  Vector mean(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) mean[c] += row[c];
  }
  const double inv = 1.0 / static_cast<double>(m.rows());
  for (double& v : mean) v *= inv;
  return mean;
}

void require_finite(const Matrix& m, const char* what) {
  for (double v : m.data()) {
    if (!std::isfinite(v)) throw std::domain_error(std::string(what) + ": non-finite value");
  }
}

}  // namespace lovit
