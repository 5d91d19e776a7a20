#pragma once

#include <cstddef>
#include <span>

#include "lovit/matrix.hpp"

namespace lovit {

inline constexpr double kLayerNormEps = 1e-5;

// Affine map y = x W^T + b with W of shape (out_dim x in_dim).
class LinearLayer {
 public:
  LinearLayer() = default;
  LinearLayer(Matrix weight, Vector bias);

  std::size_t in_dim() const noexcept { return weight_.cols(); }
  std::size_t out_dim() const noexcept { return weight_.rows(); }
  const Matrix& weight() const noexcept { return weight_; }
  const Vector& bias() const noexcept { return bias_; }
  // W^T, (in_dim x out_dim); kept so the product runs over contiguous rows.
  const Matrix& weight_t() const noexcept { return weight_t_; }

 private:
  Matrix weight_;
  Vector bias_;
  Matrix weight_t_;
};

struct LayerNormParams {
  Vector gain;
  Vector shift;
  double eps = kLayerNormEps;
};

// Row-wise softmax, stabilized by subtracting each row's max.
Matrix softmax_rows(const Matrix& m);

// In-place softmax over one row of logits.
void softmax_inplace(std::span<double> row);

Matrix linear_apply(const LinearLayer& layer, const Matrix& x);

Matrix layer_norm(const Matrix& x, std::span<const double> gain, std::span<const double> shift,
                  double eps = kLayerNormEps);
inline Matrix layer_norm(const Matrix& x, const LayerNormParams& p) {
  return layer_norm(x, p.gain, p.shift, p.eps);
}

// tanh approximation of GELU.
double gelu(double x) noexcept;
Matrix gelu(const Matrix& x);

// a (n x k) times b (k x m). Each output entry accumulates over k in index
// order starting from zero, independent of blocking.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix add(const Matrix& a, const Matrix& b);
void add_inplace(Matrix& a, const Matrix& b);

// Column means over all rows.
Vector column_mean(const Matrix& m);

// Throws std::domain_error naming `what` if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);

}  // namespace lovit
