#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace sphnn {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix row_vector(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  void fill(double value);
  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ·b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a·bᵀ without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix concat_cols(const Matrix& a, const Matrix& b);
Matrix tanh_elem(const Matrix& a);
Matrix leaky_relu(const Matrix& a, double slope);
double leaky_relu(double x, double slope);

/// Numerically stable softmax applied to every row.
Matrix row_softmax(const Matrix& a);
/// Row softmax restricted to entries with a nonzero mask; masked entries get
/// probability 0. Throws NumericError for a fully masked row.
Matrix masked_softmax(const Matrix& scores, const Matrix& mask);

/// In-place a += s·b.
void axpy(Matrix& a, const Matrix& b, double s = 1.0);
/// Throws NumericError naming `what` when any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);

struct AdamOptions {
  double lr = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-4;
};

/// Moment estimates for one parameter tensor.
struct AdamState {
  Matrix m;
  Matrix v;
  long step = 0;

  AdamState() = default;
  explicit AdamState(const Matrix& like)
      : m(like.rows(), like.cols()), v(like.rows(), like.cols()) {}
};

/// Bias-corrected Adam step with decoupled weight decay.
void adam_step(Matrix& param, const Matrix& grad, AdamState& state,
               const AdamOptions& opts);

/// Central-difference check of `analytic_grad` against `loss_fn` at `param`.
/// Returns max_i |fd_i - an_i| / max(1, |fd_i|, |an_i|).
double finite_diff_check(const std::function<double(const Matrix&)>& loss_fn,
                         const Matrix& param, const Matrix& analytic_grad,
                         double step);

}  // namespace sphnn
