#include "sphnn/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sphnn/error.hpp"

namespace sphnn {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw NumericError(std::string(op) + ": shape mismatch " +
                       std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                       " vs " + std::to_string(b.rows()) + "x" +
                       std::to_string(b.cols()));
  }
}

}  // namespace

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw NumericError("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::row_vector(std::span<const double> values) {
  Matrix m(1, values.size());
  std::copy(values.begin(), values.end(), m.data_.begin());
  return m;
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double x) { return std::isfinite(x); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw NumericError("matmul: inner dimension mismatch");
  Matrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* o = out.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* br = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += aik * br[j];
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw NumericError("matmul_tn: row count mismatch");
  Matrix out(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* br = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      double* o = out.row(i).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += aki * br[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw NumericError("matmul_nt: column count mismatch");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ar = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* br = b.row(j).data();
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += ar[k] * br[k];
      out(i, j) = s;
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out = a;
  axpy(out, b, 1.0);
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "sub");
  Matrix out = a;
  axpy(out, b, -1.0);
  return out;
}

Matrix scale(const Matrix& a, double s) {
  Matrix out = a;
  for (double& x : out.data()) x *= s;
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bd[i];
  return out;
}

Matrix concat_cols(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw NumericError("concat_cols: row count mismatch");
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto o = out.row(i);
    std::copy(a.row(i).begin(), a.row(i).end(), o.begin());
    std::copy(b.row(i).begin(), b.row(i).end(), o.begin() + a.cols());
  }
  return out;
}

Matrix tanh_elem(const Matrix& a) {
  Matrix out = a;
  for (double& x : out.data()) x = std::tanh(x);
  return out;
}

double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }

Matrix leaky_relu(const Matrix& a, double slope) {
  Matrix out = a;
  for (double& x : out.data()) x = leaky_relu(x, slope);
  return out;
}

Matrix row_softmax(const Matrix& a) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto in = a.row(i);
    auto o = out.row(i);
    if (in.empty()) continue;
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) z += (o[j] = std::exp(in[j] - mx));
    for (double& x : o) x /= z;
  }
  return out;
}

Matrix masked_softmax(const Matrix& scores, const Matrix& mask) {
  require_same_shape(scores, mask, "masked_softmax");
  Matrix out(scores.rows(), scores.cols());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < scores.cols(); ++j)
      if (mask(i, j) != 0.0) mx = std::max(mx, scores(i, j));
    if (mx == -INFINITY)
      throw NumericError("masked_softmax: row " + std::to_string(i) +
                         " is fully masked");
    double z = 0.0;
    for (std::size_t j = 0; j < scores.cols(); ++j)
      if (mask(i, j) != 0.0) z += (out(i, j) = std::exp(scores(i, j) - mx));
    for (std::size_t j = 0; j < scores.cols(); ++j) out(i, j) /= z;
  }
  return out;
}

void axpy(Matrix& a, const Matrix& b, double s) {
  require_same_shape(a, b, "axpy");
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) ad[i] += s * bd[i];
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.all_finite()) throw NumericError(std::string("non-finite values in ") + what);
}

void adam_step(Matrix& param, const Matrix& grad, AdamState& state,
               const AdamOptions& opts) {
  require_same_shape(param, grad, "adam_step");
  if (state.m.empty() && state.v.empty() && !param.empty()) state = AdamState(param);
  require_same_shape(param, state.m, "adam_step(moments)");
  ++state.step;
  const double bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(state.step));
  auto p = param.data();
  auto g = grad.data();
  auto m = state.m.data();
  auto v = state.v.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * g[i];
    v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= opts.lr * (mhat / (std::sqrt(vhat) + opts.eps) + opts.weight_decay * p[i]);
  }
}

double finite_diff_check(const std::function<double(const Matrix&)>& loss_fn,
                         const Matrix& param, const Matrix& analytic_grad,
                         double step) {
  require_same_shape(param, analytic_grad, "finite_diff_check");
  if (!(step > 0.0)) throw NumericError("finite_diff_check: step must be positive");
  Matrix probe = param;
  double worst = 0.0;
  auto pd = probe.data();
  auto an = analytic_grad.data();
  for (std::size_t i = 0; i < pd.size(); ++i) {
    const double orig = pd[i];
    pd[i] = orig + step;
    const double up = loss_fn(probe);
    pd[i] = orig - step;
    const double down = loss_fn(probe);
    pd[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw NumericError("finite_diff_check: non-finite loss");
    const double fd = (up - down) / (2.0 * step);
    const double denom = std::max({1.0, std::abs(fd), std::abs(an[i])});
    worst = std::max(worst, std::abs(fd - an[i]) / denom);
  }
  return worst;
}

}  // namespace sphnn
