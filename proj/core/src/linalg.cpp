#include "isa/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "isa/errors.hpp"
#include "isa/rng.hpp"

namespace isa {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

std::string Matrix::shape_string() const {
  std::ostringstream os;
  os << rows_ << "x" << cols_;
  return os.str();
}

namespace {

void require_same_length(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    std::ostringstream os;
    os << what << ": length mismatch " << a.size() << " vs " << b.size();
    throw ShapeError(os.str());
  }
}

template <class Fn>
Vector map(const Vector& v, Fn fn) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = fn(v[i]);
  return out;
}

}  // namespace

Vector matvec(const Matrix& m, const Vector& v) {
  if (m.cols() != v.size()) {
    std::ostringstream os;
    os << "matvec: matrix " << m.shape_string() << " cannot multiply vector of length "
       << v.size();
    throw ShapeError(os.str());
  }
  Vector out(m.rows());
  kernel::gemv_acc(m, v.span(), out.span());
  return out;
}

Vector matvec_transposed(const Matrix& m, const Vector& v) {
  if (m.rows() != v.size()) {
    std::ostringstream os;
    os << "matvec_transposed: matrix " << m.shape_string()
       << " (transposed) cannot multiply vector of length " << v.size();
    throw ShapeError(os.str());
  }
  Vector out(m.cols());
  kernel::gemv_t_acc(m, v.span(), out.span());
  return out;
}

Vector add(const Vector& a, const Vector& b) {
  require_same_length(a, b, "add");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector hadamard(const Vector& a, const Vector& b) {
  require_same_length(a, b, "hadamard");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector sigmoid(const Vector& v) { return map(v, [](double x) { return sigmoid(x); }); }
Vector tanh_act(const Vector& v) { return map(v, [](double x) { return std::tanh(x); }); }
Vector relu(const Vector& v) { return map(v, [](double x) { return x > 0.0 ? x : 0.0; }); }

bool all_finite(std::span<const double> values) noexcept {
  return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

Matrix init_glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& x : m.flat()) x = rng.uniform(-bound, bound);
  return m;
}

namespace kernel {

void gemv_acc(const Matrix& m, std::span<const double> x, std::span<double> y) noexcept {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  const double* a = m.flat().data();
  const double* xp = x.data();
  for (std::size_t i = 0; i < rows; ++i) {
    const double* r = a + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += r[j] * xp[j];
    y[i] += acc;
  }
}

void gemv_t_acc(const Matrix& m, std::span<const double> x, std::span<double> y) noexcept {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  const double* a = m.flat().data();
  double* yp = y.data();
  for (std::size_t i = 0; i < rows; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* r = a + i * cols;
    for (std::size_t j = 0; j < cols; ++j) yp[j] += r[j] * xi;
  }
}

void outer_acc(Matrix& m, std::span<const double> a, std::span<const double> b) noexcept {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  double* p = m.flat().data();
  const double* bp = b.data();
  for (std::size_t i = 0; i < rows; ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    double* r = p + i * cols;
    for (std::size_t j = 0; j < cols; ++j) r[j] += ai * bp[j];
  }
}

}  // namespace kernel

}  // namespace isa
