#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace isa {

class Rng;

/// Dense real vector.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double fill = 0.0) : data_(n, fill) {}
  Vector(std::initializer_list<double> values) : data_(values) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}
  explicit Vector(std::span<const double> values) : data_(values.begin(), values.end()) {}

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool operator==(const Vector&) const = default;

 private:
  std::vector<double> data_;
};

/// Dense real matrix stored row-major.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }

  void fill(double value);
  std::string shape_string() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Allocating element-wise and algebraic operations. All throw ShapeError on
// dimension mismatch.
Vector matvec(const Matrix& m, const Vector& v);
Vector matvec_transposed(const Matrix& m, const Vector& v);
Vector add(const Vector& a, const Vector& b);
Vector hadamard(const Vector& a, const Vector& b);
Vector sigmoid(const Vector& v);
Vector tanh_act(const Vector& v);
Vector relu(const Vector& v);

double sigmoid(double x) noexcept;

bool all_finite(std::span<const double> values) noexcept;

/// Glorot-uniform matrix: entries uniform in +-sqrt(6 / (rows + cols)).
Matrix init_glorot(std::size_t rows, std::size_t cols, Rng& rng);

namespace kernel {

// Unchecked hot-path kernels; callers guarantee shapes.

// y += m * x
void gemv_acc(const Matrix& m, std::span<const double> x, std::span<double> y) noexcept;
// y += m^T * x
void gemv_t_acc(const Matrix& m, std::span<const double> x, std::span<double> y) noexcept;
// m += a * b^T
void outer_acc(Matrix& m, std::span<const double> a, std::span<const double> b) noexcept;

}  // namespace kernel

}  // namespace isa
