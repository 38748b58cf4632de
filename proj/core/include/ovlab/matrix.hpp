#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ovlab {

// Dense row-major matrix of doubles. Rows are samples throughout the library.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  // Throws DimensionError if data.size() != rows * cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  // Copies the listed rows, in order, into a new matrix.
  Matrix select_rows(std::span<const std::size_t> indices) const;

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Builds a 1 x n matrix from a single input vector.
Matrix row_matrix(std::span<const double> values);

// One-hot row matrix with `classes` columns; throws InvalidArgument on a
// label outside [0, classes).
Matrix one_hot(std::span<const int> labels, std::size_t classes);

// Argmax of each row, lowest index on ties.
std::vector<int> row_argmax(const Matrix& m);

}  // namespace ovlab
