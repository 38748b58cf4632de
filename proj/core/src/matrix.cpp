#include "ovlab/matrix.hpp"

#include <cmath>
#include <string>

#include "ovlab/error.hpp"

namespace ovlab {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                         " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) throw DimensionError("row index out of range");
    auto src = row(indices[i]);
    auto dst = out.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return out;
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix row_matrix(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Matrix one_hot(std::span<const int> labels, std::size_t classes) {
  Matrix t(labels.size(), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw InvalidArgument("label " + std::to_string(labels[i]) + " outside [0, " +
                            std::to_string(classes) + ")");
    }
    t(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return t;
}

std::vector<int> row_argmax(const Matrix& m) {
  std::vector<int> out(m.rows(), 0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] > row[best]) best = c;
    }
    out[r] = static_cast<int>(best);
  }
  return out;
}

}  // namespace ovlab
