// Dense row-major matrix of doubles.  Deliberately minimal: the library only
// needs row access, element access and bulk construction.
#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace coxsg {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : data_(rows * cols, fill), rows_(rows), cols_(cols) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : data_(std::move(data)), rows_(rows), cols_(cols) {
    if (data_.size() != rows * cols)
      throw std::invalid_argument("Matrix: data size does not match rows*cols");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) {
    return {data_.data() + i * cols_, cols_};
  }

  const double* data() const { return data_.data(); }
  double* data() { return data_.data(); }

  // New matrix holding the given rows, in the given order.
  Matrix gather(const std::vector<std::size_t>& rows) const {
    Matrix out(rows.size(), cols_);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double* src = data_.data() + rows[i] * cols_;
      double* dst = out.data_.data() + i * cols_;
      for (std::size_t j = 0; j < cols_; ++j) dst[j] = src[j];
    }
    return out;
  }

 private:
  std::vector<double> data_;
  std::size_t rows_ = 0, cols_ = 0;
};

}  // namespace coxsg
