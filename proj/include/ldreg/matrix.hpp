#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "ldreg/error.hpp"

namespace ldreg {

/// Dense row-major matrix of doubles, one row per sample.
///
/// Construction from data validates shape and finiteness; the
/// shape-only constructor yields a zero matrix.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (rows == 0 || cols == 0) throw UsageError("matrix must have at least one row and column");
  }

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows == 0 || cols == 0) throw UsageError("matrix must have at least one row and column");
    if (data_.size() != rows * cols)
      throw UsageError("matrix data length " + std::to_string(data_.size()) +
                       " does not match shape " + std::to_string(rows) + "x" +
                       std::to_string(cols));
    for (double v : data_)
      if (!std::isfinite(v)) throw DataError("matrix contains a non-finite entry");
  }

  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    if (rows_ == 0 || cols_ == 0) throw UsageError("matrix must have at least one row and column");
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw UsageError("ragged matrix initializer");
      for (double v : r) {
        if (!std::isfinite(v)) throw DataError("matrix contains a non-finite entry");
        data_.push_back(v);
      }
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

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

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  Matrix& operator+=(const Matrix& o) {
    require_same_shape(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  Matrix& operator*=(double s) noexcept {
    for (double& v : data_) v *= s;
    return *this;
  }

  /// this += s * o
  Matrix& add_scaled(const Matrix& o, double s) {
    require_same_shape(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
    return *this;
  }

  bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  void require_same_shape(const Matrix& o) const {
    if (!same_shape(o)) throw UsageError("matrix shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix operator*(Matrix m, double s) noexcept { return m *= s; }

/// Selects rows by index, in the given order.
inline Matrix select_rows(const Matrix& m, std::span<const std::size_t> idx) {
  if (idx.empty()) throw UsageError("select_rows: empty index set");
  Matrix out(idx.size(), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= m.rows()) throw UsageError("select_rows: index out of range");
    std::copy_n(m.row(idx[i]).begin(), m.cols(), out.row(i).begin());
  }
  return out;
}

/// Euclidean distances between query rows and reference rows.
/// When built from a single matrix the diagonal is exactly zero.
class DistanceMatrix {
 public:
  DistanceMatrix(std::size_t n_queries, std::size_t n_refs)
      : n_queries_(n_queries), n_refs_(n_refs), values_(n_queries * n_refs, 0.0) {}

  std::size_t n_queries() const noexcept { return n_queries_; }
  std::size_t n_refs() const noexcept { return n_refs_; }

  double& operator()(std::size_t q, std::size_t r) noexcept { return values_[q * n_refs_ + r]; }
  double operator()(std::size_t q, std::size_t r) const noexcept {
    return values_[q * n_refs_ + r];
  }

  std::span<double> row(std::size_t q) noexcept { return {values_.data() + q * n_refs_, n_refs_}; }
  std::span<const double> row(std::size_t q) const noexcept {
    return {values_.data() + q * n_refs_, n_refs_};
  }

 private:
  std::size_t n_queries_;
  std::size_t n_refs_;
  std::vector<double> values_;
};

}  // namespace ldreg
