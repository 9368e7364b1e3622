#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace gcnclust {

// Row-major dense matrix. Features and embeddings are stored as float;
// the GCN works in double so gradients can be checked numerically.
template <typename T>
class DenseMatrix {
 public:
  using value_type = T;

  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, T fill = T{0})
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<T> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    detail::require(values_.size() == rows_ * cols_,
                    "DenseMatrix: value count " + std::to_string(values_.size()) +
                        " does not match shape " + std::to_string(rows_) + "x" +
                        std::to_string(cols_));
  }
  DenseMatrix(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    values_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      detail::require(r.size() == cols_, "DenseMatrix: ragged initializer");
      values_.insert(values_.end(), r.begin(), r.end());
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  T& operator()(std::size_t i, std::size_t j) noexcept { return values_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const noexcept {
    return values_[i * cols_ + j];
  }

  std::span<T> row(std::size_t i) noexcept { return {values_.data() + i * cols_, cols_}; }
  std::span<const T> row(std::size_t i) const noexcept {
    return {values_.data() + i * cols_, cols_};
  }

  std::vector<T>& values() noexcept { return values_; }
  const std::vector<T>& values() const noexcept { return values_; }
  T* data() noexcept { return values_.data(); }
  const T* data() const noexcept { return values_.data(); }

  bool all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(),
                       [](T v) { return std::isfinite(v); });
  }

  template <typename U>
  DenseMatrix<U> cast() const {
    DenseMatrix<U> out(rows_, cols_);
    std::transform(values_.begin(), values_.end(), out.values().begin(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> values_;
};

// Compressed-sparse-row square matrix over graph vertices. Column indices are
// strictly increasing inside each row.
class SparseAdjacency {
 public:
  SparseAdjacency() : row_offsets_{0} {}

  SparseAdjacency(std::size_t n, std::vector<std::uint64_t> row_offsets,
                  std::vector<std::uint32_t> col_indices, std::vector<double> values,
                  bool symmetric = false)
      : n_(n),
        row_offsets_(std::move(row_offsets)),
        col_indices_(std::move(col_indices)),
        values_(std::move(values)),
        symmetric_(symmetric) {
    validate();
  }

  static SparseAdjacency identity(std::size_t n) {
    std::vector<std::uint64_t> offsets(n + 1);
    std::vector<std::uint32_t> cols(n);
    for (std::size_t i = 0; i <= n; ++i) offsets[i] = i;
    for (std::size_t i = 0; i < n; ++i) cols[i] = static_cast<std::uint32_t>(i);
    return SparseAdjacency(n, std::move(offsets), std::move(cols),
                           std::vector<double>(n, 1.0), true);
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t nnz() const noexcept { return col_indices_.size(); }
  bool symmetric() const noexcept { return symmetric_; }

  const std::vector<std::uint64_t>& row_offsets() const noexcept { return row_offsets_; }
  const std::vector<std::uint32_t>& col_indices() const noexcept { return col_indices_; }
  const std::vector<double>& values() const noexcept { return values_; }

  std::span<const std::uint32_t> row_cols(std::size_t i) const noexcept {
    return {col_indices_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
  }
  std::span<const double> row_values(std::size_t i) const noexcept {
    return {values_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
  }

  // Value at (i, j), zero when the entry is not stored.
  double at(std::size_t i, std::size_t j) const noexcept {
    auto cols = row_cols(i);
    auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<std::uint32_t>(j));
    if (it == cols.end() || *it != j) return 0.0;
    return values_[row_offsets_[i] + static_cast<std::size_t>(it - cols.begin())];
  }

  bool contains(std::size_t i, std::size_t j) const noexcept {
    auto cols = row_cols(i);
    return std::binary_search(cols.begin(), cols.end(), static_cast<std::uint32_t>(j));
  }

  DenseMatrix<double> densify() const {
    DenseMatrix<double> out(n_, n_);
    for (std::size_t i = 0; i < n_; ++i) {
      auto cols = row_cols(i);
      auto vals = row_values(i);
      for (std::size_t e = 0; e < cols.size(); ++e) out(i, cols[e]) = vals[e];
    }
    return out;
  }

  friend bool operator==(const SparseAdjacency&, const SparseAdjacency&) = default;

 private:
  void validate() const {
    detail::require(row_offsets_.size() == n_ + 1, "SparseAdjacency: row_offsets must have n+1 entries");
    detail::require(row_offsets_.front() == 0, "SparseAdjacency: row_offsets must start at 0");
    detail::require(row_offsets_.back() == col_indices_.size(),
                    "SparseAdjacency: row_offsets end does not match nnz");
    detail::require(values_.size() == col_indices_.size(),
                    "SparseAdjacency: values and col_indices differ in length");
    for (std::size_t i = 0; i < n_; ++i) {
      detail::require(row_offsets_[i] <= row_offsets_[i + 1],
                      "SparseAdjacency: row_offsets not monotone");
      for (auto e = row_offsets_[i]; e < row_offsets_[i + 1]; ++e) {
        detail::require(col_indices_[e] < n_, "SparseAdjacency: column index out of range");
        detail::require(e == row_offsets_[i] || col_indices_[e - 1] < col_indices_[e],
                        "SparseAdjacency: columns not strictly increasing in row " +
                            std::to_string(i));
        detail::require(std::isfinite(values_[e]), "SparseAdjacency: non-finite value");
      }
    }
    if (symmetric_) {
      for (std::size_t i = 0; i < n_; ++i) {
        for (auto e = row_offsets_[i]; e < row_offsets_[i + 1]; ++e) {
          const auto j = col_indices_[e];
          detail::require(contains(j, i) && at(j, i) == values_[e],
                          "SparseAdjacency: flagged symmetric but (" + std::to_string(i) +
                              "," + std::to_string(j) + ") has no equal mirror");
        }
      }
    }
  }

  std::size_t n_ = 0;
  std::vector<std::uint64_t> row_offsets_;
  std::vector<std::uint32_t> col_indices_;
  std::vector<double> values_;
  bool symmetric_ = false;
};

// result[i] = sum_j a[i,j] * x[j], summed in ascending column order.
template <typename T>
DenseMatrix<T> spmm(const SparseAdjacency& a, const DenseMatrix<T>& x) {
  detail::require(a.n() == x.rows(), "spmm: adjacency is " + std::to_string(a.n()) +
                                         " vertices but x has " + std::to_string(x.rows()) +
                                         " rows");
  const std::size_t d = x.cols();
  DenseMatrix<T> out(a.n(), d);
  std::vector<double> acc(d);
  for (std::size_t i = 0; i < a.n(); ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    auto cols = a.row_cols(i);
    auto vals = a.row_values(i);
    for (std::size_t e = 0; e < cols.size(); ++e) {
      const double w = vals[e];
      const T* src = x.data() + static_cast<std::size_t>(cols[e]) * d;
      for (std::size_t c = 0; c < d; ++c) acc[c] += w * src[c];
    }
    T* dst = out.data() + i * d;
    for (std::size_t c = 0; c < d; ++c) dst[c] = static_cast<T>(acc[c]);
  }
  return out;
}

// result = a^T x, the adjoint of spmm used in the backward pass.
template <typename T>
DenseMatrix<T> spmm_transposed(const SparseAdjacency& a, const DenseMatrix<T>& x) {
  detail::require(a.n() == x.rows(), "spmm_transposed: dimension mismatch");
  const std::size_t d = x.cols();
  DenseMatrix<T> out(a.n(), d);
  for (std::size_t i = 0; i < a.n(); ++i) {
    auto cols = a.row_cols(i);
    auto vals = a.row_values(i);
    const T* src = x.data() + i * d;
    for (std::size_t e = 0; e < cols.size(); ++e) {
      const T w = static_cast<T>(vals[e]);
      T* dst = out.data() + static_cast<std::size_t>(cols[e]) * d;
      for (std::size_t c = 0; c < d; ++c) dst[c] += w * src[c];
    }
  }
  return out;
}

template <typename T>
DenseMatrix<T> dense_matmul(const DenseMatrix<T>& x, const DenseMatrix<T>& w) {
  detail::require(x.cols() == w.rows(), "dense_matmul: inner dimensions " +
                                            std::to_string(x.cols()) + " and " +
                                            std::to_string(w.rows()) + " differ");
  const std::size_t n = x.rows(), k = x.cols(), m = w.cols();
  DenseMatrix<T> out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    T* dst = out.data() + i * m;
    const T* xi = x.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T s = xi[p];
      if (s == T{0}) continue;
      const T* wp = w.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) dst[j] += s * wp[j];
    }
  }
  return out;
}

// x^T g
template <typename T>
DenseMatrix<T> dense_matmul_tn(const DenseMatrix<T>& x, const DenseMatrix<T>& g) {
  detail::require(x.rows() == g.rows(), "dense_matmul_tn: row counts differ");
  const std::size_t n = x.rows(), k = x.cols(), m = g.cols();
  DenseMatrix<T> out(k, m);
  for (std::size_t i = 0; i < n; ++i) {
    const T* xi = x.data() + i * k;
    const T* gi = g.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const T s = xi[p];
      if (s == T{0}) continue;
      T* dst = out.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) dst[j] += s * gi[j];
    }
  }
  return out;
}

template <typename T>
DenseMatrix<T> transpose(const DenseMatrix<T>& x) {
  DenseMatrix<T> out(x.cols(), x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(j, i) = x(i, j);
  return out;
}

// g w^T
template <typename T>
DenseMatrix<T> dense_matmul_nt(const DenseMatrix<T>& g, const DenseMatrix<T>& w) {
  detail::require(g.cols() == w.cols(), "dense_matmul_nt: column counts differ");
  return dense_matmul(g, transpose(w));
}

template <typename T>
DenseMatrix<T> relu(DenseMatrix<T> x) {
  for (auto& v : x.values()) v = std::max(v, T{0});
  return x;
}

template <typename T>
DenseMatrix<T> concat_cols(const DenseMatrix<T>& x, const DenseMatrix<T>& y) {
  detail::require(x.rows() == y.rows(), "concat_cols: row counts " + std::to_string(x.rows()) +
                                            " and " + std::to_string(y.rows()) + " differ");
  DenseMatrix<T> out(x.rows(), x.cols() + y.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto dst = out.row(i);
    auto a = x.row(i);
    auto b = y.row(i);
    std::copy(a.begin(), a.end(), dst.begin());
    std::copy(b.begin(), b.end(), dst.begin() + static_cast<std::ptrdiff_t>(a.size()));
  }
  return out;
}

// Zero rows pass through unchanged.
template <typename T>
DenseMatrix<T> l2_normalize_rows(DenseMatrix<T> x) {
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    double sq = 0.0;
    for (T v : r) sq += static_cast<double>(v) * static_cast<double>(v);
    if (sq == 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (T& v : r) v = static_cast<T>(static_cast<double>(v) * inv);
  }
  return x;
}

}  // namespace gcnclust
