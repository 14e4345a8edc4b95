#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace actalign {

/// Dense row-major matrix. Rows are exposed as spans so that embedding
/// vectors can be handed around without copies.
template <typename T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    assert(data_.size() == rows_ * cols_);
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using MatrixD = Matrix<double>;

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  assert(a.size() == b.size());
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double l2_norm(std::span<const double> v) noexcept { return std::sqrt(dot(v, v)); }

/// Rescales `v` to unit length. Returns false (leaving `v` untouched) when
/// the norm is zero.
inline bool normalize_in_place(std::span<double> v) noexcept {
  const double n = l2_norm(v);
  if (n == 0.0) return false;
  for (double& x : v) x /= n;
  return true;
}

/// Arithmetic mean of all rows.
inline std::vector<double> mean_row(const MatrixD& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += row[c];
  }
  if (m.rows() > 0) {
    for (double& x : out) x /= static_cast<double>(m.rows());
  }
  return out;
}

/// Cosine similarity; zero when either vector has zero norm.
inline double cosine(std::span<const double> a, std::span<const double> b) noexcept {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

}  // namespace actalign
