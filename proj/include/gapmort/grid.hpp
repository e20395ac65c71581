#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gapmort {

/// Dense age-by-year table stored row-major (one row per age group).
template <typename T> class Grid {
public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_{rows}, cols_{cols}, data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T &operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  T &at(std::size_t r, std::size_t c) {
    check(r, c);
    return data_[r * cols_ + c];
  }
  const T &at(std::size_t r, std::size_t c) const {
    check(r, c);
    return data_[r * cols_ + c];
  }

  const std::vector<T> &values() const & noexcept { return data_; }
  std::vector<T> &values() & noexcept { return data_; }
  /// Moves the cells out of a temporary grid.
  std::vector<T> values() && noexcept { return std::move(data_); }

  bool same_shape(const auto &other) const noexcept {
    return rows_ == other.rows() && cols_ == other.cols();
  }

  friend bool operator==(const Grid &, const Grid &) = default;

private:
  void check(std::size_t r, std::size_t c) const {
    if (r >= rows_ || c >= cols_) {
      throw std::out_of_range("grid index (" + std::to_string(r) + ", " +
                              std::to_string(c) + ") outside " +
                              std::to_string(rows_) + "x" +
                              std::to_string(cols_));
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using CountGrid = Grid<long long>;
using RealGrid = Grid<double>;

template <typename To, typename From> Grid<To> grid_cast(const Grid<From> &g) {
  Grid<To> out(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.values()[i] = static_cast<To>(g.values()[i]);
  }
  return out;
}

} // namespace gapmort
