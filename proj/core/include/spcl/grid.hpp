#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace spcl {

// Dense row-major 2-D array of plain values (label maps, bit masks).
template <typename T>
struct Grid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> values;

  Grid() = default;
  Grid(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), values(r * c, fill) {}

  std::size_t size() const noexcept { return values.size(); }
  T& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  const T& at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  T& operator[](std::size_t i) { return values[i]; }
  const T& operator[](std::size_t i) const { return values[i]; }

  bool operator==(const Grid&) const = default;
};

using LabelMap = Grid<std::int32_t>;
using BitMap = Grid<std::uint8_t>;

}  // namespace spcl
