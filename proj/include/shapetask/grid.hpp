#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "shapetask/errors.hpp"

namespace shapetask {

// Dense row-major 2D grid.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, T fill = T{})
      : height_(height), width_(width),
        data_(static_cast<size_t>(height) * static_cast<size_t>(width), fill) {
    if (height < 0 || width < 0) throw InvalidArgumentError("grid extents must be nonnegative");
  }

  int height() const { return height_; }
  int width() const { return width_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& at(int r, int c) { return data_[static_cast<size_t>(r) * width_ + c]; }
  const T& at(int r, int c) const { return data_[static_cast<size_t>(r) * width_ + c]; }

  bool in_bounds(int r, int c) const {
    return r >= 0 && r < height_ && c >= 0 && c < width_;
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

// Composite normalized distance map: values in [0,1], zero on background.
using DistanceMap = Grid<double>;

// Binary contour map: 1 on organ boundary pixels, 0 elsewhere.
using ContourMap = Grid<std::uint8_t>;

// Integer class grid, 0 = background, 1..num_classes-1 = organs.
struct LabelMap {
  LabelMap() = default;
  LabelMap(int height, int width, int num_classes)
      : labels(height, width, 0), num_classes(num_classes) {}

  Grid<int> labels;
  int num_classes = 0;  // L

  int height() const { return labels.height(); }
  int width() const { return labels.width(); }
  int at(int r, int c) const { return labels.at(r, c); }
  int& at(int r, int c) { return labels.at(r, c); }

  // Checks L >= 2 and every value in [0, L).
  void validate() const {
    if (num_classes < 2) throw InvalidArgumentError("label map needs at least 2 classes");
    if (labels.empty()) throw InvalidArgumentError("label map has zero area");
    for (int v : labels.data())
      if (v < 0 || v >= num_classes)
        throw InvalidArgumentError("label value outside [0, num_classes)");
  }

  bool operator==(const LabelMap&) const = default;
};

}  // namespace shapetask
