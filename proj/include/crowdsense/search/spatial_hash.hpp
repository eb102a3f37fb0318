#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "crowdsense/errors.hpp"

namespace crowdsense {

// Uniform-grid index over 2-D points for fixed-radius queries. Cells are
// cell_size wide; a query visits the cell block covering the disk, so with
// cell_size near the query radius the expected cost is the number of points
// in a constant neighborhood.
class SpatialHash2D {
 public:
  explicit SpatialHash2D(double cell_size) : cell_size_(cell_size) {
    if (!(cell_size > 0.0)) throw ValidationError("SpatialHash2D: cell size must be positive");
  }

  void build(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw ValidationError("SpatialHash2D: coordinate arrays differ in length");
    xs_.assign(xs.begin(), xs.end());
    ys_.assign(ys.begin(), ys.end());
    cells_.clear();
    cells_.reserve(xs.size());
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      cells_[key(cell_of(xs_[i]), cell_of(ys_[i]))].push_back(static_cast<std::uint32_t>(i));
    }
  }

  std::size_t size() const { return xs_.size(); }

  // Calls fn(index) for every point within the closed disk of `radius`
  // around (x, y).
  template <typename Fn>
  void for_each_within(double x, double y, double radius, Fn&& fn) const {
    if (!(radius >= 0.0)) throw ValidationError("SpatialHash2D: radius must be nonnegative");
    const double r2 = radius * radius;
    const std::int64_t cx_lo = cell_of(x - radius);
    const std::int64_t cx_hi = cell_of(x + radius);
    const std::int64_t cy_lo = cell_of(y - radius);
    const std::int64_t cy_hi = cell_of(y + radius);
    for (std::int64_t cx = cx_lo; cx <= cx_hi; ++cx) {
      for (std::int64_t cy = cy_lo; cy <= cy_hi; ++cy) {
        const auto bucket = cells_.find(key(cx, cy));
        if (bucket == cells_.end()) continue;
        for (std::uint32_t i : bucket->second) {
          const double dx = xs_[i] - x;
          const double dy = ys_[i] - y;
          if (dx * dx + dy * dy <= r2) fn(static_cast<std::size_t>(i));
        }
      }
    }
  }

  std::vector<std::size_t> query(double x, double y, double radius) const {
    std::vector<std::size_t> out;
    for_each_within(x, y, radius, [&](std::size_t i) { out.push_back(i); });
    return out;
  }

 private:
  std::int64_t cell_of(double coord) const { return static_cast<std::int64_t>(std::floor(coord / cell_size_)); }

  static std::uint64_t key(std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cx)) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(cy));
  }

  double cell_size_;
  std::vector<double> xs_;
  std::vector<double> ys_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

}  // namespace crowdsense
