#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <vector>

#include "ibf/geometry.hpp"

namespace ibf {

// Raster accumulation of the swept region. Cell (i, j), with i in [-ex, ex)
// and j in [-ey, ey), covers [origin + i*cs, origin + (i+1)*cs) per axis.
class SweptGrid {
 public:
  static constexpr double kUncovered = std::numeric_limits<double>::infinity();

  SweptGrid(Vec2 origin = Vec2::Zero(), double cell_size = 0.25, int extent_x = 32,
            int extent_y = 32);

  const Vec2& origin() const { return origin_; }
  double cell_size() const { return cell_size_; }
  int extent_x() const { return ex_; }
  int extent_y() const { return ey_; }
  int width() const { return 2 * ex_; }
  int height() const { return 2 * ey_; }
  int growth_events() const { return growth_events_; }

  // Rasterizes every linked edge and every isolated point of the polyline set.
  void accumulate(const Eigen::MatrixXd& points, const std::vector<std::uint8_t>& link,
                  double time);
  void mark_segment(const Vec2& a, const Vec2& b, double time);
  void mark_point(const Vec2& p, double time);

  // Cell indices are the signed ones described above.
  bool covered(int i, int j) const { return first_cover_time(i, j) < kUncovered; }
  double first_cover_time(int i, int j) const;
  Vec2 cell_center(int i, int j) const;
  std::size_t covered_count() const;

  // Storage-order access (0 <= ix < width, 0 <= iy < height).
  double time_at(int ix, int iy) const { return times_[index(ix, iy)]; }
  Vec2 center_at(int ix, int iy) const { return cell_center(ix - ex_, iy - ey_); }

  // Depth of each cell below the boundary of the blocking set, in length
  // units. Blocking cells are either all uncovered cells or only those
  // uncovered cells connected to the grid border.
  std::vector<float> depth_map(bool exterior_only) const;

  // Depth lookup for a position using a map from depth_map().
  float depth_at(const std::vector<float>& depth, const Vec2& p) const;

  void ensure_contains(const Vec2& p);

  // Storage index of the cell holding p; p must lie inside the grid.
  std::size_t storage_index(const Vec2& p) const;

 private:
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(2 * ex_) +
           static_cast<std::size_t>(ix);
  }
  void set(int ix, int iy, double time);

  Vec2 origin_;
  double cell_size_;
  int ex_, ey_;
  int growth_events_ = 0;
  std::vector<double> times_;
};

}  // namespace ibf
