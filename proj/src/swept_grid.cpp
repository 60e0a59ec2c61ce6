#include "ibf/swept_grid.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "ibf/errors.hpp"

namespace ibf {

SweptGrid::SweptGrid(Vec2 origin, double cell_size, int extent_x, int extent_y)
    : origin_(std::move(origin)), cell_size_(cell_size), ex_(extent_x), ey_(extent_y) {
  if (!(cell_size > 0.0)) throw ParameterError("cell_size must be positive");
  if (extent_x < 1 || extent_y < 1) throw ParameterError("extent must be >= 1");
  times_.assign(static_cast<std::size_t>(4) * ex_ * ey_, kUncovered);
}

double SweptGrid::first_cover_time(int i, int j) const {
  if (i < -ex_ || i >= ex_ || j < -ey_ || j >= ey_) return kUncovered;
  return times_[index(i + ex_, j + ey_)];
}

Vec2 SweptGrid::cell_center(int i, int j) const {
  return origin_ + cell_size_ * Vec2(i + 0.5, j + 0.5);
}

std::size_t SweptGrid::covered_count() const {
  return static_cast<std::size_t>(std::count_if(
      times_.begin(), times_.end(), [](double t) { return t < kUncovered; }));
}

void SweptGrid::set(int ix, int iy, double time) {
  double& slot = times_[index(ix, iy)];
  if (time < slot) slot = time;
}

void SweptGrid::ensure_contains(const Vec2& p) {
  // Two spare cells keep a ring of uncovered border for exterior queries.
  const double fx = (p.x() - origin_.x()) / cell_size_;
  const double fy = (p.y() - origin_.y()) / cell_size_;
  if (!std::isfinite(fx) || !std::isfinite(fy))
    throw NumericalError("SweptGrid: non-finite position");
  int nx = ex_, ny = ey_;
  while (fx < -(nx - 2) || fx >= nx - 2) nx *= 2;
  while (fy < -(ny - 2) || fy >= ny - 2) ny *= 2;
  if (nx == ex_ && ny == ey_) return;
  std::vector<double> grown(static_cast<std::size_t>(4) * nx * ny, kUncovered);
  for (int iy = 0; iy < 2 * ey_; ++iy)
    for (int ix = 0; ix < 2 * ex_; ++ix)
      grown[static_cast<std::size_t>(iy + ny - ey_) * (2 * nx) + (ix + nx - ex_)] =
          times_[index(ix, iy)];
  times_.swap(grown);
  ex_ = nx;
  ey_ = ny;
  ++growth_events_;
}

void SweptGrid::mark_point(const Vec2& p, double time) {
  ensure_contains(p);
  const int ix = static_cast<int>(std::floor((p.x() - origin_.x()) / cell_size_)) + ex_;
  const int iy = static_cast<int>(std::floor((p.y() - origin_.y()) / cell_size_)) + ey_;
  set(ix, iy, time);
}

// Grid traversal (Amanatides-Woo): visits every cell the segment passes.
void SweptGrid::mark_segment(const Vec2& a, const Vec2& b, double time) {
  ensure_contains(a);
  ensure_contains(b);
  const double ax = (a.x() - origin_.x()) / cell_size_;
  const double ay = (a.y() - origin_.y()) / cell_size_;
  const double bx = (b.x() - origin_.x()) / cell_size_;
  const double by = (b.y() - origin_.y()) / cell_size_;
  int ix = static_cast<int>(std::floor(ax));
  int iy = static_cast<int>(std::floor(ay));
  const int jx = static_cast<int>(std::floor(bx));
  const int jy = static_cast<int>(std::floor(by));
  const double dx = bx - ax;
  const double dy = by - ay;
  const int sx = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int sy = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  const double inf = std::numeric_limits<double>::infinity();
  double tmx = sx > 0 ? (ix + 1 - ax) / dx : (sx < 0 ? (ax - ix) / -dx : inf);
  double tmy = sy > 0 ? (iy + 1 - ay) / dy : (sy < 0 ? (ay - iy) / -dy : inf);
  const double tdx = sx != 0 ? 1.0 / std::abs(dx) : inf;
  const double tdy = sy != 0 ? 1.0 / std::abs(dy) : inf;
  set(ix + ex_, iy + ey_, time);
  int guard = std::abs(jx - ix) + std::abs(jy - iy);
  while ((ix != jx || iy != jy) && guard-- > 0) {
    if (tmx < tmy) {
      ix += sx;
      tmx += tdx;
    } else {
      iy += sy;
      tmy += tdy;
    }
    set(ix + ex_, iy + ey_, time);
  }
}

void SweptGrid::accumulate(const Eigen::MatrixXd& points,
                           const std::vector<std::uint8_t>& link, double time) {
  const Eigen::Index n = points.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index prev = (i + n - 1) % n;
    const bool has_next = link[i] && n > 1;
    const bool has_prev = link[prev] && n > 1;
    if (has_next) mark_segment(points.col(i), points.col((i + 1) % n), time);
    else if (!has_prev) mark_point(points.col(i), time);
  }
}

namespace {

// 1-D squared distance transform (Felzenszwalb & Huttenlocher).
void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  const double big = std::numeric_limits<double>::infinity();
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  int k = 0;
  z[0] = -big;
  z[1] = big;
  for (int q = 1; q < n; ++q) {
    double s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) /
               (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) /
          (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = big;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double diff = q - v[k];
    d[q] = diff * diff + f[v[k]];
  }
}

}  // namespace

std::vector<float> SweptGrid::depth_map(bool exterior_only) const {
  const int w = width(), h = height();
  const std::size_t total = static_cast<std::size_t>(w) * h;
  std::vector<std::uint8_t> blocked(total, 0);
  if (!exterior_only) {
    for (std::size_t k = 0; k < total; ++k) blocked[k] = times_[k] == kUncovered;
  } else {
    std::deque<std::size_t> queue;
    auto seed = [&](int ix, int iy) {
      const std::size_t k = index(ix, iy);
      if (!blocked[k] && times_[k] == kUncovered) {
        blocked[k] = 1;
        queue.push_back(k);
      }
    };
    for (int ix = 0; ix < w; ++ix) {
      seed(ix, 0);
      seed(ix, h - 1);
    }
    for (int iy = 0; iy < h; ++iy) {
      seed(0, iy);
      seed(w - 1, iy);
    }
    while (!queue.empty()) {
      const std::size_t k = queue.front();
      queue.pop_front();
      const int ix = static_cast<int>(k % w), iy = static_cast<int>(k / w);
      if (ix > 0) seed(ix - 1, iy);
      if (ix + 1 < w) seed(ix + 1, iy);
      if (iy > 0) seed(ix, iy - 1);
      if (iy + 1 < h) seed(ix, iy + 1);
    }
  }
  const double big = 1e20;
  std::vector<double> f(total);
  for (std::size_t k = 0; k < total; ++k) f[k] = blocked[k] ? 0.0 : big;
  std::vector<double> col(std::max(w, h)), out(std::max(w, h));
  std::vector<int> v;
  std::vector<double> z;
  for (int ix = 0; ix < w; ++ix) {
    for (int iy = 0; iy < h; ++iy) col[iy] = f[index(ix, iy)];
    edt_1d(col.data(), out.data(), h, v, z);
    for (int iy = 0; iy < h; ++iy) f[index(ix, iy)] = out[iy];
  }
  for (int iy = 0; iy < h; ++iy) {
    edt_1d(&f[index(0, iy)], out.data(), w, v, z);
    std::copy(out.begin(), out.begin() + w, f.begin() + index(0, iy));
  }
  std::vector<float> depth(total);
  for (std::size_t k = 0; k < total; ++k)
    depth[k] = static_cast<float>(std::sqrt(f[k]) * cell_size_);
  return depth;
}

std::size_t SweptGrid::storage_index(const Vec2& p) const {
  int ix = static_cast<int>(std::floor((p.x() - origin_.x()) / cell_size_)) + ex_;
  int iy = static_cast<int>(std::floor((p.y() - origin_.y()) / cell_size_)) + ey_;
  ix = std::clamp(ix, 0, width() - 1);
  iy = std::clamp(iy, 0, height() - 1);
  return index(ix, iy);
}

float SweptGrid::depth_at(const std::vector<float>& depth, const Vec2& p) const {
  const int ix = static_cast<int>(std::floor((p.x() - origin_.x()) / cell_size_)) + ex_;
  const int iy = static_cast<int>(std::floor((p.y() - origin_.y()) / cell_size_)) + ey_;
  if (ix < 0 || iy < 0 || ix >= width() || iy >= height()) return 0.0f;
  return depth[index(ix, iy)];
}

}  // namespace ibf
