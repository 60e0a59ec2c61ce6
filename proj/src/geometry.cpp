#include "ibf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace ibf {

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_intersect(const Vec2& a0, const Vec2& a1, const Vec2& b0,
                        const Vec2& b1) {
  const double d1 = cross(a1 - a0, b0 - a0);
  const double d2 = cross(a1 - a0, b1 - a0);
  const double d3 = cross(b1 - b0, a0 - b0);
  const double d4 = cross(b1 - b0, a1 - b0);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
         ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

}  // namespace

double segment_segment_distance(const Vec2& a0, const Vec2& a1, const Vec2& b0,
                                const Vec2& b1) {
  if (segments_intersect(a0, a1, b0, b1)) return 0.0;
  return std::min({point_segment_distance(a0, b0, b1),
                   point_segment_distance(a1, b0, b1),
                   point_segment_distance(b0, a0, a1),
                   point_segment_distance(b1, a0, a1)});
}

double diameter_2d(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.cols();
  if (n < 2) return 0.0;
  std::vector<Vec2> pts(n);
  for (Eigen::Index i = 0; i < n; ++i) pts[i] = points.col(i);
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  // Andrew's monotone chain.
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k > 1 ? k - 1 : k);
  double best = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i)
    for (std::size_t j = i + 1; j < hull.size(); ++j)
      best = std::max(best, (hull[i] - hull[j]).squaredNorm());
  if (hull.size() < 2) {
    for (std::size_t i = 1; i < pts.size(); ++i)
      best = std::max(best, (pts[i] - pts[0]).squaredNorm());
  }
  return std::sqrt(best);
}

namespace {

struct Piece {
  Vec2 a, b;
};

std::vector<Piece> pieces_of(const PolylineView& poly) {
  const auto& pts = *poly.points;
  const auto& link = *poly.link;
  const Eigen::Index n = pts.cols();
  std::vector<Piece> out;
  out.reserve(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index prev = (i + n - 1) % n;
    const bool has_next = link[i] && n > 1;
    const bool has_prev = link[prev] && n > 1;
    if (has_next) out.push_back({pts.col(i), pts.col((i + 1) % n)});
    if (!has_next && !has_prev) out.push_back({pts.col(i), pts.col(i)});
  }
  return out;
}

}  // namespace

double distance_to_polyline(const PolylineView& poly, const Vec2& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const Piece& pc : pieces_of(poly))
    best = std::min(best, point_segment_distance(p, pc.a, pc.b));
  return best;
}

bool polylines_within(const PolylineView& a, const PolylineView& b, double eta) {
  const std::vector<Piece> pa = pieces_of(a);
  const std::vector<Piece> pb = pieces_of(b);
  if (pa.empty() || pb.empty()) return false;
  double longest = 0.0;
  for (const auto& p : pa) longest = std::max(longest, (p.b - p.a).norm());
  for (const auto& p : pb) longest = std::max(longest, (p.b - p.a).norm());
  const double cell = std::max(longest + eta, 1e-9);
  auto key = [](long long i, long long j) {
    return (static_cast<unsigned long long>(i) << 32) ^
           static_cast<unsigned long long>(j & 0xffffffffLL);
  };
  std::unordered_map<unsigned long long, std::vector<std::size_t>> buckets;
  for (std::size_t k = 0; k < pa.size(); ++k) {
    const Vec2 m = 0.5 * (pa[k].a + pa[k].b);
    buckets[key(static_cast<long long>(std::floor(m.x() / cell)),
                static_cast<long long>(std::floor(m.y() / cell)))]
        .push_back(k);
  }
  for (const auto& q : pb) {
    const Vec2 m = 0.5 * (q.a + q.b);
    const long long ci = static_cast<long long>(std::floor(m.x() / cell));
    const long long cj = static_cast<long long>(std::floor(m.y() / cell));
    for (long long di = -1; di <= 1; ++di)
      for (long long dj = -1; dj <= 1; ++dj) {
        auto it = buckets.find(key(ci + di, cj + dj));
        if (it == buckets.end()) continue;
        for (std::size_t k : it->second)
          if (segment_segment_distance(pa[k].a, pa[k].b, q.a, q.b) <= eta) return true;
      }
  }
  return false;
}

}  // namespace ibf
