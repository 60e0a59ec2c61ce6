#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace ibf {

using Vec2 = Eigen::Vector2d;

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);
double segment_segment_distance(const Vec2& a0, const Vec2& a1, const Vec2& b0,
                                const Vec2& b1);

// Max pairwise distance of the columns of a 2 x n matrix, via the convex hull.
double diameter_2d(const Eigen::MatrixXd& points);

// A polyline set: points in a 2 x n matrix plus link[i] marking the edge from
// point i to point (i + 1) mod n.
struct PolylineView {
  const Eigen::MatrixXd* points;
  const std::vector<std::uint8_t>* link;
};

// Distance from p to the polyline set (edges and isolated points).
double distance_to_polyline(const PolylineView& poly, const Vec2& p);

// True if the two polyline sets come within eta of each other.
bool polylines_within(const PolylineView& a, const PolylineView& b, double eta);

}  // namespace ibf
