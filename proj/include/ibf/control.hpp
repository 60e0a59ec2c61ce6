#pragma once

#include <string>
#include <functional>
#include <vector>

#include "ibf/covariance.hpp"
#include "ibf/geometry.hpp"

namespace ibf {

// V_k(x) = sign * column k of b(x - Q). sign = 0 gives the zero field.
struct ControlField {
  Vec2 q = Vec2::Zero();
  int component = 1;  // 1 or 2
  CorrelationFamily family;
  int sign = 1;
};

Vec2 eval_control(const ControlField& field, const Vec2& x);

struct SquareChart {
  CorrelationFamily family;
  Vec2 q = Vec2::Zero();
  int n = 102;
  double eps = 0.0;
  double c13 = 0.0;
  double taylor_radius = 0.0;  // radius of the disc the C13 bound was fitted on
  double t_u = 0.0;

  Vec2 to_chart(const Vec2& x) const { return (x - q) / eps; }
  Vec2 from_chart(const Vec2& z) const { return q + eps * z; }
};

inline constexpr double kC13SafetyFactor = 1.1;

SquareChart build_square(const CorrelationFamily& family, const Vec2& q, int n);

// Max over U_Q^{n,eps} of ||V_k(x) - w_k|| for both k, on a grid.
double max_field_deviation(const SquareChart& chart, int grid = 101);

struct ControlSegment {
  double duration = 0.0;
  ControlField field;
};

struct ControlSchedule {
  std::vector<ControlSegment> segments;
  double total = 0.0;
  double eps = 0.0;  // chart scale; sets the admissible integration step
};

ControlSchedule sweeping_schedule(const SquareChart& chart);

struct ControlPath {
  std::vector<double> times;
  std::vector<Vec2> points;
};

// Classical RK4 with a fixed step no larger than dt; each segment is split
// into an integer number of equal steps so that boundaries are hit exactly.
ControlPath integrate_control(const ControlSchedule& schedule, const Vec2& x0, double dt);

// Allowance added to every bound: 10 dt^4 per unit time plus a rounding term.
double integration_tolerance(const SquareChart& chart, double dt, double t);

struct NospeedReport {
  int grid_size = 0;
  int checks = 0;
  int violations = 0;
  double max_violation = 0.0;  // max of deviation - (eps t + tol); <= 0 means pass
  double max_ratio = 0.0;      // max of deviation / (eps t)
  std::vector<double> times;
  // Per grid point (row-major, both fields, final time): distance to Q and
  // the deviation at t_u.
  std::vector<double> radius;
  std::vector<double> deviation;
  bool passed() const { return violations == 0; }
};

NospeedReport nospeed_certificate(const SquareChart& chart, double dt, int grid_size);

struct TableCheck {
  std::string label;
  double time = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double observed_min = 0.0;
  double observed_max = 0.0;
  bool passed = false;
};

struct SweepReport {
  bool precondition_ok = true;
  std::string precondition_message;
  std::vector<TableCheck> table;
  int raster_cells = 0;
  int covered_cells = 0;
  std::vector<Vec2> covered;    // chart coordinates of covered cell centres
  std::vector<Vec2> uncovered;
  bool table_passed = false;
  bool coverage_passed = false;
  bool passed() const { return precondition_ok && table_passed && coverage_passed; }
};

// test_curve: polyline vertices in physical coordinates.
SweepReport sweep_certificate(const SquareChart& chart, const std::vector<Vec2>& test_curve,
                              double dt);

// Straight segment from Z = (-7, 0) to Z = (-1, 0) with `points` vertices.
std::vector<Vec2> straight_test_curve(const SquareChart& chart, int points = 49);

}  // namespace ibf
