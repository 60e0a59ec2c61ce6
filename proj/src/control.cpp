#include "ibf/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ibf {

Vec2 eval_control(const ControlField& field, const Vec2& x) {
  if (field.sign == 0) return Vec2::Zero();
  double b11, b12, b22;
  eval_tensor_2d(field.family, x.x() - field.q.x(), x.y() - field.q.y(), b11, b12, b22);
  const Vec2 col = field.component == 1 ? Vec2(b11, b12) : Vec2(b12, b22);
  return static_cast<double>(field.sign) * col;
}

namespace {

Vec2 unit(int k) { return k == 1 ? Vec2(1.0, 0.0) : Vec2(0.0, 1.0); }

double field_sup(const SquareChart& c, double half_width, int grid,
                 const std::function<double(const Vec2&, int)>& f) {
  double best = 0.0;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      const Vec2 z(-1.0 + 2.0 * i / (grid - 1), -1.0 + 2.0 * j / (grid - 1));
      const Vec2 x = c.q + half_width * z;
      best = std::max({best, f(x, 1), f(x, 2)});
    }
  return best;
}

}  // namespace

SquareChart build_square(const CorrelationFamily& family, const Vec2& q, int n) {
  if (n < 1) throw PreconditionError("build_square: n must be >= 1");
  if (family.dimension != 2) throw ParameterError("build_square: the chart is 2-D");
  family.validate();
  SquareChart c;
  c.family = family;
  c.q = q;
  c.n = n;
  c.taylor_radius = 0.5 * family.length_scale;
  // Polar grid of 100 x 100 points on the disc of radius l/2 (origin excluded).
  double ratio = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double r = c.taylor_radius * i / 100.0;
    for (int j = 0; j < 100; ++j) {
      const double th = 6.283185307179586476925 * j / 100.0;
      const Vec2 x = q + r * Vec2(std::cos(th), std::sin(th));
      for (int k = 1; k <= 2; ++k) {
        const Vec2 v = eval_control({q, k, family, 1}, x);
        ratio = std::max(ratio, (v - unit(k)).norm() / (r * r));
      }
    }
  }
  c.c13 = kC13SafetyFactor * ratio;
  c.eps = std::min({c.taylor_radius / (std::sqrt(2.0) * n), 1.0 / (2.0 * c.c13 * n * n),
                    1.0 / 102.0});
  if (!(c.eps > 1e-12)) throw ParameterError("build_square: degenerate eps");
  const double speed = field_sup(c, n * c.eps, 101, [&](const Vec2& x, int k) {
    return eval_control({q, k, family, 1}, x).norm();
  });
  c.t_u = 0.5 * n * c.eps / speed;
  return c;
}

double max_field_deviation(const SquareChart& chart, int grid) {
  return field_sup(chart, chart.n * chart.eps, grid, [&](const Vec2& x, int k) {
    return (eval_control({chart.q, k, chart.family, 1}, x) - unit(k)).norm();
  });
}

ControlSchedule sweeping_schedule(const SquareChart& chart) {
  ControlSchedule s;
  s.eps = chart.eps;
  const double e = chart.eps;
  s.segments = {{10.0 * e, {chart.q, 2, chart.family, -1}},
                {4.0 * e, {chart.q, 1, chart.family, 1}},
                {20.0 * e, {chart.q, 2, chart.family, 1}}};
  s.total = 0.0;
  for (const auto& seg : s.segments) s.total += seg.duration;
  return s;
}

namespace {

Vec2 rk4(const ControlField& f, const Vec2& x, double h) {
  const Vec2 k1 = eval_control(f, x);
  const Vec2 k2 = eval_control(f, x + 0.5 * h * k1);
  const Vec2 k3 = eval_control(f, x + 0.5 * h * k2);
  const Vec2 k4 = eval_control(f, x + h * k3);
  return (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

long long substeps(double duration, double dt) {
  return std::max<long long>(1, static_cast<long long>(std::ceil(duration / dt - 1e-9)));
}

void check_dt(const ControlSchedule& s, double dt) {
  if (!(dt > 0.0)) throw ParameterError("integrate_control: dt must be positive");
  if (s.eps > 0.0 && dt > s.eps / 100.0 * (1.0 + 1e-12))
    throw PreconditionError("integrate_control: dt must not exceed eps/100");
}

}  // namespace

ControlPath integrate_control(const ControlSchedule& schedule, const Vec2& x0, double dt) {
  check_dt(schedule, dt);
  ControlPath path;
  path.times.push_back(0.0);
  path.points.push_back(x0);
  Vec2 x = x0;
  double t0 = 0.0;
  for (const auto& seg : schedule.segments) {
    const long long m = substeps(seg.duration, dt);
    const double h = seg.duration / m;
    for (long long k = 1; k <= m; ++k) {
      x += rk4(seg.field, x, h);
      if (!x.allFinite()) throw NumericalError("integrate_control: non-finite state");
      path.times.push_back(k == m ? t0 + seg.duration : t0 + k * h);
      path.points.push_back(x);
    }
    t0 += seg.duration;
  }
  return path;
}

double integration_tolerance(const SquareChart& chart, double dt, double t) {
  const double dt2 = dt * dt;
  const double scale = std::max(std::abs(chart.q.x()), std::abs(chart.q.y())) + chart.n * chart.eps;
  return 10.0 * dt2 * dt2 * t + 1e3 * std::numeric_limits<double>::epsilon() * scale;
}

NospeedReport nospeed_certificate(const SquareChart& chart, double dt, int grid_size) {
  NospeedReport rep;
  rep.grid_size = grid_size;
  const long long quarter = substeps(chart.t_u / 4.0, dt);
  const double h = chart.t_u / (4.0 * quarter);
  rep.times = {chart.t_u / 4.0, chart.t_u / 2.0, chart.t_u};
  const double half = 0.5 * chart.n * chart.eps;
  for (int i = 0; i < grid_size; ++i)
    for (int j = 0; j < grid_size; ++j) {
      const double zx = grid_size == 1 ? 0.0 : -1.0 + 2.0 * i / (grid_size - 1);
      const double zy = grid_size == 1 ? 0.0 : -1.0 + 2.0 * j / (grid_size - 1);
      const Vec2 z = chart.q + half * Vec2(zx, zy);
      for (int k = 1; k <= 2; ++k) {
        const ControlField f{chart.q, k, chart.family, 1};
        // Integrate the displacement to avoid cancellation against z.
        Vec2 disp = Vec2::Zero();
        double dev_final = 0.0;
        for (long long s = 1; s <= 4 * quarter; ++s) {
          disp += rk4(f, z + disp, h);
          if (s % quarter != 0) continue;
          const double t = (s == 4 * quarter) ? chart.t_u : s * h;
          const double dev = (disp - t * unit(k)).norm();
          const double bound = chart.eps * t + integration_tolerance(chart, dt, t);
          ++rep.checks;
          rep.max_violation = rep.checks == 1 ? dev - bound : std::max(rep.max_violation, dev - bound);
          rep.max_ratio = std::max(rep.max_ratio, dev / (chart.eps * t));
          if (dev > bound) ++rep.violations;
          dev_final = dev;
        }
        rep.radius.push_back((z - chart.q).norm());
        rep.deviation.push_back(dev_final);
      }
    }
  return rep;
}

std::vector<Vec2> straight_test_curve(const SquareChart& chart, int points) {
  std::vector<Vec2> out;
  for (int i = 0; i < points; ++i) {
    const double z1 = -7.0 + 6.0 * i / (points - 1);
    out.push_back(chart.from_chart(Vec2(z1, 0.0)));
  }
  return out;
}

namespace {

// Cells of size 1/4 in chart units covering [-2, 2]^2.
constexpr int kCoverageCells = 16;

void mark_chart_segment(const Vec2& a, const Vec2& b, std::vector<std::uint8_t>& hit) {
  // Sample densely enough that no cell crossed by the segment is skipped.
  const double len = (b - a).norm();
  const int samples = std::max(2, static_cast<int>(std::ceil(len / 0.02)) + 1);
  for (int s = 0; s < samples; ++s) {
    const Vec2 p = a + (b - a) * (static_cast<double>(s) / (samples - 1));
    const int ix = static_cast<int>(std::floor((p.x() + 2.0) * 4.0));
    const int iy = static_cast<int>(std::floor((p.y() + 2.0) * 4.0));
    if (ix >= 0 && ix < kCoverageCells && iy >= 0 && iy < kCoverageCells)
      hit[iy * kCoverageCells + ix] = 1;
  }
}

}  // namespace

SweepReport sweep_certificate(const SquareChart& chart, const std::vector<Vec2>& test_curve,
                              double dt) {
  SweepReport rep;
  const double slack = 1e-9;
  if (test_curve.size() < 2) {
    rep.precondition_ok = false;
    rep.precondition_message = "test curve needs at least two points";
    return rep;
  }
  std::vector<Vec2> z(test_curve.size());
  double zmin = std::numeric_limits<double>::infinity(), zmax = -zmin;
  bool inside = true;
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = chart.to_chart(test_curve[i]);
    zmin = std::min(zmin, z[i].x());
    zmax = std::max(zmax, z[i].x());
    inside = inside && std::abs(z[i].x()) <= 7.0 + slack && std::abs(z[i].y()) <= 7.0 + slack;
  }
  if (!inside) {
    rep.precondition_ok = false;
    rep.precondition_message = "test curve leaves Z^{-1}([-7,7]^2)";
  } else if (zmin > -7.0 + slack || zmax < -1.0 - slack) {
    rep.precondition_ok = false;
    rep.precondition_message = "test curve does not link Z1 = -7 to Z1 = -1";
  }
  if (!rep.precondition_ok) return rep;

  // Endpoint roles: z starts at the leftmost point, y~ at the first point
  // reaching Z1 >= -1.
  std::size_t iz = 0, iy = 0;
  for (std::size_t i = 0; i < z.size(); ++i)
    if (z[i].x() < z[iz].x()) iz = i;
  for (std::size_t i = 0; i < z.size(); ++i)
    if (z[i].x() >= -1.0 - slack) {
      iy = i;
      break;
    }

  const ControlSchedule sched = sweeping_schedule(chart);
  check_dt(sched, dt);
  std::vector<Vec2> x = test_curve;
  std::vector<std::uint8_t> hit(kCoverageCells * kCoverageCells, 0);
  auto rasterize = [&] {
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
      mark_chart_segment(chart.to_chart(x[i]), chart.to_chart(x[i + 1]), hit);
  };
  struct Bounds {
    double t;
    double z1lo, z1hi, z2lo, z2hi;
    double e1lo, e1hi, y1lo, y1hi;
  };
  const double third = 1.0 / 3.0;
  const std::vector<Bounds> table = {
      {0.0, -7, -1, -7, 7, -7, -7, -1, -1},
      {10.0, -7 - third, -1 + third, -17 - third, -3 + third, -7 - third, -7 + third,
       -1 - third, -1 + third},
      {14.0, -3 - 2 * third, 3 + 2 * third, -17 - 2 * third, -3 + 2 * third, -3 - 2 * third,
       -3 + 2 * third, 3 - 2 * third, 3 + 2 * third},
      {34.0, -4, 4, 2, 18, -4, -2, 2, 4}};
  auto record = [&](const Bounds& b) {
    const double t = b.t * chart.eps;
    const double tol = integration_tolerance(chart, dt, t) / chart.eps + slack;
    double z1lo = 1e300, z1hi = -1e300, z2lo = 1e300, z2hi = -1e300;
    for (const Vec2& p : x) {
      const Vec2 c = chart.to_chart(p);
      z1lo = std::min(z1lo, c.x());
      z1hi = std::max(z1hi, c.x());
      z2lo = std::min(z2lo, c.y());
      z2hi = std::max(z2hi, c.y());
    }
    const double ez = chart.to_chart(x[iz]).x();
    const double ey = chart.to_chart(x[iy]).x();
    auto add = [&](const std::string& label, double lo, double hi, double omin, double omax) {
      TableCheck tc{label, t, lo, hi, omin, omax, omin >= lo - tol && omax <= hi + tol};
      rep.table.push_back(tc);
    };
    if (b.t == 0.0) {
      add("curve Z1 at t=0", b.z1lo, b.z1hi, z1lo, z1hi);
      add("curve Z2 at t=0", b.z2lo, b.z2hi, z2lo, z2hi);
      return;
    }
    const std::string when = " at t=" + std::to_string(static_cast<int>(b.t)) + "eps";
    add("curve Z1" + when, b.z1lo, b.z1hi, z1lo, z1hi);
    add("curve Z2" + when, b.z2lo, b.z2hi, z2lo, z2hi);
    add("endpoint z Z1" + when, b.e1lo, b.e1hi, ez, ez);
    add("endpoint y Z1" + when, b.y1lo, b.y1hi, ey, ey);
  };
  record(table[0]);
  rasterize();
  std::size_t row = 1;
  for (const auto& seg : sched.segments) {
    const long long m = substeps(seg.duration, dt);
    const double h = seg.duration / m;
    for (long long k = 1; k <= m; ++k) {
      for (Vec2& p : x) {
        p += rk4(seg.field, p, h);
        if (!p.allFinite()) throw NumericalError("sweep_certificate: non-finite state");
      }
      rasterize();
    }
    record(table[row++]);
  }
  rep.table_passed = std::all_of(rep.table.begin(), rep.table.end(),
                                 [](const TableCheck& c) { return c.passed; });
  rep.raster_cells = kCoverageCells * kCoverageCells;
  for (int iy2 = 0; iy2 < kCoverageCells; ++iy2)
    for (int ix = 0; ix < kCoverageCells; ++ix) {
      const Vec2 c(-2.0 + (ix + 0.5) / 4.0, -2.0 + (iy2 + 0.5) / 4.0);
      if (hit[iy2 * kCoverageCells + ix]) {
        ++rep.covered_cells;
        rep.covered.push_back(c);
      } else {
        rep.uncovered.push_back(c);
      }
    }
  rep.coverage_passed = rep.covered_cells == rep.raster_cells;
  return rep;
}

}  // namespace ibf
