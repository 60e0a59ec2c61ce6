#include "ibf/shape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ibf/errors.hpp"
#include "ibf/parallel.hpp"

namespace ibf {

void accumulate_swept(SweptGrid& grid, const CurveSnapshot& snapshot) {
  grid.accumulate(snapshot.points, snapshot.link, snapshot.time);
}

void accumulate_swept(SweptGrid& grid, const CurveState& state) {
  grid.accumulate(state.cloud.points, state.link, state.cloud.time);
}

HittingSample hitting_time(const Trajectory& trajectory, const Vec2& p, double R) {
  if (trajectory.snapshots.empty()) throw PreconditionError("hitting_time: empty trajectory");
  HittingSample s;
  s.target = p;
  s.R = R;
  for (const auto& snap : trajectory.snapshots) {
    if (distance_to_polyline(snap.view(), p) <= R && diameter_2d(snap.points) >= 1.0) {
      s.tau = snap.time;
      return s;
    }
  }
  s.censored = true;
  s.tau = trajectory.snapshots.back().time;
  return s;
}

std::optional<double> sweep_time(const SweptGrid& grid, const Vec2& p, double R) {
  const double cs = grid.cell_size();
  if (R < 2.0 * cs) throw PreconditionError("sweep_time: R must be at least two cells");
  double worst = 0.0;
  bool any = false;
  const int i0 = static_cast<int>(std::floor((p.x() - R - grid.origin().x()) / cs)) - 1;
  const int i1 = static_cast<int>(std::floor((p.x() + R - grid.origin().x()) / cs)) + 1;
  const int j0 = static_cast<int>(std::floor((p.y() - R - grid.origin().y()) / cs)) - 1;
  const int j1 = static_cast<int>(std::floor((p.y() + R - grid.origin().y()) / cs)) + 1;
  for (int j = j0; j <= j1; ++j)
    for (int i = i0; i <= i1; ++i) {
      const Vec2 c = grid.cell_center(i, j);
      if ((c - p).norm() > R) continue;
      any = true;
      if (i < -grid.extent_x() || i >= grid.extent_x() || j < -grid.extent_y() ||
          j >= grid.extent_y())
        return std::nullopt;
      const double t = grid.first_cover_time(i, j);
      if (t == SweptGrid::kUncovered) return std::nullopt;
      worst = std::max(worst, t);
    }
  if (!any) return std::nullopt;
  return worst;
}

CurveState far_side_segment(const Vec2& v, double R, double refine_threshold) {
  const Vec2 u = v / v.norm();
  return make_segment(-2.0 * R * u, -(2.0 * R - 1.0) * u, refine_threshold);
}

ShapeRunOptions default_shape_options() {
  ShapeRunOptions o;
  o.curve.log_insertions = false;
  o.curve.prune.depth = 2.5;
  o.curve.prune.max_per_cell = 4;
  o.curve.prune.cap_depth = 0.75;
  return o;
}

ReplicaHits run_hitting_replica(const CorrelationFamily& family, const CurveState& curve,
                                const std::vector<Vec2>& targets, double R,
                                const ShapeRunOptions& options, std::uint64_t seed,
                                int replica) {
  RngStream rng(seed);
  CurveSimulator sim(family, curve, options.scheme, rng, options.curve);
  ReplicaHits out;
  out.samples.resize(targets.size());
  std::vector<std::uint8_t> done(targets.size(), 0);
  std::size_t remaining = targets.size();
  auto probe = [&] {
    const auto& st = sim.state();
    out.max_points = std::max(out.max_points, st.size());
    bool diam_known = false, large = false;
    for (std::size_t k = 0; k < targets.size(); ++k) {
      if (done[k] || distance_to_polyline(st.view(), targets[k]) > R) continue;
      if (!diam_known) {
        large = diameter_2d(st.cloud.points) >= 1.0;
        diam_known = true;
      }
      if (!large) continue;
      done[k] = 1;
      --remaining;
      out.samples[k].tau = sim.time();
    }
  };
  probe();
  const long long steps = step_count(options.horizon, options.scheme.dt);
  for (long long s = 0; s < steps && remaining > 0; ++s) {
    const double h = std::min(options.scheme.dt, options.horizon - sim.time());
    if (h <= 0.0) break;
    sim.step(h);
    probe();
  }
  for (std::size_t k = 0; k < targets.size(); ++k) {
    HittingSample& hs = out.samples[k];
    hs.target = targets[k];
    hs.R = R;
    hs.replica = replica;
    hs.seed = seed;
    if (!done[k]) {
      hs.censored = true;
      hs.tau = options.horizon;
    }
  }
  out.final_time = sim.time();
  out.capped = sim.capped();
  return out;
}

std::vector<SubadditivityCheck> subadditivity_checks(const std::vector<TimePoint>& points) {
  std::vector<SubadditivityCheck> out;
  auto find = [&](double t) -> const TimePoint* {
    for (const auto& p : points)
      if (p.used && std::abs(p.t - t) < 1e-9 * std::max(1.0, t)) return &p;
    return nullptr;
  };
  for (std::size_t a = 0; a < points.size(); ++a)
    for (std::size_t b = a; b < points.size(); ++b) {
      const TimePoint* pa = find(points[a].t);
      const TimePoint* pb = find(points[b].t);
      const TimePoint* ps = find(points[a].t + points[b].t);
      if (!pa || !pb || !ps) continue;
      SubadditivityCheck c;
      c.t1 = pa->t;
      c.t2 = pb->t;
      c.lhs = ps->mean;
      c.rhs = pa->mean + pb->mean;
      const double se_a = pa->standard_error, se_b = pb->standard_error;
      c.slack = 2.0 * std::sqrt(ps->standard_error * ps->standard_error +
                                (a == b ? 4.0 * se_a * se_a : se_a * se_a + se_b * se_b));
      c.passed = c.lhs <= c.rhs + c.slack;
      out.push_back(c);
    }
  return out;
}

StableNormEstimate fit_stable_norm(const std::vector<double>& t_grid,
                                   std::vector<std::vector<HittingSample>> samples,
                                   double R, double horizon, const Vec2& direction) {
  if (t_grid.size() < 3) throw PreconditionError("stable norm: t_grid needs at least 3 entries");
  for (std::size_t k = 1; k < t_grid.size(); ++k)
    if (!(t_grid[k] > t_grid[k - 1]))
      throw PreconditionError("stable norm: t_grid must be increasing");
  if (samples.size() != t_grid.size())
    throw PreconditionError("stable norm: one sample list per t required");
  StableNormEstimate est;
  est.direction = direction;
  est.R = R;
  est.horizon = horizon;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    TimePoint tp;
    tp.t = t_grid[k];
    const auto& s = samples[k];
    tp.samples = static_cast<int>(s.size());
    double sum = 0.0, sq = 0.0;
    for (const auto& h : s) {
      tp.censored += h.censored ? 1 : 0;
      sum += h.tau;
    }
    const double n = static_cast<double>(s.size());
    tp.mean = n > 0 ? sum / n : 0.0;
    for (const auto& h : s) sq += (h.tau - tp.mean) * (h.tau - tp.mean);
    tp.standard_error = n > 1 ? std::sqrt(sq / (n - 1.0) / n) : 0.0;
    tp.used = n > 0 && tp.censored <= kMaxCensoredFraction * n;
    if (!tp.used) est.reliable = false;
    est.points.push_back(tp);
  }
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  int used = 0;
  for (const auto& p : est.points) {
    if (!p.used) continue;
    const double w = 1.0 / std::max(p.standard_error * p.standard_error, 1e-300);
    sw += w;
    swx += w * p.t;
    swy += w * p.mean;
    swxx += w * p.t * p.t;
    swxy += w * p.t * p.mean;
    ++used;
  }
  const double det = sw * swxx - swx * swx;
  if (used >= 2 && det > 0.0) {
    est.slope = (sw * swxy - swx * swy) / det;
    est.intercept = (swy - est.slope * swx) / sw;
    est.slope_se = std::sqrt(sw / det);
  } else {
    est.reliable = false;
  }
  est.ci_low = est.slope - 1.96 * est.slope_se;
  est.ci_high = est.slope + 1.96 * est.slope_se;
  est.ball_radius = est.slope > 0.0 ? 1.0 / est.slope : std::numeric_limits<double>::infinity();
  if (!(est.slope > 0.0)) est.reliable = false;
  est.subadditivity = subadditivity_checks(est.points);
  est.samples = std::move(samples);
  return est;
}

StableNormEstimate estimate_stable_norm(const CorrelationFamily& family, double R,
                                        const Vec2& v, const std::vector<double>& t_grid,
                                        int replicas, std::uint64_t master_seed,
                                        const ShapeRunOptions& options, int first_replica) {
  if (t_grid.size() < 3) throw PreconditionError("stable norm: t_grid needs at least 3 entries");
  if (replicas < 32) throw PreconditionError("stable norm: replicas must be >= 32");
  if (!(R > 0.0)) throw ParameterError("stable norm: R must be positive");
  if (!(v.norm() > 0.0)) throw ParameterError("stable norm: direction must be nonzero");
  const Vec2 u = v / v.norm();
  std::vector<Vec2> targets;
  for (double t : t_grid) targets.push_back(t * u);
  const CurveState curve = far_side_segment(u, R);
  std::vector<ReplicaHits> runs(static_cast<std::size_t>(replicas));
  parallel_for(runs.size(), [&](std::size_t r) {
    const int id = first_replica + static_cast<int>(r);
    runs[r] = run_hitting_replica(family, curve, targets, R, options,
                                  derive_seed(master_seed, static_cast<std::uint64_t>(id)), id);
  });
  std::vector<std::vector<HittingSample>> samples(t_grid.size());
  for (const auto& run : runs)
    for (std::size_t k = 0; k < t_grid.size(); ++k) samples[k].push_back(run.samples[k]);
  return fit_stable_norm(t_grid, std::move(samples), R, options.horizon, u);
}

IsotropyReport isotropy_check(const std::vector<double>& means,
                              const std::vector<double>& standard_errors, double z) {
  IsotropyReport rep;
  rep.means = means;
  rep.standard_errors = standard_errors;
  for (std::size_t i = 0; i < means.size(); ++i)
    for (std::size_t j = i + 1; j < means.size(); ++j) {
      const double se = std::hypot(standard_errors[i], standard_errors[j]);
      const double d = std::abs(means[i] - means[j]);
      const double zz = se > 0.0 ? d / se : (d > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      rep.worst_z = std::max(rep.worst_z, zz);
    }
  rep.passed = means.size() >= 2 && rep.worst_z <= z;
  return rep;
}

ShapeCheck limit_shape_check(const SweptGrid& swept, double t, double ball_radius, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw PreconditionError("limit_shape_check: eps must be in (0,1)");
  ShapeCheck c;
  c.inner_radius = (1.0 - eps) * t * ball_radius;
  c.outer_radius = (1.0 + eps) * t * ball_radius;
  // Cells beyond the raster are uncovered; the nearest one sits just past the
  // border.
  const double cs = swept.cell_size();
  const Vec2 lo = swept.origin() - Vec2(swept.extent_x(), swept.extent_y()) * cs;
  const Vec2 hi = swept.origin() + Vec2(swept.extent_x(), swept.extent_y()) * cs;
  double covered_radius = std::min({-lo.x(), -lo.y(), hi.x(), hi.y()}) + 0.5 * cs;
  double reach = 0.0;
  for (int iy = 0; iy < swept.height(); ++iy)
    for (int ix = 0; ix < swept.width(); ++ix) {
      const double d = swept.center_at(ix, iy).norm();
      if (swept.time_at(ix, iy) <= t)
        reach = std::max(reach, d);
      else
        covered_radius = std::min(covered_radius, d);
    }
  c.covered_radius = covered_radius;
  c.reach = reach;
  c.inner_ok = covered_radius > c.inner_radius;
  c.outer_ok = reach <= c.outer_radius;
  c.inner_margin = covered_radius - c.inner_radius;
  c.outer_margin = c.outer_radius - reach;
  return c;
}

LimitShapeReport limit_shape_experiment(const CorrelationFamily& family, const CurveState& curve,
                                        double t, double ball_radius, double eps, int replicas,
                                        std::uint64_t master_seed, const ShapeRunOptions& options,
                                        bool keep_grids) {
  LimitShapeReport rep;
  rep.t = t;
  rep.eps = eps;
  rep.ball_radius = ball_radius;
  const std::size_t n = static_cast<std::size_t>(std::max(0, replicas));
  rep.replicas.resize(n);
  std::vector<std::optional<SweptGrid>> grids(n);
  CurveOptions co = options.curve;
  co.track_coverage = true;
  parallel_for(n, [&](std::size_t r) {
    RngStream rng(derive_seed(master_seed, r));
    CurveSimulator sim(family, curve, options.scheme, rng, co);
    while (sim.time() < t - 1e-12) sim.step(std::min(options.scheme.dt, t - sim.time()));
    rep.replicas[r] = limit_shape_check(*sim.coverage(), t, ball_radius, eps);
    if (keep_grids) grids[r] = *sim.coverage();
  });
  int both = 0;
  for (const auto& c : rep.replicas) both += (c.inner_ok && c.outer_ok) ? 1 : 0;
  rep.fraction_both = n ? static_cast<double>(both) / static_cast<double>(n) : 0.0;
  if (keep_grids)
    for (auto& g : grids) rep.grids.push_back(std::move(*g));
  return rep;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InsufficientDataError("quantile: no values");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= values.size()) return values.back();
  const double f = pos - static_cast<double>(i);
  return values[i] * (1.0 - f) + values[i + 1] * f;
}

TailReport tail_exponent(const std::vector<HittingSample>& samples, double t_ref) {
  if (!(t_ref > 0.0)) throw ParameterError("tail_exponent: t_ref must be positive");
  TailReport rep;
  std::vector<double> x;
  for (const auto& s : samples) {
    if (s.censored) {
      ++rep.censored;
      x.push_back(std::numeric_limits<double>::infinity());
    } else {
      x.push_back(s.tau / t_ref);
    }
  }
  rep.samples = static_cast<int>(samples.size());
  if (rep.samples - rep.censored < kMinTailSamples)
    throw InsufficientDataError("tail_exponent: need at least 200 uncensored samples");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  rep.median = quantile(x, 0.5);
  auto survival = [&](double a) {
    const auto it = std::upper_bound(x.begin(), x.end(), a);
    return static_cast<double>(x.end() - it) / n;
  };
  rep.survival_low = survival(1.5 * rep.median);
  rep.survival_high = survival(3.0 * rep.median);
  rep.ratio = rep.survival_low > 0.0 ? rep.survival_high / rep.survival_low : 0.0;
  rep.passed = 4.0 * rep.survival_high <= rep.survival_low;
  // Survival curve at each distinct finite sample value.
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) break;
    if (i + 1 < x.size() && x[i + 1] == x[i]) continue;
    rep.curve.push_back({x[i], static_cast<double>(x.size() - i - 1) / n});
  }
  // Log-log slope of S beyond the median.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& p : rep.curve) {
    if (p.x < rep.median || p.survival <= 0.0) continue;
    const double lx = std::log(p.x), ly = std::log(p.survival);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  const double det = m * sxx - sx * sx;
  if (m >= 2 && det > 0.0) rep.decay_exponent = -(m * sxy - sx * sy) / det;
  return rep;
}

DisplacementProfile displacement_profile(const Trajectory& trajectory) {
  DisplacementProfile p;
  double sup = 0.0;
  for (const auto& s : trajectory.snapshots) {
    if (s.points.cols() > 0) sup = std::max(sup, s.points.colwise().norm().maxCoeff());
    p.times.push_back(s.time);
    p.sup_norm.push_back(sup);
  }
  return p;
}

namespace {

double sup_until(const DisplacementProfile& p, double t) {
  double sup = 0.0;
  for (std::size_t i = 0; i < p.times.size() && p.times[i] <= t + 1e-12; ++i)
    sup = std::max(sup, p.sup_norm[i]);
  return sup;
}

}  // namespace

DisplacementReport displacement_bound(const std::vector<DisplacementProfile>& profiles,
                                      double T) {
  DisplacementReport rep;
  rep.horizon = T;
  for (const auto& p : profiles)
    if (!p.sup_norm.empty()) rep.initial_sup = std::max(rep.initial_sup, p.sup_norm.front());
  if (!(T > 0.0) || profiles.empty()) return rep;
  for (const auto& p : profiles) {
    rep.ratio_full.push_back(sup_until(p, T) / T);
    rep.ratio_half.push_back(sup_until(p, 0.5 * T) / (0.5 * T));
  }
  rep.p95_full = quantile(rep.ratio_full, 0.95);
  rep.p95_half = quantile(rep.ratio_half, 0.95);
  const double hi = std::max(rep.p95_full, rep.p95_half);
  rep.stable = hi > 0.0 && std::abs(rep.p95_full - rep.p95_half) <= 0.5 * hi;
  return rep;
}

DisplacementReport displacement_bound(const std::vector<Trajectory>& trajectories, double T) {
  std::vector<DisplacementProfile> profiles;
  for (const auto& t : trajectories) profiles.push_back(displacement_profile(t));
  return displacement_bound(profiles, T);
}

ConcentrationReport concentration_check(const std::vector<double>& t_grid,
                                        const std::vector<std::vector<HittingSample>>& samples,
                                        double slope, double tolerance) {
  ConcentrationReport rep;
  rep.slope = slope;
  for (std::size_t k = 0; k < t_grid.size() && k < samples.size(); ++k) {
    const double t = t_grid[k];
    int far = 0;
    for (const auto& s : samples[k])
      if (std::abs(s.tau / t - slope) > tolerance * slope) ++far;
    const double n = static_cast<double>(samples[k].size());
    const double p = n > 0 ? far / n : 0.0;
    rep.t.push_back(t);
    rep.probability.push_back(p);
    rep.standard_error.push_back(n > 0 ? std::sqrt(p * (1.0 - p) / n) : 0.0);
  }
  const std::size_t m = rep.probability.size();
  bool ok = m >= 2;
  for (std::size_t k = 1; k < m; ++k) {
    const double rise = rep.probability[k] - rep.probability[k - 1];
    if (rise <= 0.0) continue;
    ++rep.inversions;
    if (rise > std::hypot(rep.standard_error[k], rep.standard_error[k - 1])) ok = false;
  }
  if (rep.inversions > 1) ok = false;
  if (m >= 2 && !(rep.probability.back() < rep.probability.front() ||
                  (rep.probability.front() == 0.0 && rep.probability.back() == 0.0)))
    ok = false;
  rep.passed = ok;
  return rep;
}

ConcentrationReport concentration_check(const CorrelationFamily& family, double R,
                                        const Vec2& v, const std::vector<double>& t_grid,
                                        int replicas, std::uint64_t master_seed,
                                        const ShapeRunOptions& options) {
  const StableNormEstimate est =
      estimate_stable_norm(family, R, v, t_grid, replicas, master_seed, options);
  return concentration_check(t_grid, est.samples, est.slope);
}

}  // namespace ibf
