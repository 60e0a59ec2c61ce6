#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "ibf/errors.hpp"
#include "ibf/parallel.hpp"
#include "ibf/rng.hpp"
#include "ibf/shape.hpp"

using namespace ibf;

namespace {

CurveSnapshot snapshot_of(const Vec2& a, const Vec2& b, double time) {
  CurveSnapshot s;
  s.time = time;
  s.points.resize(2, 2);
  s.points.col(0) = a;
  s.points.col(1) = b;
  s.link = {1, 0};
  return s;
}

Trajectory single_snapshot(const CurveState& c) {
  Trajectory t;
  t.snapshots.push_back({c.cloud.time, c.cloud.points, c.link});
  t.final_state = c;
  return t;
}

HittingSample sample(double tau, bool censored = false) {
  HittingSample s;
  s.tau = tau;
  s.censored = censored;
  return s;
}

// Grid covered exactly on cells whose centre is within `radius` of 0.
SweptGrid disk_grid(double radius, double cs, double time) {
  const int ext = static_cast<int>(std::ceil(radius / cs)) + 4;
  SweptGrid g(Vec2::Zero(), cs, ext, ext);
  for (int j = -ext; j < ext; ++j)
    for (int i = -ext; i < ext; ++i)
      if (g.cell_center(i, j).norm() <= radius) g.mark_point(g.cell_center(i, j), time);
  return g;
}

}  // namespace

// ----- accumulate_swept -------------------------------------------------------

TEST(AccumulateSwept, SingleSnapshotMarksTheSegmentCells) {
  SweptGrid g(Vec2::Zero(), 0.25, 16, 16);
  accumulate_swept(g, snapshot_of(Vec2(0.1, 0.1), Vec2(1.9, 0.1), 0.5));
  // horizontal segment inside row j = 0, columns 0..7
  EXPECT_EQ(g.covered_count(), 8u);
  for (int i = 0; i < 8; ++i) EXPECT_EQ(g.first_cover_time(i, 0), 0.5);
  EXPECT_FALSE(g.covered(8, 0));
  EXPECT_FALSE(g.covered(0, 1));
}

TEST(AccumulateSwept, Idempotent) {
  SweptGrid g(Vec2::Zero(), 0.1, 32, 32);
  const auto s = snapshot_of(Vec2(-0.33, 0.71), Vec2(1.2, -0.4), 1.0);
  accumulate_swept(g, s);
  const auto n = g.covered_count();
  std::vector<double> before;
  for (int iy = 0; iy < g.height(); ++iy)
    for (int ix = 0; ix < g.width(); ++ix) before.push_back(g.time_at(ix, iy));
  accumulate_swept(g, s);
  EXPECT_EQ(g.covered_count(), n);
  std::size_t k = 0;
  for (int iy = 0; iy < g.height(); ++iy)
    for (int ix = 0; ix < g.width(); ++ix) EXPECT_EQ(g.time_at(ix, iy), before[k++]);
}

TEST(AccumulateSwept, KeepsEarliestTimeAndOnlyGrows) {
  SweptGrid g(Vec2::Zero(), 0.25, 8, 8);
  accumulate_swept(g, snapshot_of(Vec2(0.1, 0.1), Vec2(0.6, 0.1), 2.0));
  const auto n1 = g.covered_count();
  accumulate_swept(g, snapshot_of(Vec2(0.1, 0.1), Vec2(0.1, 0.6), 1.0));
  EXPECT_GE(g.covered_count(), n1);
  EXPECT_EQ(g.first_cover_time(0, 0), 1.0);
  EXPECT_EQ(g.first_cover_time(2, 0), 2.0);
}

TEST(AccumulateSwept, DiagonalUnitSegmentCellCount) {
  // independent oracle: cells hit by dense sampling of the segment
  const Vec2 a(0.013, 0.027);
  const Vec2 b = a + Vec2(1.0, 1.0) / std::sqrt(2.0);
  std::set<std::pair<int, int>> cells;
  for (int k = 0; k <= 100000; ++k) {
    const Vec2 p = a + (b - a) * (k / 100000.0);
    cells.insert({static_cast<int>(std::floor(p.x() / 0.1)), static_cast<int>(std::floor(p.y() / 0.1))});
  }
  SweptGrid g(Vec2::Zero(), 0.1, 16, 16);
  accumulate_swept(g, snapshot_of(a, b, 0.0));
  EXPECT_GE(g.covered_count(), 10u);
  EXPECT_LE(g.covered_count(), 21u);
  for (auto [i, j] : cells) EXPECT_TRUE(g.covered(i, j)) << i << "," << j;
  // thickness one cell: nothing beyond the 8-neighbourhood of the oracle set
  EXPECT_LE(g.covered_count(), 2 * cells.size());
}

TEST(AccumulateSwept, GrowsToFitFarPoints) {
  SweptGrid g(Vec2::Zero(), 0.25, 4, 4);
  accumulate_swept(g, snapshot_of(Vec2(0.0, 0.0), Vec2(5.0, 0.0), 0.0));
  EXPECT_GT(g.growth_events(), 0);
  EXPECT_TRUE(g.covered(19, 0));
}

// ----- hitting_time / sweep_time ---------------------------------------------

TEST(HittingTime, ImmediateContact) {
  const auto tr = single_snapshot(make_segment(Vec2(0, 0), Vec2(2, 0)));
  const auto s = hitting_time(tr, Vec2(1.0, 0.5), 1.0);
  EXPECT_FALSE(s.censored);
  EXPECT_EQ(s.tau, 0.0);
}

TEST(HittingTime, SmallCurveDoesNotCount) {
  const auto tr = single_snapshot(make_segment(Vec2(0, 0), Vec2(0.5, 0)));
  const auto s = hitting_time(tr, Vec2(0.0, 0.0), 1.0);
  EXPECT_TRUE(s.censored);
}

TEST(HittingTime, FarTargetIsCensored) {
  RngStream rng(3);
  StepScheme sch;
  sch.dt = 0.05;
  const auto tr = simulate_curve(solenoidal(), make_segment(Vec2(0, 0), Vec2(1, 0)), 1.0, sch, rng, 1);
  const auto s = hitting_time(tr, Vec2(100.0, 0.0), 1.0);
  EXPECT_TRUE(s.censored);
  EXPECT_DOUBLE_EQ(s.tau, tr.snapshots.back().time);
  EXPECT_THROW(hitting_time(Trajectory{}, Vec2::Zero(), 1.0), PreconditionError);
}

TEST(HittingTime, ReplicaRunnerMatchesTrajectoryScan) {
  ShapeRunOptions o;
  o.horizon = 3.0;
  o.scheme.dt = 0.05;
  const CurveState c = make_segment(Vec2(0, 0), Vec2(1, 0));
  const std::vector<Vec2> targets = {Vec2(2.0, 0.0), Vec2(0.0, 2.5), Vec2(40.0, 0.0)};
  const auto hits = run_hitting_replica(solenoidal(), c, targets, 1.0, o, 77, 0);
  RngStream rng(77);
  const auto tr = simulate_curve(solenoidal(), c, o.horizon, o.scheme, rng, 1);
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const auto s = hitting_time(tr, targets[k], 1.0);
    EXPECT_EQ(s.censored, hits.samples[k].censored);
    if (!s.censored) EXPECT_NEAR(s.tau, hits.samples[k].tau, 1e-12);
  }
  EXPECT_TRUE(hits.samples[2].censored);
}

TEST(HittingTime, CensoringRareForNearbyTarget) {
  ShapeRunOptions o = default_shape_options();
  o.horizon = 20.0;
  const CurveState c = make_circle(Vec2::Zero(), 2.0);
  const int n = 128;
  std::vector<int> censored(n);
  parallel_for(n, [&](std::size_t r) {
    const auto h = run_hitting_replica(solenoidal(), c, {Vec2(5.0, 0.0)}, 2.0, o,
                                       derive_seed(404, r), static_cast<int>(r));
    censored[r] = h.samples[0].censored;
  });
  int total = 0;
  for (int v : censored) total += v;
  EXPECT_LT(total, 0.05 * n);
}

TEST(SweepTime, NeverEnteredIsCensored) {
  SweptGrid g(Vec2::Zero(), 0.25, 16, 16);
  accumulate_swept(g, snapshot_of(Vec2(0, 0), Vec2(1, 0), 0.0));
  EXPECT_FALSE(sweep_time(g, Vec2(3.0, 3.0), 0.5).has_value());
  EXPECT_THROW(sweep_time(g, Vec2(3.0, 3.0), 0.4), PreconditionError);
}

TEST(SweepTime, FullyCoveredDiskGivesLatestTime) {
  SweptGrid g = disk_grid(1.0, 0.25, 1.0);
  g.mark_point(Vec2(0.1, 0.1), 0.5);
  g.mark_point(Vec2(0.6, -0.1), 1.0);
  const auto t = sweep_time(g, Vec2(0.0, 0.0), 0.5);
  ASSERT_TRUE(t.has_value());
  EXPECT_EQ(*t, 1.0);
}

TEST(SweepTime, NotBeforeHittingTime) {
  StepScheme sch;
  sch.dt = 0.02;
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    RngStream rng(seed);
    const auto tr = simulate_curve(solenoidal(), make_segment(Vec2(-0.5, 0), Vec2(0.5, 0)), 6.0, sch,
                                   rng, 1);
    SweptGrid g(Vec2::Zero(), 0.1, 32, 32);
    for (const auto& s : tr.snapshots) accumulate_swept(g, s);
    for (const Vec2& p : {Vec2(0.0, 0.6), Vec2(1.5, 0.0), Vec2(-1.0, -1.0)}) {
      const auto sw = sweep_time(g, p, 1.0);
      const auto hit = hitting_time(tr, p, 1.0);
      if (sw) {
        ASSERT_FALSE(hit.censored);
        EXPECT_GE(*sw + 1e-12, hit.tau);
      }
    }
  }
}

// ----- stable norm ------------------------------------------------------------

TEST(StableNorm, Preconditions) {
  EXPECT_THROW(estimate_stable_norm(solenoidal(), 2.0, Vec2(1, 0), {4.0}, 64, 1), PreconditionError);
  EXPECT_THROW(estimate_stable_norm(solenoidal(), 2.0, Vec2(1, 0), {4, 6, 8}, 16, 1),
               PreconditionError);
}

TEST(StableNorm, FarSideSegment) {
  const CurveState c = far_side_segment(Vec2(0.0, 3.0), 2.0);
  const Vec2 a = c.cloud.points.col(0), b = c.cloud.points.col(c.size() - 1);
  EXPECT_NEAR((a - Vec2(0, -4)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((b - Vec2(0, -3)).norm(), 0.0, 1e-15);
}

TEST(StableNorm, FitRecoversSyntheticSlope) {
  // tau = 0.7 t + 1.5 with small alternating noise
  const std::vector<double> grid = {4, 6, 8, 10};
  std::vector<std::vector<HittingSample>> s(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k)
    for (int r = 0; r < 64; ++r) s[k].push_back(sample(0.7 * grid[k] + 1.5 + (r % 2 ? 0.1 : -0.1)));
  const auto est = fit_stable_norm(grid, s, 2.0, 40.0, Vec2(1, 0));
  EXPECT_NEAR(est.slope, 0.7, 1e-9);
  EXPECT_NEAR(est.intercept, 1.5, 1e-9);
  EXPECT_NEAR(est.ball_radius, 1.0 / 0.7, 1e-9);
  EXPECT_TRUE(est.reliable);
  EXPECT_LE(est.ci_low, 0.7);
  EXPECT_GE(est.ci_high, 0.7);
  // affine means with positive intercept are strictly subadditive
  for (const auto& c : est.subadditivity) EXPECT_TRUE(c.passed);
}

TEST(StableNorm, HeavyCensoringIsFlagged) {
  const std::vector<double> grid = {4, 6, 8};
  std::vector<std::vector<HittingSample>> s(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k)
    for (int r = 0; r < 40; ++r) s[k].push_back(sample(grid[k], k == 2 && r < 10));
  const auto est = fit_stable_norm(grid, s, 2.0, 12.0, Vec2(1, 0));
  EXPECT_FALSE(est.reliable);
  EXPECT_FALSE(est.points[2].used);
  EXPECT_EQ(est.points[2].censored, 10);
}

TEST(StableNorm, SubadditivityViolationDetected) {
  std::vector<TimePoint> pts = {{2, 1.0, 0.01, 100}, {4, 5.0, 0.01, 100}};
  const auto checks = subadditivity_checks(pts);
  ASSERT_FALSE(checks.empty());
  EXPECT_FALSE(checks.front().passed);
  EXPECT_DOUBLE_EQ(checks.front().lhs, 5.0);
  EXPECT_DOUBLE_EQ(checks.front().rhs, 2.0);
}

TEST(StableNorm, SolenoidalSlopePositive) {
  const auto est = estimate_stable_norm(solenoidal(), 2.0, Vec2(1, 0), {4, 6, 8, 10}, 32, 11);
  EXPECT_GT(est.slope, 0.0);
  EXPECT_TRUE(std::isfinite(est.ball_radius));
  EXPECT_GT(est.ball_radius, 0.0);
  for (const auto& p : est.points) EXPECT_EQ(p.samples, 32);
}

TEST(Isotropy, SyntheticMeans) {
  EXPECT_TRUE(isotropy_check({10.0, 10.2, 9.9}, {0.1, 0.1, 0.1}).passed);
  const auto bad = isotropy_check({10.0, 11.0}, {0.1, 0.1});
  EXPECT_FALSE(bad.passed);
  EXPECT_NEAR(bad.worst_z, 1.0 / std::hypot(0.1, 0.1), 1e-9);
}

// ----- limit shape ------------------------------------------------------------

TEST(LimitShape, ZeroTimeInnerDiskEmpty) {
  SweptGrid g(Vec2::Zero(), 0.25, 8, 8);
  const auto c = limit_shape_check(g, 0.0, 1.0, 0.3);
  EXPECT_TRUE(c.inner_ok);
  EXPECT_TRUE(c.outer_ok);
}

TEST(LimitShape, ExactDiskPassesForAnyEps) {
  const double cs = 0.05, t = 4.0, b = 0.5;
  const SweptGrid g = disk_grid(t * b, cs, t);
  for (double eps : {0.05, 0.1, 0.3}) {
    const auto c = limit_shape_check(g, t, b, eps);
    EXPECT_TRUE(c.inner_ok) << eps;
    EXPECT_TRUE(c.outer_ok) << eps;
    EXPECT_NEAR(c.covered_radius, t * b, 2 * cs);
    EXPECT_NEAR(c.reach, t * b, 2 * cs);
  }
}

TEST(LimitShape, HoleAndSpikeAreReported) {
  SweptGrid g = disk_grid(2.0, 0.1, 1.0);
  // uncover nothing, add a spike at distance 3.5
  g.mark_point(Vec2(3.5, 0.0), 1.0);
  auto c = limit_shape_check(g, 1.0, 2.0, 0.3);
  EXPECT_TRUE(c.inner_ok);
  EXPECT_FALSE(c.outer_ok);
  EXPECT_LT(c.outer_margin, 0.0);
  // covered later than t: treated as uncovered
  SweptGrid late = disk_grid(2.0, 0.1, 5.0);
  c = limit_shape_check(late, 1.0, 2.0, 0.3);
  EXPECT_FALSE(c.inner_ok);
  EXPECT_THROW(limit_shape_check(g, 1.0, 2.0, 1.0), PreconditionError);
  EXPECT_THROW(limit_shape_check(g, 1.0, 2.0, 0.0), PreconditionError);
}

// ----- tails ------------------------------------------------------------------

TEST(TailExponent, TooFewSamples) {
  std::vector<HittingSample> s(199, sample(1.0));
  for (int i = 0; i < 50; ++i) s.push_back(sample(9.0, true));
  EXPECT_THROW(tail_exponent(s, 1.0), InsufficientDataError);
}

TEST(TailExponent, ExponentialSurvivalRatio) {
  // S(1.5 m) / S(3 m) for an exponential is 2^{1.5}, short of the factor 4
  RngStream rng(8);
  std::vector<HittingSample> s;
  for (int i = 0; i < 20000; ++i) s.push_back(sample(-std::log(1.0 - rng.uniform())));
  const auto rep = tail_exponent(s, 1.0);
  EXPECT_NEAR(rep.median, std::log(2.0), 0.03);
  EXPECT_NEAR(rep.ratio, std::pow(2.0, -1.5), 0.03);
  EXPECT_FALSE(rep.passed);
}

TEST(TailExponent, ShiftedExponentialPasses) {
  RngStream rng(9);
  std::vector<HittingSample> s;
  for (int i = 0; i < 5000; ++i) s.push_back(sample(2.0 - std::log(1.0 - rng.uniform())));
  const auto rep = tail_exponent(s, 1.0);
  EXPECT_TRUE(rep.passed);
  EXPECT_LT(rep.ratio, 0.25);
  EXPECT_GT(rep.decay_exponent, 2.0);
}

TEST(TailExponent, ParetoOneFails) {
  RngStream rng(10);
  std::vector<HittingSample> s;
  for (int i = 0; i < 5000; ++i) s.push_back(sample(1.0 / (1.0 - rng.uniform())));
  const auto rep = tail_exponent(s, 1.0);
  EXPECT_FALSE(rep.passed);
  EXPECT_NEAR(rep.ratio, 0.5, 0.06);
  EXPECT_NEAR(rep.decay_exponent, 1.0, 0.25);
}

TEST(TailExponent, CensoredCountAsLarge) {
  std::vector<HittingSample> s;
  for (int i = 0; i < 300; ++i) s.push_back(sample(1.0 + i * 1e-3));
  for (int i = 0; i < 100; ++i) s.push_back(sample(50.0, true));
  const auto rep = tail_exponent(s, 1.0);
  EXPECT_EQ(rep.censored, 100);
  EXPECT_DOUBLE_EQ(rep.survival_high, 0.25);
  EXPECT_FALSE(rep.passed);
}

// ----- displacement -----------------------------------------------------------

TEST(Displacement, ZeroHorizonReportsInitialSup) {
  const auto tr = single_snapshot(make_segment(Vec2(0, 0), Vec2(3, 4)));
  const auto rep = displacement_bound(std::vector<Trajectory>{tr}, 0.0);
  EXPECT_DOUBLE_EQ(rep.initial_sup, 5.0);
  EXPECT_TRUE(rep.ratio_full.empty());
  EXPECT_FALSE(rep.stable);
}

TEST(Displacement, ProfileIsRunningMax) {
  Trajectory tr;
  tr.snapshots.push_back(snapshot_of(Vec2(0, 0), Vec2(1, 0), 0.0));
  tr.snapshots.push_back(snapshot_of(Vec2(0, 0), Vec2(3, 0), 1.0));
  tr.snapshots.push_back(snapshot_of(Vec2(0, 0), Vec2(2, 0), 2.0));
  const auto p = displacement_profile(tr);
  EXPECT_EQ(p.sup_norm, (std::vector<double>{1.0, 3.0, 3.0}));
  const auto rep = displacement_bound(std::vector<DisplacementProfile>{p}, 2.0);
  EXPECT_DOUBLE_EQ(rep.ratio_full[0], 1.5);
  EXPECT_DOUBLE_EQ(rep.ratio_half[0], 3.0);
}

namespace {

DisplacementReport flow_displacement(const CorrelationFamily& fam, std::uint64_t master) {
  StepScheme sch;
  sch.dt = 0.05;
  CurveOptions opt;
  opt.log_insertions = false;
  const int n = 48;
  const double T = 16.0;
  std::vector<DisplacementProfile> prof(n);
  parallel_for(n, [&](std::size_t r) {
    RngStream rng(derive_seed(master, r));
    // five tracked points on a segment; the threshold disables refinement
    Points v(2, 5);
    v << -1.0, -0.5, 0.0, 0.5, 1.0, 0.0, 0.3, 0.0, -0.3, 0.0;
    const auto tr = simulate_curve(fam, make_polyline(v, false, 1e9), T, sch, rng, 10, opt);
    prof[r] = displacement_profile(tr);
  });
  return displacement_bound(prof, T);
}

}  // namespace

TEST(Displacement, LinearCeilingStableSolenoidal) {
  const auto rep = flow_displacement(solenoidal(), 31);
  EXPECT_TRUE(rep.stable) << rep.p95_half << " vs " << rep.p95_full;
}

TEST(Displacement, LinearCeilingStablePotential) {
  const auto rep = flow_displacement(potential(), 32);
  EXPECT_TRUE(rep.stable) << rep.p95_half << " vs " << rep.p95_full;
}

// ----- concentration ----------------------------------------------------------

TEST(Concentration, ConstantSpeedHasNoDispersion) {
  const std::vector<double> grid = {4, 8, 12};
  std::vector<std::vector<HittingSample>> s(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) s[k].assign(50, sample(0.5 * grid[k]));
  const auto rep = concentration_check(grid, s, 0.5);
  for (double p : rep.probability) EXPECT_EQ(p, 0.0);
  EXPECT_TRUE(rep.passed);
}

TEST(Concentration, ShrinkingNoisePasses) {
  // tau = 0.5 t + sqrt(t) * z: relative spread falls like t^{-1/2}
  RngStream rng(12);
  const std::vector<double> grid = {2, 8, 32, 128};
  std::vector<std::vector<HittingSample>> s(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k)
    for (int r = 0; r < 400; ++r) s[k].push_back(sample(0.5 * grid[k] + std::sqrt(grid[k]) * rng.normal()));
  const auto rep = concentration_check(grid, s, 0.5);
  EXPECT_TRUE(rep.passed);
  EXPECT_GT(rep.probability.front(), 0.5);
  EXPECT_LT(rep.probability.back(), rep.probability.front());
}

TEST(Concentration, GrowingNoiseFails) {
  RngStream rng(13);
  const std::vector<double> grid = {2, 8, 32};
  std::vector<std::vector<HittingSample>> s(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k)
    for (int r = 0; r < 400; ++r) s[k].push_back(sample(0.5 * grid[k] + 0.05 * grid[k] * grid[k] * rng.normal()));
  EXPECT_FALSE(concentration_check(grid, s, 0.5).passed);
}
