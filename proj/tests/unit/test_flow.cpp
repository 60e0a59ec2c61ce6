#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ibf/errors.hpp"
#include "ibf/flow.hpp"
#include "ibf/parallel.hpp"
#include "ibf/shape.hpp"
#include "ibf/stats.hpp"

using namespace ibf;

namespace {

PointCloud cloud_of(std::initializer_list<std::pair<double, double>> pts) {
  PointCloud c;
  c.points.resize(2, static_cast<Eigen::Index>(pts.size()));
  Eigen::Index i = 0;
  for (auto [x, y] : pts) c.points.col(i++) << x, y;
  return c;
}

StepScheme dense(double dt) {
  StepScheme s;
  s.dt = dt;
  s.sampler = IncrementSampler::Dense;
  return s;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(SampleIncrement, SinglePointIsStandardGaussianTimesRootDt) {
  RngStream rng(1);
  const PointCloud c = cloud_of({{0.3, -1.0}});
  const double dt = 0.04;
  std::vector<double> x, y;
  for (int k = 0; k < 20000; ++k) {
    const Points inc = sample_increment(solenoidal(), c, dense(dt), rng);
    x.push_back(inc(0, 0) / std::sqrt(dt));
    y.push_back(inc(1, 0) / std::sqrt(dt));
  }
  const Summary sx = summarize(x), sy = summarize(y);
  EXPECT_NEAR(sx.mean, 0.0, 4.0 / std::sqrt(20000.0));
  EXPECT_NEAR(sy.mean, 0.0, 4.0 / std::sqrt(20000.0));
  EXPECT_NEAR(sx.variance, 1.0, 0.05);
  EXPECT_NEAR(sy.variance, 1.0, 0.05);
  EXPECT_NEAR(correlation(x, y), 0.0, 4.0 / std::sqrt(20000.0));
}

TEST(SampleIncrement, CoincidentPointsMoveTogether) {
  RngStream rng(2);
  const PointCloud c = cloud_of({{1.0, 1.0}, {1.0, 1.0}});
  const double dt = 0.01;
  for (int k = 0; k < 100; ++k) {
    const Points inc = sample_increment(solenoidal(), c, dense(dt), rng);
    EXPECT_LT((inc.col(0) - inc.col(1)).norm(), 1e-4 * std::sqrt(dt));
  }
}

TEST(SampleIncrement, DistantPointsAreUncorrelated) {
  RngStream rng(3);
  const PointCloud c = cloud_of({{0.0, 0.0}, {20.0, 0.0}});
  std::vector<double> a, b, a2, b2;
  for (int k = 0; k < 10000; ++k) {
    const Points inc = sample_increment(solenoidal(), c, dense(0.01), rng);
    a.push_back(inc(0, 0));
    b.push_back(inc(0, 1));
    a2.push_back(inc(1, 0));
    b2.push_back(inc(1, 1));
  }
  EXPECT_LT(std::abs(correlation(a, b)), 3.0 / std::sqrt(10000.0));
  EXPECT_LT(std::abs(correlation(a2, b2)), 3.0 / std::sqrt(10000.0));
}

TEST(SampleIncrement, FourPointCovarianceMatchesBlockMatrix) {
  for (auto sampler : {IncrementSampler::Dense, IncrementSampler::Spectral}) {
    RngStream rng(4);
    const PointCloud c = cloud_of({{0.0, 0.0}, {0.5, 0.1}, {-0.3, 0.8}, {1.2, -0.4}});
    StepScheme s = dense(0.01);
    s.sampler = sampler;
    const Matrix sigma = block_covariance(solenoidal(), c.points);
    const int n = 8, draws = 40000;
    Matrix acc = Matrix::Zero(n, n);
    for (int k = 0; k < draws; ++k) {
      const Points inc = sample_increment(solenoidal(), c, s, rng);
      const Vector v = Eigen::Map<const Vector>(inc.data(), n);
      acc += v * v.transpose();
    }
    acc /= draws * s.dt;
    // entries of order one within 5%; small ones within 0.05 absolute
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        EXPECT_NEAR(acc(i, j), sigma(i, j), 0.05 * std::max(1.0, std::abs(sigma(i, j))))
            << "sampler " << to_string(sampler) << " entry " << i << "," << j;
  }
}

TEST(SampleIncrement, ExchangeablePointOrder) {
  const PointCloud c = cloud_of({{0.0, 0.0}, {0.5, 0.1}, {-0.3, 0.8}});
  PointCloud p = c;
  p.points.col(0) = c.points.col(2);
  p.points.col(2) = c.points.col(0);
  const Matrix s = block_covariance(solenoidal(), c.points);
  const Matrix t = block_covariance(solenoidal(), p.points);
  // permuting points permutes the blocks
  const int perm[3] = {2, 1, 0};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      EXPECT_TRUE(t.block(2 * a, 2 * b, 2, 2).isApprox(s.block(2 * perm[a], 2 * perm[b], 2, 2)));
}

TEST(SampleIncrement, DeterministicGivenStream) {
  const PointCloud c = cloud_of({{0.0, 0.0}, {0.5, 0.1}});
  RngStream a(9), b(9);
  EXPECT_TRUE(sample_increment(solenoidal(), c, dense(0.01), a)
                  .isApprox(sample_increment(solenoidal(), c, dense(0.01), b), 0.0));
}

TEST(SampleIncrement, EmptyCloudRejected) {
  RngStream rng(1);
  PointCloud c;
  c.points.resize(2, 0);
  EXPECT_THROW(sample_increment(solenoidal(), c, dense(0.01), rng), PreconditionError);
}

TEST(Factorization, IndefiniteMatrixNamesEigenvalue) {
  Matrix m(2, 2);
  m << 1.0, 0.0, 0.0, -0.5;
  StepScheme s;
  IncrementInfo info;
  try {
    factor_covariance(m, s, info);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("minimum eigenvalue -0.5"), std::string::npos) << e.what();
  }
  s.factorization = Factorization::EigenvalueClip;
  const Matrix l = factor_covariance(m, s, info);
  EXPECT_TRUE(info.clipped);
  Matrix want = Matrix::Zero(2, 2);
  want(0, 0) = 1.0;
  EXPECT_LT((l * l.transpose() - want).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Factorization, CholeskyReproducesMatrix) {
  Points p(2, 3);
  p << 0, 0.4, -0.7, 0, 0.2, 0.9;
  const Matrix sigma = block_covariance(solenoidal(), p);
  IncrementInfo info;
  const Matrix l = factor_covariance(sigma, StepScheme{}, info);
  EXPECT_FALSE(info.escalated);
  EXPECT_LT((l * l.transpose() - sigma).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(SampleIncrement, JitterEscalationIsReported) {
  RngStream rng(1);
  PointCloud c = cloud_of({{0.0, 0.0}, {0.0, 0.0}});
  StepScheme s = dense(0.01);
  s.jitter = 0.0;
  IncrementInfo info;
  sample_increment(solenoidal(), c, s, rng, &info);
  EXPECT_TRUE(info.escalated);
  EXPECT_GT(info.jitter_used, 0.0);
  EXPECT_LE(info.jitter_used, 1e-7);
}

TEST(StepPoints, ZeroDtIsIdentity) {
  RngStream rng(1);
  const PointCloud c = cloud_of({{0.0, 0.0}, {0.5, 0.1}});
  const PointCloud n = step_points(solenoidal(), c, dense(0.0), rng);
  EXPECT_TRUE(n.points.isApprox(c.points, 0.0));
  EXPECT_EQ(n.time, c.time);
}

TEST(StepPoints, OnePointVarianceGrowsLikeTime) {
  // 10^4 steps of 1e-3: variance 10 per axis, estimated over 2000 paths.
  const int paths = 2000;
  std::vector<double> x(paths), y(paths);
  parallel_for(paths, [&](std::size_t p) {
    RngStream rng(derive_seed(77, p));
    PointCloud c = cloud_of({{0.0, 0.0}});
    for (int k = 0; k < 10000; ++k) c = step_points(solenoidal(), c, dense(1e-3), rng);
    x[p] = c.points(0, 0);
    y[p] = c.points(1, 0);
  });
  // sampling sd of a variance estimate: sqrt(2 / n) = 3.2%
  EXPECT_NEAR(summarize(x).variance / 10.0, 1.0, 0.1);
  EXPECT_NEAR(summarize(y).variance / 10.0, 1.0, 0.1);
  EXPECT_NEAR((summarize(x).variance + summarize(y).variance) / 20.0, 1.0, 0.05);
}

TEST(StepPoints, RadialRelativeIncrementAtUnitSeparation) {
  RngStream rng(5);
  const PointCloud c = cloud_of({{0.0, 0.0}, {1.0, 0.0}});
  const double dt = 1e-3;
  double acc = 0.0;
  const int draws = 20000;
  for (int k = 0; k < draws; ++k) {
    const PointCloud n = step_points(solenoidal(), c, dense(dt), rng);
    const double dr = (n.points(0, 1) - c.points(0, 1)) - (n.points(0, 0) - c.points(0, 0));
    acc += dr * dr;
  }
  const double want = 2.0 * (1.0 - std::exp(-0.5));
  EXPECT_NEAR(want, 0.787, 1e-3);
  // chi-square(1) mean estimate: relative sd sqrt(2 / draws) = 1%
  EXPECT_NEAR(acc / draws / dt, want, 0.04 * want);
}

TEST(Diameter, Basics) {
  EXPECT_EQ(diameter(cloud_of({{1.0, 2.0}}).points), 0.0);
  EXPECT_DOUBLE_EQ(diameter(cloud_of({{0.0, 0.0}, {3.0, 4.0}}).points), 5.0);
  Points poly(2, 100);
  for (int i = 0; i < 100; ++i) {
    const double a = 2 * M_PI * i / 100;
    poly.col(i) << std::cos(a), std::sin(a);
  }
  EXPECT_NEAR(diameter(poly), 2.0, 1e-3);
  Points p3(3, 3);
  p3 << 0, 1, 0, 0, 0, 2, 0, 0, 2;
  EXPECT_DOUBLE_EQ(diameter(p3), std::sqrt(1.0 + 4.0 + 4.0));
}

TEST(Curves, RefinementKeepsEdgesShort) {
  CurveState c = make_segment(Vec2(0, 0), Vec2(5.3, 0), 0.25);
  for (std::size_t i = 0; i + 1 < c.size(); ++i)
    EXPECT_LE((c.cloud.points.col(i + 1) - c.cloud.points.col(i)).norm(), 0.5 + 1e-12);
  c.cloud.points.col(3) += Vec2(0, 3.0);
  ASSERT_TRUE(refine_curve(c));
  for (std::size_t i = 0; i + 1 < c.size(); ++i)
    if (c.link[i]) EXPECT_LE((c.cloud.points.col(i + 1) - c.cloud.points.col(i)).norm(), 0.5 + 1e-12);
  EXPECT_FALSE(c.insertion_log.empty());
}

TEST(Curves, RefinementStopsAtMaxPoints) {
  CurveState c = make_segment(Vec2(0, 0), Vec2(1, 0), 0.25);
  c.max_points = c.size();
  c.cloud.points.col(1) += Vec2(0, 10.0);
  EXPECT_FALSE(refine_curve(c));
  EXPECT_LE(c.size(), c.max_points);
}

TEST(Curves, CircleIsClosed) {
  const CurveState c = make_circle(Vec2(1, 1), 2.0);
  for (auto l : c.link) EXPECT_EQ(l, 1);
  for (std::size_t i = 0; i < c.size(); ++i)
    EXPECT_NEAR((c.cloud.points.col(i) - Vec2(1, 1)).norm(), 2.0, 1e-12);
}

TEST(SimulateCurve, ZeroHorizonReturnsInitialCurve) {
  RngStream rng(1);
  const CurveState c = make_segment(Vec2(-0.5, 0), Vec2(0.5, 0));
  const Trajectory t = simulate_curve(solenoidal(), c, 0.0, dense(0.01), rng, 1);
  ASSERT_EQ(t.snapshots.size(), 1u);
  EXPECT_TRUE(t.snapshots[0].points.isApprox(c.cloud.points, 0.0));
  EXPECT_THROW(simulate_curve(solenoidal(), c, -1.0, dense(0.01), rng, 1), PreconditionError);
}

TEST(SimulateCurve, SnapshotStrideAndFinalTime) {
  RngStream rng(1);
  const CurveState c = make_segment(Vec2(-0.5, 0), Vec2(0.5, 0));
  StepScheme s;
  const Trajectory t = simulate_curve(solenoidal(), c, 1.005, s, rng, 10);
  // 101 steps: snapshots at 0, every 10 steps, and the last (short) step
  ASSERT_EQ(t.snapshots.size(), 12u);
  EXPECT_NEAR(t.snapshots.back().time, 1.005, 1e-12);
  EXPECT_NEAR(t.snapshots[1].time, 0.1, 1e-12);
}

TEST(SimulateCurve, CapWarningRecorded) {
  RngStream rng(3);
  CurveState c = make_segment(Vec2(-0.5, 0), Vec2(0.5, 0));
  c.max_points = 12;
  const Trajectory t = simulate_curve(solenoidal(), c, 3.0, StepScheme{}, rng, 50);
  EXPECT_TRUE(t.capped);
  EXPECT_LE(t.final_state.size(), 12u);
  ASSERT_FALSE(t.warnings.empty());
  EXPECT_NE(t.warnings[0].find("max_points"), std::string::npos);
}

TEST(SimulateCurve, BitIdenticalReruns) {
  const CurveState c = make_segment(Vec2(-0.5, 0), Vec2(0.5, 0));
  RngStream a(42), b(42);
  const Trajectory ta = simulate_curve(solenoidal(), c, 1.0, StepScheme{}, a, 10);
  const Trajectory tb = simulate_curve(solenoidal(), c, 1.0, StepScheme{}, b, 10);
  ASSERT_EQ(ta.snapshots.size(), tb.snapshots.size());
  for (std::size_t i = 0; i < ta.snapshots.size(); ++i)
    ASSERT_TRUE(ta.snapshots[i].points.isApprox(tb.snapshots[i].points, 0.0));
}

TEST(SimulateCurve, SolenoidalDiameterGrows) {
  const int reps = 64;
  const CurveState c = make_segment(Vec2(-0.5, 0), Vec2(0.5, 0));
  ShapeRunOptions so = default_shape_options();
  std::vector<std::vector<double>> diam(reps);
  parallel_for(reps, [&](std::size_t r) {
    RngStream rng(derive_seed(2024, r));
    const Trajectory t = simulate_curve(solenoidal(), c, 10.0, so.scheme, rng, 100, so.curve);
    for (const auto& s : t.snapshots) diam[r].push_back(diameter(s.points));
  });
  // paired increments of the replica means between t = k and t = k + 2
  for (std::size_t k = 0; k + 2 < diam[0].size(); k += 2) {
    std::vector<double> d;
    for (const auto& row : diam) d.push_back(row[k + 2] - row[k]);
    const Summary s = summarize(d);
    EXPECT_GT(s.mean, -2.0 * s.standard_error) << "t=" << k;
  }
  std::vector<double> first, last;
  for (const auto& row : diam) {
    first.push_back(row.front());
    last.push_back(row.back());
  }
  EXPECT_GT(summarize(last).mean, 2.0 * summarize(first).mean);
}

TEST(SimulateCurve, PotentialFlowContractsSometimes) {
  const int reps = 64;
  const CurveState c = make_segment(Vec2(-0.5, 0), Vec2(0.5, 0));
  std::vector<double> final_diam(reps);
  parallel_for(reps, [&](std::size_t r) {
    RngStream rng(derive_seed(99, r));
    const Trajectory t = simulate_curve(potential(), c, 10.0, StepScheme{}, rng, 1000);
    final_diam[r] = diameter(t.final_state.cloud.points);
  });
  int shrunk = 0;
  for (double d : final_diam) shrunk += d < 1.0;
  EXPECT_GT(shrunk, 0);
}

TEST(Split, IdleSecondFlowMatchesDirectEstimate) {
  const CurveState g = make_segment(Vec2(-0.5, 0), Vec2(0.5, 0));
  const CurveState gb = make_segment(Vec2(-0.5, 1.0), Vec2(0.5, 1.0));
  SplitOptions so;
  so.master_seed = 5;
  const auto est = split_meeting_probability(solenoidal(), g, gb, 1.0, {{1.0, 0.0}}, 0.1, 200, so);
  ASSERT_EQ(est.size(), 1u);
  // same streams by hand: replica r uses derive_seed(5, 2r) for gamma
  int hits = 0;
  for (int r = 0; r < 200; ++r) {
    RngStream rng(derive_seed(5, 2 * r));
    CurveOptions co;
    co.log_insertions = false;
    CurveSimulator sim(solenoidal(), g, so.scheme, rng, co);
    for (int k = 0; k < 100; ++k) sim.step();
    hits += polylines_within(sim.state().view(), gb.view(), 0.1);
  }
  EXPECT_DOUBLE_EQ(est[0].probability, hits / 200.0);
  EXPECT_NEAR(est[0].standard_error,
              std::sqrt(est[0].probability * (1 - est[0].probability) / 200.0), 1e-15);
}

TEST(Split, IdenticalCurvesAtTimeZeroAlwaysMeet) {
  const CurveState g = make_segment(Vec2(-0.5, 0), Vec2(0.5, 0));
  SplitOptions so;
  const auto est = split_meeting_probability(solenoidal(), g, g, 0.0, {{0.0, 0.0}}, 1e-9, 16, so);
  EXPECT_EQ(est[0].probability, 1.0);
}

TEST(Split, RejectsBadArguments) {
  const CurveState g = make_segment(Vec2(-0.5, 0), Vec2(0.5, 0));
  SplitOptions so;
  EXPECT_THROW(split_meeting_probability(solenoidal(), g, g, 1.0, {}, 0.1, 4, so),
               PreconditionError);
  EXPECT_THROW(split_meeting_probability(solenoidal(), g, g, 1.0, {{0.5, 0.5}}, 0.0, 4, so),
               PreconditionError);
  EXPECT_THROW(split_meeting_probability(solenoidal(), g, g, 1.0, {{0.5, 0.4}}, 0.1, 4, so),
               PreconditionError);
}

TEST(Split, SmallSplitsAgree) {
  // reduced-size version of the acceptance check: 128 replicas, t = 2
  const CurveState g = make_segment(Vec2(-0.5, 0), Vec2(0.5, 0));
  const CurveState gb = make_segment(Vec2(-0.5, 1.5), Vec2(0.5, 1.5));
  SplitOptions so;
  so.master_seed = 17;
  so.curve_options.log_insertions = false;
  const auto est = split_meeting_probability(solenoidal(), g, gb, 2.0,
                                             {{0.0, 2.0}, {1.0, 1.0}, {2.0, 0.0}}, 0.05, 128, so);
  for (std::size_t i = 0; i < est.size(); ++i)
    for (std::size_t j = i + 1; j < est.size(); ++j) {
      const double se = std::hypot(est[i].standard_error, est[j].standard_error);
      EXPECT_LE(std::abs(est[i].probability - est[j].probability), 3.0 * se + 1e-12);
    }
}
