#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ibf/flow.hpp"
#include "ibf/swept_grid.hpp"

namespace ibf {

void accumulate_swept(SweptGrid& grid, const CurveSnapshot& snapshot);
void accumulate_swept(SweptGrid& grid, const CurveState& state);

struct HittingSample {
  Vec2 target = Vec2::Zero();
  double R = 0.0;
  double tau = 0.0;  // horizon when censored
  bool censored = false;
  int replica = 0;
  std::uint64_t seed = 0;
};

// First snapshot with dist(curve, P) <= R and diameter >= 1.
HittingSample hitting_time(const Trajectory& trajectory, const Vec2& p, double R);

// First time every cell centre in K_R(P) is covered; nullopt when censored.
std::optional<double> sweep_time(const SweptGrid& grid, const Vec2& p, double R);

// Far-side radial unit segment from -2R v to -(2R-1) v.
CurveState far_side_segment(const Vec2& v, double R, double refine_threshold = 0.25);

struct ShapeRunOptions {
  StepScheme scheme;
  CurveOptions curve;
  double horizon = 40.0;
};

// Pruning tuned for hitting-time runs (exterior depth 2.5, cap 4 below 0.75).
ShapeRunOptions default_shape_options();

struct ReplicaHits {
  std::vector<HittingSample> samples;  // one per target
  double final_time = 0.0;
  bool capped = false;
  std::size_t max_points = 0;
};

// Advances one replica until every target is hit or the horizon is reached.
// Contact is tested after every step.
ReplicaHits run_hitting_replica(const CorrelationFamily& family, const CurveState& curve,
                                const std::vector<Vec2>& targets, double R,
                                const ShapeRunOptions& options, std::uint64_t seed,
                                int replica);

struct TimePoint {
  double t = 0.0;
  double mean = 0.0;
  double standard_error = 0.0;
  int samples = 0;
  int censored = 0;
  bool used = true;  // false when censoring exceeds 20%
};

struct SubadditivityCheck {
  double t1 = 0.0, t2 = 0.0;
  double lhs = 0.0;    // m(t1 + t2)
  double rhs = 0.0;    // m(t1) + m(t2)
  double slack = 0.0;  // 2 combined SE
  bool passed = false;
};

struct StableNormEstimate {
  Vec2 direction = Vec2(1.0, 0.0);
  double R = 0.0;
  double horizon = 0.0;
  std::vector<TimePoint> points;
  double slope = 0.0;
  double slope_se = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0, ci_high = 0.0;  // 95%
  double ball_radius = 0.0;
  bool reliable = true;
  std::vector<SubadditivityCheck> subadditivity;
  std::vector<std::vector<HittingSample>> samples;  // [t index][replica]
};

inline constexpr double kMaxCensoredFraction = 0.2;

// Fits the norm from per-t hitting samples; samples[k] belongs to t_grid[k].
StableNormEstimate fit_stable_norm(const std::vector<double>& t_grid,
                                   std::vector<std::vector<HittingSample>> samples,
                                   double R, double horizon, const Vec2& direction);

std::vector<SubadditivityCheck> subadditivity_checks(const std::vector<TimePoint>& points);

StableNormEstimate estimate_stable_norm(const CorrelationFamily& family, double R,
                                        const Vec2& v, const std::vector<double>& t_grid,
                                        int replicas, std::uint64_t master_seed,
                                        const ShapeRunOptions& options = default_shape_options(),
                                        int first_replica = 0);

struct IsotropyReport {
  std::vector<double> means;
  std::vector<double> standard_errors;
  double worst_z = 0.0;  // max |m_i - m_j| / sqrt(se_i^2 + se_j^2)
  bool passed = false;
};

IsotropyReport isotropy_check(const std::vector<double>& means,
                              const std::vector<double>& standard_errors, double z = 3.0);

struct ShapeCheck {
  bool inner_ok = false;
  bool outer_ok = false;
  double inner_radius = 0.0;  // (1 - eps) t b
  double outer_radius = 0.0;  // (1 + eps) t b
  double covered_radius = 0.0;  // largest origin disk with every centre covered
  double reach = 0.0;           // farthest covered centre
  double inner_margin = 0.0;    // covered_radius - inner_radius
  double outer_margin = 0.0;    // outer_radius - reach
};

// Cells count as covered when first covered at or before t.
ShapeCheck limit_shape_check(const SweptGrid& swept, double t, double ball_radius, double eps);

struct LimitShapeReport {
  double t = 0.0;
  double eps = 0.0;
  double ball_radius = 0.0;
  std::vector<ShapeCheck> replicas;
  double fraction_both = 0.0;
  std::vector<SweptGrid> grids;  // kept only when requested
};

LimitShapeReport limit_shape_experiment(const CorrelationFamily& family, const CurveState& curve,
                                        double t, double ball_radius, double eps, int replicas,
                                        std::uint64_t master_seed, const ShapeRunOptions& options,
                                        bool keep_grids = false);

struct SurvivalPoint {
  double x;         // tau / t_ref
  double survival;  // fraction of samples strictly above x
};

struct TailReport {
  int samples = 0;
  int censored = 0;
  double median = 0.0;  // of tau / t_ref
  double survival_low = 0.0;   // at 1.5 median
  double survival_high = 0.0;  // at 3 median
  double ratio = 0.0;          // survival_high / survival_low
  double decay_exponent = 0.0;  // -d log S / d log x beyond the median
  std::vector<SurvivalPoint> curve;
  bool passed = false;
};

inline constexpr int kMinTailSamples = 200;

TailReport tail_exponent(const std::vector<HittingSample>& samples, double t_ref);

// sup over t <= T and tracked points of |x|, sampled along a run.
struct DisplacementProfile {
  std::vector<double> times;
  std::vector<double> sup_norm;
};

DisplacementProfile displacement_profile(const Trajectory& trajectory);

struct DisplacementReport {
  double horizon = 0.0;
  double initial_sup = 0.0;
  std::vector<double> ratio_full;  // per replica, sup_{t<=T}|x| / T
  std::vector<double> ratio_half;  // per replica, sup_{t<=T/2}|x| / (T/2)
  double p95_full = 0.0;
  double p95_half = 0.0;
  bool stable = false;  // p95 values within 50%
};

DisplacementReport displacement_bound(const std::vector<DisplacementProfile>& profiles,
                                      double T);
DisplacementReport displacement_bound(const std::vector<Trajectory>& trajectories, double T);

struct ConcentrationReport {
  double slope = 0.0;
  std::vector<double> t;
  std::vector<double> probability;  // P[|tau/t - slope| > 0.25 slope]
  std::vector<double> standard_error;
  int inversions = 0;
  bool passed = false;
};

ConcentrationReport concentration_check(const std::vector<double>& t_grid,
                                        const std::vector<std::vector<HittingSample>>& samples,
                                        double slope, double tolerance = 0.25);

ConcentrationReport concentration_check(const CorrelationFamily& family, double R,
                                        const Vec2& v, const std::vector<double>& t_grid,
                                        int replicas, std::uint64_t master_seed,
                                        const ShapeRunOptions& options = default_shape_options());

double quantile(std::vector<double> values, double q);

}  // namespace ibf
