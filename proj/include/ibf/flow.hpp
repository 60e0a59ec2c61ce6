#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ibf/covariance.hpp"
#include "ibf/geometry.hpp"
#include "ibf/rng.hpp"
#include "ibf/swept_grid.hpp"

namespace ibf {

enum class Factorization { CholeskyWithJitter, EigenvalueClip };

// Dense: exact joint Gaussian increments from the block covariance.
// Spectral (2-D only): a random superposition of Fourier modes drawn from the
// spectral measure of b. Its increments have covariance exactly dt * Sigma
// but are only conditionally Gaussian, so the scheme is a weak one.
// Automatic: dense up to dense_limit points, spectral beyond.
enum class IncrementSampler { Automatic, Dense, Spectral };

std::string to_string(Factorization f);
std::string to_string(IncrementSampler s);
Factorization factorization_from_string(const std::string& name);
IncrementSampler sampler_from_string(const std::string& name);

struct StepScheme {
  double dt = 1e-2;
  double jitter = 1e-10;
  Factorization factorization = Factorization::CholeskyWithJitter;
  IncrementSampler sampler = IncrementSampler::Automatic;
  int dense_limit = 64;
  int spectral_modes = 64;
};

// True when dt exceeds length_scale^2 / 10.
bool step_too_coarse(const CorrelationFamily& family, const StepScheme& scheme);

struct PointCloud {
  Points points;  // d x n
  double time = 0.0;
};

struct IncrementInfo {
  bool dense = true;
  double jitter_used = 0.0;
  bool escalated = false;  // jitter had to be raised: near-coincident points
  bool clipped = false;    // eigenvalue-clip fallback used
};

// Square root L of sigma (L L^T = sigma + jitter). Cholesky with the jitter
// raised x10 up to three times; then the eigenvalue clip if the scheme allows
// it, otherwise NumericalError naming the minimum eigenvalue.
Matrix factor_covariance(const Matrix& sigma, const StepScheme& scheme, IncrementInfo& info);

Points sample_increment(const CorrelationFamily& family, const PointCloud& cloud,
                        const StepScheme& scheme, RngStream& rng,
                        IncrementInfo* info = nullptr);

PointCloud step_points(const CorrelationFamily& family, const PointCloud& cloud,
                       const StepScheme& scheme, RngStream& rng,
                       IncrementInfo* info = nullptr);

double diameter(const Points& points);

// ----- curves --------------------------------------------------------------

struct Insertion {
  double time;
  std::size_t edge;
};

// Polyline of tracked points in R^2. link[i] marks the edge from point i to
// point (i + 1) mod n; a closed curve has every flag set, an open one clears
// the last. Pruning may split a curve into several arcs.
struct CurveState {
  PointCloud cloud;
  std::vector<std::uint8_t> link;
  double refine_threshold = 0.25;
  std::size_t max_points = 2000000;
  std::vector<Insertion> insertion_log;

  std::size_t size() const { return static_cast<std::size_t>(cloud.points.cols()); }
  PolylineView view() const { return {&cloud.points, &link}; }
};

CurveState make_segment(const Vec2& a, const Vec2& b, double refine_threshold = 0.25);
CurveState make_circle(const Vec2& center, double radius, double refine_threshold = 0.25);
CurveState make_polyline(const Points& vertices, bool closed,
                         double refine_threshold = 0.25);

// Splits every linked edge longer than 2 * refine_threshold into 2^k equal
// pieces (repeated midpoint insertion). Returns false if max_points stopped
// the refinement.
bool refine_curve(CurveState& curve, bool log_insertions = true);

enum class PruneMode { Exterior, AnyUncovered };

// Drops tracked points lying deeper than `depth` inside the swept region.
// Exterior mode measures depth to uncovered cells connected to infinity,
// which is what matters for reaching outside targets; AnyUncovered also keeps
// points near interior holes, which matters for coverage.
struct PruneOptions {
  double depth = 0.0;  // <= 0 disables depth pruning
  PruneMode mode = PruneMode::Exterior;
  double cell_size = 0.25;
  int interval = 10;  // steps between pruning passes
  // At most this many tracked points per raster cell deeper than
  // cap_depth; 0 disables the cap.
  int max_per_cell = 0;
  double cap_depth = 0.0;
};

struct CurveOptions {
  PruneOptions prune;
  bool log_insertions = true;
  // Keeps a coverage raster even without pruning.
  bool track_coverage = false;
};

// Single-replica state machine advancing a curve under the flow.
class CurveSimulator {
 public:
  CurveSimulator(const CorrelationFamily& family, CurveState curve, const StepScheme& scheme,
                 RngStream& rng, CurveOptions options = {});

  void step(double dt);
  void step() { step(scheme_.dt); }

  const CurveState& state() const { return curve_; }
  double time() const { return curve_.cloud.time; }
  const SweptGrid* coverage() const { return grid_ ? &*grid_ : nullptr; }

  bool capped() const { return capped_; }
  double capped_time() const { return capped_time_; }
  long long escalation_steps() const { return escalations_; }
  long long pruned_points() const { return pruned_; }

 private:
  void prune();
  bool pruning() const {
    return options_.prune.depth > 0.0 || options_.prune.max_per_cell > 0;
  }

  CorrelationFamily family_;
  CurveState curve_;
  StepScheme scheme_;
  RngStream& rng_;
  CurveOptions options_;
  std::optional<SweptGrid> grid_;
  long long steps_ = 0;
  bool capped_ = false;
  double capped_time_ = -1.0;
  long long escalations_ = 0;
  long long pruned_ = 0;
};

struct CurveSnapshot {
  double time;
  Points points;
  std::vector<std::uint8_t> link;

  PolylineView view() const { return {&points, &link}; }
};

struct Trajectory {
  std::vector<CurveSnapshot> snapshots;
  CurveState final_state;
  bool capped = false;
  double capped_time = -1.0;
  long long escalation_steps = 0;
  std::vector<std::string> warnings;
};

// Number of steps used to cover `horizon` with step dt (the last may be short).
long long step_count(double horizon, double dt);

Trajectory simulate_curve(const CorrelationFamily& family, const CurveState& curve,
                          double horizon, const StepScheme& scheme, RngStream& rng,
                          int snapshot_stride, CurveOptions options = {});

// ----- split-time experiment ----------------------------------------------

struct SplitEstimate {
  double t1 = 0.0;
  double t2 = 0.0;
  double probability = 0.0;
  double standard_error = 0.0;
  int replicas = 0;
};

struct SplitOptions {
  StepScheme scheme;
  CurveOptions curve_options;
  std::uint64_t master_seed = 0;
};

std::vector<SplitEstimate> split_meeting_probability(
    const CorrelationFamily& family, const CurveState& gamma, const CurveState& gamma_bar,
    double t_total, const std::vector<std::pair<double, double>>& splits, double eta,
    int replicas, const SplitOptions& options);

}  // namespace ibf
