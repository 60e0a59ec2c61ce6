#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ibf/covariance.hpp"
#include "ibf/flow.hpp"
#include "ibf/shape.hpp"

namespace ibf {

struct FamilyConfig {
  std::string kind = "solenoidal-gaussian";
  double length_scale = 1.0;
  double mix_weight = 0.5;
  int dimension = 2;
};

struct SchemeConfig {
  double dt = 1e-2;
  double jitter = 1e-10;
  std::string factorization = "cholesky-with-jitter";
  std::string sampler = "automatic";
  int dense_limit = 64;
  int spectral_modes = 64;
};

struct CurveConfig {
  std::string kind = "segment";  // segment | circle | polyline
  std::array<double, 2> a{-0.5, 0.0};
  std::array<double, 2> b{0.5, 0.0};
  std::array<double, 2> center{0.0, 0.0};
  double radius = 2.0;
  std::vector<std::array<double, 2>> vertices;
  bool closed = false;
  double refine_threshold = 0.25;
  std::int64_t max_points = 2000000;
};

struct GridConfig {
  double cell_size = 0.25;
  int extent = 64;
};

struct PruneConfig {
  double depth = 2.5;
  int max_per_cell = 4;
  double cap_depth = 0.75;
  std::string mode = "exterior";  // exterior | any-uncovered
  int interval = 10;
};

struct TargetsConfig {
  int directions = 8;
  std::vector<double> t_grid{4.0, 6.0, 8.0, 10.0};
  double R = 2.0;
  double eps = 0.3;
  double shape_time = 8.0;
  double hitting_horizon = 40.0;
};

struct RadialConfig {
  double r0 = 0.5;
  double horizon = 1.0;
  double dt = 1e-3;
  int samples = 2000;
  int seeds = 5;
  std::vector<double> r0_grid{0.05, 0.2, 0.5, 1.0, 2.0, 5.0};
  int submartingale_replicas = 1000;
};

struct ControlConfig {
  int n = 102;
  int grid_size = 21;
  double dt_divisor = 200.0;  // integration step = eps / dt_divisor
  std::array<double, 2> q{0.0, 0.0};
};

struct SplitConfig {
  double t_total = 4.0;
  std::vector<double> t1{0.0, 1.0, 2.0, 3.0, 4.0};
  double eta = 0.01;
  double separation = 2.0;  // distance between the two unit segments
  int replicas = 256;
};

// Sample sizes of the acceptance battery; defaults are the stated ones.
struct VerifyConfig {
  int eigen_points = 100;
  int hitting_replicas = 128;
  int shape_replicas = 64;
  int robust_replicas = 256;
  double robust_R = 4.0;
  int split_replicas = 256;
  int submartingale_replicas = 1000;
  int radial_samples = 2000;
};

struct OutputConfig {
  std::string dir = "ibf-out";
};

struct ExperimentConfig {
  FamilyConfig family;
  SchemeConfig scheme;
  CurveConfig curve;
  double horizon = 10.0;
  int replicas = 64;
  std::uint64_t master_seed = 1;
  int snapshot_stride = 0;  // 0: chosen so a run keeps at most 200 snapshots
  GridConfig grid;
  PruneConfig prune;
  TargetsConfig targets;
  RadialConfig radial;
  ControlConfig control;
  SplitConfig split;
  VerifyConfig verify;
  OutputConfig output;
};

// Throws ConfigError listing every violation (syntax errors carry line and
// column).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Canonical form: every field present, keys sorted, compact.
std::string serialize_config(const ExperimentConfig& config, int indent = -1);

// FNV-1a 64 of the canonical form, as 16 hex digits.
std::string config_digest(const ExperimentConfig& config);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

CorrelationFamily to_family(const ExperimentConfig& config);
StepScheme to_scheme(const ExperimentConfig& config);
CurveState to_curve(const ExperimentConfig& config);
ShapeRunOptions to_shape_options(const ExperimentConfig& config);
int snapshot_stride(const ExperimentConfig& config);

}  // namespace ibf
