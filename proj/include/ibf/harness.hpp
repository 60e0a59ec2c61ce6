#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ibf/config.hpp"
#include "ibf/shape.hpp"

namespace ibf {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double budget_seconds = 0.0;  // 0: shares the budget of another criterion
  nlohmann::json data;
};

struct AcceptanceOptions {
  CorrelationFamily family = solenoidal();
  std::uint64_t master_seed = 1;
  VerifyConfig sizes;
  TargetsConfig targets;
  RadialConfig radial;
  ControlConfig control;
  SplitConfig split;
  ShapeRunOptions shape_options = default_shape_options();
  std::vector<int> only;  // empty: all sixteen
  std::filesystem::path scratch_dir = std::filesystem::temp_directory_path() / "ibf-acceptance";
  bool enforce_runtime = true;
  std::function<void(const CriterionResult&)> on_result;
};

AcceptanceOptions acceptance_options(const ExperimentConfig& config);

struct AcceptanceReport {
  std::vector<CriterionResult> results;
  // Artifacts of the shared hitting run, kept for emission.
  std::vector<HittingSample> hitting_samples;
  std::vector<StableNormEstimate> per_direction;
  std::optional<StableNormEstimate> pooled;
  std::optional<TailReport> tail;
  std::optional<LimitShapeReport> shape;

  bool passed() const;
  nlohmann::json to_json() const;
};

AcceptanceReport run_acceptance(const AcceptanceOptions& options);

// "[PASS] 7  no-speed certificate: ... (1.2 s)"
std::string format_result_line(const CriterionResult& result);

// Pools per-direction samples into one estimate (isotropy justifies it).
StableNormEstimate pool_directions(const std::vector<StableNormEstimate>& per_direction,
                                   const std::vector<double>& t_grid);

std::vector<Vec2> unit_directions(int count);

// ----- suites ----------------------------------------------------------------

enum class Suite { Analyze, Radial, LyapunovFn, Sweep, Simulate, Shape, Verify };

std::string to_string(Suite suite);
Suite suite_from_string(const std::string& name);

struct RunRecord {
  std::string suite;
  std::string config_digest;
  std::string code_version;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> seeds;
  double wall_seconds = 0.0;
  nlohmann::json outcomes;
  bool passed = false;

  nlohmann::json to_json() const;
};

// Writes artifacts into out_dir and run_record.json. Module errors propagate.
// on_result sees each acceptance criterion as it finishes.
RunRecord run_suite(const ExperimentConfig& config, Suite suite,
                    const std::filesystem::path& out_dir,
                    const std::function<void(const CriterionResult&)>& on_result = {});

// Process exit codes of the command-line tool.
enum ExitCode { kExitPass = 0, kExitAcceptance = 1, kExitConfig = 2, kExitNumerical = 3 };

struct ErrorClass {
  int exit_code = kExitNumerical;
  std::string kind;
};

// Bad input (config, parameters, domain, preconditions, unwritable paths) maps
// to kExitConfig; breakdowns during a run to kExitNumerical.
ErrorClass classify_error(const std::exception& e);

// Separation after `horizon` for two points started r0 apart: the joint
// two-point flow (dense sampler) and the scalar separation SDE.
std::vector<double> joint_separations(const CorrelationFamily& family, double r0, double horizon,
                                      double dt, int samples, std::uint64_t master_seed);
std::vector<double> radial_separations(const CorrelationFamily& family, double r0,
                                       double horizon, double dt, int samples,
                                       std::uint64_t master_seed);

}  // namespace ibf
