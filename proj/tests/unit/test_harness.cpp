#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "ibf/config.hpp"
#include "ibf/errors.hpp"
#include "ibf/harness.hpp"
#include "ibf/io.hpp"
#include "ibf/rng.hpp"
#include "ibf/stats.hpp"

using namespace ibf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "ibf-unit" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> violations_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.violations();
  }
  return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& s) {
  for (const auto& x : v)
    if (x.find(s) != std::string::npos) return true;
  return false;
}

int run_tool(const std::string& args) {
  const std::string cmd = std::string(IBF_TOOL_PATH) + " " + args + " > /dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace

// ----- config -----------------------------------------------------------------

TEST(Config, MinimalDocumentGetsDefaults) {
  const ExperimentConfig c = parse_config("{}");
  EXPECT_EQ(c.family.kind, "solenoidal-gaussian");
  EXPECT_EQ(c.family.length_scale, 1.0);
  EXPECT_EQ(c.scheme.dt, 1e-2);
  EXPECT_EQ(c.replicas, 64);
  EXPECT_EQ(c.master_seed, 1u);
  EXPECT_EQ(c.targets.t_grid, (std::vector<double>{4, 6, 8, 10}));
  EXPECT_EQ(c.verify.hitting_replicas, 128);
  EXPECT_EQ(c.split.replicas, 256);
}

TEST(Config, ZeroReplicasIsAViolation) {
  const auto v = violations_of(R"({"replicas": 0})");
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("replicas must be"), std::string::npos);
  EXPECT_NE(v[0].find("1"), std::string::npos);
}

TEST(Config, UnknownKeyNamed) {
  const auto v = violations_of(R"({"scheme": {"dtt": 0.1}})");
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("\"dtt\""), std::string::npos);
}

TEST(Config, AllViolationsListed) {
  const auto v = violations_of(
      R"({"dtt": 1, "replicas": -2, "family": {"length_scale": -1, "kind": "foo"}, "scheme": {"dt": "x"}})");
  EXPECT_GE(v.size(), 5u);
  EXPECT_TRUE(mentions(v, "dtt"));
  EXPECT_TRUE(mentions(v, "replicas"));
  EXPECT_TRUE(mentions(v, "length_scale"));
  EXPECT_TRUE(mentions(v, "family.kind"));
  EXPECT_TRUE(mentions(v, "scheme.dt"));
}

TEST(Config, SyntaxErrorHasPosition) {
  const auto v = violations_of("{\n  \"replicas\": 3,\n  oops\n}");
  ASSERT_FALSE(v.empty());
  EXPECT_TRUE(mentions(v, "line 3"));
  EXPECT_TRUE(mentions(v, "column"));
}

TEST(Config, RoundTripIsIdentity) {
  const std::string text = R"({"family": {"kind": "mixture", "mix_weight": 0.25, "length_scale": 2},
    "curve": {"kind": "polyline", "vertices": [[0,0],[1,0.5],[2,0]], "closed": true},
    "targets": {"t_grid": [2, 3, 5]}, "master_seed": 18446744073709551615, "horizon": 0.1})";
  const ExperimentConfig a = parse_config(text);
  const std::string s = serialize_config(a);
  const ExperimentConfig b = parse_config(s);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(serialize_config(b), s);
  EXPECT_EQ(config_digest(a), config_digest(b));
  EXPECT_EQ(b.master_seed, 18446744073709551615ull);
  EXPECT_EQ(config_digest(a).size(), 16u);
  ExperimentConfig c = a;
  c.horizon = 0.2;
  EXPECT_NE(config_digest(a), config_digest(c));
}

// ----- seeds ------------------------------------------------------------------

TEST(DeriveSeed, Stable) {
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
  // splitmix64 reference value: the first output for state 0 is
  // 0xE220A8397B1DCDAF, and derive_seed(0, 0) mixes 0 + golden gamma
  EXPECT_EQ(derive_seed(0, 0), 0xE220A8397B1DCDAFull);
}

TEST(DeriveSeed, DistinctOverAMillionIndices) {
  for (std::uint64_t master : {0ull, 1ull, 0x9E3779B97F4A7C15ull}) {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(2000000);
    for (std::uint64_t i = 0; i < 1000000; ++i) seen.insert(derive_seed(master, i));
    EXPECT_EQ(seen.size(), 1000000u);
  }
}

// ----- KS ---------------------------------------------------------------------

TEST(KsTwoSample, IdenticalSamples) {
  std::vector<double> a(500);
  std::iota(a.begin(), a.end(), 0.0);
  const KsResult r = ks_two_sample(a, a);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
}

TEST(KsTwoSample, ShiftedUniformsSeparate) {
  RngStream rng(5);
  std::vector<double> a(1000), b(1000);
  for (auto& x : a) x = rng.uniform();
  for (auto& x : b) x = 0.5 + rng.uniform();
  const KsResult r = ks_two_sample(a, b);
  EXPECT_LT(r.p_value, 1e-6);
  EXPECT_NEAR(r.statistic, 0.5, 0.06);
}

TEST(KsTwoSample, NullCalibration) {
  int ok = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    RngStream rng(derive_seed(77, trial));
    std::vector<double> a(1000), b(1000);
    for (auto& x : a) x = rng.uniform();
    for (auto& x : b) x = rng.uniform();
    ok += ks_two_sample(a, b).p_value > 0.01;
  }
  EXPECT_GE(ok, 95);
}

TEST(KsTwoSample, KolmogorovTailValues) {
  // Q(lambda) at known points of the Kolmogorov distribution
  EXPECT_NEAR(kolmogorov_q(1.3581), 0.05, 1e-4);
  EXPECT_NEAR(kolmogorov_q(1.6276), 0.01, 1e-4);
  EXPECT_EQ(kolmogorov_q(0.0), 1.0);
}

TEST(Summary, OrderDoesNotMatter) {
  RngStream rng(6);
  std::vector<double> v(1001);
  for (auto& x : v) x = std::exp(5 * rng.normal());
  std::vector<double> w(v.rbegin(), v.rend());
  const Summary a = summarize(v), b = summarize(w);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.variance, b.variance);
  EXPECT_EQ(a.standard_error, b.standard_error);
}

// ----- output -----------------------------------------------------------------

TEST(Output, NineSignificantDigits) {
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_number(123456789012.0), "1.23456789e+11");
  EXPECT_EQ(format_number(2.0), "2");
}

TEST(EmitPlotData, EmptyReportGivesHeaders) {
  const fs::path dir = scratch("plot-empty");
  const auto files = emit_plot_data(PlotData{}, dir);
  EXPECT_EQ(files.size(), 3u);
  EXPECT_EQ(slurp(dir / "fitted_disk.csv"), "label,radius,angle,x,y\n");
  EXPECT_EQ(slurp(dir / "diameter_vs_time.csv"), "replica,time,diameter\n");
  EXPECT_EQ(slurp(dir / "survival.csv"), "x,survival\n");
}

TEST(EmitPlotData, ShapeReportFiles) {
  const fs::path dir = scratch("plot-shape");
  PlotData pd;
  pd.shape_boundaries = {{Vec2(1, 0), Vec2(0, 1)}, {Vec2(2, 0)}, {}};
  pd.disks = {{"inner", 1.0}, {"outer", 2.0}};
  const auto files = emit_plot_data(pd, dir);
  for (int r = 0; r < 3; ++r) EXPECT_TRUE(fs::exists(dir / ("shape_boundary_" + std::to_string(r) + ".csv")));
  EXPECT_EQ(slurp(dir / "shape_boundary_0.csv"), "x,y\n1,0\n0,1\n");
  std::ifstream in(dir / "fitted_disk.csv");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 1 + 2 * 64);
}

TEST(EmitPlotData, SurvivalNonincreasing) {
  RngStream rng(4);
  std::vector<HittingSample> s(400);
  for (auto& h : s) h.tau = 1.0 + rng.uniform() * rng.uniform() * 5;
  PlotData pd;
  pd.survival = tail_exponent(s, 1.0).curve;
  const fs::path dir = scratch("plot-surv");
  emit_plot_data(pd, dir);
  std::ifstream in(dir / "survival.csv");
  std::string line;
  std::getline(in, line);
  double prev = 2.0;
  int rows = 0;
  while (std::getline(in, line)) {
    const double sv = std::stod(line.substr(line.find(',') + 1));
    EXPECT_LE(sv, prev);
    prev = sv;
    ++rows;
  }
  EXPECT_GT(rows, 300);
}

TEST(EmitPlotData, UnwritablePath) {
  const fs::path dir = scratch("plot-bad");
  std::ofstream(dir / "file") << "x";
  EXPECT_ANY_THROW(emit_plot_data(PlotData{}, dir / "file" / "sub"));
}

TEST(Output, TrajectoryCsv) {
  Trajectory tr;
  Points p(2, 2);
  p << 0.5, 1.0, 0.0, 2.0;
  tr.snapshots.push_back({0.0, p, {1, 0}});
  tr.snapshots.push_back({0.25, p * 2.0, {1, 0}});
  const fs::path dir = scratch("traj");
  write_trajectory_csv(tr, dir / "t.csv");
  EXPECT_EQ(slurp(dir / "t.csv"), "time,point,x,y\n0,0,0.5,0\n0,1,1,2\n0.25,0,1,0\n0.25,1,2,4\n");
}

// ----- suites -----------------------------------------------------------------

TEST(Suite, Names) {
  for (Suite s : {Suite::Analyze, Suite::Radial, Suite::LyapunovFn, Suite::Sweep, Suite::Simulate,
                  Suite::Shape, Suite::Verify})
    EXPECT_EQ(suite_from_string(to_string(s)), s);
  EXPECT_THROW(suite_from_string("nope"), ParameterError);
}

TEST(Suite, AnalyzeWritesReport) {
  const fs::path dir = scratch("analyze");
  const RunRecord rec = run_suite(parse_config("{}"), Suite::Analyze, dir);
  EXPECT_TRUE(rec.passed);
  EXPECT_EQ(rec.suite, "analyze");
  for (const char* f : {"report.json", "run_record.json", "spectrum.jsonl", "correlations.csv"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  EXPECT_FALSE(report.empty());
}

TEST(Suite, SimulateIsByteDeterministic) {
  const ExperimentConfig c =
      parse_config(R"({"horizon": 0.5, "replicas": 3, "master_seed": 99, "scheme": {"dt": 0.05}})");
  const fs::path a = scratch("sim-a"), b = scratch("sim-b"), other = scratch("sim-c");
  run_suite(c, Suite::Simulate, a);
  run_suite(c, Suite::Simulate, b);
  for (const char* f : {"samples.jsonl", "report.json", "diameter_vs_time.csv", "trajectory_0.csv"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  ExperimentConfig d = c;
  d.master_seed = 100;
  run_suite(d, Suite::Simulate, other);
  EXPECT_NE(slurp(a / "samples.jsonl"), slurp(other / "samples.jsonl"));
  const auto rec = nlohmann::json::parse(slurp(a / "run_record.json"));
  EXPECT_EQ(rec["seeds"].size(), 3u);
  EXPECT_EQ(rec["seeds"][1].get<std::uint64_t>(), derive_seed(99, 1));
}

TEST(Suite, ModuleErrorPropagates) {
  ExperimentConfig c = parse_config("{}");
  c.control.n = 0;
  EXPECT_THROW(run_suite(c, Suite::Sweep, scratch("sweep-bad")), PreconditionError);
}

// ----- exit codes ---------------------------------------------------------------

TEST(ExitCodes, Classification) {
  EXPECT_EQ(classify_error(ConfigError({"x"})).exit_code, kExitConfig);
  EXPECT_EQ(classify_error(ParameterError("x")).exit_code, kExitConfig);
  EXPECT_EQ(classify_error(DomainError("x")).exit_code, kExitConfig);
  EXPECT_EQ(classify_error(PreconditionError("x")).exit_code, kExitConfig);
  EXPECT_EQ(classify_error(NumericalError("x")).exit_code, kExitNumerical);
  EXPECT_EQ(classify_error(InsufficientDataError("x")).exit_code, kExitNumerical);
  EXPECT_EQ(classify_error(std::runtime_error("x")).exit_code, kExitNumerical);
  EXPECT_EQ(classify_error(NumericalError("x")).kind, "numerical");
}

TEST(ExitCodes, CommandLine) {
  const fs::path dir = scratch("cli");
  std::ofstream(dir / "good.json") << R"({"horizon": 0.2, "replicas": 2})";
  std::ofstream(dir / "bad.json") << R"({"dtt": 1})";
  const std::string good = (dir / "good.json").string(), bad = (dir / "bad.json").string();
  const std::string out = (dir / "out").string();
  EXPECT_EQ(run_tool("analyze --config " + good + " --out " + out), 0);
  EXPECT_EQ(run_tool("simulate --config " + good + " --seed 4 --replicas 1 --out " + out), 0);
  EXPECT_EQ(run_tool("simulate --config " + bad + " --out " + out), 2);
  ASSERT_TRUE(fs::exists(dir / "out" / "failure.json"));
  const auto failure = nlohmann::json::parse(slurp(dir / "out" / "failure.json"));
  EXPECT_EQ(failure["exit_code"], 2);
  EXPECT_EQ(failure["violations"].size(), 1u);
  EXPECT_EQ(run_tool("simulate --config " + (dir / "missing.json").string() + " --out " + out), 2);
  EXPECT_EQ(run_tool("bogus --config " + good), 2);
  EXPECT_EQ(run_tool("simulate"), 2);
}
