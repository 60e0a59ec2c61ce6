#include "ibf/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "ibf/control.hpp"
#include "ibf/errors.hpp"
#include "ibf/io.hpp"
#include "ibf/parallel.hpp"
#include "ibf/radial.hpp"
#include "ibf/stats.hpp"
#include "ibf/version.hpp"

namespace ibf {

using nlohmann::json;

std::string to_string(Suite suite) {
  switch (suite) {
    case Suite::Analyze: return "analyze";
    case Suite::Radial: return "radial";
    case Suite::LyapunovFn: return "lyapunov-fn";
    case Suite::Sweep: return "sweep";
    case Suite::Simulate: return "simulate";
    case Suite::Shape: return "shape";
    case Suite::Verify: return "verify";
  }
  return "?";
}

Suite suite_from_string(const std::string& name) {
  for (Suite s : {Suite::Analyze, Suite::Radial, Suite::LyapunovFn, Suite::Sweep, Suite::Simulate,
                  Suite::Shape, Suite::Verify})
    if (to_string(s) == name) return s;
  throw ParameterError("unknown suite \"" + name + "\"");
}

json RunRecord::to_json() const {
  return {{"suite", suite},           {"config_digest", config_digest},
          {"code_version", code_version}, {"master_seed", master_seed},
          {"seeds", seeds},           {"wall_seconds", wall_seconds},
          {"outcomes", outcomes},     {"passed", passed}};
}

namespace {

using Hook = std::function<void(const CriterionResult&)>;

json vec(const Vec2& v) { return json::array({v.x(), v.y()}); }

json criteria_json(const AcceptanceReport& rep) { return rep.to_json()["criteria"]; }

AcceptanceReport run_subset(const ExperimentConfig& config, std::vector<int> ids,
                            const std::filesystem::path& out_dir, bool enforce_runtime,
                            const std::function<void(const CriterionResult&)>& on_result) {
  AcceptanceOptions o = acceptance_options(config);
  o.on_result = on_result;
  o.only = std::move(ids);
  o.enforce_runtime = enforce_runtime;
  o.scratch_dir = out_dir / "scratch";
  AcceptanceReport rep = run_acceptance(o);
  std::error_code ec;
  std::filesystem::remove_all(o.scratch_dir, ec);
  return rep;
}

void write_hitting_samples(const std::filesystem::path& path,
                           const std::vector<HittingSample>& samples) {
  JsonLinesWriter w(path);
  for (const auto& s : samples)
    w.write({{"replica", s.replica}, {"seed", s.seed}, {"target", vec(s.target)}, {"R", s.R},
             {"tau", s.tau}, {"censored", s.censored}});
}

json estimate_json(const StableNormEstimate& e) {
  json pts = json::array();
  for (const auto& p : e.points)
    pts.push_back({{"t", p.t}, {"mean", p.mean}, {"se", p.standard_error},
                   {"samples", p.samples}, {"censored", p.censored}, {"used", p.used}});
  return {{"direction", vec(e.direction)}, {"R", e.R}, {"slope", e.slope},
          {"slope_se", e.slope_se}, {"intercept", e.intercept}, {"ci", {e.ci_low, e.ci_high}},
          {"ball_radius", e.ball_radius}, {"reliable", e.reliable}, {"points", pts}};
}

PlotData plot_data(const AcceptanceReport& rep) {
  PlotData pd;
  if (rep.shape) {
    for (const auto& g : rep.shape->grids) pd.shape_boundaries.push_back(boundary_cells(g, rep.shape->t));
    const double tb = rep.shape->t * rep.shape->ball_radius;
    pd.disks = {{"inner", (1.0 - rep.shape->eps) * tb}, {"fitted", tb},
                {"outer", (1.0 + rep.shape->eps) * tb}};
  }
  if (rep.tail) pd.survival = rep.tail->curve;
  return pd;
}

// ----- suites --------------------------------------------------------------

json analyze(const ExperimentConfig& config, const std::filesystem::path& dir, bool& passed,
          const Hook& on_result) {
  const CorrelationFamily fam = to_family(config);
  {
    JsonLinesWriter w(dir / "spectrum.jsonl");
    for (double r : {0.1, 0.5, 1.0, 2.0, 4.0})
      for (const Vec2& u : unit_directions(4)) {
        Vector z = Vector::Zero(fam.dimension);
        z(0) = r * u.x();
        z(1) = r * u.y();
        const SpectrumReport s = spectrum_report(fam, z);
        json eb = json::array(), ebb = json::array();
        for (auto [v, m] : s.eigenvalues_b) eb.push_back({{"value", v}, {"multiplicity", m}});
        for (auto [v, m] : s.eigenvalues_bbar) ebb.push_back({{"value", v}, {"multiplicity", m}});
        w.write({{"z", std::vector<double>(z.data(), z.data() + z.size())}, {"r", r},
                 {"b", eb}, {"two_point", ebb}});
      }
  }
  {
    CsvWriter csv(dir / "correlations.csv", {"r", "B_L", "B_N", "one_minus_B_L", "one_minus_B_N"});
    for (int i = 0; i <= 400; ++i) {
      const double r = 5.0 * fam.length_scale * i / 400.0;
      const Correlations c = eval_correlations(fam, r);
      const Complements om = correlation_complements(fam, r);
      csv.row({r, c.bl, c.bn, om.bl, om.bn});
    }
  }
  const LyapunovSpectrum ls = lyapunov_exponents(fam);
  const AcceptanceReport rep = run_subset(config, {1, 2}, dir, false, on_result);
  passed = rep.passed();
  json report = {{"family", to_string(fam.kind)},
                 {"beta_l", ls.beta_l},
                 {"beta_n", ls.beta_n},
                 {"mu", ls.mu},
                 {"top_positive", ls.top_positive},
                 {"taylor_radius", taylor_radius(fam, 0.5)},
                 {"criteria", criteria_json(rep)}};
  write_json(dir / "report.json", report);
  return {{"beta_l", ls.beta_l}, {"beta_n", ls.beta_n}, {"mu", ls.mu}, {"passed", passed}};
}

json radial(const ExperimentConfig& config, const std::filesystem::path& dir, bool& passed,
            std::vector<std::uint64_t>& seeds, const Hook& on_result) {
  const CorrelationFamily fam = to_family(config);
  const RadialConfig& rc = config.radial;
  const std::uint64_t s1 = derive_seed(config.master_seed, 1), s2 = derive_seed(config.master_seed, 2);
  seeds = {s1, s2};
  const auto a = radial_separations(fam, rc.r0, rc.horizon, rc.dt, rc.samples, s1);
  const auto b = joint_separations(fam, rc.r0, rc.horizon, rc.dt, rc.samples, s2);
  {
    JsonLinesWriter w(dir / "samples.jsonl");
    for (std::size_t i = 0; i < a.size(); ++i)
      w.write({{"index", i}, {"radial", a[i]}, {"joint", b[i]}});
  }
  {
    auto sa = a, sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    CsvWriter csv(dir / "separation_quantiles.csv", {"q", "radial", "joint"});
    for (int k = 1; k < 100; ++k) {
      const double q = k / 100.0;
      csv.row({q, quantile(sa, q), quantile(sb, q)});
    }
  }
  const KsResult ks = ks_two_sample(a, b);
  const AcceptanceReport rep = run_subset(config, {5, 6}, dir, false, on_result);
  passed = rep.passed();
  write_json(dir / "report.json", {{"ks_statistic", ks.statistic}, {"ks_p_value", ks.p_value},
                                   {"radial", {{"mean", summarize(a).mean}, {"se", summarize(a).standard_error}}},
                                   {"joint", {{"mean", summarize(b).mean}, {"se", summarize(b).standard_error}}},
                                   {"criteria", criteria_json(rep)}});
  return {{"ks_p_value", ks.p_value}, {"passed", passed}};
}

json lyapunov_fn(const ExperimentConfig& config, const std::filesystem::path& dir, bool& passed,
          const Hook& on_result) {
  const CorrelationFamily fam = to_family(config);
  const PiecewiseLyapunov f = build_lyapunov_f(fam, fam.dimension);
  {
    CsvWriter csv(dir / "f_profile.csv", {"r", "f", "f1", "f2", "g"});
    for (double r : geometric_grid(1e-4, f.grid_upper(), 2000))
      csv.row({r, f.value(r), f.d1(r), f.d2(r), eval_g(f, r)});
  }
  const AcceptanceReport rep = run_subset(config, {3, 4}, dir, false, on_result);
  passed = rep.passed();
  write_json(dir / "report.json",
             {{"c1", f.c1}, {"c2", f.c2}, {"c3", f.c3}, {"c4", f.c4}, {"c5", f.c5},
              {"c8", f.c8}, {"c9", f.c9}, {"c10", f.c10}, {"c11", f.c11}, {"eps", f.eps},
              {"r_eps", f.r_eps}, {"delta", f.delta}, {"drift_floor", f.drift_floor()},
              {"bridge", {{"delta_cap", f.bridge.delta_cap}, {"eps_h", f.bridge.eps_h}}},
              {"criteria", criteria_json(rep)}});
  return {{"c8", f.c8}, {"c9", f.c9}, {"passed", passed}};
}

json sweep(const ExperimentConfig& config, const std::filesystem::path& dir, bool& passed,
          const Hook& on_result) {
  const CorrelationFamily fam = to_family(config);
  const SquareChart chart =
      build_square(fam, Vec2(config.control.q[0], config.control.q[1]), config.control.n);
  const double dt = chart.eps / config.control.dt_divisor;
  const SweepReport sr = sweep_certificate(chart, straight_test_curve(chart), dt);
  {
    CsvWriter csv(dir / "sweep_raster.csv", {"z1", "z2", "covered"});
    for (const auto& z : sr.covered) csv.row({z.x(), z.y(), 1.0});
    for (const auto& z : sr.uncovered) csv.row({z.x(), z.y(), 0.0});
  }
  {
    // Path of the chart origin under the schedule.
    const ControlPath path = integrate_control(sweeping_schedule(chart), chart.q, dt);
    CsvWriter csv(dir / "control_path.csv", {"t", "x", "y", "z1", "z2"});
    const std::size_t stride = std::max<std::size_t>(1, path.times.size() / 500);
    for (std::size_t i = 0; i < path.times.size(); i += stride) {
      const Vec2 z = chart.to_chart(path.points[i]);
      csv.row({path.times[i], path.points[i].x(), path.points[i].y(), z.x(), z.y()});
    }
  }
  const AcceptanceReport rep = run_subset(config, {7, 8}, dir, false, on_result);
  passed = rep.passed();
  write_json(dir / "report.json", {{"eps", chart.eps}, {"c13", chart.c13}, {"t_u", chart.t_u},
                                   {"covered_cells", sr.covered_cells},
                                   {"raster_cells", sr.raster_cells},
                                   {"criteria", criteria_json(rep)}});
  return {{"eps", chart.eps}, {"covered", sr.covered_cells}, {"passed", passed}};
}

json simulate(const ExperimentConfig& config, const std::filesystem::path& dir,
              std::vector<std::uint64_t>& seeds) {
  const CorrelationFamily fam = to_family(config);
  const CurveState curve = to_curve(config);
  const ShapeRunOptions so = to_shape_options(config);
  const int stride = snapshot_stride(config);
  const auto n = static_cast<std::size_t>(config.replicas);
  seeds.resize(n);
  for (std::size_t i = 0; i < n; ++i) seeds[i] = derive_seed(config.master_seed, i);
  std::vector<Trajectory> runs(n);
  parallel_for(n, [&](std::size_t i) {
    RngStream rng(seeds[i]);
    runs[i] = simulate_curve(fam, curve, config.horizon, so.scheme, rng, stride, so.curve);
  });
  PlotData pd;
  JsonLinesWriter w(dir / "samples.jsonl");
  std::vector<double> final_diam;
  int capped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& s : runs[i].snapshots) {
      const double d = diameter(s.points);
      w.write({{"replica", i}, {"seed", seeds[i]}, {"time", s.time},
               {"points", s.points.cols()}, {"diameter", d}});
      pd.diameters.push_back({static_cast<int>(i), s.time, d});
    }
    final_diam.push_back(diameter(runs[i].final_state.cloud.points));
    capped += runs[i].capped;
  }
  emit_plot_data(pd, dir);
  // the other replicas are reproducible from their seeds
  if (n > 0) write_trajectory_csv(runs[0], dir / "trajectory_0.csv");
  const DisplacementReport disp = displacement_bound(runs, config.horizon);
  const Summary sd = summarize(final_diam);
  write_json(dir / "report.json",
             {{"replicas", n}, {"horizon", config.horizon}, {"capped", capped},
              {"final_diameter", {{"mean", sd.mean}, {"se", sd.standard_error},
                                  {"min", sd.min}, {"max", sd.max}}},
              {"displacement", {{"p95_full", disp.p95_full}, {"p95_half", disp.p95_half},
                                {"stable", disp.stable}}}});
  return {{"mean_final_diameter", sd.mean}, {"capped", capped}};
}

json shape(const ExperimentConfig& config, const std::filesystem::path& dir, bool& passed,
          const Hook& on_result) {
  AcceptanceOptions o = acceptance_options(config);
  o.on_result = on_result;
  o.only = {9, 10, 11, 12, 13};
  o.enforce_runtime = false;
  o.sizes.hitting_replicas = config.replicas;
  o.sizes.shape_replicas = config.replicas;
  AcceptanceReport rep = run_acceptance(o);
  passed = rep.passed();
  write_hitting_samples(dir / "samples.jsonl", rep.hitting_samples);
  emit_plot_data(plot_data(rep), dir);
  json dirs = json::array();
  for (const auto& e : rep.per_direction) dirs.push_back(estimate_json(e));
  json report = {{"criteria", criteria_json(rep)}, {"directions", dirs}};
  if (rep.pooled) report["pooled"] = estimate_json(*rep.pooled);
  write_json(dir / "report.json", report);
  json out = {{"passed", passed}};
  if (rep.pooled) out["slope"] = rep.pooled->slope;
  return out;
}

json verify(const ExperimentConfig& config, const std::filesystem::path& dir, bool& passed,
            const Hook& on_result) {
  AcceptanceOptions o = acceptance_options(config);
  o.scratch_dir = dir / "scratch";
  o.on_result = on_result;
  AcceptanceReport rep = run_acceptance(o);
  std::error_code ec;
  std::filesystem::remove_all(o.scratch_dir, ec);
  passed = rep.passed();
  write_hitting_samples(dir / "samples.jsonl", rep.hitting_samples);
  emit_plot_data(plot_data(rep), dir);
  json report = rep.to_json();
  if (rep.pooled) report["pooled"] = estimate_json(*rep.pooled);
  write_json(dir / "report.json", report);
  json summary = json::array();
  for (const auto& r : rep.results) summary.push_back({{"id", r.id}, {"passed", r.passed}});
  return {{"criteria", summary}, {"passed", passed}};
}

}  // namespace

RunRecord run_suite(const ExperimentConfig& config, Suite suite,
                    const std::filesystem::path& out_dir,
                    const std::function<void(const CriterionResult&)>& on_result) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  RunRecord rec;
  rec.suite = to_string(suite);
  rec.config_digest = config_digest(config);
  rec.code_version = kVersion;
  rec.master_seed = config.master_seed;
  bool passed = true;
  switch (suite) {
    case Suite::Analyze: rec.outcomes = analyze(config, out_dir, passed, on_result); break;
    case Suite::Radial: rec.outcomes = radial(config, out_dir, passed, rec.seeds, on_result); break;
    case Suite::LyapunovFn: rec.outcomes = lyapunov_fn(config, out_dir, passed, on_result); break;
    case Suite::Sweep: rec.outcomes = sweep(config, out_dir, passed, on_result); break;
    case Suite::Simulate: rec.outcomes = simulate(config, out_dir, rec.seeds); break;
    case Suite::Shape: rec.outcomes = shape(config, out_dir, passed, on_result); break;
    case Suite::Verify: rec.outcomes = verify(config, out_dir, passed, on_result); break;
  }
  rec.passed = passed;
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_json(out_dir / "run_record.json", rec.to_json());
  return rec;
}

ErrorClass classify_error(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return {kExitConfig, "config"};
  if (dynamic_cast<const ParameterError*>(&e)) return {kExitConfig, "parameter"};
  if (dynamic_cast<const DomainError*>(&e)) return {kExitConfig, "domain"};
  if (dynamic_cast<const PreconditionError*>(&e)) return {kExitConfig, "precondition"};
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return {kExitConfig, "io"};
  if (dynamic_cast<const InsufficientDataError*>(&e)) return {kExitNumerical, "insufficient-data"};
  if (dynamic_cast<const NumericalError*>(&e)) return {kExitNumerical, "numerical"};
  return {kExitNumerical, "internal"};
}

}  // namespace ibf
