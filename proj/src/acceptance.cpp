#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "ibf/control.hpp"
#include "ibf/errors.hpp"
#include "ibf/harness.hpp"
#include "ibf/parallel.hpp"
#include "ibf/radial.hpp"
#include "ibf/stats.hpp"

namespace ibf {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

CriterionResult criterion(int id, std::string name) {
  CriterionResult r;
  r.id = id;
  r.name = std::move(name);
  return r;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// ----- 1 --------------------------------------------------------------------

CriterionResult eigen_identities(const AcceptanceOptions& o) {
  CriterionResult r = criterion(1, "eigenvalue identities");
  const double ell = o.family.length_scale;
  const std::vector<CorrelationFamily> families = {solenoidal(ell), potential(ell),
                                                   mixture(0.5, ell)};
  RngStream rng(derive_seed(o.master_seed, 1001));
  double worst = 0.0;
  for (const auto& fam : families)
    for (int k = 0; k < o.sizes.eigen_points; ++k) {
      Vector x(2), y(2);
      for (int i = 0; i < 2; ++i) {
        x(i) = 6.0 * ell * (rng.uniform() - 0.5);
        y(i) = 6.0 * ell * (rng.uniform() - 0.5);
      }
      const Vector z = x - y;
      const Correlations c = eval_correlations(fam, z.norm());
      Eigen::SelfAdjointEigenSolver<Matrix> eb(eval_tensor(fam, z));
      std::vector<double> nb(eb.eigenvalues().data(), eb.eigenvalues().data() + 2);
      const auto ab = sorted({c.bl, c.bn});
      nb = sorted(nb);
      Eigen::SelfAdjointEigenSolver<Matrix> ep(two_point_matrix(fam, x, y));
      std::vector<double> np(ep.eigenvalues().data(), ep.eigenvalues().data() + 4);
      np = sorted(np);
      const auto ap = sorted({1 + c.bl, 1 - c.bl, 1 + c.bn, 1 - c.bn});
      for (int i = 0; i < 2; ++i) worst = std::max(worst, std::abs(nb[i] - ab[i]));
      for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(np[i] - ap[i]));
    }
  r.passed = worst <= 1e-10;
  r.detail = "max |analytic - numeric| = " + fmt("%.3g", worst) + " over " +
             std::to_string(3 * o.sizes.eigen_points) + " points (tol 1e-10)";
  r.data = {{"max_error", worst}};
  return r;
}

// ----- 2 --------------------------------------------------------------------

double fd_beta(double complement_at_h, double h) { return 2.0 * complement_at_h / (h * h); }

CriterionResult lyapunov_check(const AcceptanceOptions& o) {
  CriterionResult r = criterion(2, "Lyapunov exponents");
  const double ell = o.family.length_scale;
  const double h = 1e-4 * ell;
  auto fd = [&](const CorrelationFamily& fam) {
    const Complements om = correlation_complements(fam, h);
    const double bl = fd_beta(om.bl, h), bn = fd_beta(om.bn, h);
    return std::vector<double>{bl, bn, 0.5 * (bn - bl), 0.5 * (-2.0 * bl)};
  };
  const CorrelationFamily sol = solenoidal(ell), pot = potential(ell), mix = mixture(0.5, ell);
  const auto ls = lyapunov_exponents(sol), lp = lyapunov_exponents(pot),
             lm = lyapunov_exponents(mix);
  const double s2 = 1.0 / (ell * ell);
  const std::vector<double> sol_expected{1 * s2, 3 * s2, 1 * s2, -1 * s2};
  const std::vector<double> sol_analytic{ls.beta_l, ls.beta_n, ls.mu[0], ls.mu[1]};
  const auto sol_fd = fd(sol);
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) {
    worst = std::max(worst, std::abs(sol_analytic[i] - sol_expected[i]));
    worst = std::max(worst, std::abs(sol_fd[i] - sol_expected[i]));
  }
  const double pot_err = std::max(std::abs(lp.mu[0] + 1.0 * s2), std::abs(fd(pot)[2] + 1.0 * s2));
  const double mix_err = std::max(std::abs(lm.mu[0]), std::abs(fd(mix)[2]));
  worst = std::max({worst, pot_err, mix_err});
  r.passed = worst <= 1e-6;
  r.detail = "solenoidal (beta_L, beta_N, mu1, mu2) = (" + fmt("%.9g", ls.beta_l) + ", " +
             fmt("%.9g", ls.beta_n) + ", " + fmt("%.9g", ls.mu[0]) + ", " +
             fmt("%.9g", ls.mu[1]) + "); potential mu1 = " + fmt("%.9g", lp.mu[0]) +
             "; mixture mu1 = " + fmt("%.3g", lm.mu[0]) + "; max dev " + fmt("%.2g", worst) +
             " (tol 1e-6)";
  r.data = {{"solenoidal", sol_analytic}, {"solenoidal_fd", sol_fd},
            {"potential_mu1", lp.mu[0]}, {"mixture_mu1", lm.mu[0]}, {"max_error", worst}};
  return r;
}

// ----- 3, 4 -----------------------------------------------------------------

CriterionResult lyapunov_function(const AcceptanceOptions& o) {
  CriterionResult r = criterion(3, "Lyapunov function");
  const PiecewiseLyapunov f = build_lyapunov_f(o.family, o.family.dimension);
  using B = PiecewiseLyapunov::Branch;
  double jump = 0.0;
  for (auto [a, b, x] : {std::tuple{B::Log, B::Middle, f.c8}, std::tuple{B::Middle, B::Linear, f.c9}}) {
    jump = std::max(jump, std::abs(f.value_on(a, x) - f.value_on(b, x)));
    jump = std::max(jump, std::abs(f.d1_on(a, x) - f.d1_on(b, x)));
    jump = std::max(jump, std::abs(f.d2_on(a, x) - f.d2_on(b, x)));
  }
  const double f1 = f.value(1.0);
  const double floor = f.drift_floor();
  double min_d1 = std::numeric_limits<double>::infinity();
  double min_gap = std::numeric_limits<double>::infinity();
  auto scan = [&](const std::vector<double>& grid) {
    for (double x : grid) {
      min_d1 = std::min(min_d1, f.d1(x));
      min_gap = std::min(min_gap, eval_g(f, x) - floor);
    }
  };
  scan(geometric_grid(1e-4, 10.0, 10000));
  std::vector<double> uniform(10000);
  for (int i = 0; i < 10000; ++i) uniform[i] = 10.0 * (i + 1) / 10000.0;
  scan(uniform);
  r.passed = jump <= 1e-8 && f1 == 0.0 && min_d1 > 0.0 && min_gap >= -1e-12;
  r.detail = "C2 jump " + fmt("%.2g", jump) + " (tol 1e-8), f(1) = " + fmt("%.17g", f1) +
             ", min f' " + fmt("%.3g", min_d1) + ", min g - floor " + fmt("%.3g", min_gap) +
             " (floor " + fmt("%.4g", floor) + ")";
  r.data = {{"c2_jump", jump}, {"f_at_1", f1}, {"min_fprime", min_d1}, {"min_g_gap", min_gap},
            {"floor", floor}, {"c8", f.c8}, {"c9", f.c9}, {"c10", f.c10}, {"c11", f.c11},
            {"eps", f.eps}, {"r_eps", f.r_eps}, {"delta", f.delta}};
  return r;
}

CriterionResult bridge_check(const AcceptanceOptions& o) {
  CriterionResult r = criterion(4, "bridge h");
  const PiecewiseLyapunov f = build_lyapunov_f(o.family, o.family.dimension);
  const BridgeH& h = f.bridge;
  // Rounding scale: each quantity is a sum of a handful of terms of size
  // |c10| (c9 - c8)^k.
  const double w = h.c9 - h.c8;
  const double m = std::max(std::abs(h.c10), std::abs(h.c11));
  const double u = 64.0 * std::numeric_limits<double>::epsilon();
  const double e0 = std::abs(h.value(h.c8));
  const double e1 = std::max(std::abs(h.d1(h.c8)), std::abs(h.d1(h.c9)));
  const double e2 = std::max(std::abs(h.d2(h.c8) - h.c10), std::abs(h.d2(h.c9) - h.c11));
  const bool exact = e0 <= u * m * w * w && e1 <= u * m * w && e2 <= u * m;
  double sup = 0.0;
  for (int i = 0; i <= 10000; ++i) sup = std::max(sup, std::abs(h.d1(h.c8 + w * i / 10000.0)));
  r.passed = exact && sup <= h.delta_cap;
  r.detail = "|h(c8)| " + fmt("%.2g", e0) + ", max|h'| at ends " + fmt("%.2g", e1) +
             ", max|h'' - c| at ends " + fmt("%.2g", e2) + " (|c10| = " + fmt("%.5g", -h.c10) +
             "), sup|h'| " + fmt("%.4g", sup) + " <= cap " + fmt("%.4g", h.delta_cap);
  r.data = {{"h_c8", e0}, {"dh_ends", e1}, {"d2h_ends", e2}, {"sup_dh", sup},
            {"delta_cap", h.delta_cap}, {"eps_h", h.eps_h}};
  return r;
}

// ----- 5, 6 -----------------------------------------------------------------

}  // namespace

std::vector<double> joint_separations(const CorrelationFamily& family, double r0, double horizon,
                                      double dt, int samples, std::uint64_t master_seed) {
  std::vector<double> out(static_cast<std::size_t>(samples));
  StepScheme scheme;
  scheme.dt = dt;
  scheme.sampler = IncrementSampler::Dense;
  const long long steps = step_count(horizon, dt);
  parallel_for(out.size(), [&](std::size_t i) {
    RngStream rng(derive_seed(master_seed, i));
    PointCloud cloud;
    cloud.points = Points::Zero(family.dimension, 2);
    cloud.points(0, 1) = r0;
    double t = 0.0;
    for (long long s = 0; s < steps; ++s) {
      StepScheme sc = scheme;
      sc.dt = std::min(dt, horizon - t);
      cloud = step_points(family, cloud, sc, rng);
      t += sc.dt;
    }
    out[i] = (cloud.points.col(0) - cloud.points.col(1)).norm();
  });
  return out;
}

std::vector<double> radial_separations(const CorrelationFamily& family, double r0,
                                       double horizon, double dt, int samples,
                                       std::uint64_t master_seed) {
  const RadialCoefficients coeffs = radial_coefficients(family, family.dimension);
  std::vector<double> out(static_cast<std::size_t>(samples));
  parallel_for(out.size(), [&](std::size_t i) {
    RngStream rng(derive_seed(master_seed, i));
    out[i] = simulate_radial_endpoint(coeffs, r0, horizon, dt, rng);
  });
  return out;
}

namespace {

CriterionResult radial_oracle(const AcceptanceOptions& o) {
  CriterionResult r = criterion(5, "radial/joint oracle equivalence");
  std::vector<double> ps;
  for (int s = 0; s < o.radial.seeds; ++s) {
    const std::uint64_t base = derive_seed(o.master_seed, 5000 + s);
    const auto a = radial_separations(o.family, o.radial.r0, o.radial.horizon, o.radial.dt,
                                      o.sizes.radial_samples, derive_seed(base, 1));
    const auto b = joint_separations(o.family, o.radial.r0, o.radial.horizon, o.radial.dt,
                                     o.sizes.radial_samples, derive_seed(base, 2));
    ps.push_back(ks_two_sample(a, b).p_value);
  }
  const double med = median(ps);
  r.passed = med > 0.01;
  std::string list;
  for (double p : ps) list += (list.empty() ? "" : ", ") + fmt("%.3f", p);
  r.detail = "KS p-values [" + list + "], median " + fmt("%.3f", med) + " (need > 0.01)";
  r.data = {{"p_values", ps}, {"median", med}};
  return r;
}

CriterionResult submartingale(const AcceptanceOptions& o) {
  CriterionResult r = criterion(6, "submartingale drift");
  const PiecewiseLyapunov f = build_lyapunov_f(o.family, o.family.dimension);
  const SubmartingaleReport rep =
      submartingale_check(f, o.radial.r0_grid, o.radial.horizon, o.radial.dt,
                          o.sizes.submartingale_replicas, derive_seed(o.master_seed, 6000));
  r.passed = rep.has_verdict && rep.passed;
  std::string list;
  json entries = json::array();
  for (const auto& e : rep.entries) {
    list += (list.empty() ? "" : ", ") + fmt("%g:", e.r0) + fmt("%.3f", e.mean_increment) +
            fmt("±%.3f", e.standard_error);
    entries.push_back({{"r0", e.r0}, {"mean", e.mean_increment}, {"se", e.standard_error},
                       {"passed", e.passed}});
  }
  r.detail = "E[f(rho_1)] - f(r0) per r0: " + list;
  r.data = {{"entries", entries}};
  return r;
}

// ----- 7, 8 -----------------------------------------------------------------

SquareChart chart_for(const AcceptanceOptions& o) {
  return build_square(o.family, Vec2(o.control.q[0], o.control.q[1]), o.control.n);
}

CriterionResult nospeed(const AcceptanceOptions& o) {
  CriterionResult r = criterion(7, "no-speed certificate");
  const SquareChart c = chart_for(o);
  const NospeedReport rep = nospeed_certificate(c, c.eps / o.control.dt_divisor, o.control.grid_size);
  r.passed = rep.passed();
  r.detail = std::to_string(rep.violations) + " violations in " + std::to_string(rep.checks) +
             " checks; max deviation / (eps t) = " + fmt("%.3f", rep.max_ratio) +
             "; eps = " + fmt("%.4g", c.eps) + ", C13 = " + fmt("%.4g", c.c13) +
             ", t_u = " + fmt("%.4g", c.t_u);
  r.data = {{"violations", rep.violations}, {"checks", rep.checks},
            {"max_ratio", rep.max_ratio}, {"max_violation", rep.max_violation},
            {"eps", c.eps}, {"c13", c.c13}, {"t_u", c.t_u}};
  return r;
}

CriterionResult sweep(const AcceptanceOptions& o) {
  CriterionResult r = criterion(8, "sweep certificate");
  const SquareChart c = chart_for(o);
  const SweepReport rep = sweep_certificate(c, straight_test_curve(c), c.eps / o.control.dt_divisor);
  r.passed = rep.passed();
  int table_ok = 0;
  for (const auto& t : rep.table) table_ok += t.passed ? 1 : 0;
  r.detail = std::to_string(rep.covered_cells) + "/" + std::to_string(rep.raster_cells) +
             " raster cells covered; " + std::to_string(table_ok) + "/" +
             std::to_string(rep.table.size()) + " table bounds hold" +
             (rep.precondition_ok ? "" : "; precondition: " + rep.precondition_message);
  json table = json::array();
  for (const auto& t : rep.table)
    table.push_back({{"label", t.label}, {"lower", t.lower}, {"upper", t.upper},
                     {"min", t.observed_min}, {"max", t.observed_max}, {"passed", t.passed}});
  r.data = {{"covered", rep.covered_cells}, {"cells", rep.raster_cells}, {"table", table}};
  return r;
}

// ----- 14 -------------------------------------------------------------------

CriterionResult split_time(const AcceptanceOptions& o) {
  CriterionResult r = criterion(14, "split-time invariance");
  const CurveState g = make_segment(Vec2(-0.5, 0.0), Vec2(0.5, 0.0));
  const CurveState gb = make_segment(Vec2(-0.5, o.split.separation), Vec2(0.5, o.split.separation));
  std::vector<std::pair<double, double>> splits;
  for (double t1 : o.split.t1) splits.emplace_back(t1, o.split.t_total - t1);
  SplitOptions so;
  so.scheme = o.shape_options.scheme;
  so.curve_options.log_insertions = false;
  so.master_seed = derive_seed(o.master_seed, 14000);
  const auto est = split_meeting_probability(o.family, g, gb, o.split.t_total, splits, o.split.eta,
                                             o.sizes.split_replicas, so);
  double worst = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i)
    for (std::size_t j = i + 1; j < est.size(); ++j) {
      const double se = std::hypot(est[i].standard_error, est[j].standard_error);
      const double d = std::abs(est[i].probability - est[j].probability);
      worst = std::max(worst, se > 0 ? d / se : (d > 0 ? 1e9 : 0.0));
    }
  r.passed = worst <= 2.0;
  std::string list;
  json rows = json::array();
  for (const auto& e : est) {
    list += (list.empty() ? "" : ", ") + fmt("(%g,", e.t1) + fmt("%g) ", e.t2) +
            fmt("%.3f", e.probability);
    rows.push_back({{"t1", e.t1}, {"t2", e.t2}, {"p", e.probability}, {"se", e.standard_error}});
  }
  r.detail = list + "; worst pair " + fmt("%.2f", worst) + " combined SE (need <= 2)";
  r.data = {{"splits", rows}, {"worst_z", worst}};
  return r;
}

// ----- 16 -------------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CriterionResult determinism(const AcceptanceOptions& o) {
  CriterionResult r = criterion(16, "determinism and config round-trip");
  ExperimentConfig c;
  c.master_seed = o.master_seed;
  c.horizon = 0.2;
  c.replicas = 2;
  c.curve.kind = "circle";
  c.curve.radius = 1.0;
  c.targets.t_grid = {1.5, 2.5, 7.0};
  c.split.t1 = {0.0, 0.5};
  const std::string text = serialize_config(c, 2);
  const ExperimentConfig back = parse_config(text);
  const bool round_trip = back == c && serialize_config(back, 2) == text &&
                          parse_config("{}") == ExperimentConfig{};
  std::error_code ec;
  const auto d1 = o.scratch_dir / "run1", d2 = o.scratch_dir / "run2";
  std::filesystem::remove_all(d1, ec);
  std::filesystem::remove_all(d2, ec);
  run_suite(c, Suite::Simulate, d1);
  run_suite(c, Suite::Simulate, d2);
  const std::string a = slurp(d1 / "samples.jsonl"), b = slurp(d2 / "samples.jsonl");
  const bool identical = !a.empty() && a == b && slurp(d1 / "report.json") == slurp(d2 / "report.json");
  r.passed = round_trip && identical;
  r.detail = std::string("round trip ") + (round_trip ? "ok" : "FAILED") + "; reruns " +
             (identical ? "byte-identical" : "DIFFER") + " (" + std::to_string(a.size()) +
             " bytes of samples)";
  r.data = {{"round_trip", round_trip}, {"identical", identical}};
  return r;
}

bool wanted(const AcceptanceOptions& o, int id) {
  return o.only.empty() || std::find(o.only.begin(), o.only.end(), id) != o.only.end();
}

const double kBudget[17] = {0, 1, 1, 5, 1, 120, 120, 30, 60, 1800, 0, 0, 2700, 0, 600, 1800, 1};

}  // namespace

std::vector<Vec2> unit_directions(int count) {
  std::vector<Vec2> out;
  for (int k = 0; k < count; ++k) {
    const double a = 6.283185307179586476925 * k / count;
    out.emplace_back(std::cos(a), std::sin(a));
  }
  return out;
}

StableNormEstimate pool_directions(const std::vector<StableNormEstimate>& per_direction,
                                   const std::vector<double>& t_grid) {
  if (per_direction.empty()) throw PreconditionError("pool_directions: no estimates");
  std::vector<std::vector<HittingSample>> pooled(t_grid.size());
  for (const auto& e : per_direction)
    for (std::size_t k = 0; k < t_grid.size(); ++k)
      pooled[k].insert(pooled[k].end(), e.samples[k].begin(), e.samples[k].end());
  return fit_stable_norm(t_grid, std::move(pooled), per_direction.front().R,
                         per_direction.front().horizon, Vec2(1.0, 0.0));
}

AcceptanceOptions acceptance_options(const ExperimentConfig& config) {
  AcceptanceOptions o;
  o.family = to_family(config);
  o.master_seed = config.master_seed;
  o.sizes = config.verify;
  o.targets = config.targets;
  o.radial = config.radial;
  o.control = config.control;
  o.split = config.split;
  o.shape_options = to_shape_options(config);
  o.scratch_dir = std::filesystem::path(config.output.dir) / "scratch";
  return o;
}

bool AcceptanceReport::passed() const {
  return !results.empty() &&
         std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
}

json AcceptanceReport::to_json() const {
  json arr = json::array();
  for (const auto& r : results)
    arr.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail},
                   {"budget_seconds", r.budget_seconds}, {"data", r.data}});
  return {{"criteria", arr}, {"passed", passed()}};
}

std::string format_result_line(const CriterionResult& r) {
  char head[96];
  std::snprintf(head, sizeof head, "[%s] %2d  %s: ", r.passed ? "PASS" : "FAIL", r.id,
                r.name.c_str());
  std::string line = head + r.detail;
  char tail[96];
  if (r.budget_seconds > 0)
    std::snprintf(tail, sizeof tail, " (%.1f s, budget %.0f s)", r.seconds, r.budget_seconds);
  else
    std::snprintf(tail, sizeof tail, " (shared run)");
  return line + tail;
}

AcceptanceReport run_acceptance(const AcceptanceOptions& o) {
  AcceptanceReport rep;
  auto finish = [&](CriterionResult r, double secs) {
    r.seconds = secs;
    r.budget_seconds = kBudget[r.id];
    if (o.enforce_runtime && r.budget_seconds > 0 && secs > r.budget_seconds) {
      r.passed = false;
      r.detail += "; over runtime budget";
    }
    if (o.on_result) o.on_result(r);
    rep.results.push_back(std::move(r));
  };
  auto run = [&](int id, CriterionResult (*fn)(const AcceptanceOptions&)) {
    if (!wanted(o, id)) return;
    const auto t0 = Clock::now();
    CriterionResult r;
    try {
      r = fn(o);
    } catch (const std::exception& e) {
      r.id = id;
      r.name = "criterion " + std::to_string(id);
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    finish(std::move(r), seconds_since(t0));
  };
  run(1, eigen_identities);
  run(2, lyapunov_check);
  run(3, lyapunov_function);
  run(4, bridge_check);
  run(5, radial_oracle);
  run(6, submartingale);
  run(7, nospeed);
  run(8, sweep);

  const bool need_hits = wanted(o, 9) || wanted(o, 10) || wanted(o, 11) || wanted(o, 12) ||
                         wanted(o, 13) || wanted(o, 15);
  const auto& tg = o.targets.t_grid;
  auto t_index = [&](double t) -> int {
    for (std::size_t k = 0; k < tg.size(); ++k)
      if (std::abs(tg[k] - t) < 1e-9) return static_cast<int>(k);
    return -1;
  };
  ShapeRunOptions hit_opts = o.shape_options;
  hit_opts.horizon = o.targets.hitting_horizon;
  double hit_seconds = 0.0;
  std::string hit_error;
  if (need_hits) {
    const auto t0 = Clock::now();
    try {
      const auto dirs = unit_directions(o.targets.directions);
      for (std::size_t k = 0; k < dirs.size(); ++k)
        rep.per_direction.push_back(estimate_stable_norm(
            o.family, o.targets.R, dirs[k], tg, o.sizes.hitting_replicas,
            derive_seed(o.master_seed, 9000), hit_opts,
            static_cast<int>(k) * o.sizes.hitting_replicas));
      rep.pooled = pool_directions(rep.per_direction, tg);
      for (const auto& s : rep.pooled->samples) rep.hitting_samples.insert(rep.hitting_samples.end(), s.begin(), s.end());
    } catch (const std::exception& e) {
      hit_error = e.what();
    }
    hit_seconds = seconds_since(t0);
  }
  auto hit_failure = [&](int id, const char* name) {
    CriterionResult r = criterion(id, name);
    r.detail = "error: " + hit_error;
    return r;
  };
  const int i8 = t_index(8.0);

  if (wanted(o, 9)) {
    CriterionResult r = criterion(9, "isotropy of hitting times");
    if (!hit_error.empty() || i8 < 0) {
      r = hit_failure(9, "isotropy of hitting times");
      if (i8 < 0) r.detail = "t = 8 missing from t_grid";
    } else {
      std::vector<double> m, se;
      for (const auto& e : rep.per_direction) {
        m.push_back(e.points[i8].mean);
        se.push_back(e.points[i8].standard_error);
      }
      const IsotropyReport iso = isotropy_check(m, se, 3.0);
      r.passed = iso.passed;
      std::string list;
      for (std::size_t k = 0; k < m.size(); ++k) list += (k ? ", " : "") + fmt("%.2f", m[k]);
      r.detail = "mean tau at t=8 by direction [" + list + "]; worst pair " +
                 fmt("%.2f", iso.worst_z) + " combined SE (need <= 3)";
      r.data = {{"means", m}, {"standard_errors", se}, {"worst_z", iso.worst_z}};
    }
    finish(std::move(r), hit_seconds);
  }
  if (wanted(o, 10)) {
    CriterionResult r = criterion(10, "subadditivity");
    if (!hit_error.empty()) {
      r = hit_failure(10, "subadditivity");
    } else {
      std::vector<std::pair<double, double>> pairs{{4.0, 4.0}, {4.0, 6.0}};
      int found = 0;
      bool ok = true;
      json rows = json::array();
      std::string list;
      for (const auto& c : rep.pooled->subadditivity)
        for (const auto& [a, b] : pairs)
          if (std::abs(c.t1 - a) < 1e-9 && std::abs(c.t2 - b) < 1e-9) {
            ++found;
            ok = ok && c.passed;
            list += (list.empty() ? "" : "; ") + fmt("m(%g)", c.t1 + c.t2) + fmt(" = %.3f", c.lhs) +
                    fmt(" <= %.3f", c.rhs) + fmt(" + %.3f", c.slack);
            rows.push_back({{"t1", c.t1}, {"t2", c.t2}, {"lhs", c.lhs}, {"rhs", c.rhs},
                            {"slack", c.slack}, {"passed", c.passed}});
          }
      r.passed = ok && found == 2;
      r.detail = found == 2 ? list : "t_grid lacks the pairs (4,4) and (4,6)";
      r.data = {{"checks", rows}};
    }
    finish(std::move(r), 0.0);
  }
  if (wanted(o, 11)) {
    CriterionResult r = criterion(11, "concentration");
    if (!hit_error.empty()) {
      r = hit_failure(11, "concentration");
    } else {
      const auto cc = concentration_check(tg, rep.pooled->samples, rep.pooled->slope);
      r.passed = cc.passed;
      std::string list;
      for (std::size_t k = 0; k < cc.t.size(); ++k)
        list += (k ? ", " : "") + fmt("t=%g:", cc.t[k]) + fmt("%.3f", cc.probability[k]);
      r.detail = "P[|tau/t - slope| > 0.25 slope] " + list + " (slope " +
                 fmt("%.4f", cc.slope) + ")";
      r.data = {{"t", cc.t}, {"probability", cc.probability}, {"se", cc.standard_error},
                {"slope", cc.slope}};
    }
    finish(std::move(r), 0.0);
  }
  if (wanted(o, 12)) {
    const auto t0 = Clock::now();
    CriterionResult r = criterion(12, "limit shape");
    if (!hit_error.empty()) {
      r = hit_failure(12, "limit shape");
    } else {
      try {
        ShapeRunOptions so = o.shape_options;
        so.curve.prune.mode = PruneMode::AnyUncovered;
        const double b = rep.pooled->ball_radius;
        rep.shape = limit_shape_experiment(o.family, make_circle(Vec2::Zero(), o.targets.R),
                                           o.targets.shape_time, b, o.targets.eps,
                                           o.sizes.shape_replicas,
                                           derive_seed(o.master_seed, 12000), so);
        std::vector<double> ratio;
        int in_ok = 0, out_ok = 0;
        for (const auto& c : rep.shape->replicas) {
          in_ok += c.inner_ok;
          out_ok += c.outer_ok;
          ratio.push_back(c.reach > 0 ? c.covered_radius / c.reach : 0.0);
        }
        const double need = (1.0 - o.targets.eps) / (1.0 + o.targets.eps);
        int feasible = 0;
        for (double q : ratio) feasible += q >= need;
        r.passed = rep.shape->fraction_both >= 0.8;
        r.detail = fmt("both inclusions in %.3f", rep.shape->fraction_both) +
                   " of replicas (need >= 0.8); inner " + std::to_string(in_ok) + ", outer " +
                   std::to_string(out_ok) + " of " + std::to_string(ratio.size()) +
                   "; ball radius " + fmt("%.4f", b) + "; median covered/reach radius " +
                   fmt("%.3f", ratio.empty() ? 0.0 : median(ratio)) + fmt(" (any radius needs >= %.3f", need) +
                   ", met by " + std::to_string(feasible) + ")";
        json rows = json::array();
        for (const auto& c : rep.shape->replicas)
          rows.push_back({{"inner_ok", c.inner_ok}, {"outer_ok", c.outer_ok},
                          {"covered_radius", c.covered_radius}, {"reach", c.reach},
                          {"inner_margin", c.inner_margin}, {"outer_margin", c.outer_margin}});
        r.data = {{"fraction_both", rep.shape->fraction_both}, {"ball_radius", b},
                  {"replicas", rows}};
      } catch (const std::exception& e) {
        r.detail = std::string("error: ") + e.what();
      }
    }
    finish(std::move(r), seconds_since(t0));
  }
  if (wanted(o, 13)) {
    CriterionResult r = criterion(13, "tail decay");
    if (!hit_error.empty() || i8 < 0) {
      r = hit_failure(13, "tail decay");
    } else {
      try {
        rep.tail = tail_exponent(rep.pooled->samples[i8], 8.0);
        const bool enough = rep.tail->samples >= 500;
        r.passed = rep.tail->passed && enough;
        r.detail = fmt("S(3 med) = %.4f", rep.tail->survival_high) +
                   fmt(", S(1.5 med) = %.4f", rep.tail->survival_low) +
                   fmt(", ratio %.3f (need <= 0.25)", rep.tail->ratio) + ", " +
                   std::to_string(rep.tail->samples) + " samples" +
                   fmt(", log-log decay exponent %.2f", rep.tail->decay_exponent);
        r.data = {{"survival_high", rep.tail->survival_high},
                  {"survival_low", rep.tail->survival_low},
                  {"ratio", rep.tail->ratio},
                  {"samples", rep.tail->samples},
                  {"median", rep.tail->median},
                  {"decay_exponent", rep.tail->decay_exponent}};
      } catch (const std::exception& e) {
        r.detail = std::string("error: ") + e.what();
      }
    }
    finish(std::move(r), 0.0);
  }
  run(14, split_time);
  if (wanted(o, 15)) {
    const auto t0 = Clock::now();
    CriterionResult r = criterion(15, "R-robustness");
    if (!hit_error.empty()) {
      r = hit_failure(15, "R-robustness");
    } else {
      try {
        const StableNormEstimate e4 = estimate_stable_norm(
            o.family, o.sizes.robust_R, Vec2(1.0, 0.0), tg, o.sizes.robust_replicas,
            derive_seed(o.master_seed, 15000), hit_opts);
        const double se = std::hypot(rep.pooled->slope_se, e4.slope_se);
        const double z = std::abs(rep.pooled->slope - e4.slope) / se;
        r.passed = z <= 3.0 && e4.reliable && rep.pooled->reliable;
        r.detail = fmt("slope R=%g: ", o.targets.R) + fmt("%.4f", rep.pooled->slope) +
                   fmt(" ± %.4f", rep.pooled->slope_se) + fmt(", R=%g: ", o.sizes.robust_R) +
                   fmt("%.4f", e4.slope) + fmt(" ± %.4f", e4.slope_se) +
                   fmt("; %.2f combined SE (need <= 3)", z);
        r.data = {{"slope_R", rep.pooled->slope}, {"se_R", rep.pooled->slope_se},
                  {"slope_2R", e4.slope}, {"se_2R", e4.slope_se}, {"z", z}};
      } catch (const std::exception& e) {
        r.detail = std::string("error: ") + e.what();
      }
    }
    finish(std::move(r), seconds_since(t0));
  }
  run(16, determinism);
  std::sort(rep.results.begin(), rep.results.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  return rep;
}

}  // namespace ibf
