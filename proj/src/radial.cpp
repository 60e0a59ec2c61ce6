#include "ibf/radial.hpp"

#include <algorithm>
#include <cmath>

#include "ibf/parallel.hpp"

namespace ibf {

RadialCoefficients radial_coefficients(const CorrelationFamily& family, int d) {
  if (d < 2) throw PreconditionError("radial_coefficients: d must be >= 2");
  CorrelationFamily fam = family;
  fam.dimension = d;
  fam.validate();
  RadialCoefficients c;
  c.drift = [fam, d](double r) {
    if (r <= 0.0) return 0.0;
    return (d - 1) * correlation_complements(fam, r).bn / r;
  };
  c.diffusion = [fam](double r) {
    if (r <= 0.0) return 0.0;
    return std::sqrt(2.0 * std::max(0.0, correlation_complements(fam, r).bl));
  };
  return c;
}

namespace {

double radial_step(const RadialCoefficients& c, double r, double dt, double sqdt,
                   RngStream& rng) {
  const double next = r + c.drift(r) * dt + c.diffusion(r) * sqdt * rng.normal();
  return std::max(next, kRadialFloor);
}

}  // namespace

std::vector<double> simulate_radial(const RadialCoefficients& coeffs, double r0,
                                    double horizon, double dt, RngStream& rng) {
  if (!(r0 > 0.0)) throw PreconditionError("simulate_radial: r0 must be > 0");
  if (!(dt > 0.0)) throw ParameterError("simulate_radial: dt must be > 0");
  std::vector<double> path{r0};
  if (!(horizon > 0.0)) return path;
  const long long steps = static_cast<long long>(std::llround(horizon / dt));
  path.reserve(static_cast<std::size_t>(steps) + 1);
  const double sqdt = std::sqrt(dt);
  double r = r0;
  for (long long k = 0; k < steps; ++k) {
    r = radial_step(coeffs, r, dt, sqdt, rng);
    path.push_back(r);
  }
  return path;
}

double simulate_radial_endpoint(const RadialCoefficients& coeffs, double r0, double horizon,
                                double dt, RngStream& rng) {
  if (!(r0 > 0.0)) throw PreconditionError("simulate_radial: r0 must be > 0");
  if (!(dt > 0.0)) throw ParameterError("simulate_radial: dt must be > 0");
  const long long steps = horizon > 0.0 ? std::llround(horizon / dt) : 0;
  const double sqdt = std::sqrt(dt);
  double r = r0;
  for (long long k = 0; k < steps; ++k) r = radial_step(coeffs, r, dt, sqdt, rng);
  return r;
}

// ----- bridge h -------------------------------------------------------------

BridgeH build_bridge_h(double c8, double c9, double c10, double c11, double delta_cap) {
  if (!(c8 > 0.0 && c9 > c8)) throw ParameterError("build_bridge_h: need 0 < c8 < c9");
  if (!(c10 < 0.0 && c11 > 0.0)) throw ParameterError("build_bridge_h: need c10 < 0 < c11");
  if (!(delta_cap > 0.0)) throw ParameterError("build_bridge_h: need delta_cap > 0");
  BridgeH h;
  h.c8 = c8;
  h.c9 = c9;
  h.c10 = c10;
  h.c11 = c11;
  h.delta_cap = delta_cap;
  const double span = c9 - c8;
  // 1% below the cap so the plateau of h' stays inside it after rounding
  h.eps_h = std::min(0.49 * std::min(c11, -c10), 0.99 * delta_cap / span);
  h.w8 = -2.0 * h.eps_h * span / c10;
  h.w9 = 2.0 * h.eps_h * span / c11;
  h.c8_eps = c8 + h.w8;
  h.c9_eps = c9 - h.w9;
  return h;
}

// Everything is written in u = r - c8 and v = c9 - r so the endpoint values
// come out exact. Each ramp integrates to eps_h * span in absolute value.
namespace {

double ramp(double c, double w, double s) { return s < w ? c * (1.0 - s / w) : 0.0; }

// int_0^s ramp
double ramp_1(double c, double w, double s) {
  const double m = std::min(s, w);
  return c * (m - m * m / (2.0 * w));
}

// int_0^s int_0^x ramp
double ramp_2(double c, double w, double s) {
  if (s <= w) return c * (s * s / 2.0 - s * s * s / (6.0 * w));
  return c * w * w / 3.0 + c * w / 2.0 * (s - w);
}

}  // namespace

double BridgeH::d2(double r) const {
  if (r < c8 || r > c9) return 0.0;
  return ramp(c10, w8, r - c8) + ramp(c11, w9, c9 - r);
}

double BridgeH::d1(double r) const {
  r = std::clamp(r, c8, c9);
  const double span = c9 - c8;
  return ramp_1(c10, w8, r - c8) + eps_h * span - ramp_1(c11, w9, c9 - r);
}

double BridgeH::value(double r) const {
  r = std::clamp(r, c8, c9);
  const double span = c9 - c8;
  const double u = r - c8, v = c9 - r;
  return ramp_2(c10, w8, u) + eps_h * span * u - ramp_2(c11, w9, span) + ramp_2(c11, w9, v);
}

// ----- Lyapunov function ----------------------------------------------------

std::vector<double> geometric_grid(double lo, double hi, int count) {
  std::vector<double> g(count);
  const double ratio = std::log(hi / lo);
  for (int i = 0; i < count; ++i)
    g[i] = lo * std::exp(ratio * (count == 1 ? 1.0 : static_cast<double>(i) / (count - 1)));
  if (count > 0) g.back() = hi;
  return g;
}

double PiecewiseLyapunov::grid_upper() const { return 10.0 * std::max(1.0, c9); }

PiecewiseLyapunov build_lyapunov_f(const CorrelationFamily& family, int d) {
  CorrelationFamily fam = family;
  fam.dimension = d;
  fam.validate();
  PiecewiseLyapunov f;
  f.family = fam;
  f.dimension = d;
  f.beta_l = beta_l(fam);
  f.beta_n = beta_n(fam);
  const double bnd = f.beta_n * (d - 1);
  const double gap = bnd - f.beta_l;
  if (!(gap > 0.0))
    throw PreconditionError(
        "build_lyapunov_f: the top Lyapunov exponent must be positive (beta_N(d-1) > beta_L)");
  const double ratio = bnd / f.beta_l;
  f.eps = std::min({1.0, gap / (8.0 * (d - 1)), gap / 24.0 * std::cbrt(1.0 / ratio),
                    gap / 24.0 * std::pow(ratio, -4.0 / 3.0)});
  f.r_eps = taylor_radius(fam, f.eps);
  f.c9 = std::min(f.r_eps, 1.0);
  f.c8 = f.c9 * std::pow(ratio, -2.0 / 3.0);
  double sup_complement = 0.0;
  for (double r : geometric_grid(1e-4, f.grid_upper(), kTaylorGridPoints))
    sup_complement = std::max(sup_complement, correlation_complements(fam, r).bn);
  f.delta = gap / 24.0 / (sup_complement / f.c8) / (d - 1);
  f.c10 = -1.0 / (2.0 * f.c8 * f.c8);
  f.c11 = 1.0 / (2.0 * f.c9 * std::sqrt(f.c8 * f.c9));
  f.bridge = build_bridge_h(f.c8, f.c9, f.c10, f.c11, f.delta);
  f.c3 = 2.0 / std::sqrt(f.c8);
  f.c2 = 2.0 - std::log(f.c8);
  f.c4 = 1.0 / std::sqrt(f.c8 * f.c9);
  f.c5 = std::sqrt(f.c9 / f.c8) + f.bridge.value(f.c9);
  f.c1 = -f.c4 - f.c5;
  return f;
}

double PiecewiseLyapunov::value_on(Branch b, double r) const {
  switch (b) {
    case Branch::Log:
      return (std::log(r) + c2) + c1;
    case Branch::Middle:
      return (c3 * std::sqrt(r) + bridge.value(r)) + c1;
    case Branch::Linear:
      return (c4 * r + c5) + c1;
  }
  return 0.0;
}

double PiecewiseLyapunov::d1_on(Branch b, double r) const {
  switch (b) {
    case Branch::Log:
      return 1.0 / r;
    case Branch::Middle:
      return c3 / (2.0 * std::sqrt(r)) + bridge.d1(r);
    case Branch::Linear:
      return c4;
  }
  return 0.0;
}

double PiecewiseLyapunov::d2_on(Branch b, double r) const {
  switch (b) {
    case Branch::Log:
      return -1.0 / (r * r);
    case Branch::Middle:
      return -c3 / (4.0 * r * std::sqrt(r)) + bridge.d2(r);
    case Branch::Linear:
      return 0.0;
  }
  return 0.0;
}

namespace {
// The middle branch is used on [c8, c9) and the linear one from c9 on. Both
// agree at c9, and this way f(1) evaluates to exactly zero.
PiecewiseLyapunov::Branch branch_of(const PiecewiseLyapunov& f, double r) {
  if (r < f.c8) return PiecewiseLyapunov::Branch::Log;
  if (r < f.c9) return PiecewiseLyapunov::Branch::Middle;
  return PiecewiseLyapunov::Branch::Linear;
}
}  // namespace

double PiecewiseLyapunov::value(double r) const { return value_on(branch_of(*this, r), r); }
double PiecewiseLyapunov::d1(double r) const { return d1_on(branch_of(*this, r), r); }
double PiecewiseLyapunov::d2(double r) const { return d2_on(branch_of(*this, r), r); }

double eval_g(const PiecewiseLyapunov& f, double r) {
  if (!(r > 0.0)) throw DomainError("eval_g needs r > 0");
  const Complements om = correlation_complements(f.family, r);
  return f.d1(r) * (f.dimension - 1) * om.bn / r + f.d2(r) * om.bl;
}

double eval_gtilde(const PiecewiseLyapunov& f, double r) {
  if (!(r > 0.0)) throw DomainError("eval_gtilde needs r > 0");
  const Complements om = correlation_complements(f.family, r);
  return f.d1(r) * std::sqrt(2.0 * std::max(0.0, om.bl));
}

SubmartingaleReport submartingale_check(const PiecewiseLyapunov& f,
                                        const std::vector<double>& r0_grid, double horizon,
                                        double dt, int replicas, std::uint64_t master_seed) {
  SubmartingaleReport rep;
  if (replicas <= 0) return rep;
  const RadialCoefficients coeffs = radial_coefficients(f.family, f.dimension);
  rep.has_verdict = true;
  rep.passed = true;
  const std::size_t reps = static_cast<std::size_t>(replicas);
  for (std::size_t g = 0; g < r0_grid.size(); ++g) {
    const double r0 = r0_grid[g];
    const double f0 = f.value(r0);
    std::vector<double> inc(reps);
    parallel_for(reps, [&](std::size_t i) {
      RngStream rng(derive_seed(master_seed, g * reps + i));
      inc[i] = f.value(simulate_radial_endpoint(coeffs, r0, horizon, dt, rng)) - f0;
    });
    double mean = 0.0;
    for (double v : inc) mean += v;
    mean /= static_cast<double>(reps);
    double var = 0.0;
    for (double v : inc) var += (v - mean) * (v - mean);
    var = reps > 1 ? var / static_cast<double>(reps - 1) : 0.0;
    SubmartingaleEntry e;
    e.r0 = r0;
    e.mean_increment = mean;
    e.standard_error = std::sqrt(var / static_cast<double>(reps));
    e.passed = mean >= -2.0 * e.standard_error;
    rep.passed = rep.passed && e.passed;
    rep.entries.push_back(e);
  }
  return rep;
}

}  // namespace ibf
