#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ibf/covariance.hpp"
#include "ibf/rng.hpp"

namespace ibf {

inline constexpr double kRadialFloor = 1e-12;

struct RadialCoefficients {
  std::function<double(double)> drift;
  std::function<double(double)> diffusion;
};

// drift(r) = (d-1)(1-B_N(r))/r, diffusion(r) = sqrt(2(1-B_L(r))).
RadialCoefficients radial_coefficients(const CorrelationFamily& family, int d);

// Euler-Maruyama path of the separation process, including r0 at index 0.
std::vector<double> simulate_radial(const RadialCoefficients& coeffs, double r0,
                                    double horizon, double dt, RngStream& rng);

// Same scheme, returning only the terminal value.
double simulate_radial_endpoint(const RadialCoefficients& coeffs, double r0, double horizon,
                                double dt, RngStream& rng);

// C^2 correction on [c8, c9] whose second derivative is c10 at c8 and c11 at
// c9 and which has vanishing slope at both ends. h'' is the sum of two linear
// ramps, one decaying from c10 on [c8, c8 + w8] and one rising to c11 on
// [c9 - w9, c9].
struct BridgeH {
  double c8 = 0, c9 = 0, c10 = 0, c11 = 0;
  double delta_cap = 0;
  double eps_h = 0;
  double w8 = 0, w9 = 0;
  double c8_eps = 0, c9_eps = 0;

  double value(double r) const;
  double d1(double r) const;
  double d2(double r) const;
};

BridgeH build_bridge_h(double c8, double c9, double c10, double c11, double delta_cap);

struct PiecewiseLyapunov {
  CorrelationFamily family;
  int dimension = 2;
  double beta_l = 0, beta_n = 0;
  double eps = 0, r_eps = 0, delta = 0;
  double c1 = 0, c2 = 0, c3 = 0, c4 = 0, c5 = 0;
  double c8 = 0, c9 = 0, c10 = 0, c11 = 0;
  BridgeH bridge;

  double value(double r) const;
  double d1(double r) const;
  double d2(double r) const;

  // Branch formulas evaluated anywhere, for matching checks at c8 and c9.
  enum class Branch { Log, Middle, Linear };
  double value_on(Branch b, double r) const;
  double d1_on(Branch b, double r) const;
  double d2_on(Branch b, double r) const;

  // Lower bound for g promised by the construction: (beta_N(d-1)-beta_L)/8.
  double drift_floor() const { return (beta_n * (dimension - 1) - beta_l) / 8.0; }
  // Upper end of the verification grid, 10 * max(1, c9).
  double grid_upper() const;
};

// Geometric grid of `count` points on [lo, hi].
std::vector<double> geometric_grid(double lo, double hi, int count);

PiecewiseLyapunov build_lyapunov_f(const CorrelationFamily& family, int d);

double eval_g(const PiecewiseLyapunov& f, double r);
double eval_gtilde(const PiecewiseLyapunov& f, double r);

struct SubmartingaleEntry {
  double r0 = 0;
  double mean_increment = 0;
  double standard_error = 0;
  bool passed = false;
};

struct SubmartingaleReport {
  std::vector<SubmartingaleEntry> entries;
  bool has_verdict = false;
  bool passed = false;
};

SubmartingaleReport submartingale_check(const PiecewiseLyapunov& f,
                                        const std::vector<double>& r0_grid, double horizon,
                                        double dt, int replicas, std::uint64_t master_seed);

}  // namespace ibf
