#include "spectral_kernel.hpp"

#include <cmath>
#include <cstdint>

namespace ibf::detail {

namespace {

// Cody-Waite reduction by pi/2, then minimax polynomials on [-pi/4, pi/4].
// Written without branches so the point loop vectorizes.
inline void sincos_inline(double x, double& s, double& c) {
  const double q = std::nearbyint(x * 0.63661977236758134308);
  const double r = (x - q * 1.57079632679489655800e+00) - q * 6.12323399573676603587e-17;
  const double z = r * r;
  double sp = -7.64712219118158833288e-13;
  sp = sp * z + 1.60590430605664501629e-10;
  sp = sp * z - 2.50521083763502045810e-08;
  sp = sp * z + 2.75573192239198747630e-06;
  sp = sp * z - 1.98412698412696162806e-04;
  sp = sp * z + 8.33333333333332974823e-03;
  sp = sp * z - 1.66666666666666657415e-01;
  const double sn = r + r * z * sp;
  double cp = 4.77947733238738529744e-14;
  cp = cp * z - 1.14707455977297247139e-11;
  cp = cp * z + 2.08767569878680989792e-09;
  cp = cp * z - 2.75573192239858906526e-07;
  cp = cp * z + 2.48015872894767294178e-05;
  cp = cp * z - 1.38888888888873892484e-03;
  cp = cp * z + 4.16666666666666019037e-02;
  const double cs = 1.0 - 0.5 * z + z * z * cp;
  const std::int64_t k = static_cast<std::int64_t>(q);
  const bool swap = k & 1;
  const double s0 = swap ? cs : sn;
  const double c0 = swap ? sn : cs;
  s = (k & 2) ? -s0 : s0;
  c = ((k + 1) & 2) ? -c0 : c0;
}

}  // namespace

void sincos_fast(double x, double& s, double& c) { sincos_inline(x, s, c); }

void accumulate_modes(std::size_t n, std::size_t m, const double* __restrict x,
                      const double* __restrict y, const double* __restrict kx,
                      const double* __restrict ky, const double* __restrict cx,
                      const double* __restrict cy, const double* __restrict sx,
                      const double* __restrict sy, double* __restrict ux,
                      double* __restrict uy) {
  for (std::size_t j = 0; j < m; ++j) {
    const double a = kx[j], b = ky[j];
    const double c1 = cx[j], c2 = cy[j], s1 = sx[j], s2 = sy[j];
    for (std::size_t i = 0; i < n; ++i) {
      double sp, cp;
      sincos_inline(a * x[i] + b * y[i], sp, cp);
      ux[i] += c1 * cp + s1 * sp;
      uy[i] += c2 * cp + s2 * sp;
    }
  }
}

}  // namespace ibf::detail
