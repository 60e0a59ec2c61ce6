#pragma once

#include <cstddef>

namespace ibf::detail {

// u(p_i) += sum_j c_j cos(k_j . p_i) + s_j sin(k_j . p_i) for n points given
// as separate coordinate arrays and m modes.
void accumulate_modes(std::size_t n, std::size_t m, const double* x, const double* y,
                      const double* kx, const double* ky, const double* cx,
                      const double* cy, const double* sx, const double* sy, double* ux,
                      double* uy);

// Branch-free sine and cosine, accurate to a few ulp for |x| up to ~1e6.
void sincos_fast(double x, double& s, double& c);

}  // namespace ibf::detail
