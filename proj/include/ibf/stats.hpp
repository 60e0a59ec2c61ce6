#pragma once

#include <vector>

namespace ibf {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Kolmogorov tail Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

// Two-sided two-sample test; asymptotic p-value with the Stephens small-sample
// correction lambda = (sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) D.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct Summary {
  int count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double standard_error = 0.0;
  double min = 0.0;
  double max = 0.0;
};

// Values are sorted before accumulation, so the result does not depend on
// input order.
Summary summarize(std::vector<double> values);

double median(std::vector<double> values);

}  // namespace ibf
