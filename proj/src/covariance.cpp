#include "ibf/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ibf {

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::SolenoidalGaussian:
      return "solenoidal-gaussian";
    case FamilyKind::PotentialGaussian:
      return "potential-gaussian";
    case FamilyKind::Mixture:
      return "mixture";
  }
  return "unknown";
}

FamilyKind family_kind_from_string(const std::string& name) {
  if (name == "solenoidal-gaussian" || name == "solenoidal")
    return FamilyKind::SolenoidalGaussian;
  if (name == "potential-gaussian" || name == "potential")
    return FamilyKind::PotentialGaussian;
  if (name == "mixture") return FamilyKind::Mixture;
  throw ParameterError("unknown family kind '" + name + "'");
}

void CorrelationFamily::validate() const {
  if (!(length_scale > 0.0) || !std::isfinite(length_scale))
    throw ParameterError("length_scale must be positive and finite");
  if (dimension < 2) throw ParameterError("dimension must be >= 2");
  if (kind == FamilyKind::Mixture && !(mix_weight >= 0.0 && mix_weight <= 1.0))
    throw ParameterError("mix_weight must lie in [0, 1]");
}

CorrelationFamily solenoidal(double length_scale, int dimension) {
  return {FamilyKind::SolenoidalGaussian, length_scale, 0.5, dimension};
}

CorrelationFamily potential(double length_scale, int dimension) {
  return {FamilyKind::PotentialGaussian, length_scale, 0.5, dimension};
}

CorrelationFamily mixture(double weight, double length_scale, int dimension) {
  return {FamilyKind::Mixture, length_scale, weight, dimension};
}

namespace {

struct Base {
  Correlations c;
  Complements one_minus;
};

// Both Gaussian families have one correlation equal to E = exp(-r^2/2l^2) and
// the other equal to p(r) E with p = 1 - k r^2.
Base gaussian_pair(double r, double ell, double k, bool polynomial_on_normal) {
  const double l2 = ell * ell;
  const double s = r * r / (2.0 * l2);
  const double e = std::exp(-s);
  const double de = -(r / l2) * e;
  const double d2e = (r * r / (l2 * l2) - 1.0 / l2) * e;
  const double one_minus_e = -std::expm1(-s);

  const double p = 1.0 - k * r * r;
  const double dp = -2.0 * k * r;
  const double d2p = -2.0 * k;
  const double pe = p * e;
  const double dpe = dp * e + p * de;
  const double d2pe = d2p * e + 2.0 * dp * de + p * d2e;
  const double one_minus_pe = one_minus_e + k * r * r * e;

  Base out;
  if (polynomial_on_normal) {
    out.c = {e, de, d2e, pe, dpe, d2pe};
    out.one_minus = {one_minus_e, one_minus_pe};
  } else {
    out.c = {pe, dpe, d2pe, e, de, d2e};
    out.one_minus = {one_minus_pe, one_minus_e};
  }
  return out;
}

Base solenoidal_base(double r, double ell, int d) {
  return gaussian_pair(r, ell, 1.0 / ((d - 1) * ell * ell), true);
}

Base potential_base(double r, double ell) {
  return gaussian_pair(r, ell, 1.0 / (ell * ell), false);
}

Base evaluate(const CorrelationFamily& f, double r) {
  if (!(r >= 0.0)) throw DomainError("correlation functions need r >= 0");
  switch (f.kind) {
    case FamilyKind::SolenoidalGaussian:
      return solenoidal_base(r, f.length_scale, f.dimension);
    case FamilyKind::PotentialGaussian:
      return potential_base(r, f.length_scale);
    case FamilyKind::Mixture: {
      const Base s = solenoidal_base(r, f.length_scale, f.dimension);
      const Base p = potential_base(r, f.length_scale);
      const double a = f.mix_weight;
      const double b = 1.0 - a;
      Base m;
      m.c = {a * s.c.bl + b * p.c.bl,     a * s.c.dbl + b * p.c.dbl,
             a * s.c.d2bl + b * p.c.d2bl, a * s.c.bn + b * p.c.bn,
             a * s.c.dbn + b * p.c.dbn,   a * s.c.d2bn + b * p.c.d2bn};
      m.one_minus = {a * s.one_minus.bl + b * p.one_minus.bl,
                     a * s.one_minus.bn + b * p.one_minus.bn};
      return m;
    }
  }
  return {};
}

}  // namespace

Correlations eval_correlations(const CorrelationFamily& family, double r) {
  return evaluate(family, r).c;
}

Complements correlation_complements(const CorrelationFamily& family, double r) {
  return evaluate(family, r).one_minus;
}

double beta_l(const CorrelationFamily& family) {
  return -eval_correlations(family, 0.0).d2bl;
}

double beta_n(const CorrelationFamily& family) {
  return -eval_correlations(family, 0.0).d2bn;
}

Matrix eval_tensor(const CorrelationFamily& family, const Vector& x) {
  const int d = static_cast<int>(x.size());
  const double r = x.norm();
  if (r == 0.0) return Matrix::Identity(d, d);
  const Correlations c = eval_correlations(family, r);
  Matrix b = (c.bl - c.bn) * (x * x.transpose()) / (r * r);
  b.diagonal().array() += c.bn;
  return b;
}

void eval_tensor_2d(const CorrelationFamily& family, double x, double y,
                    double& b11, double& b12, double& b22) {
  const double r2 = x * x + y * y;
  if (r2 == 0.0) {
    b11 = b22 = 1.0;
    b12 = 0.0;
    return;
  }
  const Correlations c = eval_correlations(family, std::sqrt(r2));
  const double w = (c.bl - c.bn) / r2;
  b11 = w * x * x + c.bn;
  b12 = w * x * y;
  b22 = w * y * y + c.bn;
}

Matrix two_point_matrix(const CorrelationFamily& family, const Vector& x,
                        const Vector& y) {
  const int d = static_cast<int>(x.size());
  Matrix m = Matrix::Identity(2 * d, 2 * d);
  const Matrix b = eval_tensor(family, x - y);
  m.block(0, d, d, d) = b;
  m.block(d, 0, d, d) = b.transpose();
  return m;
}

Matrix block_covariance(const CorrelationFamily& family, const Points& points) {
  const int d = static_cast<int>(points.rows());
  const int n = static_cast<int>(points.cols());
  Matrix sigma(n * d, n * d);
  if (d == 2) {
    for (int l = 0; l < n; ++l) {
      sigma(2 * l, 2 * l) = sigma(2 * l + 1, 2 * l + 1) = 1.0;
      sigma(2 * l, 2 * l + 1) = sigma(2 * l + 1, 2 * l) = 0.0;
      for (int m = l + 1; m < n; ++m) {
        double b11, b12, b22;
        eval_tensor_2d(family, points(0, l) - points(0, m),
                       points(1, l) - points(1, m), b11, b12, b22);
        sigma(2 * l, 2 * m) = sigma(2 * m, 2 * l) = b11;
        sigma(2 * l, 2 * m + 1) = sigma(2 * m + 1, 2 * l) = b12;
        sigma(2 * l + 1, 2 * m) = sigma(2 * m, 2 * l + 1) = b12;
        sigma(2 * l + 1, 2 * m + 1) = sigma(2 * m + 1, 2 * l + 1) = b22;
      }
    }
    return sigma;
  }
  for (int l = 0; l < n; ++l) {
    sigma.block(l * d, l * d, d, d).setIdentity();
    for (int m = l + 1; m < n; ++m) {
      const Matrix b = eval_tensor(family, points.col(l) - points.col(m));
      sigma.block(l * d, m * d, d, d) = b;
      sigma.block(m * d, l * d, d, d) = b;
    }
  }
  return sigma;
}

SpectrumReport identity_spectrum(int dimension) {
  SpectrumReport rep;
  rep.point = Vector::Zero(dimension);
  rep.eigenvalues_b = {{1.0, dimension}};
  rep.eigenvalues_bbar = {{2.0, dimension}, {0.0, dimension}};
  return rep;
}

SpectrumReport spectrum_report(const CorrelationFamily& family, const Vector& z) {
  const int d = static_cast<int>(z.size());
  const double r = z.norm();
  if (r == 0.0) throw DegeneratePointError(identity_spectrum(d));
  const Correlations c = eval_correlations(family, r);
  SpectrumReport rep;
  rep.point = z;
  rep.eigenvalues_b = {{c.bl, 1}, {c.bn, d - 1}};
  rep.eigenvalues_bbar = {
      {1.0 + c.bl, 1}, {1.0 - c.bl, 1}, {1.0 + c.bn, d - 1}, {1.0 - c.bn, d - 1}};
  return rep;
}

LyapunovSpectrum lyapunov_exponents(const CorrelationFamily& family) {
  LyapunovSpectrum out;
  out.beta_l = beta_l(family);
  out.beta_n = beta_n(family);
  const int d = family.dimension;
  for (int i = 1; i <= d; ++i)
    out.mu.push_back(0.5 * ((d - i) * out.beta_n - i * out.beta_l));
  out.top_positive = out.mu.front() > 0.0;
  return out;
}

double taylor_remainder(const CorrelationFamily& family, double r) {
  const Complements om = correlation_complements(family, r);
  const double half_r2 = 0.5 * r * r;
  const double rl = std::abs(om.bl - beta_l(family) * half_r2);
  const double rn = std::abs(om.bn - beta_n(family) * half_r2);
  return std::max(rl, rn) / (r * r * r);
}

// Scans the grid k * 5l / 10^4 from below and returns the last grid point
// before the first violation. A plain bisection would assume the remainder is
// monotone in r, which it need not be.
double taylor_radius(const CorrelationFamily& family, double eps) {
  if (!(eps > 0.0)) throw DomainError("taylor_radius needs eps > 0");
  const double upper = 5.0 * family.length_scale;
  const double step = upper / kTaylorGridPoints;
  int k = 1;
  for (; k <= kTaylorGridPoints; ++k) {
    if (!(taylor_remainder(family, k * step) < eps)) break;
  }
  if (k > kTaylorGridPoints) return upper;
  if (k > 1) return (k - 1) * step;
  // Violation already at the first grid point: halve until it passes. The
  // remainder vanishes at 0, so this terminates.
  double r = step;
  while (!(taylor_remainder(family, r) < eps) && r > 1e-300) r *= 0.5;
  return r;
}

FamilyValidation validate_family(const CorrelationFamily& family,
                                 const std::vector<Points>& point_sets,
                                 double tol) {
  FamilyValidation rep;
  for (std::size_t i = 0; i < point_sets.size(); ++i) {
    const Points& pts = point_sets[i];
    if (pts.cols() > 64)
      throw PreconditionError("validate_family: point sets hold at most 64 points");
    const Matrix sigma = block_covariance(family, pts);
    Eigen::SelfAdjointEigenSolver<Matrix> es(sigma, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    rep.min_eigenvalues.push_back(lo);
    if (lo < -tol && rep.passed) {
      rep.passed = false;
      rep.offending_set = static_cast<int>(i);
      std::ostringstream msg;
      msg << "point set " << i << " has minimum eigenvalue " << lo;
      rep.message = msg.str();
    }
  }
  return rep;
}

}  // namespace ibf
