#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "ibf/errors.hpp"

namespace ibf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// Point sets are stored column-wise: a d x n matrix holds n points in R^d.
using Points = Eigen::MatrixXd;

enum class FamilyKind { SolenoidalGaussian, PotentialGaussian, Mixture };

std::string to_string(FamilyKind kind);
FamilyKind family_kind_from_string(const std::string& name);

struct CorrelationFamily {
  FamilyKind kind = FamilyKind::SolenoidalGaussian;
  double length_scale = 1.0;
  // Weight of the solenoidal part; only read for mixtures.
  double mix_weight = 0.5;
  int dimension = 2;

  // Throws ParameterError on nonsense values.
  void validate() const;
};

CorrelationFamily solenoidal(double length_scale = 1.0, int dimension = 2);
CorrelationFamily potential(double length_scale = 1.0, int dimension = 2);
CorrelationFamily mixture(double weight, double length_scale = 1.0,
                          int dimension = 2);

struct Correlations {
  double bl, dbl, d2bl;
  double bn, dbn, d2bn;
};

Correlations eval_correlations(const CorrelationFamily& family, double r);

// 1 - B_L(r) and 1 - B_N(r) without the cancellation of the naive form.
struct Complements {
  double bl;
  double bn;
};
Complements correlation_complements(const CorrelationFamily& family, double r);

double beta_l(const CorrelationFamily& family);
double beta_n(const CorrelationFamily& family);

Matrix eval_tensor(const CorrelationFamily& family, const Vector& x);

// 2-D fast path: writes b11, b12, b22 of b(x).
void eval_tensor_2d(const CorrelationFamily& family, double x, double y,
                    double& b11, double& b12, double& b22);

Matrix two_point_matrix(const CorrelationFamily& family, const Vector& x,
                        const Vector& y);

// nd x nd matrix with blocks b(x_l - x_m).
Matrix block_covariance(const CorrelationFamily& family, const Points& points);

using EigenList = std::vector<std::pair<double, int>>;

struct SpectrumReport {
  Vector point;
  EigenList eigenvalues_b;
  EigenList eigenvalues_bbar;
};

SpectrumReport identity_spectrum(int dimension);

class DegeneratePointError : public DomainError {
 public:
  explicit DegeneratePointError(SpectrumReport identity)
      : DomainError("spectrum_report: z = 0 is degenerate"),
        report(std::move(identity)) {}
  SpectrumReport report;
};

SpectrumReport spectrum_report(const CorrelationFamily& family, const Vector& z);

struct LyapunovSpectrum {
  std::vector<double> mu;
  double beta_l = 0.0;
  double beta_n = 0.0;
  bool top_positive = false;
};

LyapunovSpectrum lyapunov_exponents(const CorrelationFamily& family);

// max(|1-B_L-beta_L r^2/2|, |1-B_N-beta_N r^2/2|) / r^3
double taylor_remainder(const CorrelationFamily& family, double r);

inline constexpr int kTaylorGridPoints = 10000;

double taylor_radius(const CorrelationFamily& family, double eps);

struct FamilyValidation {
  bool passed = true;
  std::vector<double> min_eigenvalues;
  int offending_set = -1;
  std::string message;
};

FamilyValidation validate_family(const CorrelationFamily& family,
                                 const std::vector<Points>& point_sets,
                                 double tol);

}  // namespace ibf
