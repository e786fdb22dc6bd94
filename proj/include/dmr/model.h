#pragma once

// Parameter containers for the double mean-reverting system
//
//   dS = S sqrt(X) dw
//   dX = (a1 Y - b1 X) dt + sigma1 X^alpha1 dW
//   dY = (a2 - b2 Y) dt + sigma2 Y^alpha2 dB
//
// and the constant correlation structure of (w, W, B).

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace dmr {

using Matrix3 = std::array<std::array<double, 3>, 3>;

/// Channel order used by every 3-vector of Gaussian draws.
enum Channel : std::size_t { kAsset = 0, kExternal = 1, kInternal = 2 };

struct InternalParams {
  double a2 = 1.0;
  double b2 = 1.0;
  double sigma2 = 0.5;
  double alpha2 = 0.5;
  double y0 = 1.0;

  double long_run_mean() const { return a2 / b2; }
};

struct ExternalParams {
  double a1 = 1.0;
  double b1 = 2.0;
  double sigma1 = 0.5;
  double alpha1 = 0.5;
  double x0 = 1.0;
};

struct CorrelationSpec {
  Matrix3 matrix{{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};

  static CorrelationSpec identity() { return {}; }
  /// Builds the symmetric matrix from the three pairwise correlations.
  static CorrelationSpec from_pairs(double rho_wW, double rho_wB, double rho_WB);
};

struct ModelParams {
  InternalParams internal;
  ExternalParams external;
  double s0 = 1.0;
  CorrelationSpec corr;
};

struct ReflectionSpec {
  double m = 0.1;
};

struct GridSpec {
  double t_end = 1.0;
  std::size_t n_steps = 1000;

  double dt() const { return t_end / static_cast<double>(n_steps); }
  double time(std::size_t i) const { return t_end * static_cast<double>(i) / static_cast<double>(n_steps); }
  std::size_t n_points() const { return n_steps + 1; }
  /// Grid with the same step size covering [0, t]; t is rounded to the nearest step.
  static GridSpec with_step(double t_end, double dt);
};

struct Violation {
  std::string field;
  std::string constraint;  // e.g. "b2 > 0"
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool mentions(const std::string& constraint) const;
  std::string to_string() const;
  void merge(const ValidationReport& other);
};

/// Model constraints: a >= 0, b > 0, sigma > 0, alpha in [1/2, 1], positive starts.
ValidationReport validate(const InternalParams& p);
ValidationReport validate(const ExternalParams& p);
ValidationReport validate(const CorrelationSpec& c);
ValidationReport validate(const ModelParams& p);
ValidationReport validate(const ReflectionSpec& r, const InternalParams& p);
ValidationReport validate(const GridSpec& g);

/// Looser constraints accepted by the simulators: sigma = 0 is admitted so that
/// drift-only runs can be compared against ODE solutions.
ValidationReport validate_for_simulation(const InternalParams& p);
ValidationReport validate_for_simulation(const ExternalParams& p);
ValidationReport validate_for_simulation(const ModelParams& p);

/// Throws Error(InvalidParams) listing every violation.
void require(const ValidationReport& report, const std::string& context);

inline constexpr double kPsdTolerance = 1e-12;

double min_eigenvalue(const Matrix3& m);

/// Lower-triangular L with L L^T = corr. Rank-deficient input yields zeroed
/// trailing columns. Throws Error(NotPSD).
Matrix3 cholesky_factor(const CorrelationSpec& corr);

std::array<double, 3> multiply(const Matrix3& lower, const std::array<double, 3>& v);

}  // namespace dmr
