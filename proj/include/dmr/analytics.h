#pragma once

// Closed-form and quadrature-based properties of the internal process
// dY = (a2 - b2 Y) dt + sigma2 Y^alpha2 dB, plus the generator of (X, Y).

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dmr/model.h"

namespace dmr {

// ---------------------------------------------------------------------------
// Moments

/// E Y_t; the same expression holds for every alpha2 in [1/2, 1].
double mean_internal(const InternalParams& p, double t);

/// Width of the window around sigma2^2 = b2 and sigma2^2 = 2 b2 in which the
/// limiting formula replaces the generic one.
inline constexpr double kDegenerateWindow = 1e-9;

/// E Y_t^2 for alpha2 = 1. Throws Error(WrongRegime) otherwise.
double second_moment_linear(const InternalParams& p, double t);

/// E Y_t^2 for alpha2 = 1/2. Throws Error(WrongRegime) otherwise.
double second_moment_cir(const InternalParams& p, double t);

/// Closed-form E Y_t^2 where one exists (alpha2 in {1/2, 1}); nullopt otherwise.
std::optional<double> second_moment_closed_form(const InternalParams& p, double t);

/// Long-run variance of the CIR case, a2 sigma2^2 / (2 b2^2).
double cir_limit_variance(const InternalParams& p);

struct MomentCurve {
  std::vector<double> times;
  std::vector<double> mean;
  std::optional<std::vector<double>> second_moment;
};

MomentCurve moment_curve(const InternalParams& p, std::span<const double> times);

// ---------------------------------------------------------------------------
// Stationary law

enum class DensityRegime { InverseGamma, Ckls, Gamma };

std::string_view to_string(DensityRegime r);

class StationaryDensity {
 public:
  DensityRegime regime() const { return regime_; }
  const InternalParams& params() const { return params_; }

  /// G for the CKLS regime; the closed-form constant otherwise.
  double normalizer() const { return std::exp(log_normalizer_); }
  double log_normalizer() const { return log_normalizer_; }

  double log_pdf(double x) const;
  double pdf(double x) const;
  double operator()(double x) const { return pdf(x); }

  /// CDF by quadrature of the density.
  double cdf(double x) const;
  /// CDF at ascending points, accumulated interval by interval.
  std::vector<double> cdf_sorted(std::span<const double> ascending) const;

  /// Integral of the density over (0, inf); 1 up to quadrature error.
  double total_mass() const;
  double mean_by_quadrature() const;
  /// E[Y | Y >= level], the long-run mean of the process reflected at `level`.
  double restricted_mean(double level) const;

  /// Shape/rate (Gamma) or shape/scale (InverseGamma); NaN for CKLS.
  double shape() const { return shape_; }
  double scale_or_rate() const { return scale_or_rate_; }

 private:
  friend StationaryDensity stationary_density(const InternalParams& p);
  double log_kernel(double x) const;

  InternalParams params_;
  DensityRegime regime_ = DensityRegime::Gamma;
  double log_normalizer_ = 0.0;
  double shape_ = 0.0;
  double scale_or_rate_ = 0.0;
};

/// Throws Error(NonErgodic) for a2 = 0 and Error(QuadratureFailure) when the
/// CKLS normalizer cannot be resolved to 1e-8 relative.
StationaryDensity stationary_density(const InternalParams& p);

/// CKLS normalizer G = 1 / int_0^inf y^{-2 alpha2} exp{...} dy.
double ckls_normalizer(const InternalParams& p);

// ---------------------------------------------------------------------------
// Scale function and boundary behaviour

/// s'(y) = exp{-int_c^y 2 b(z) / sigma^2(z) dz} with the inner integral in closed form.
double scale_density(const InternalParams& p, double c, double y);

/// s(x) = int_c^x s'(y) dy. Throws Error(QuadratureFailure) if 1e-8 relative
/// accuracy is not reached.
double scale_function(const InternalParams& p, double c, double x);

enum class Verdict { RecurrentOscillating, ConvergesToZeroAS, HitsZeroReflecting };

std::string_view to_string(Verdict v);

struct BoundaryClassification {
  Verdict verdict = Verdict::RecurrentOscillating;
  bool strictly_positive = false;
  /// Numeric limits of s at 0+ and +inf (+-inf when divergence is detected).
  double s_at_zero = 0.0;
  double s_at_infinity = 0.0;
  bool numeric_agrees = false;
  /// alpha2 = 1 lies outside the near-origin theorems for the coupled system.
  bool covered_by_near_origin_theorems = true;
  std::string rule;
};

struct ScaleLimit {
  double value = 0.0;
  bool divergent = false;
};

/// Limit of s along x_n = c 2^{-n} (toward_zero) or c 2^{n}; divergence is
/// declared on overflow or when successive increments stop shrinking.
ScaleLimit scale_limit(const InternalParams& p, double c, bool toward_zero, int levels = 40);

BoundaryClassification classify_boundary(const InternalParams& p);

// ---------------------------------------------------------------------------
// Generator of (X, Y)

/// Value, gradient and Hessian diagonal of a test function at a point.
struct Jet {
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  double dxx = 0.0;
  double dyy = 0.0;
};

using TestFunction = std::function<Jet(double x, double y)>;

double generator_apply(const ModelParams& mp, const TestFunction& f, double x, double y);

/// V(x, y) = y^2 + k^2 x^2.
Jet lyapunov_jet(double k, double x, double y);

struct ScanReport {
  double k = 0.0;
  double radius = 0.0;
  std::size_t points = 0;
  double max_value = 0.0;
  double argmax_x = 0.0;
  double argmax_y = 0.0;
  bool all_nonpositive = false;
  /// -2 b2 y^2 - 2 b1 k^2 x^2 + 2 a1 k^2 x y is negative definite on the quadrant.
  bool quadratic_part_negative = false;
  bool regime_covered = true;  // alpha1, alpha2 < 1
};

/// Evaluates A V on {x, y >= 0, radius <= x + y <= 10 radius}.
ScanReport lyapunov_negativity_scan(const ModelParams& mp, double k, double radius, std::size_t grid_n);

struct RadiusSearch {
  std::optional<double> r0;
  std::vector<ScanReport> scans;
};

/// Doubles the radius from `start` until the scan is all non-positive.
RadiusSearch find_lyapunov_radius(const ModelParams& mp, double k, double start, std::size_t grid_n,
                                  int max_doublings = 40);

// ---------------------------------------------------------------------------
// Linear case pathwise solution

/// Y_t = exp{R_t}(y0 + a2 int_0^t exp{-R_s} ds), R_t = -b2 t + sigma2 B_t - sigma2^2 t / 2,
/// with the time integral taken by the trapezoid rule on the grid. `brownian`
/// holds B at the n_steps + 1 grid points. Throws Error(WrongRegime) unless alpha2 = 1.
std::vector<double> linear_explicit_solution(const InternalParams& p, const GridSpec& grid,
                                             std::span<const double> brownian);

}  // namespace dmr
