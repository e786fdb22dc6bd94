#pragma once

#include <cstddef>
#include <functional>

namespace dmr::quad {

struct Options {
  double rel_tol = 1e-11;
  double abs_tol = 0.0;
  std::size_t max_intervals = 4000;
};

struct Result {
  double value = 0.0;
  double abs_error = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;

  Result& operator+=(const Result& other);
};

using Integrand = std::function<double(double)>;

/// Globally adaptive 7/15-point Gauss-Kronrod on [a, b]. Intervals with the
/// largest error estimate are bisected until the total estimate meets the
/// tolerance.
Result integrate(const Integrand& f, double a, double b, const Options& opts = {});

/// Integral over u in [0, inf) by adaptive panels [0,1], [1,2], [2,4], ...
/// stopping once a panel beyond u = min_extent contributes negligibly.
/// Intended for integrands that decay at least exponentially in u.
Result integrate_semi_infinite(const Integrand& g, const Options& opts = {}, double min_extent = 64.0,
                               double max_extent = 512.0);

/// Integral over (0, inf), split at x = 1; (0,1) is mapped by x = e^{-u} and
/// (1, inf) by x = e^{u}.
Result integrate_positive_axis(const Integrand& f, const Options& opts = {});

/// Integral over (0, x] through x' = x e^{-u}.
Result integrate_from_zero(const Integrand& f, double x, const Options& opts = {});

/// Integral over [x, inf) through x' = x e^{u}.
Result integrate_to_infinity(const Integrand& f, double x, const Options& opts = {});

}  // namespace dmr::quad
