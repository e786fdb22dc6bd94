#include "dmr/analytics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dmr/error.h"
#include "dmr/quadrature.h"

namespace dmr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_linear(const InternalParams& p) { return p.alpha2 == 1.0; }
bool is_cir(const InternalParams& p) { return p.alpha2 == 0.5; }

// int_c^y z^e dz
double power_integral(double c, double y, double e) {
  if (e == -1.0) return std::log(y / c);
  return (std::pow(y, e + 1.0) - std::pow(c, e + 1.0)) / (e + 1.0);
}

}  // namespace

// ---------------------------------------------------------------------------
// Moments

double mean_internal(const InternalParams& p, double t) {
  const double level = p.a2 / p.b2;
  return (p.y0 - level) * std::exp(-p.b2 * t) + level;
}

double second_moment_linear(const InternalParams& p, double t) {
  if (!is_linear(p)) throw Error(ErrorCode::WrongRegime, "second_moment_linear requires alpha2 = 1");
  const double a = p.a2, b = p.b2, y0 = p.y0;
  const double s2 = p.sigma2 * p.sigma2;
  const double shift = y0 - a / b;
  if (std::abs(s2 - b) < kDegenerateWindow) {
    return y0 * y0 * std::exp(-b * t) + 2.0 * a * shift * t * std::exp(-b * t) +
           2.0 * a * a / (b * b) * (1.0 - std::exp(-b * t));
  }
  if (std::abs(s2 - 2.0 * b) < kDegenerateWindow) {
    return y0 * y0 + 2.0 * a / b * shift * (1.0 - std::exp(-b * t)) + 2.0 * a * a / b * t;
  }
  const double c = 2.0 * b - s2;
  // -expm1 keeps 1 - e^{-kt} accurate for small k t.
  return y0 * y0 * std::exp(-c * t) + 2.0 * a / (b - s2) * shift * std::exp(-b * t) * -std::expm1(-(b - s2) * t) +
         2.0 * a * a / (b * c) * -std::expm1(-c * t);
}

double second_moment_cir(const InternalParams& p, double t) {
  if (!is_cir(p)) throw Error(ErrorCode::WrongRegime, "second_moment_cir requires alpha2 = 1/2");
  const double a = p.a2, b = p.b2, y0 = p.y0;
  const double s2 = p.sigma2 * p.sigma2;
  const double e1 = std::exp(-b * t);
  const double decay = -std::expm1(-b * t);
  return y0 * y0 * e1 * e1 + y0 * (s2 + 2.0 * a) / b * (e1 - e1 * e1) +
         a * (s2 + 2.0 * a) / (2.0 * b * b) * decay * decay;
}

std::optional<double> second_moment_closed_form(const InternalParams& p, double t) {
  if (is_linear(p)) return second_moment_linear(p, t);
  if (is_cir(p)) return second_moment_cir(p, t);
  return std::nullopt;
}

double cir_limit_variance(const InternalParams& p) {
  return p.a2 * p.sigma2 * p.sigma2 / (2.0 * p.b2 * p.b2);
}

MomentCurve moment_curve(const InternalParams& p, std::span<const double> times) {
  MomentCurve curve;
  curve.times.assign(times.begin(), times.end());
  curve.mean.reserve(times.size());
  for (double t : times) curve.mean.push_back(mean_internal(p, t));
  if (is_linear(p) || is_cir(p)) {
    std::vector<double> second;
    second.reserve(times.size());
    for (double t : times) second.push_back(*second_moment_closed_form(p, t));
    curve.second_moment = std::move(second);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Stationary law

std::string_view to_string(DensityRegime r) {
  switch (r) {
    case DensityRegime::InverseGamma: return "InverseGamma";
    case DensityRegime::Ckls: return "CKLS";
    case DensityRegime::Gamma: return "Gamma";
  }
  return "?";
}

double StationaryDensity::log_kernel(double x) const {
  const auto& p = params_;
  const double s2 = p.sigma2 * p.sigma2;
  switch (regime_) {
    case DensityRegime::Gamma:
      return (shape_ - 1.0) * std::log(x) - scale_or_rate_ * x;
    case DensityRegime::InverseGamma:
      return -(shape_ + 1.0) * std::log(x) - scale_or_rate_ / x;
    case DensityRegime::Ckls: {
      const double e1 = 1.0 - 2.0 * p.alpha2;
      const double e2 = 2.0 - 2.0 * p.alpha2;
      return -2.0 * p.alpha2 * std::log(x) +
             2.0 / s2 * (p.a2 * std::pow(x, e1) / e1 - p.b2 * std::pow(x, e2) / e2);
    }
  }
  return 0.0;
}

double StationaryDensity::log_pdf(double x) const {
  if (!(x > 0.0)) return -kInf;
  return log_normalizer_ + log_kernel(x);
}

double StationaryDensity::pdf(double x) const {
  if (!(x > 0.0) || !std::isfinite(x)) return 0.0;
  return std::exp(log_pdf(x));
}

double StationaryDensity::total_mass() const {
  return quad::integrate_positive_axis([this](double x) { return pdf(x); }).value;
}

double StationaryDensity::cdf(double x) const {
  if (!(x > 0.0)) return 0.0;
  if (!std::isfinite(x)) return 1.0;
  const auto density = [this](double v) { return pdf(v); };
  // Integrate over the side that holds less mass.
  if (x <= params_.a2 / params_.b2) return std::clamp(quad::integrate_from_zero(density, x).value, 0.0, 1.0);
  return std::clamp(1.0 - quad::integrate_to_infinity(density, x).value, 0.0, 1.0);
}

std::vector<double> StationaryDensity::cdf_sorted(std::span<const double> ascending) const {
  std::vector<double> out;
  out.reserve(ascending.size());
  if (ascending.empty()) return out;
  const auto density = [this](double v) { return pdf(v); };
  quad::Options opts;
  opts.rel_tol = 1e-10;
  opts.abs_tol = 1e-14;
  double acc = cdf(ascending.front());
  double prev = ascending.front();
  for (double x : ascending) {
    if (x > prev) acc += quad::integrate(density, std::max(prev, 0.0), x, opts).value;
    prev = std::max(prev, x);
    out.push_back(std::clamp(acc, 0.0, 1.0));
  }
  return out;
}

double StationaryDensity::mean_by_quadrature() const {
  return quad::integrate_positive_axis([this](double x) { return x * pdf(x); }).value;
}

double StationaryDensity::restricted_mean(double level) const {
  const auto mass = quad::integrate_to_infinity([this](double x) { return pdf(x); }, level);
  const auto first = quad::integrate_to_infinity([this](double x) { return x * pdf(x); }, level);
  return first.value / mass.value;
}

namespace {

// Mode of the CKLS kernel: root of (2/sigma^2)(a - b x) = 2 alpha x^{2 alpha - 1} on (0, a/b).
double ckls_kernel_mode(const InternalParams& p) {
  const double s2 = p.sigma2 * p.sigma2;
  const auto g = [&](double x) { return 2.0 / s2 * (p.a2 - p.b2 * x) - 2.0 * p.alpha2 * std::pow(x, 2.0 * p.alpha2 - 1.0); };
  double lo = 0.0, hi = p.a2 / p.b2;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// log of int_0^inf kernel, computed with the kernel rescaled by its maximum.
double ckls_log_integral(const InternalParams& p) {
  const double s2 = p.sigma2 * p.sigma2;
  const double e1 = 1.0 - 2.0 * p.alpha2;
  const double e2 = 2.0 - 2.0 * p.alpha2;
  const auto log_kernel = [&](double x) {
    return -2.0 * p.alpha2 * std::log(x) + 2.0 / s2 * (p.a2 * std::pow(x, e1) / e1 - p.b2 * std::pow(x, e2) / e2);
  };
  const double peak = log_kernel(ckls_kernel_mode(p));
  quad::Options opts;
  opts.rel_tol = 1e-12;
  const auto r = quad::integrate_positive_axis([&](double x) { return std::exp(log_kernel(x) - peak); }, opts);
  if (!r.converged || !(r.value > 0.0) || !std::isfinite(r.value) || r.abs_error > 1e-8 * r.value) {
    std::ostringstream os;
    os << "CKLS normalizer integral " << r.value << " +- " << r.abs_error;
    throw Error(ErrorCode::QuadratureFailure, os.str());
  }
  return peak + std::log(r.value);
}

}  // namespace

StationaryDensity stationary_density(const InternalParams& p) {
  if (!(p.a2 > 0.0)) throw Error(ErrorCode::NonErgodic, "a2 = 0 has no stationary law");
  require(validate(p), "stationary_density");
  StationaryDensity d;
  d.params_ = p;
  const double s2 = p.sigma2 * p.sigma2;
  if (is_cir(p)) {
    d.regime_ = DensityRegime::Gamma;
    d.shape_ = 2.0 * p.a2 / s2;
    d.scale_or_rate_ = 2.0 * p.b2 / s2;
    d.log_normalizer_ = d.shape_ * std::log(d.scale_or_rate_) - std::lgamma(d.shape_);
  } else if (is_linear(p)) {
    d.regime_ = DensityRegime::InverseGamma;
    d.shape_ = 2.0 * p.b2 / s2 + 1.0;
    d.scale_or_rate_ = 2.0 * p.a2 / s2;
    d.log_normalizer_ = d.shape_ * std::log(d.scale_or_rate_) - std::lgamma(d.shape_);
  } else {
    d.regime_ = DensityRegime::Ckls;
    d.shape_ = std::numeric_limits<double>::quiet_NaN();
    d.scale_or_rate_ = std::numeric_limits<double>::quiet_NaN();
    d.log_normalizer_ = -ckls_log_integral(p);
  }
  return d;
}

double ckls_normalizer(const InternalParams& p) {
  if (p.alpha2 <= 0.5 || p.alpha2 >= 1.0) throw Error(ErrorCode::WrongRegime, "CKLS normalizer needs alpha2 in (1/2, 1)");
  if (!(p.a2 > 0.0)) throw Error(ErrorCode::NonErgodic, "a2 = 0 has no stationary law");
  return std::exp(-ckls_log_integral(p));
}

// ---------------------------------------------------------------------------
// Scale function

double scale_density(const InternalParams& p, double c, double y) {
  const double s2 = p.sigma2 * p.sigma2;
  const double inner = 2.0 / s2 *
                       (p.a2 * power_integral(c, y, -2.0 * p.alpha2) - p.b2 * power_integral(c, y, 1.0 - 2.0 * p.alpha2));
  return std::exp(-inner);
}

double scale_function(const InternalParams& p, double c, double x) {
  if (x == c) return 0.0;
  quad::Options opts;
  opts.rel_tol = 1e-10;
  const auto r = quad::integrate([&](double y) { return scale_density(p, c, y); }, c, x, opts);
  if (std::isinf(r.value)) return r.value;
  if (!r.converged && r.abs_error > 1e-8 * std::abs(r.value)) {
    std::ostringstream os;
    os << "s(" << x << ") = " << r.value << " +- " << r.abs_error;
    throw Error(ErrorCode::QuadratureFailure, os.str());
  }
  return r.value;
}

ScaleLimit scale_limit(const InternalParams& p, double c, bool toward_zero, int levels) {
  quad::Options opts;
  opts.rel_tol = 1e-10;
  const auto density = [&](double y) { return scale_density(p, c, y); };
  double total = 0.0;
  double prev_increment = 0.0;
  double ratio = 0.0;
  double x = c;
  for (int n = 1; n <= levels; ++n) {
    const double next = toward_zero ? 0.5 * x : 2.0 * x;
    const double increment = quad::integrate(density, x, next, opts).value;
    if (!std::isfinite(increment) || !std::isfinite(total + increment)) {
      return {toward_zero ? -kInf : kInf, true};
    }
    if (n > 1 && prev_increment != 0.0) ratio = std::abs(increment / prev_increment);
    total += increment;
    prev_increment = increment;
    x = next;
  }
  // Geometric tail extrapolation; a ratio near or above one means the increments do not shrink.
  if (ratio >= 0.999) return {toward_zero ? -kInf : kInf, true};
  return {total + prev_increment * ratio / (1.0 - ratio), false};
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::RecurrentOscillating: return "RecurrentOscillating";
    case Verdict::ConvergesToZeroAS: return "ConvergesToZeroAS";
    case Verdict::HitsZeroReflecting: return "HitsZeroReflecting";
  }
  return "?";
}

BoundaryClassification classify_boundary(const InternalParams& p) {
  BoundaryClassification out;
  out.covered_by_near_origin_theorems = p.alpha2 < 1.0;
  const double s2 = p.sigma2 * p.sigma2;
  bool expect_finite_zero = false;
  if (is_cir(p)) {
    if (p.a2 >= s2 / 2.0) {
      out.verdict = Verdict::RecurrentOscillating;
      out.strictly_positive = true;
      out.rule = "alpha2 = 1/2, a2 >= sigma2^2/2";
    } else if (p.a2 > 0.0) {
      out.verdict = Verdict::HitsZeroReflecting;
      out.strictly_positive = false;
      out.rule = "alpha2 = 1/2, 0 < a2 < sigma2^2/2";
      expect_finite_zero = true;
    } else {
      out.verdict = Verdict::ConvergesToZeroAS;
      out.rule = "alpha2 = 1/2, a2 = 0";
      expect_finite_zero = true;
    }
  } else if (p.a2 > 0.0) {
    out.verdict = Verdict::RecurrentOscillating;
    out.strictly_positive = true;
    out.rule = "alpha2 in (1/2, 1], a2 > 0";
  } else {
    out.verdict = Verdict::ConvergesToZeroAS;
    out.rule = "alpha2 in (1/2, 1], a2 = 0";
    expect_finite_zero = true;
  }

  const double c = 1.0;
  const auto zero = scale_limit(p, c, true);
  const auto infinity = scale_limit(p, c, false);
  out.s_at_zero = zero.value;
  out.s_at_infinity = infinity.value;
  out.numeric_agrees = infinity.divergent && (zero.divergent != expect_finite_zero);
  return out;
}

// ---------------------------------------------------------------------------
// Generator

double generator_apply(const ModelParams& mp, const TestFunction& f, double x, double y) {
  const auto& e = mp.external;
  const auto& i = mp.internal;
  const Jet j = f(x, y);
  return (e.a1 * y - e.b1 * x) * j.dx + (i.a2 - i.b2 * y) * j.dy +
         0.5 * e.sigma1 * e.sigma1 * std::pow(x, 2.0 * e.alpha1) * j.dxx +
         0.5 * i.sigma2 * i.sigma2 * std::pow(y, 2.0 * i.alpha2) * j.dyy;
}

Jet lyapunov_jet(double k, double x, double y) {
  const double k2 = k * k;
  return {y * y + k2 * x * x, 2.0 * k2 * x, 2.0 * y, 2.0 * k2, 2.0};
}

ScanReport lyapunov_negativity_scan(const ModelParams& mp, double k, double radius, std::size_t grid_n) {
  ScanReport rep;
  rep.k = k;
  rep.radius = radius;
  rep.max_value = -kInf;
  rep.regime_covered = mp.external.alpha1 < 1.0 && mp.internal.alpha2 < 1.0;
  const double a1k2 = mp.external.a1 * k * k;
  rep.quadratic_part_negative = a1k2 * a1k2 < 4.0 * mp.internal.b2 * mp.external.b1 * k * k;

  const auto V = [k](double x, double y) { return lyapunov_jet(k, x, y); };
  const auto visit = [&](double x, double y) {
    const double v = generator_apply(mp, V, x, y);
    ++rep.points;
    if (v > rep.max_value) {
      rep.max_value = v;
      rep.argmax_x = x;
      rep.argmax_y = y;
    }
  };
  const std::size_t n = std::max<std::size_t>(grid_n, 2);
  const double outer = 10.0 * radius;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double x = outer * static_cast<double>(i) / static_cast<double>(n - 1);
      const double y = outer * static_cast<double>(j) / static_cast<double>(n - 1);
      if (x + y >= radius && x + y <= outer) visit(x, y);
    }
  }
  // Both edges of the band, sampled explicitly.
  for (double edge : {radius, outer}) {
    for (std::size_t i = 0; i < n; ++i) {
      const double x = edge * static_cast<double>(i) / static_cast<double>(n - 1);
      visit(x, edge - x);
    }
  }
  rep.all_nonpositive = rep.max_value <= 0.0;
  return rep;
}

RadiusSearch find_lyapunov_radius(const ModelParams& mp, double k, double start, std::size_t grid_n,
                                  int max_doublings) {
  RadiusSearch search;
  double radius = start;
  for (int i = 0; i <= max_doublings; ++i) {
    search.scans.push_back(lyapunov_negativity_scan(mp, k, radius, grid_n));
    if (search.scans.back().all_nonpositive) {
      search.r0 = radius;
      break;
    }
    radius *= 2.0;
  }
  return search;
}

// ---------------------------------------------------------------------------
// Linear case pathwise solution

std::vector<double> linear_explicit_solution(const InternalParams& p, const GridSpec& grid,
                                             std::span<const double> brownian) {
  if (!is_linear(p)) throw Error(ErrorCode::WrongRegime, "explicit solution requires alpha2 = 1");
  if (brownian.size() != grid.n_points()) throw Error(ErrorCode::InvalidParams, "driver length must be n_steps + 1");
  if (brownian[0] != 0.0) throw Error(ErrorCode::InvalidParams, "driver must start at 0");
  const double dt = grid.dt();
  const double s2 = p.sigma2 * p.sigma2;
  std::vector<double> y(grid.n_points());
  // With K_n = e^{R_n} int_0^{t_n} e^{-R_s} ds (trapezoid), Y_n = y0 e^{R_n} + a2 K_n and
  // K_n = g (K_{n-1} + dt/2) + dt/2 where g = e^{R_n - R_{n-1}}; this avoids e^{-R} overflow.
  double r_prev = 0.0;
  double k_acc = 0.0;
  y[0] = p.y0;
  for (std::size_t n = 1; n < y.size(); ++n) {
    const double r = -(p.b2 + 0.5 * s2) * grid.time(n) + p.sigma2 * brownian[n];
    const double g = std::exp(r - r_prev);
    k_acc = g * (k_acc + 0.5 * dt) + 0.5 * dt;
    y[n] = p.y0 * std::exp(r) + p.a2 * k_acc;
    r_prev = r;
  }
  return y;
}

}  // namespace dmr
