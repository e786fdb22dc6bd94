#include "dmr/quadrature.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace dmr::quad {

namespace {

// Kronrod abscissae (descending, last is the centre) and weights; Gauss weights
// belong to the odd-indexed abscissae and the centre.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gk15(const Integrand& f, double a, double b) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(centre);
  double kronrod = kWgk[7] * fc;
  double gauss = kWg[3] * fc;
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double pair = f(centre - dx) + f(centre + dx);
    kronrod += kWgk[j] * pair;
    if (j % 2 == 1) gauss += kWg[j / 2] * pair;
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace

Result& Result::operator+=(const Result& other) {
  value += other.value;
  abs_error += other.abs_error;
  evaluations += other.evaluations;
  converged = converged && other.converged;
  return *this;
}

Result integrate(const Integrand& f, double a, double b, const Options& opts) {
  if (a == b) return {0.0, 0.0, 0, true};
  if (a > b) {
    auto r = integrate(f, b, a, opts);
    r.value = -r.value;
    return r;
  }
  std::priority_queue<Segment> heap;
  heap.push(gk15(f, a, b));
  Result out;
  out.evaluations = 15;
  double total = heap.top().value;
  double error = heap.top().error;
  std::vector<Segment> finished;  // segments too narrow to split further

  auto tolerance = [&] { return std::max(opts.abs_tol, opts.rel_tol * std::abs(total)); };
  while (!heap.empty() && error > tolerance() && heap.size() + finished.size() < opts.max_intervals) {
    const Segment s = heap.top();
    heap.pop();
    const double mid = 0.5 * (s.a + s.b);
    if (!(mid > s.a && mid < s.b) || (s.b - s.a) <= 64.0 * std::numeric_limits<double>::epsilon() * std::abs(mid)) {
      finished.push_back(s);
      continue;
    }
    const Segment left = gk15(f, s.a, mid);
    const Segment right = gk15(f, mid, s.b);
    out.evaluations += 30;
    total += left.value + right.value - s.value;
    error += left.error + right.error - s.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum from the leaves so the value is free of running-update drift.
  double value = 0.0, err = 0.0;
  for (const auto& s : finished) {
    value += s.value;
    err += s.error;
  }
  while (!heap.empty()) {
    value += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = value;
  out.abs_error = err;
  out.converged = std::isfinite(value) && err <= std::max(opts.abs_tol, opts.rel_tol * std::abs(value)) * 1.000001;
  return out;
}

Result integrate_semi_infinite(const Integrand& g, const Options& opts, double min_extent, double max_extent) {
  Result total{0.0, 0.0, 0, true};
  double lo = 0.0;
  double hi = 1.0;
  int quiet_panels = 0;
  while (lo < max_extent) {
    Options panel_opts = opts;
    panel_opts.abs_tol = std::max(opts.abs_tol, 0.1 * opts.rel_tol * std::abs(total.value));
    const Result panel = integrate(g, lo, hi, panel_opts);
    total += panel;
    const bool negligible = std::abs(panel.value) <= opts.rel_tol * std::abs(total.value) * 0.01 ||
                            (total.value == 0.0 && panel.value == 0.0 && hi >= min_extent);
    quiet_panels = negligible ? quiet_panels + 1 : 0;
    if (hi >= min_extent && quiet_panels >= 2) return total;
    lo = hi;
    hi = std::min(2.0 * hi, max_extent);
  }
  total.converged = false;
  return total;
}

Result integrate_positive_axis(const Integrand& f, const Options& opts) {
  auto lower = integrate_from_zero(f, 1.0, opts);
  lower += integrate_to_infinity(f, 1.0, opts);
  return lower;
}

Result integrate_from_zero(const Integrand& f, double x, const Options& opts) {
  return integrate_semi_infinite(
      [&](double u) {
        const double xp = x * std::exp(-u);
        return xp == 0.0 ? 0.0 : f(xp) * xp;
      },
      opts);
}

Result integrate_to_infinity(const Integrand& f, double x, const Options& opts) {
  return integrate_semi_infinite(
      [&](double u) {
        const double xp = x * std::exp(u);
        if (!std::isfinite(xp)) return 0.0;
        const double v = f(xp);
        return v == 0.0 ? 0.0 : v * xp;
      },
      opts);
}

}  // namespace dmr::quad
