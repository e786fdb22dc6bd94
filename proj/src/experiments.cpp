#include "dmr/experiments.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dmr/error.h"
#include "dmr/parallel.h"

namespace dmr {

namespace {

std::size_t step_index(double t, double dt) { return static_cast<std::size_t>(std::llround(t / dt)); }

void require_paths(std::size_t n_paths) {
  if (n_paths < 2) throw Error(ErrorCode::InvalidParams, "n_paths >= 2 required");
}

double max_of(std::span<const double> t) { return t.empty() ? 0.0 : *std::max_element(t.begin(), t.end()); }

}  // namespace

McEstimate summarize(std::span<const double> samples, std::size_t n_steps, std::uint64_t seed) {
  McEstimate e;
  e.n_paths = samples.size();
  e.n_steps = n_steps;
  e.seed = seed;
  if (samples.empty()) return e;
  const double n = static_cast<double>(samples.size());
  e.value = pairwise_sum(samples) / n;
  if (samples.size() < 2) return e;
  std::vector<double> sq(samples.size());
  std::transform(samples.begin(), samples.end(), sq.begin(), [&](double v) { return (v - e.value) * (v - e.value); });
  const double var = pairwise_sum(sq) / (n - 1.0);
  e.std_error = std::sqrt(var / n);
  return e;
}

McEstimate summarize_variance(std::span<const double> samples, std::size_t n_steps, std::uint64_t seed) {
  McEstimate e;
  e.n_paths = samples.size();
  e.n_steps = n_steps;
  e.seed = seed;
  if (samples.size() < 2) return e;
  const double n = static_cast<double>(samples.size());
  const double mean = pairwise_sum(samples) / n;
  std::vector<double> d2(samples.size()), d4(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double d = samples[i] - mean;
    d2[i] = d * d;
    d4[i] = d2[i] * d2[i];
  }
  const double m2 = pairwise_sum(d2) / n;
  const double m4 = pairwise_sum(d4) / n;
  e.value = m2 * n / (n - 1.0);
  e.std_error = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
  return e;
}

std::vector<double> sample_system(const SystemFunctional& fn, const ModelParams& params, const GridSpec& grid,
                                  std::size_t n_paths, std::uint64_t seed, unsigned workers) {
  std::vector<double> out(n_paths);
  parallel_for(n_paths, workers, [&](std::size_t i) { out[i] = fn(simulate_system(params, grid, RngStream(seed, i))); });
  return out;
}

std::vector<double> sample_internal(const InternalFunctional& fn, const InternalParams& p, const GridSpec& grid,
                                    std::size_t n_paths, std::uint64_t seed, unsigned workers) {
  require(validate_for_simulation(p), "sample_internal");
  std::vector<double> out(n_paths);
  parallel_for(n_paths, workers, [&](std::size_t i) { out[i] = fn(simulate_internal(p, grid, RngStream(seed, i))); });
  return out;
}

McEstimate estimate_moment(const SystemFunctional& fn, const ModelParams& params, const GridSpec& grid,
                           std::size_t n_paths, std::uint64_t seed, unsigned workers) {
  require_paths(n_paths);
  require(validate_for_simulation(params), "estimate_moment");
  const auto samples = sample_system(fn, params, grid, n_paths, seed, workers);
  return summarize(samples, grid.n_steps, seed);
}

McEstimate estimate_moment(const InternalFunctional& fn, const InternalParams& p, const GridSpec& grid,
                           std::size_t n_paths, std::uint64_t seed, unsigned workers) {
  require_paths(n_paths);
  const auto samples = sample_internal(fn, p, grid, n_paths, seed, workers);
  return summarize(samples, grid.n_steps, seed);
}

// ---------------------------------------------------------------------------

PlateauReport moment_plateau_study(const InternalParams& p, std::span<const double> t_list, double dt,
                                   std::size_t n_paths, std::uint64_t seed, unsigned workers) {
  require_paths(n_paths);
  PlateauReport rep;
  rep.times.assign(t_list.begin(), t_list.end());
  rep.mixing_time = 5.0 / p.b2;
  if (t_list.empty()) return rep;
  const GridSpec grid = GridSpec::with_step(max_of(t_list), dt);
  const std::size_t k = t_list.size();
  std::vector<double> table(n_paths * k);
  parallel_for(n_paths, workers, [&](std::size_t i) {
    const auto y = simulate_internal(p, grid, RngStream(seed, i));
    for (std::size_t j = 0; j < k; ++j) {
      const double v = y[std::min(step_index(t_list[j], dt), grid.n_steps)];
      table[j * n_paths + i] = v * v;
    }
  });
  for (std::size_t j = 0; j < k; ++j) {
    rep.second_moment.push_back(
        summarize(std::span<const double>(table).subspan(j * n_paths, n_paths), step_index(t_list[j], dt), seed));
  }
  rep.bound = 2.0 * rep.second_moment.back().value;
  rep.pass = true;
  for (std::size_t j = 0; j < k; ++j) {
    if (rep.times[j] >= rep.mixing_time && rep.second_moment[j].value > rep.bound) rep.pass = false;
  }
  return rep;
}

std::vector<OccupancyReport> occupancy_near_origin(const ModelParams& mp, double epsilon, double dt,
                                                   std::span<const double> horizons, std::size_t n_paths,
                                                   std::uint64_t seed, unsigned workers) {
  require_paths(n_paths);
  require(validate_for_simulation(mp), "occupancy_near_origin");
  const GridSpec grid = GridSpec::with_step(max_of(horizons), dt);
  const SystemStepper stepper(mp);
  const bool half = mp.external.alpha1 == 0.5;
  constexpr std::size_t kNever = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> first_entry(n_paths, kNever);
  std::vector<std::size_t> first_zero_hit(n_paths, kNever);

  const auto inside = [epsilon](const State& s) { return s.x > 0.0 && s.x < epsilon && s.y > 0.0 && s.y < epsilon; };
  parallel_for(n_paths, workers, [&](std::size_t i) {
    const RngStream stream(seed, i);
    State state{mp.s0, mp.external.x0, mp.internal.y0};
    if (inside(state)) first_entry[i] = 0;
    std::array<double, 3> xi{};
    for (std::size_t n = 0; n < grid.n_steps; ++n) {
      if (first_entry[i] != kNever && (!half || first_zero_hit[i] != kNever)) break;
      stream.normals(n, xi);
      const StepResult r = stepper.step(state, dt, xi);
      state = r.next;
      if (first_entry[i] == kNever && inside(state)) first_entry[i] = n + 1;
      if (half && first_zero_hit[i] == kNever && r.x_proposal <= 0.0 && state.y <= epsilon) first_zero_hit[i] = n + 1;
    }
  });

  std::vector<OccupancyReport> out;
  for (double horizon : horizons) {
    const std::size_t last = std::min(step_index(horizon, dt), grid.n_steps);
    OccupancyReport rep;
    rep.epsilon = epsilon;
    rep.horizon = horizon;
    rep.n_paths = n_paths;
    rep.regime_not_covered = mp.external.alpha1 == 1.0 || mp.internal.alpha2 == 1.0;
    std::size_t visited = 0, hit = 0;
    std::vector<double> entry_times;
    for (std::size_t i = 0; i < n_paths; ++i) {
      if (first_entry[i] <= last) {
        ++visited;
        entry_times.push_back(grid.time(first_entry[i]));
      }
      if (first_zero_hit[i] <= last) ++hit;
    }
    rep.fraction_visited = static_cast<double>(visited) / static_cast<double>(n_paths);
    if (half) rep.fraction_x_hit_zero_with_y_small = static_cast<double>(hit) / static_cast<double>(n_paths);
    if (!entry_times.empty()) rep.mean_first_entry_time = pairwise_sum(entry_times) / static_cast<double>(entry_times.size());
    out.push_back(rep);
  }
  return out;
}

double ks_statistic(std::span<const double> sorted_samples, std::span<const double> cdf_at_samples) {
  const double n = static_cast<double>(sorted_samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted_samples.size(); ++i) {
    const double f = cdf_at_samples[i];
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

DensityFitReport density_fit_study(const InternalParams& p, const GridSpec& grid, std::size_t n_paths, double burn_in,
                                   std::uint64_t seed, unsigned workers) {
  if (!(p.a2 > 0.0)) throw Error(ErrorCode::NonErgodic, "density fit needs a2 > 0");
  require_paths(n_paths);
  if (grid.t_end < burn_in) throw Error(ErrorCode::InvalidParams, "horizon shorter than burn-in");
  const StationaryDensity density = stationary_density(p);

  DensityFitReport rep;
  rep.regime = density.regime();
  rep.n_paths = n_paths;
  rep.horizon = grid.t_end;
  rep.burn_in = burn_in;
  rep.normalizer = density.normalizer();
  rep.stationary_mean = p.a2 / p.b2;

  auto terminal = sample_internal([](std::span<const double> y) { return y.back(); }, p, grid, n_paths, seed, workers);
  rep.sample_mean = summarize(terminal, grid.n_steps, seed);
  rep.mean_pass = rep.sample_mean.within(rep.stationary_mean, 3.0);

  std::sort(terminal.begin(), terminal.end());
  const auto cdf = density.cdf_sorted(terminal);
  rep.ks_statistic = ks_statistic(terminal, cdf);
  rep.ks_threshold = ks_band(n_paths);
  rep.ks_pass = rep.ks_statistic < rep.ks_threshold;

  // Histogram over the central 99% of the sample against binned analytic mass.
  constexpr std::size_t kBins = 50;
  const double n = static_cast<double>(n_paths);
  const double lo = terminal[static_cast<std::size_t>(0.005 * (n - 1))];
  const double hi = terminal[static_cast<std::size_t>(0.995 * (n - 1))];
  const double width = (hi - lo) / kBins;
  rep.bin_edges.resize(kBins + 1);
  for (std::size_t b = 0; b <= kBins; ++b) rep.bin_edges[b] = lo + width * static_cast<double>(b);
  std::vector<double> counts(kBins, 0.0);
  double outside_emp = 0.0;
  for (double v : terminal) {
    if (v < lo || v > hi) {
      outside_emp += 1.0;
      continue;
    }
    counts[std::min(kBins - 1, static_cast<std::size_t>((v - lo) / width))] += 1.0;
  }
  const auto edge_cdf = density.cdf_sorted(rep.bin_edges);
  double l1 = 0.0;
  rep.histogram.resize(kBins);
  rep.binned_pdf.resize(kBins);
  for (std::size_t b = 0; b < kBins; ++b) {
    const double mass = edge_cdf[b + 1] - edge_cdf[b];
    rep.histogram[b] = counts[b] / (n * width);
    rep.binned_pdf[b] = mass / width;
    l1 += std::abs(counts[b] / n - mass);
  }
  l1 += std::abs(outside_emp / n - (1.0 - (edge_cdf.back() - edge_cdf.front())));
  rep.l1_distance = l1;
  return rep;
}

double comparison_driver(double t) { return 1.0 + std::sin(t); }

ComparisonReport comparison_violation_study(const ExternalParams& p, double gap, std::span<const double> dt_list,
                                            double horizon, std::size_t n_paths, std::uint64_t seed,
                                            unsigned workers) {
  require_paths(n_paths);
  ComparisonReport rep;
  rep.gap = gap;
  rep.horizon = horizon;
  std::vector<double> dts(dt_list.begin(), dt_list.end());
  std::sort(dts.begin(), dts.end(), std::greater<>());
  for (double dt : dts) {
    const GridSpec grid = GridSpec::with_step(horizon, dt);
    std::vector<double> u2(grid.n_points()), u1(grid.n_points());
    for (std::size_t i = 0; i < u2.size(); ++i) {
      u2[i] = comparison_driver(grid.time(i));
      u1[i] = u2[i] + gap;
    }
    std::vector<double> fractions(n_paths);
    std::vector<double> counts(n_paths);
    parallel_for(n_paths, workers, [&](std::size_t i) {
      const auto pair = simulate_comparison_pair(p, u1, u2, grid, RngStream(seed, i));
      counts[i] = static_cast<double>(pair.violations);
      fractions[i] = counts[i] / static_cast<double>(grid.n_steps);
    });
    ComparisonLevel level;
    level.dt = grid.dt();
    level.violation_fraction = pairwise_sum(fractions) / static_cast<double>(n_paths);
    level.violations = static_cast<std::size_t>(pairwise_sum(counts));
    rep.levels.push_back(level);
  }
  rep.nonincreasing = true;
  for (std::size_t i = 1; i < rep.levels.size(); ++i) {
    if (rep.levels[i].violation_fraction > rep.levels[i - 1].violation_fraction) rep.nonincreasing = false;
  }
  rep.finest_below_threshold = !rep.levels.empty() && rep.levels.back().violation_fraction < 1e-3;
  rep.pass = rep.nonincreasing && rep.finest_below_threshold;
  return rep;
}

ReflectedMeanReport reflected_mean_reversion_study(const InternalParams& p, std::span<const double> m_list,
                                                   std::span<const double> t_list, double dt, std::size_t n_paths,
                                                   std::uint64_t seed, unsigned workers) {
  require_paths(n_paths);
  for (double m : m_list) {
    const auto r = validate(ReflectionSpec{m}, p);
    if (!r.ok()) throw Error(ErrorCode::InvalidReflection, r.to_string());
  }
  ReflectedMeanReport rep;
  rep.times.assign(t_list.begin(), t_list.end());
  rep.long_run_mean = p.a2 / p.b2;
  if (t_list.empty()) return rep;
  const GridSpec grid = GridSpec::with_step(max_of(t_list), dt);
  const std::size_t k = t_list.size();
  std::optional<StationaryDensity> density;
  if (p.a2 > 0.0 && p.sigma2 > 0.0) density = stationary_density(p);

  rep.pass = true;
  for (double m : m_list) {
    std::vector<double> table(n_paths * k);
    parallel_for(n_paths, workers, [&](std::size_t i) {
      const auto path = simulate_reflected(p, ReflectionSpec{m}, grid, RngStream(seed, i));
      for (std::size_t j = 0; j < k; ++j) table[j * n_paths + i] = path.y_m[std::min(step_index(t_list[j], dt), grid.n_steps)];
    });
    ReflectedMeanCurve curve;
    curve.m = m;
    for (std::size_t j = 0; j < k; ++j) {
      curve.mean.push_back(
          summarize(std::span<const double>(table).subspan(j * n_paths, n_paths), step_index(t_list[j], dt), seed));
    }
    curve.terminal = curve.mean.back();
    curve.below_long_run_mean = m < rep.long_run_mean;
    if (density) curve.restricted_stationary_mean = density->restricted_mean(m);
    if (curve.below_long_run_mean) {
      curve.terminal_within_3se = curve.terminal.within(rep.long_run_mean, 3.0);
      rep.pass = rep.pass && *curve.terminal_within_3se;
    } else {
      curve.flag = "m >= a2/b2: paths stay >= m, so the limit a2/b2 is unattainable; empirical limit reported";
    }
    rep.curves.push_back(std::move(curve));
  }
  return rep;
}

SupMomentReport reflected_sup_moment_check(const InternalParams& p, const ReflectionSpec& refl, const GridSpec& grid,
                                           std::size_t n_paths, std::uint64_t seed, double p_exp, unsigned workers) {
  require_paths(n_paths);
  SupMomentReport rep;
  rep.p_exp = p_exp;
  std::vector<double> sup(2 * n_paths);
  parallel_for(sup.size(), workers, [&](std::size_t i) {
    const auto path = simulate_reflected(p, refl, grid, RngStream(seed, i));
    sup[i] = std::pow(*std::max_element(path.y_m.begin(), path.y_m.end()), p_exp);
  });
  rep.base = summarize(std::span<const double>(sup).first(n_paths), grid.n_steps, seed);
  rep.doubled = summarize(sup, grid.n_steps, seed);
  rep.ratio = rep.base.value != 0.0 ? rep.doubled.value / rep.base.value : 1.0;
  rep.stable = rep.ratio >= 0.8 && rep.ratio <= 1.25;
  return rep;
}

BoundaryEvidence boundary_evidence(const InternalParams& p, double dt, std::size_t n_paths, std::uint64_t seed,
                                   unsigned workers) {
  require_paths(n_paths);
  BoundaryEvidence ev;
  ev.verdict = classify_boundary(p).verdict;
  ev.n_paths = n_paths;
  ev.horizon = (ev.verdict == Verdict::ConvergesToZeroAS ? 50.0 : 200.0) / p.b2;
  const GridSpec grid = GridSpec::with_step(ev.horizon, dt);
  const double high = 2.0 * p.y0;
  const double low = p.y0 / 10.0;
  std::vector<double> crossed(n_paths), touched(n_paths), terminal(n_paths);
  parallel_for(n_paths, workers, [&](std::size_t i) {
    const auto y = simulate_internal(p, grid, RngStream(seed, i));
    bool above = false, below = false, zero = false;
    for (std::size_t n = 1; n < y.size(); ++n) {
      above = above || y[n] > high;
      below = below || y[n] < low;
      zero = zero || y[n] == 0.0;
    }
    crossed[i] = above && below ? 1.0 : 0.0;
    touched[i] = zero ? 1.0 : 0.0;
    terminal[i] = y.back();
  });
  const double n = static_cast<double>(n_paths);
  ev.fraction_crossing_both = pairwise_sum(crossed) / n;
  ev.fraction_hit_zero = pairwise_sum(touched) / n;
  auto mid = terminal.begin() + static_cast<std::ptrdiff_t>(n_paths / 2);
  std::nth_element(terminal.begin(), mid, terminal.end());
  ev.median_terminal = *mid;
  switch (ev.verdict) {
    case Verdict::RecurrentOscillating: ev.agrees = ev.fraction_crossing_both >= 0.99; break;
    case Verdict::ConvergesToZeroAS: ev.agrees = ev.median_terminal < 1e-3; break;
    case Verdict::HitsZeroReflecting: ev.agrees = ev.fraction_crossing_both >= 0.99 && ev.fraction_hit_zero >= 0.99; break;
  }
  return ev;
}

PositivityReading x_positivity_readings(const ModelParams& mp, const ReflectionSpec& refl, const GridSpec& grid,
                                        std::size_t n_paths, std::uint64_t seed, unsigned workers) {
  require_paths(n_paths);
  PositivityReading r;
  r.m = refl.m;
  r.a1 = mp.external.a1;
  r.sigma1 = mp.external.sigma1;
  const double half_var = 0.5 * r.sigma1 * r.sigma1;
  r.level_reading_holds = r.m >= half_var;
  r.drift_reading_holds = r.a1 * r.m >= half_var;
  std::vector<double> hit(n_paths), hits(n_paths);
  parallel_for(n_paths, workers, [&](std::size_t i) {
    const auto b = simulate_system_reflected(mp, refl, grid, RngStream(seed, i));
    hits[i] = static_cast<double>(b.x_zero_hits);
    hit[i] = b.x_zero_hits > 0 ? 1.0 : 0.0;
  });
  const double n = static_cast<double>(n_paths);
  r.fraction_x_hit_zero = pairwise_sum(hit) / n;
  r.mean_x_zero_hits = pairwise_sum(hits) / n;
  return r;
}

}  // namespace dmr
