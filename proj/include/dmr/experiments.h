#pragma once

// Monte Carlo estimators and the scripted studies that set simulations against
// closed forms and qualitative path properties.
//
// Every study fans out over paths with parallel_for and stores one result per
// path before reducing in index order, so estimates are bit-identical for any
// worker count.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dmr/analytics.h"
#include "dmr/model.h"
#include "dmr/sde.h"

namespace dmr {

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  std::size_t n_steps = 0;
  std::uint64_t seed = 0;

  bool within(double target, double n_se) const { return std::abs(value - target) <= n_se * std_error; }
};

/// Sample mean and sample-std / sqrt(n).
McEstimate summarize(std::span<const double> samples, std::size_t n_steps, std::uint64_t seed);
/// Sample variance with the delta-method standard error sqrt((m4 - m2^2) / n).
McEstimate summarize_variance(std::span<const double> samples, std::size_t n_steps, std::uint64_t seed);

using SystemFunctional = std::function<double(const PathBundle&)>;
using InternalFunctional = std::function<double(std::span<const double> y)>;

/// Evaluates fn on paths 0..n_paths-1 of the seed; one value per path.
std::vector<double> sample_system(const SystemFunctional& fn, const ModelParams& params, const GridSpec& grid,
                                  std::size_t n_paths, std::uint64_t seed, unsigned workers = 1);
std::vector<double> sample_internal(const InternalFunctional& fn, const InternalParams& p, const GridSpec& grid,
                                    std::size_t n_paths, std::uint64_t seed, unsigned workers = 1);

/// Throws Error(InvalidParams) for n_paths < 2.
McEstimate estimate_moment(const SystemFunctional& fn, const ModelParams& params, const GridSpec& grid,
                           std::size_t n_paths, std::uint64_t seed, unsigned workers = 1);
McEstimate estimate_moment(const InternalFunctional& fn, const InternalParams& p, const GridSpec& grid,
                           std::size_t n_paths, std::uint64_t seed, unsigned workers = 1);

// ---------------------------------------------------------------------------

struct PlateauReport {
  std::vector<double> times;
  std::vector<McEstimate> second_moment;
  double mixing_time = 0.0;  // 5 / b2
  double bound = 0.0;        // 2 x estimate at the largest time
  bool pass = false;
};

/// E Y_t^2 along t_list for the CKLS regime; passes when every estimate past
/// the mixing time stays below twice the last one.
PlateauReport moment_plateau_study(const InternalParams& p, std::span<const double> t_list, double dt,
                                   std::size_t n_paths, std::uint64_t seed, unsigned workers = 1);

struct OccupancyReport {
  double epsilon = 0.0;
  double horizon = 0.0;
  std::size_t n_paths = 0;
  double fraction_visited = 0.0;
  /// Fraction with a pre-clamp X proposal <= 0 while Y <= epsilon (alpha1 = 1/2 only).
  std::optional<double> fraction_x_hit_zero_with_y_small;
  std::optional<double> mean_first_entry_time;
  /// alpha1 or alpha2 equal to 1 lies outside the near-origin theorems.
  bool regime_not_covered = false;
};

/// One report per horizon, all computed from the same paths run to the largest horizon.
std::vector<OccupancyReport> occupancy_near_origin(const ModelParams& mp, double epsilon, double dt,
                                                   std::span<const double> horizons, std::size_t n_paths,
                                                   std::uint64_t seed, unsigned workers = 1);

struct DensityFitReport {
  DensityRegime regime = DensityRegime::Gamma;
  std::size_t n_paths = 0;
  double horizon = 0.0;
  double burn_in = 0.0;
  double ks_statistic = 0.0;
  double ks_threshold = 0.0;  // 3 x 1.63 / sqrt(n)
  double l1_distance = 0.0;
  McEstimate sample_mean;
  double stationary_mean = 0.0;  // a2 / b2
  double normalizer = 0.0;
  bool ks_pass = false;
  bool mean_pass = false;
  std::vector<double> bin_edges;
  std::vector<double> histogram;  // empirical density per bin
  std::vector<double> binned_pdf;  // analytic mass per bin / width
};

inline double ks_band(std::size_t n) { return 3.0 * 1.63 / std::sqrt(static_cast<double>(n)); }

/// Kolmogorov-Smirnov statistic of samples against a CDF evaluated at the sorted samples.
double ks_statistic(std::span<const double> sorted_samples, std::span<const double> cdf_at_samples);

/// Terminal values at grid.t_end (>= burn_in) against the stationary density.
/// Throws Error(NonErgodic) for a2 = 0.
DensityFitReport density_fit_study(const InternalParams& p, const GridSpec& grid, std::size_t n_paths, double burn_in,
                                   std::uint64_t seed, unsigned workers = 1);

struct ComparisonLevel {
  double dt = 0.0;
  double violation_fraction = 0.0;
  std::size_t violations = 0;
};

struct ComparisonReport {
  double gap = 0.0;
  double horizon = 0.0;
  std::vector<ComparisonLevel> levels;
  bool nonincreasing = false;
  bool finest_below_threshold = false;  // < 1e-3
  bool pass = false;
};

/// Non-negative deterministic driver u(t) = 1 + sin(t) used by the comparison study.
double comparison_driver(double t);

/// Drivers u2 = u, u1 = u + gap; mean fraction of grid points with x1 < x2 - 1e-12 per dt.
ComparisonReport comparison_violation_study(const ExternalParams& p, double gap, std::span<const double> dt_list,
                                            double horizon, std::size_t n_paths, std::uint64_t seed,
                                            unsigned workers = 1);

struct ReflectedMeanCurve {
  double m = 0.0;
  std::vector<McEstimate> mean;
  McEstimate terminal;
  bool below_long_run_mean = false;
  /// Present only when m < a2 / b2.
  std::optional<bool> terminal_within_3se;
  /// E[Y | Y >= m] under the stationary law, the limit of the reflected mean.
  std::optional<double> restricted_stationary_mean;
  std::string flag;
};

struct ReflectedMeanReport {
  std::vector<double> times;
  double long_run_mean = 0.0;
  std::vector<ReflectedMeanCurve> curves;
  bool pass = false;
};

/// Throws Error(InvalidReflection) unless every m is in (0, y0).
ReflectedMeanReport reflected_mean_reversion_study(const InternalParams& p, std::span<const double> m_list,
                                                   std::span<const double> t_list, double dt, std::size_t n_paths,
                                                   std::uint64_t seed, unsigned workers = 1);

struct SupMomentReport {
  double p_exp = 0.0;
  McEstimate base;
  McEstimate doubled;
  double ratio = 1.0;
  bool stable = false;  // ratio in [0.8, 1.25]
};

/// E sup_{t <= T} (Y^(m)_t)^p_exp at n_paths and 2 n_paths.
SupMomentReport reflected_sup_moment_check(const InternalParams& p, const ReflectionSpec& refl, const GridSpec& grid,
                                           std::size_t n_paths, std::uint64_t seed, double p_exp,
                                           unsigned workers = 1);

struct BoundaryEvidence {
  Verdict verdict = Verdict::RecurrentOscillating;
  double horizon = 0.0;
  std::size_t n_paths = 0;
  double fraction_crossing_both = 0.0;  // above 2 y0 and below y0 / 10
  double fraction_hit_zero = 0.0;
  double median_terminal = 0.0;
  bool agrees = false;
};

/// Monte Carlo corroboration of classify_boundary: recurrent regimes must have
/// >= 99% of paths crossing both levels by T = 200 / b2; converging regimes a
/// median terminal value below 1e-3 at T = 50 / b2; reflecting-zero regimes
/// both recurrence and >= 99% of paths touching zero.
BoundaryEvidence boundary_evidence(const InternalParams& p, double dt, std::size_t n_paths, std::uint64_t seed,
                                   unsigned workers = 1);

struct PositivityReading {
  double m = 0.0;
  double a1 = 0.0;
  double sigma1 = 0.0;
  bool level_reading_holds = false;  // m >= sigma1^2 / 2
  bool drift_reading_holds = false;  // a1 m >= sigma1^2 / 2
  double fraction_x_hit_zero = 0.0;  // paths with a pre-clamp X proposal <= 0
  double mean_x_zero_hits = 0.0;
};

/// Strict positivity of X (alpha1 = 1/2) when Y is reflected at m. Reports both
/// candidate conditions next to the Monte Carlo zero-hit frequency without
/// deciding between them.
PositivityReading x_positivity_readings(const ModelParams& mp, const ReflectionSpec& refl, const GridSpec& grid,
                                        std::size_t n_paths, std::uint64_t seed, unsigned workers = 1);

}  // namespace dmr
