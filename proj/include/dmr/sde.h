#pragma once

// Full-truncation Euler simulation of (S, X, Y), the internal process reflected
// at a level m, and the coupled pair used to study the comparison property.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "dmr/model.h"
#include "dmr/rng.h"

namespace dmr {

struct State {
  double s = 1.0;
  double x = 1.0;
  double y = 1.0;
};

struct StepResult {
  State next;
  /// Pre-clamp proposals; a proposal <= 0 is the discrete stand-in for hitting zero.
  double x_proposal = 0.0;
  double y_proposal = 0.0;
};

/// max(v, 0)^alpha with the common exponents special-cased.
double truncated_power(double v, double alpha);

/// One full-truncation Euler step with pre-factored correlation. `normals` are
/// independent standard normals in channel order (w, W, B).
class SystemStepper {
 public:
  explicit SystemStepper(const ModelParams& params);

  StepResult step(const State& state, double dt, const std::array<double, 3>& normals) const;
  /// Same as step() but with the internal leg supplied by the caller (reflected runs).
  StepResult step_external(const State& state, double dt, const std::array<double, 3>& correlated) const;
  std::array<double, 3> correlate(const std::array<double, 3>& normals) const { return multiply(factor_, normals); }

  const ModelParams& params() const { return params_; }
  const Matrix3& factor() const { return factor_; }

 private:
  ModelParams params_;
  Matrix3 factor_;
};

/// Convenience wrapper that factors the correlation on each call.
State step_full_truncation(const State& state, const ModelParams& params, double dt,
                           const std::array<double, 3>& normals);

struct PathBundle {
  GridSpec grid;
  std::vector<double> s;
  std::vector<double> x;
  std::vector<double> y;
  /// Independent normals per step, before correlation.
  std::vector<std::array<double, 3>> normals;
  /// Steps whose pre-clamp proposal was <= 0.
  std::size_t x_zero_hits = 0;
  std::size_t y_zero_hits = 0;
  /// Regulator of the internal leg; empty for unreflected runs.
  std::vector<double> regulator;
};

PathBundle simulate_system(const ModelParams& params, const GridSpec& grid, const RngStream& stream);

/// Internal leg alone, driven by the B-channel normals of `stream`. With an
/// identity correlation this equals the y path of simulate_system.
std::vector<double> simulate_internal(const InternalParams& p, const GridSpec& grid, const RngStream& stream);

/// B-channel Brownian increments sqrt(dt) xi for every step of `grid`.
std::vector<double> brownian_increments(const GridSpec& grid, const RngStream& stream,
                                        Channel channel = kInternal);

/// Full-truncation Euler for the internal leg with caller-supplied increments.
std::vector<double> euler_internal(const InternalParams& p, const GridSpec& grid, std::span<const double> increments);

struct ReflectedPath {
  GridSpec grid;
  std::vector<double> y_m;
  std::vector<double> l_m;
  std::vector<double> z_m;
};

/// Projection scheme: q = y + drift dt + diffusion dB; y+ = max(q, m), dL = max(m - q, 0).
/// Throws Error(InvalidReflection) unless 0 < m < y0.
ReflectedPath simulate_reflected(const InternalParams& p, const ReflectionSpec& refl, const GridSpec& grid,
                                 const RngStream& stream);
ReflectedPath reflect_internal(const InternalParams& p, const ReflectionSpec& refl, const GridSpec& grid,
                               std::span<const double> increments);

/// Running-maximum form L_n = max_{k <= n} (m - z_k) v 0 of the regulator.
std::vector<double> regulator_from_sup_formula(std::span<const double> z_m, double m);

/// X and S legs as in simulate_system, Y leg reflected at m.
PathBundle simulate_system_reflected(const ModelParams& params, const ReflectionSpec& refl, const GridSpec& grid,
                                     const RngStream& stream);

struct ComparisonPair {
  std::vector<double> x1;
  std::vector<double> x2;
  /// Grid points with x1 < x2 - 1e-12.
  std::size_t violations = 0;
};

inline constexpr double kOrderSlack = 1e-12;

/// Two external legs dX = (a1 u - b1 X) dt + sigma1 X^alpha1 dW sharing every W
/// increment. Throws Error(DriverOrderViolated) unless u1 >= u2 >= 0 pointwise.
ComparisonPair simulate_comparison_pair(const ExternalParams& p, std::span<const double> u1,
                                        std::span<const double> u2, const GridSpec& grid, const RngStream& stream);

}  // namespace dmr
