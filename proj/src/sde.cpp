#include "dmr/sde.h"

#include <algorithm>
#include <cmath>

#include "dmr/error.h"

namespace dmr {

double truncated_power(double v, double alpha) {
  if (v <= 0.0) return 0.0;
  if (alpha == 0.5) return std::sqrt(v);
  if (alpha == 1.0) return v;
  return std::pow(v, alpha);
}

SystemStepper::SystemStepper(const ModelParams& params) : params_(params), factor_(cholesky_factor(params.corr)) {}

StepResult SystemStepper::step(const State& state, double dt, const std::array<double, 3>& normals) const {
  const auto xi = correlate(normals);
  const auto& in = params_.internal;
  const double sqdt = std::sqrt(dt);
  StepResult r = step_external(state, dt, xi);
  r.y_proposal = state.y + (in.a2 - in.b2 * state.y) * dt + in.sigma2 * truncated_power(state.y, in.alpha2) * (sqdt * xi[kInternal]);
  r.next.y = std::max(r.y_proposal, 0.0);
  return r;
}

StepResult SystemStepper::step_external(const State& state, double dt, const std::array<double, 3>& xi) const {
  const auto& ex = params_.external;
  const double sqdt = std::sqrt(dt);
  StepResult r;
  r.x_proposal = state.x + (ex.a1 * state.y - ex.b1 * state.x) * dt +
                 ex.sigma1 * truncated_power(state.x, ex.alpha1) * (sqdt * xi[kExternal]);
  r.next.x = std::max(r.x_proposal, 0.0);
  const double vol = std::sqrt(std::max(state.x, 0.0));
  r.next.s = state.s * std::exp(-0.5 * std::max(state.x, 0.0) * dt + vol * sqdt * xi[kAsset]);
  r.next.y = state.y;
  r.y_proposal = state.y;
  return r;
}

State step_full_truncation(const State& state, const ModelParams& params, double dt,
                           const std::array<double, 3>& normals) {
  return SystemStepper(params).step(state, dt, normals).next;
}

namespace {

void check_grid(const GridSpec& grid) { require(validate(grid), "grid"); }

void check_reflection(const ReflectionSpec& refl, const InternalParams& p) {
  const auto r = validate(refl, p);
  if (!r.ok()) throw Error(ErrorCode::InvalidReflection, r.to_string());
}

PathBundle allocate(const GridSpec& grid, const ModelParams& params) {
  PathBundle b;
  b.grid = grid;
  b.s.resize(grid.n_points());
  b.x.resize(grid.n_points());
  b.y.resize(grid.n_points());
  b.normals.resize(grid.n_steps);
  b.s[0] = params.s0;
  b.x[0] = params.external.x0;
  b.y[0] = params.internal.y0;
  return b;
}

}  // namespace

PathBundle simulate_system(const ModelParams& params, const GridSpec& grid, const RngStream& stream) {
  require(validate_for_simulation(params), "simulate_system");
  check_grid(grid);
  const SystemStepper stepper(params);
  const double dt = grid.dt();
  PathBundle b = allocate(grid, params);
  State state{params.s0, params.external.x0, params.internal.y0};
  for (std::size_t n = 0; n < grid.n_steps; ++n) {
    auto& xi = b.normals[n];
    stream.normals(n, xi);
    const StepResult r = stepper.step(state, dt, xi);
    b.x_zero_hits += r.x_proposal <= 0.0;
    b.y_zero_hits += r.y_proposal <= 0.0;
    state = r.next;
    b.s[n + 1] = state.s;
    b.x[n + 1] = state.x;
    b.y[n + 1] = state.y;
  }
  return b;
}

std::vector<double> brownian_increments(const GridSpec& grid, const RngStream& stream, Channel channel) {
  check_grid(grid);
  const double sqdt = std::sqrt(grid.dt());
  std::vector<double> dB(grid.n_steps);
  for (std::size_t n = 0; n < grid.n_steps; ++n) dB[n] = sqdt * stream.normal(n, static_cast<std::uint32_t>(channel));
  return dB;
}

std::vector<double> euler_internal(const InternalParams& p, const GridSpec& grid, std::span<const double> increments) {
  require(validate_for_simulation(p), "euler_internal");
  if (increments.size() != grid.n_steps) throw Error(ErrorCode::InvalidParams, "need one increment per step");
  const double dt = grid.dt();
  std::vector<double> y(grid.n_points());
  y[0] = p.y0;
  for (std::size_t n = 0; n < grid.n_steps; ++n) {
    const double cur = y[n];
    const double q = cur + (p.a2 - p.b2 * cur) * dt + p.sigma2 * truncated_power(cur, p.alpha2) * increments[n];
    y[n + 1] = std::max(q, 0.0);
  }
  return y;
}

std::vector<double> simulate_internal(const InternalParams& p, const GridSpec& grid, const RngStream& stream) {
  return euler_internal(p, grid, brownian_increments(grid, stream));
}

ReflectedPath reflect_internal(const InternalParams& p, const ReflectionSpec& refl, const GridSpec& grid,
                               std::span<const double> increments) {
  require(validate_for_simulation(p), "reflect_internal");
  check_reflection(refl, p);
  if (increments.size() != grid.n_steps) throw Error(ErrorCode::InvalidParams, "need one increment per step");
  const double dt = grid.dt();
  const double m = refl.m;
  ReflectedPath out;
  out.grid = grid;
  out.y_m.resize(grid.n_points());
  out.l_m.resize(grid.n_points());
  out.z_m.resize(grid.n_points());
  out.y_m[0] = out.z_m[0] = p.y0;
  out.l_m[0] = 0.0;
  for (std::size_t n = 0; n < grid.n_steps; ++n) {
    const double y = out.y_m[n];
    const double proposal = y + (p.a2 - p.b2 * y) * dt + p.sigma2 * truncated_power(y, p.alpha2) * increments[n];
    const double push = proposal < m ? m - proposal : 0.0;
    out.y_m[n + 1] = proposal < m ? m : proposal;
    out.l_m[n + 1] = out.l_m[n] + push;
    out.z_m[n + 1] = out.z_m[n] + (proposal - y);
  }
  return out;
}

ReflectedPath simulate_reflected(const InternalParams& p, const ReflectionSpec& refl, const GridSpec& grid,
                                 const RngStream& stream) {
  check_reflection(refl, p);
  return reflect_internal(p, refl, grid, brownian_increments(grid, stream));
}

std::vector<double> regulator_from_sup_formula(std::span<const double> z_m, double m) {
  std::vector<double> l(z_m.size());
  double running = 0.0;
  for (std::size_t n = 0; n < z_m.size(); ++n) {
    running = std::max(running, m - z_m[n]);
    l[n] = running;
  }
  return l;
}

PathBundle simulate_system_reflected(const ModelParams& params, const ReflectionSpec& refl, const GridSpec& grid,
                                     const RngStream& stream) {
  require(validate_for_simulation(params), "simulate_system_reflected");
  check_reflection(refl, params.internal);
  check_grid(grid);
  const SystemStepper stepper(params);
  const auto& in = params.internal;
  const double dt = grid.dt();
  const double sqdt = std::sqrt(dt);
  PathBundle b = allocate(grid, params);
  b.regulator.assign(grid.n_points(), 0.0);
  State state{params.s0, params.external.x0, in.y0};
  for (std::size_t n = 0; n < grid.n_steps; ++n) {
    auto& raw = b.normals[n];
    stream.normals(n, raw);
    const auto xi = stepper.correlate(raw);
    StepResult r = stepper.step_external(state, dt, xi);
    const double proposal =
        state.y + (in.a2 - in.b2 * state.y) * dt + in.sigma2 * truncated_power(state.y, in.alpha2) * (sqdt * xi[kInternal]);
    r.next.y = std::max(proposal, refl.m);
    b.regulator[n + 1] = b.regulator[n] + (proposal < refl.m ? refl.m - proposal : 0.0);
    b.x_zero_hits += r.x_proposal <= 0.0;
    state = r.next;
    b.s[n + 1] = state.s;
    b.x[n + 1] = state.x;
    b.y[n + 1] = state.y;
  }
  return b;
}

ComparisonPair simulate_comparison_pair(const ExternalParams& p, std::span<const double> u1,
                                        std::span<const double> u2, const GridSpec& grid, const RngStream& stream) {
  require(validate_for_simulation(p), "simulate_comparison_pair");
  check_grid(grid);
  if (u1.size() != grid.n_points() || u2.size() != grid.n_points())
    throw Error(ErrorCode::InvalidParams, "drivers need n_steps + 1 points");
  for (std::size_t i = 0; i < u1.size(); ++i) {
    if (!(u2[i] >= 0.0) || !(u1[i] >= u2[i]))
      throw Error(ErrorCode::DriverOrderViolated, "need u1 >= u2 >= 0 at grid point " + std::to_string(i));
  }
  const double dt = grid.dt();
  const double sqdt = std::sqrt(dt);
  ComparisonPair out;
  out.x1.resize(grid.n_points());
  out.x2.resize(grid.n_points());
  out.x1[0] = out.x2[0] = p.x0;
  for (std::size_t n = 0; n < grid.n_steps; ++n) {
    const double dW = sqdt * stream.normal(n, kExternal);
    const double a = out.x1[n];
    const double b = out.x2[n];
    out.x1[n + 1] = std::max(a + (p.a1 * u1[n] - p.b1 * a) * dt + p.sigma1 * truncated_power(a, p.alpha1) * dW, 0.0);
    out.x2[n + 1] = std::max(b + (p.a1 * u2[n] - p.b1 * b) * dt + p.sigma1 * truncated_power(b, p.alpha1) * dW, 0.0);
    out.violations += out.x1[n + 1] < out.x2[n + 1] - kOrderSlack;
  }
  return out;
}

}  // namespace dmr
