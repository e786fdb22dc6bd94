#include "dmr/model.h"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

#include "dmr/error.h"

namespace dmr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::WrongRegime: return "WrongRegime";
    case ErrorCode::NonErgodic: return "NonErgodic";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::InvalidReflection: return "InvalidReflection";
    case ErrorCode::DriverOrderViolated: return "DriverOrderViolated";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

CorrelationSpec CorrelationSpec::from_pairs(double rho_wW, double rho_wB, double rho_WB) {
  CorrelationSpec c;
  c.matrix[0][1] = c.matrix[1][0] = rho_wW;
  c.matrix[0][2] = c.matrix[2][0] = rho_wB;
  c.matrix[1][2] = c.matrix[2][1] = rho_WB;
  return c;
}

GridSpec GridSpec::with_step(double t_end, double dt) {
  const auto n = static_cast<std::size_t>(std::llround(t_end / dt));
  return GridSpec{static_cast<double>(n) * dt, n == 0 ? 1 : n};
}

bool ValidationReport::mentions(const std::string& constraint) const {
  for (const auto& v : violations) {
    if (v.constraint == constraint) return true;
  }
  return false;
}

std::string ValidationReport::to_string() const {
  if (ok()) return "ok";
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << violations[i].field << ": violates \"" << violations[i].constraint << "\"";
  }
  return os.str();
}

void ValidationReport::merge(const ValidationReport& other) {
  violations.insert(violations.end(), other.violations.begin(), other.violations.end());
}

namespace {

// Comparisons are phrased so that NaN always fails.
void check(ValidationReport& r, bool holds, const std::string& field, const std::string& constraint) {
  if (!holds) r.violations.push_back({field, constraint});
}

void check_exponent(ValidationReport& r, double alpha, const std::string& name) {
  check(r, alpha >= 0.5 && alpha <= 1.0, name, "0.5 <= " + name + " <= 1");
}

ValidationReport internal_common(const InternalParams& p) {
  ValidationReport r;
  check(r, p.a2 >= 0.0 && std::isfinite(p.a2), "a2", "a2 >= 0");
  check(r, p.b2 > 0.0 && std::isfinite(p.b2), "b2", "b2 > 0");
  check_exponent(r, p.alpha2, "alpha2");
  check(r, p.y0 > 0.0 && std::isfinite(p.y0), "y0", "y0 > 0");
  return r;
}

ValidationReport external_common(const ExternalParams& p) {
  ValidationReport r;
  check(r, p.a1 >= 0.0 && std::isfinite(p.a1), "a1", "a1 >= 0");
  check(r, p.b1 > 0.0 && std::isfinite(p.b1), "b1", "b1 > 0");
  check_exponent(r, p.alpha1, "alpha1");
  check(r, p.x0 > 0.0 && std::isfinite(p.x0), "x0", "x0 > 0");
  return r;
}

}  // namespace

ValidationReport validate(const InternalParams& p) {
  auto r = internal_common(p);
  check(r, p.sigma2 > 0.0 && std::isfinite(p.sigma2), "sigma2", "sigma2 > 0");
  return r;
}

ValidationReport validate(const ExternalParams& p) {
  auto r = external_common(p);
  check(r, p.sigma1 > 0.0 && std::isfinite(p.sigma1), "sigma1", "sigma1 > 0");
  return r;
}

ValidationReport validate(const CorrelationSpec& c) {
  ValidationReport r;
  const auto& m = c.matrix;
  bool finite = true;
  for (const auto& row : m)
    for (double v : row) finite = finite && std::isfinite(v);
  check(r, finite, "corr", "finite entries");
  if (!finite) return r;

  for (std::size_t i = 0; i < 3; ++i) {
    check(r, m[i][i] == 1.0, "corr", "unit diagonal");
    for (std::size_t j = i + 1; j < 3; ++j) {
      check(r, std::abs(m[i][j] - m[j][i]) <= kPsdTolerance, "corr", "symmetric");
      check(r, m[i][j] >= -1.0 && m[i][j] <= 1.0, "corr", "off-diagonal in [-1, 1]");
    }
  }
  if (r.ok()) check(r, min_eigenvalue(m) >= -kPsdTolerance, "corr", "positive semi-definite");
  return r;
}

ValidationReport validate(const ModelParams& p) {
  auto r = validate(p.internal);
  r.merge(validate(p.external));
  check(r, p.s0 > 0.0 && std::isfinite(p.s0), "s0", "s0 > 0");
  r.merge(validate(p.corr));
  return r;
}

ValidationReport validate(const ReflectionSpec& refl, const InternalParams& p) {
  ValidationReport r;
  check(r, refl.m > 0.0, "m", "m > 0");
  check(r, refl.m < p.y0, "m", "m < y0");
  return r;
}

ValidationReport validate(const GridSpec& g) {
  ValidationReport r;
  check(r, g.t_end > 0.0 && std::isfinite(g.t_end), "t_end", "t_end > 0");
  check(r, g.n_steps > 0, "n_steps", "n_steps > 0");
  check(r, g.n_steps < (std::size_t{1} << 32), "n_steps", "n_steps < 2^32");
  return r;
}

ValidationReport validate_for_simulation(const InternalParams& p) {
  auto r = internal_common(p);
  check(r, p.sigma2 >= 0.0 && std::isfinite(p.sigma2), "sigma2", "sigma2 >= 0");
  return r;
}

ValidationReport validate_for_simulation(const ExternalParams& p) {
  auto r = external_common(p);
  check(r, p.sigma1 >= 0.0 && std::isfinite(p.sigma1), "sigma1", "sigma1 >= 0");
  return r;
}

ValidationReport validate_for_simulation(const ModelParams& p) {
  auto r = validate_for_simulation(p.internal);
  r.merge(validate_for_simulation(p.external));
  check(r, p.s0 > 0.0 && std::isfinite(p.s0), "s0", "s0 > 0");
  r.merge(validate(p.corr));
  return r;
}

void require(const ValidationReport& report, const std::string& context) {
  if (!report.ok()) throw Error(ErrorCode::InvalidParams, context + ": " + report.to_string());
}

double min_eigenvalue(const Matrix3& m) {
  Eigen::Matrix3d a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = m[i][j];
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(a, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

Matrix3 cholesky_factor(const CorrelationSpec& corr) {
  const double lambda = min_eigenvalue(corr.matrix);
  if (!(lambda >= -kPsdTolerance)) {
    std::ostringstream os;
    os << "smallest eigenvalue " << lambda << " below -" << kPsdTolerance;
    throw Error(ErrorCode::NotPSD, os.str());
  }
  const auto& c = corr.matrix;
  Matrix3 l{};
  for (std::size_t j = 0; j < 3; ++j) {
    double d = c[j][j];
    for (std::size_t k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
    // A vanishing pivot of a PSD matrix implies the whole remaining column vanishes.
    if (d <= kPsdTolerance) continue;
    l[j][j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < 3; ++i) {
      double s = c[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      l[i][j] = s / l[j][j];
    }
  }
  return l;
}

std::array<double, 3> multiply(const Matrix3& lower, const std::array<double, 3>& v) {
  return {lower[0][0] * v[0],
          lower[1][0] * v[0] + lower[1][1] * v[1],
          lower[2][0] * v[0] + lower[2][1] * v[1] + lower[2][2] * v[2]};
}

}  // namespace dmr
