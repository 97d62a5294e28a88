#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "grushin/profile.hpp"

namespace grushin {

enum class Endpoint { LimitPoint, LimitCircle };
enum class FibreMode { Plane, Cylinder };
enum class WeylMethod { AnalyticPowerLaw, InequalityGrid, NumericODE };

std::string to_string(Endpoint e);
std::string to_string(FibreMode m);
std::string to_string(WeylMethod m);

/// Endpoint classification of one fibre operator -d^2/dx^2 + W_xi on (0, inf).
/// Infinity is always limit-point, so the deficiency is 1 exactly when the
/// endpoint at zero is limit-circle.
struct WeylReport {
  double xi = 0.0;
  FibreMode mode = FibreMode::Plane;
  Endpoint endpoint_zero = Endpoint::LimitPoint;
  Endpoint endpoint_infinity = Endpoint::LimitPoint;
  int deficiency = 0;
  WeylMethod method = WeylMethod::AnalyticPowerLaw;
  double near_zero_coefficient = 0.0;  // lim x^2 W(x); may be +inf
};

// Limit-point at zero iff lim x^2 W >= 3/4.
inline constexpr double kLimitPointThreshold = 0.75;

/// lim_{x->0} x^2 W_{xi,alpha}(x) for f = x^{-alpha}:
/// alpha > -1: alpha(2+alpha)/4; alpha = -1: xi^2 - 1/4;
/// alpha < -1: +inf for xi != 0, alpha(2+alpha)/4 for xi = 0.
double power_law_near_zero_coefficient(double alpha, double xi);

WeylReport classify_power_law(double alpha, double xi, FibreMode mode);

enum class InequalityVerdict { ConfinementCondition, NoConfinementCondition, Inconclusive };
std::string to_string(InequalityVerdict v);

struct InequalityReport {
  InequalityVerdict verdict = InequalityVerdict::Inconclusive;
  double min_ratio = 0.0;                // min over grid of (2ff''-f'^2) x^2 / f^2
  double max_ratio = 0.0;
  std::optional<double> epsilon;         // 3 - max_ratio, when positive
  double grid_min = 0.0, grid_max = 0.0;
  std::size_t grid_size = 0;
};

/// Pointwise comparison of 2ff'' - f'^2 against 3 f^2 / x^2 on a sampled grid.
InequalityReport classify_by_inequality(const GrushinProfile& profile, std::span<const double> grid);

/// Extrapolated lim x^2 W(x) from samples on a geometric grid approaching 0.
struct IndicialFit {
  double c0 = 0.0;          // may be +/-inf when the samples diverge
  double exponent = 0.0;    // p in x^2 W ~ c0 + a x^p (negative when diverging)
  bool constant = false;    // samples agree to rounding
  double correction = 0.0;  // |c0 - innermost sample|, the extrapolated distance
};

IndicialFit fit_near_zero_coefficient(const FibrePotential& pot, std::span<const double> eps_grid);

// Roots s of s(s-1) = c; complex roots never occur for c >= -1/4.
std::pair<double, double> indicial_roots(double c);

struct NumericClassifyOptions {
  double x0 = 1.0;               // ODE start point
  double rho_threshold = 0.95;   // window-mass ratio at or above this => not L^2
  double coefficient_cap = 1e3;  // stop where |x^2 (W - i)| exceeds this
  double rel_tol = 1e-10;
};

struct NumericDiagnostics {
  IndicialFit fit;
  Endpoint fit_endpoint = Endpoint::LimitPoint;
  Endpoint ode_endpoint = Endpoint::LimitPoint;
  double mass_ratio[2] = {0.0, 0.0};  // per initial condition, innermost windows
  double x_end = 0.0;                 // innermost point reached by the ODE
};

/// Classification from an indicial fit, cross-checked by integrating
/// -u'' + W u = i u inward with two independent initial conditions and
/// testing local L^2 mass of both solutions near 0. Disagreement throws
/// InconclusiveError.
WeylReport classify_numeric(const FibrePotential& pot, std::span<const double> eps_grid,
                            FibreMode mode = FibreMode::Plane,
                            const NumericClassifyOptions& opts = {},
                            NumericDiagnostics* diagnostics = nullptr);

std::vector<double> default_eps_grid();  // 1e-2 ... 1e-8, one point per decade

enum class Verdict { EssentiallySelfAdjoint, NotEssentiallySelfAdjoint };
enum class TotalDeficiency { Zero, Finite, Infinite };
std::string to_string(Verdict v);
std::string to_string(TotalDeficiency d);

struct FailingRun {
  double from = 0.0, to = 0.0;
  std::size_t count = 0;
};

struct SelfAdjointnessVerdict {
  Verdict verdict = Verdict::EssentiallySelfAdjoint;
  FibreMode mode = FibreMode::Plane;
  std::vector<FailingRun> failing_runs;  // maximal runs of adjacent failing samples
  std::size_t failing_count = 0;
  std::size_t sample_count = 0;
  double grid_resolution = 0.0;          // smallest spacing between samples
  TotalDeficiency total_deficiency = TotalDeficiency::Zero;
  std::optional<std::size_t> finite_deficiency;  // cylinder mode, when Finite
  std::string failing_description;
};

/// Direct-integral (plane) or orthogonal-sum (cylinder) aggregation.
/// Plane: a failing set counts as positive measure when it contains two
/// adjacent samples; isolated failures are treated as measure zero.
/// Cylinder: any failing mode breaks essential self-adjointness; failures that
/// reach both ends of the sampled mode range are reported as Infinite.
SelfAdjointnessVerdict aggregate_verdict(std::span<const WeylReport> reports, FibreMode mode);

struct DeficiencyFunction {
  double xi = 0.0;
  Eigen::VectorXd t;          // log-grid, t = ln x, decreasing
  Eigen::VectorXcd v;         // u(x) = x^{1/2} v(ln x), normalized
  double norm = 0.0;          // after normalization (including analytic tail)
  double residual = 0.0;      // relative Numerov residual on the grid
  double inner_exponent = 0.0;  // local power s with u ~ x^s at the inner end
};

struct DeficiencyFamilyOptions {
  double x_min = 1e-6;
  double grid_step = 0.02;      // in ln x
  double decay_target = 40.0;   // integrated WKB decay at the outer start point
  double rel_tol = 1e-13;
};

struct DeficiencyFamilyReport {
  double alpha = 0.0;
  double j_from = 0.0, j_to = 0.0;
  double jp_from = 0.0, jp_to = 0.0;
  std::vector<DeficiencyFunction> family;        // samples in J
  std::vector<DeficiencyFunction> family_prime;  // samples in J'
  double max_residual = 0.0;
  double max_norm_error = 0.0;                   // max | ||phi_xi|| - 1 |
  double family_norm_sq = 0.0;                   // ||Phi_J||^2, expected |J|
  double cross_inner_product = 0.0;              // |<Phi_J, Phi_J'>|
  bool contradiction = false;                    // no L^2 solution found
};

/// The L^2-at-infinity solution of (A(xi)^* - i) phi = 0 for f = x^{-alpha}.
DeficiencyFunction solve_deficiency_function(double alpha, double xi,
                                             const DeficiencyFamilyOptions& opts = {});

/// Builds Phi_J(x, xi) = phi_xi(x) 1_J(xi) on xi_samples points of J (and of a
/// disjoint J'), reporting eigen-residuals, normalization, and orthogonality.
DeficiencyFamilyReport verify_deficiency_family(double alpha, double j_from, double j_to,
                                                int xi_samples, std::optional<double> jp_from = {},
                                                std::optional<double> jp_to = {},
                                                const DeficiencyFamilyOptions& opts = {},
                                                unsigned jobs = 1);

} // namespace grushin
