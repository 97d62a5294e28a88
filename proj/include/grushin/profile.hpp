#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace grushin {

/// Warp function f of the metric dx^2 + f(x)^2 dy^2 on the half-plane x > 0,
/// together with its first and second derivatives.
///
/// Power-law profiles f = x^{-alpha} use closed forms throughout; custom
/// profiles compose the supplied evaluators. A profile is immutable once
/// built and may be shared freely between threads.
class GrushinProfile {
public:
  enum class Kind { PowerLaw, Custom };
  using Fn = std::function<double(double)>;

  static GrushinProfile power_law(double alpha);

  // Analytic derivatives are expected; see with_finite_differences() otherwise.
  static GrushinProfile custom(std::string name, Fn f, Fn f1, Fn f2, double kappa);
  static GrushinProfile custom(std::string name, Fn f, Fn f1, Fn f2, Fn ratio1, Fn ratio2,
                               double kappa);

  // Derivatives by central differences. Flagged, because the effective
  // potential contains the cancellation 2ff'' - f'^2.
  static GrushinProfile with_finite_differences(std::string name, Fn f, double kappa);

  Kind kind() const { return kind_; }
  bool is_power_law() const { return kind_ == Kind::PowerLaw; }
  double alpha() const;  // PowerLaw only
  const std::string& name() const { return name_; }
  double kappa() const { return kappa_; }
  bool derivatives_are_numeric() const { return numeric_derivatives_; }

  double f(double x) const { return f_(x); }
  double f1(double x) const { return f1_(x); }
  double f2(double x) const { return f2_(x); }

  // Logarithmic derivatives f'/f and f''/f. Custom profiles whose f
  // overflows near x = 0 supply these directly.
  double log_d1(double x) const { return r1_(x); }
  double log_d2(double x) const { return r2_(x); }

  // Same profile as Custom: evaluators kept, closed forms no longer used.
  GrushinProfile as_custom() const;

  // f -> lambda f. Power laws become Custom with the scaled evaluators.
  GrushinProfile scaled(double lambda) const;

private:
  GrushinProfile() = default;

  Kind kind_ = Kind::Custom;
  double alpha_ = 0.0;
  std::string name_;
  double kappa_ = 1.0;
  bool numeric_derivatives_ = false;
  Fn f_, f1_, f2_, r1_, r2_;
};

/// The half-line potential of one Fourier fibre.
struct FibrePotential {
  double xi = 0.0;
  const GrushinProfile* profile = nullptr;

  FibrePotential(double xi_, const GrushinProfile& p) : xi(xi_), profile(&p) {}
  double operator()(double x) const;
};

double curvature(const GrushinProfile& p, double x);
double volume_density(const GrushinProfile& p, double x);
double effective_potential(const FibrePotential& pot, double x);
double effective_potential(const GrushinProfile& p, double xi, double x);

// (2ff'' - f'^2)/(4f^2) - 3/(4x^2); positive side is the confining one.
double confinement_gap(const GrushinProfile& p, double x);

// (2ff'' - f'^2) x^2 / f^2, the dimensionless ratio compared against 3.
double curvature_ratio(const GrushinProfile& p, double x);

std::vector<double> log_grid(double x_min, double x_max, std::size_t n);

struct ConditionResult {
  bool pass = true;
  std::optional<double> first_violation;  // sample x where it first failed
};

struct AssumptionReport {
  ConditionResult positive;          // (i)   f > 0
  ConditionResult bounded_below;     // (ii)  f >= kappa on (0, neighbourhood]
  ConditionResult smooth;            // (iii) f, f', f'' finite (C^2 proxy)
  ConditionResult convexity;         // (iv)  2ff'' - f'^2 >= 0
  double neighbourhood = 1.0;
  double grid_min = 0.0;
  double grid_max = 0.0;
  std::size_t grid_size = 0;

  bool all_pass() const {
    return positive.pass && bounded_below.pass && smooth.pass && convexity.pass;
  }
};

AssumptionReport check_assumptions(const GrushinProfile& p, std::span<const double> grid,
                                   double neighbourhood = 1.0);

// Profile description as read from a `key = value` config.
struct ProfileSpec {
  std::string kind = "power_law";  // power_law | custom
  double alpha = 1.0;
  std::string name;                // custom profiles: lambda_power | shifted_power | exp_inverse
  double lambda = 1.0;
};

ProfileSpec parse_profile_config(std::string_view text);
GrushinProfile make_profile(const ProfileSpec& spec);
std::vector<std::string> builtin_custom_profiles();

} // namespace grushin
