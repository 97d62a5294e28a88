#include "grushin/weyl.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <sstream>

#include "grushin/errors.hpp"
#include "grushin/ode.hpp"
#include "grushin/parallel.hpp"

namespace grushin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kThresholdSlack = 1e-9;
using cd = std::complex<double>;

bool is_limit_point(double c0) { return c0 >= kLimitPointThreshold - kThresholdSlack; }

WeylReport make_report(double xi, FibreMode mode, Endpoint zero, WeylMethod method, double c0) {
  WeylReport r;
  r.xi = xi;
  r.mode = mode;
  r.endpoint_zero = zero;
  r.deficiency = zero == Endpoint::LimitCircle ? 1 : 0;
  r.method = method;
  r.near_zero_coefficient = c0;
  return r;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

} // namespace

std::string to_string(Endpoint e) { return e == Endpoint::LimitPoint ? "LimitPoint" : "LimitCircle"; }
std::string to_string(FibreMode m) { return m == FibreMode::Plane ? "plane" : "cylinder"; }
std::string to_string(WeylMethod m) {
  switch (m) {
    case WeylMethod::AnalyticPowerLaw: return "AnalyticPowerLaw";
    case WeylMethod::InequalityGrid: return "InequalityGrid";
    case WeylMethod::NumericODE: return "NumericODE";
  }
  return "?";
}
std::string to_string(InequalityVerdict v) {
  switch (v) {
    case InequalityVerdict::ConfinementCondition: return "ConfinementCondition";
    case InequalityVerdict::NoConfinementCondition: return "NoConfinementCondition";
    case InequalityVerdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}
std::string to_string(Verdict v) {
  return v == Verdict::EssentiallySelfAdjoint ? "EssentiallySelfAdjoint" : "NotEssentiallySelfAdjoint";
}
std::string to_string(TotalDeficiency d) {
  switch (d) {
    case TotalDeficiency::Zero: return "Zero";
    case TotalDeficiency::Finite: return "Finite";
    case TotalDeficiency::Infinite: return "Infinite";
  }
  return "?";
}

double power_law_near_zero_coefficient(double alpha, double xi) {
  const double base = alpha * (2.0 + alpha) / 4.0;
  if (alpha > -1.0) return base;                // xi^2 x^{2 alpha + 2} -> 0
  if (alpha == -1.0) return xi * xi - 0.25;     // xi^2 term is itself inverse-square
  return xi == 0.0 ? base : kInf;               // xi^2 x^{2 alpha} dominates 1/x^2
}

WeylReport classify_power_law(double alpha, double xi, FibreMode mode) {
  const double c0 = power_law_near_zero_coefficient(alpha, xi);
  // Decide on factored forms so the thresholds alpha = 1, alpha = -3 and
  // |xi| = 1 are exact in floating point: c0 - 3/4 = (alpha-1)(alpha+3)/4.
  bool lp;
  if (alpha > -1.0) lp = (alpha - 1.0) * (alpha + 3.0) >= 0.0;
  else if (alpha == -1.0) lp = xi * xi >= 1.0;
  else lp = xi != 0.0 || (alpha - 1.0) * (alpha + 3.0) >= 0.0;
  return make_report(xi, mode, lp ? Endpoint::LimitPoint : Endpoint::LimitCircle,
                     WeylMethod::AnalyticPowerLaw, c0);
}

InequalityReport classify_by_inequality(const GrushinProfile& profile, std::span<const double> grid) {
  if (grid.size() < 200) throw UsageError("classify_by_inequality: grid needs at least 200 points");
  const auto assumptions = check_assumptions(profile, grid);
  if (!assumptions.all_pass()) {
    throw UsageError("classify_by_inequality: profile '" + profile.name() +
                     "' violates the standing assumptions on f");
  }
  InequalityReport rep;
  rep.min_ratio = kInf;
  rep.max_ratio = -kInf;
  for (double x : grid) {
    const double r = curvature_ratio(profile, x);
    rep.min_ratio = std::min(rep.min_ratio, r);
    rep.max_ratio = std::max(rep.max_ratio, r);
  }
  rep.grid_min = assumptions.grid_min;
  rep.grid_max = assumptions.grid_max;
  rep.grid_size = grid.size();

  // Relative slack: alpha = 1 gives the ratio 3 up to pow() rounding.
  constexpr double slack = 1e-12;
  if (rep.min_ratio >= 3.0 * (1.0 - slack)) {
    rep.verdict = InequalityVerdict::ConfinementCondition;
  } else if (rep.max_ratio < 3.0 * (1.0 - slack)) {
    rep.verdict = InequalityVerdict::NoConfinementCondition;
    rep.epsilon = 3.0 - rep.max_ratio;
  } else {
    rep.verdict = InequalityVerdict::Inconclusive;
  }
  return rep;
}

std::pair<double, double> indicial_roots(double c) {
  const double disc = std::sqrt(std::max(0.0, 0.25 + c));
  return {0.5 - disc, 0.5 + disc};
}

std::vector<double> default_eps_grid() {
  std::vector<double> g;
  for (int k = 2; k <= 8; ++k) g.push_back(std::pow(10.0, -k));
  return g;
}

IndicialFit fit_near_zero_coefficient(const FibrePotential& pot, std::span<const double> eps_grid) {
  if (eps_grid.size() < 3) throw UsageError("eps_grid: need at least 3 points");
  for (std::size_t i = 1; i < eps_grid.size(); ++i) {
    if (!(eps_grid[i] < eps_grid[i - 1]) || !(eps_grid[i] > 0.0)) {
      throw UsageError("eps_grid: must be strictly decreasing and positive");
    }
  }
  const std::size_t n = eps_grid.size();
  const double x1 = eps_grid[n - 3], x2 = eps_grid[n - 2], x3 = eps_grid[n - 1];
  const double ratio = x3 / x2;
  if (std::abs(std::log(x2 / x1) / std::log(ratio) - 1.0) > 1e-6) {
    throw UsageError("eps_grid: innermost points must be geometrically spaced");
  }
  auto g = [&](double x) { return x * x * pot(x); };
  const double g1 = g(x1), g2 = g(x2), g3 = g(x3);
  const double d1 = g2 - g1, d2 = g3 - g2;
  const double scale = std::max({1.0, std::abs(g1), std::abs(g2), std::abs(g3)});

  IndicialFit fit;
  if (!std::isfinite(g3)) {
    fit.c0 = g3;
    fit.exponent = -kInf;
    return fit;
  }
  if (std::abs(d1) <= 1e-12 * scale && std::abs(d2) <= 1e-12 * scale) {
    fit.c0 = g3;
    fit.constant = true;
    fit.exponent = kInf;
    return fit;
  }
  if (d1 * d2 <= 0.0) {
    // Tail not yet monotone; only acceptable when the last change is rounding.
    if (std::abs(d2) <= 1e-9 * scale) {
      fit.c0 = g3;
      fit.constant = true;
      fit.exponent = kInf;
      return fit;
    }
    throw InconclusiveError("indicial fit: x^2 W is not monotone on the innermost samples");
  }
  const double q = d2 / d1;  // = ratio^p for x^2 W ~ c0 + a x^p
  fit.exponent = std::log(q) / std::log(ratio);
  if (q >= 1.0 - 1e-9) {
    fit.c0 = d2 > 0 ? kInf : -kInf;
  } else {
    fit.c0 = g3 + d2 * q / (1.0 - q);  // Aitken extrapolation
    fit.correction = std::abs(fit.c0 - g3);
  }
  return fit;
}

namespace {

using OdeState = Eigen::Vector3cd;  // (v, dv/dt, accumulated mass)

// -u'' + W u = i u with u = x^{1/2} v(ln x) becomes v'' = (x^2 W + 1/4 - i x^2) v,
// and the L^2(dx) mass is int e^{2t} |v|^2 dt.
struct LogFormRhs {
  const FibrePotential* pot;
  void operator()(double t, const OdeState& y, OdeState& dy) const {
    const double x = std::exp(t);
    const cd k = cd(x * x * (*pot)(x) + 0.25, -x * x);
    dy(0) = y(1);
    dy(1) = k * y(0);
    dy(2) = cd(std::exp(2.0 * t) * std::norm(y(0)), 0.0);
  }
};

struct MassProfile {
  std::vector<double> log_mass;  // per window, ordered inward
  double t_end = 0.0;
};

MassProfile window_masses(const FibrePotential& pot, cd v0, cd dv0, double t0, double t_end,
                          double width, double rel_tol) {
  LogFormRhs rhs{&pot};
  ode::Tolerances tol;
  tol.rel = rel_tol;
  tol.abs = 1e-14;
  tol.initial_step = 1e-3;
  ode::DormandPrince<OdeState> dp(rhs, tol);
  OdeState y(v0, dv0, cd(0.0));
  double log_scale = 0.0;
  MassProfile prof;
  double t = t0;
  while (t > t_end + 1e-12) {
    const double next = std::max(t_end, t - width);
    y(2) = 0.0;
    dp.integrate(t, next, y);
    // Mass accumulates with dt < 0; the window's mass is -y(2).
    prof.log_mass.push_back(std::log(std::max(-y(2).real(), 1e-300)) + 2.0 * log_scale);
    const double n = std::sqrt(std::norm(y(0)) + std::norm(y(1)));
    if (n > 0) {
      y(0) /= n;
      y(1) /= n;
      log_scale += std::log(n);
    }
    t = next;
  }
  prof.t_end = t_end;
  return prof;
}

} // namespace

WeylReport classify_numeric(const FibrePotential& pot, std::span<const double> eps_grid,
                            FibreMode mode, const NumericClassifyOptions& opts,
                            NumericDiagnostics* diagnostics) {
  if (eps_grid.empty()) throw UsageError("eps_grid: empty");
  const double eps_max = *std::max_element(eps_grid.begin(), eps_grid.end());
  const double eps_min = *std::min_element(eps_grid.begin(), eps_grid.end());
  if (!(eps_max < opts.x0)) throw UsageError("eps_grid: must lie inside (0, x0)");
  if (std::log10(eps_max / eps_min) < 4.0 - 1e-9) {
    throw UsageError("eps_grid: must span at least 4 decades");
  }

  NumericDiagnostics diag;
  diag.fit = fit_near_zero_coefficient(pot, eps_grid);
  diag.fit_endpoint = is_limit_point(diag.fit.c0) ? Endpoint::LimitPoint : Endpoint::LimitCircle;
  // A limit still drifting toward 3/4 (e.g. logarithmically) cannot be placed
  // on either side by extrapolation, and the sampled range is too short for
  // the mass test to see divergence that slow.
  if (std::isfinite(diag.fit.c0) && diag.fit.correction > 1e-9 &&
      std::abs(diag.fit.c0 - kLimitPointThreshold) < 2.0 * diag.fit.correction) {
    std::ostringstream os;
    os << "classify_numeric: fitted c0 = " << diag.fit.c0 << " lies within twice its extrapolation correction ("
       << diag.fit.correction << ") of the threshold 3/4 at xi = " << pot.xi;
    throw InconclusiveError(os.str());
  }

  // Inner end of the ODE: eps_min, or earlier where the coefficient becomes
  // so large that the growth of the dominant solution is already decisive.
  const double t0 = std::log(opts.x0);
  double t_end = std::log(eps_min);
  {
    const int probes = 400;
    for (int i = 1; i <= probes; ++i) {
      const double t = t0 + (std::log(eps_min) - t0) * i / probes;
      const double x = std::exp(t);
      const double k = std::abs(cd(x * x * pot(x) + 0.25, -x * x));
      if (!(k <= opts.coefficient_cap)) {
        t_end = t0 + (std::log(eps_min) - t0) * (i - 1) / probes;
        break;
      }
    }
  }
  if (!(t_end < t0)) throw NumericError("classify_numeric: potential too large at x0");
  const double width = std::min(std::log(10.0), (t0 - t_end) / 4.0);

  bool all_l2 = true;
  const std::pair<cd, cd> initial[2] = {{cd(1.0), cd(0.0)}, {cd(0.0), cd(1.0)}};
  for (int k = 0; k < 2; ++k) {
    const auto prof =
        window_masses(pot, initial[k].first, initial[k].second, t0, t_end, width, opts.rel_tol);
    const std::size_t m = prof.log_mass.size();
    if (m < 2) throw NumericError("classify_numeric: too few mass windows");
    // The innermost window can be partial; compare the last two full ones.
    std::size_t last = m - 1;
    const double covered = (t0 - t_end) - width * static_cast<double>(m - 1);
    if (covered < 0.999 * width && m >= 3) last = m - 2;
    const double rho = std::exp(prof.log_mass[last] - prof.log_mass[last - 1]);
    diag.mass_ratio[k] = rho;
    if (!(rho < opts.rho_threshold)) all_l2 = false;
  }
  diag.ode_endpoint = all_l2 ? Endpoint::LimitCircle : Endpoint::LimitPoint;
  diag.x_end = std::exp(t_end);
  if (diagnostics) *diagnostics = diag;

  if (diag.ode_endpoint != diag.fit_endpoint) {
    std::ostringstream os;
    os << "classify_numeric: indicial fit (c0 = " << diag.fit.c0 << ", " << to_string(diag.fit_endpoint)
       << ") disagrees with ODE integrability test (mass ratios " << diag.mass_ratio[0] << ", "
       << diag.mass_ratio[1] << ", " << to_string(diag.ode_endpoint) << ") at xi = " << pot.xi;
    throw InconclusiveError(os.str());
  }
  return make_report(pot.xi, mode, diag.fit_endpoint, WeylMethod::NumericODE, diag.fit.c0);
}

SelfAdjointnessVerdict aggregate_verdict(std::span<const WeylReport> reports, FibreMode mode) {
  if (reports.empty()) throw UsageError("aggregate_verdict: no reports");
  for (const auto& r : reports) {
    if (r.mode != mode) throw UsageError("aggregate_verdict: reports mix plane and cylinder modes");
  }
  std::vector<WeylReport> sorted(reports.begin(), reports.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const WeylReport& a, const WeylReport& b) { return a.xi < b.xi; });
  if (mode == FibreMode::Plane && sorted.size() < 2) {
    throw UsageError("aggregate_verdict: plane mode needs a xi-grid of at least 2 points");
  }

  SelfAdjointnessVerdict v;
  v.mode = mode;
  v.sample_count = sorted.size();
  v.grid_resolution = kInf;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    v.grid_resolution = std::min(v.grid_resolution, sorted[i].xi - sorted[i - 1].xi);
  }
  if (sorted.size() == 1) v.grid_resolution = 0.0;

  for (std::size_t i = 0; i < sorted.size();) {
    if (sorted[i].deficiency == 0) {
      ++i;
      continue;
    }
    FailingRun run{sorted[i].xi, sorted[i].xi, 0};
    while (i < sorted.size() && sorted[i].deficiency != 0) {
      run.to = sorted[i].xi;
      ++run.count;
      ++i;
    }
    v.failing_count += run.count;
    v.failing_runs.push_back(run);
  }

  const bool all_fail = v.failing_count == v.sample_count;
  if (mode == FibreMode::Plane) {
    const bool positive_measure = std::any_of(v.failing_runs.begin(), v.failing_runs.end(),
                                              [](const FailingRun& r) { return r.count >= 2; });
    v.verdict = positive_measure ? Verdict::NotEssentiallySelfAdjoint : Verdict::EssentiallySelfAdjoint;
    v.total_deficiency = positive_measure ? TotalDeficiency::Infinite : TotalDeficiency::Zero;
  } else {
    v.verdict = v.failing_count == 0 ? Verdict::EssentiallySelfAdjoint : Verdict::NotEssentiallySelfAdjoint;
    if (v.failing_count == 0) {
      v.total_deficiency = TotalDeficiency::Zero;
    } else if (sorted.front().deficiency != 0 && sorted.back().deficiency != 0) {
      v.total_deficiency = TotalDeficiency::Infinite;
    } else {
      v.total_deficiency = TotalDeficiency::Finite;
      v.finite_deficiency = v.failing_count;
    }
  }

  const std::string var = mode == FibreMode::Plane ? "xi" : "k";
  if (v.failing_count == 0) {
    v.failing_description = "none";
  } else if (all_fail) {
    v.failing_description = "all sampled " + var;
  } else {
    std::string d;
    for (const auto& r : v.failing_runs) {
      if (!d.empty()) d += "; ";
      if (r.count == 1) d += (mode == FibreMode::Plane ? "isolated " : "") + var + " = " + fmt(r.from);
      else d += var + " in [" + fmt(r.from) + ", " + fmt(r.to) + "] (" + std::to_string(r.count) + " samples)";
    }
    v.failing_description = d;
  }
  return v;
}

DeficiencyFunction solve_deficiency_function(double alpha, double xi,
                                             const DeficiencyFamilyOptions& opts) {
  const GrushinProfile profile = GrushinProfile::power_law(alpha);
  const FibrePotential pot(xi, profile);

  // Outer start: far enough that the decaying solution has dropped by
  // exp(-decay_target) relative to x ~ 1 (WKB estimate).
  double x_far = 1.0, decay = 0.0;
  while (decay < opts.decay_target) {
    const double x_next = x_far * 1.02;
    const double a = std::sqrt(cd(pot(x_far), -1.0)).real();
    const double b = std::sqrt(cd(pot(x_next), -1.0)).real();
    decay += 0.5 * (a + b) * (x_next - x_far);
    x_far = x_next;
    if (x_far > 1e6) throw NumericError("solve_deficiency_function: no decay at infinity");
  }

  const double h = opts.grid_step;
  const double t_max = std::log(x_far);
  const auto n = static_cast<Eigen::Index>(std::ceil((t_max - std::log(opts.x_min)) / h));

  DeficiencyFunction out;
  out.xi = xi;
  out.t.resize(n + 1);
  out.v.resize(n + 1);
  for (Eigen::Index j = 0; j <= n; ++j) out.t(j) = t_max - h * static_cast<double>(j);

  // Decaying branch: u'/u = -sqrt(W - i) with Re sqrt > 0.
  const cd root = std::sqrt(cd(pot(x_far), -1.0));
  OdeState y(cd(1.0), -x_far * root - 0.5, cd(0.0));

  LogFormRhs rhs{&pot};
  ode::Tolerances tol;
  tol.rel = opts.rel_tol;
  tol.abs = 1e-300;
  tol.initial_step = 1e-4;
  ode::DormandPrince<OdeState> dp(rhs, tol);
  out.v(0) = y(0);
  for (Eigen::Index j = 1; j <= n; ++j) {
    dp.integrate(out.t(j - 1), out.t(j), y);
    out.v(j) = y(0);
  }

  // u ~ x^s at the inner end; the tail int_0^{x_min} |u|^2 dx is finite iff 2s+1 > 0.
  const double t_in = out.t(n);
  const double x_in = std::exp(t_in);
  out.inner_exponent = 0.5 + (y(1) / y(0)).real();
  const double u_in_sq = x_in * std::norm(y(0));
  double mass = -y(2).real();
  if (2.0 * out.inner_exponent + 1.0 > 0.0) {
    mass += u_in_sq * x_in / (2.0 * out.inner_exponent + 1.0);
  } else {
    mass = kInf;
  }
  const double scale = std::isfinite(mass) ? 1.0 / std::sqrt(mass) : 0.0;
  out.v *= scale;
  out.norm = std::isfinite(mass) ? 1.0 : kInf;

  // Numerov residual of v'' = K v relative to the size of K v.
  double worst = 0.0, ref = 0.0;
  Eigen::VectorXcd kv(n + 1);
  for (Eigen::Index j = 0; j <= n; ++j) {
    const double x = std::exp(out.t(j));
    kv(j) = cd(x * x * pot(x) + 0.25, -x * x) * out.v(j);
    ref = std::max(ref, std::abs(kv(j)));
  }
  for (Eigen::Index j = 1; j < n; ++j) {
    const cd second = (out.v(j + 1) - 2.0 * out.v(j) + out.v(j - 1)) / (h * h);
    const cd r = second - (kv(j + 1) + 10.0 * kv(j) + kv(j - 1)) / 12.0;
    worst = std::max(worst, std::abs(r));
  }
  out.residual = ref > 0 ? worst / ref : kInf;
  return out;
}

DeficiencyFamilyReport verify_deficiency_family(double alpha, double j_from, double j_to,
                                                int xi_samples, std::optional<double> jp_from,
                                                std::optional<double> jp_to,
                                                const DeficiencyFamilyOptions& opts, unsigned jobs) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha: must lie in (0, 1)");
  if (!(j_to > j_from)) throw UsageError("J: need j_from < j_to");
  if (xi_samples < 8) throw UsageError("xi_samples: must be at least 8");

  DeficiencyFamilyReport rep;
  rep.alpha = alpha;
  rep.j_from = j_from;
  rep.j_to = j_to;
  rep.jp_from = jp_from.value_or(j_to + 1.0);
  rep.jp_to = jp_to.value_or(rep.jp_from + (j_to - j_from));
  if (!(rep.jp_to > rep.jp_from)) throw UsageError("J': need jp_from < jp_to");

  auto sample = [&](double a, double b) {
    std::vector<double> xs(static_cast<std::size_t>(xi_samples));
    for (int i = 0; i < xi_samples; ++i) xs[i] = a + (b - a) * i / (xi_samples - 1);
    return xs;
  };
  const auto xs = sample(j_from, j_to);
  const auto xps = sample(rep.jp_from, rep.jp_to);

  rep.family.resize(xs.size());
  rep.family_prime.resize(xps.size());
  parallel_for(xs.size() + xps.size(), jobs, [&](std::size_t i) {
    if (i < xs.size()) rep.family[i] = solve_deficiency_function(alpha, xs[i], opts);
    else rep.family_prime[i - xs.size()] = solve_deficiency_function(alpha, xps[i - xs.size()], opts);
  });

  // Trapezoid weights in xi.
  const double dxi = (j_to - j_from) / (xi_samples - 1);
  auto weight = [&](std::size_t i, std::size_t n) { return (i == 0 || i + 1 == n) ? 0.5 * dxi : dxi; };

  for (const auto* fam : {&rep.family, &rep.family_prime}) {
    for (const auto& phi : *fam) {
      if (!std::isfinite(phi.norm)) rep.contradiction = true;
      rep.max_residual = std::max(rep.max_residual, phi.residual);
      rep.max_norm_error = std::max(rep.max_norm_error, std::abs(phi.norm - 1.0));
    }
  }
  for (std::size_t i = 0; i < rep.family.size(); ++i) {
    rep.family_norm_sq += weight(i, rep.family.size()) * rep.family[i].norm * rep.family[i].norm;
  }

  // <Phi_J, Phi_J'> = int dxi 1_J 1_J' <phi_xi, phi_xi>: only xi in J ∩ J' contribute.
  double cross = 0.0;
  for (std::size_t i = 0; i < rep.family.size(); ++i) {
    const double xi = rep.family[i].xi;
    if (xi >= rep.jp_from && xi <= rep.jp_to) {
      cross += weight(i, rep.family.size()) * rep.family[i].norm * rep.family[i].norm;
    }
  }
  rep.cross_inner_product = std::abs(cross);
  return rep;
}

} // namespace grushin
