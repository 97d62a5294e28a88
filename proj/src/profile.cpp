#include "grushin/profile.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "grushin/errors.hpp"

namespace grushin {

namespace {

void require_positive(double x, const char* op) {
  if (!(x > 0.0)) {
    throw DomainError(std::string(op) + ": x must be positive, got " + std::to_string(x));
  }
}

} // namespace

GrushinProfile GrushinProfile::power_law(double alpha) {
  GrushinProfile p;
  p.kind_ = Kind::PowerLaw;
  p.alpha_ = alpha;
  std::ostringstream os;
  os << "power_law(alpha=" << alpha << ")";
  p.name_ = os.str();
  p.kappa_ = 1.0;
  p.f_ = [alpha](double x) { return std::pow(x, -alpha); };
  p.f1_ = [alpha](double x) { return -alpha * std::pow(x, -alpha - 1.0); };
  p.f2_ = [alpha](double x) { return alpha * (alpha + 1.0) * std::pow(x, -alpha - 2.0); };
  p.r1_ = [alpha](double x) { return -alpha / x; };
  p.r2_ = [alpha](double x) { return alpha * (alpha + 1.0) / (x * x); };
  return p;
}

GrushinProfile GrushinProfile::custom(std::string name, Fn f, Fn f1, Fn f2, double kappa) {
  Fn r1 = [f, f1](double x) { return f1(x) / f(x); };
  Fn r2 = [f, f2](double x) { return f2(x) / f(x); };
  return custom(std::move(name), std::move(f), std::move(f1), std::move(f2), std::move(r1),
                std::move(r2), kappa);
}

GrushinProfile GrushinProfile::custom(std::string name, Fn f, Fn f1, Fn f2, Fn ratio1,
                                      Fn ratio2, double kappa) {
  if (!(kappa > 0.0)) throw UsageError("kappa: must be positive");
  GrushinProfile p;
  p.kind_ = Kind::Custom;
  p.name_ = std::move(name);
  p.kappa_ = kappa;
  p.f_ = std::move(f);
  p.f1_ = std::move(f1);
  p.f2_ = std::move(f2);
  p.r1_ = std::move(ratio1);
  p.r2_ = std::move(ratio2);
  return p;
}

GrushinProfile GrushinProfile::with_finite_differences(std::string name, Fn f, double kappa) {
  // Relative step; balances O(h^2) truncation against roundoff in f''.
  constexpr double rel_step = 1e-4;
  Fn d1 = [f](double x) {
    const double h = rel_step * x;
    return (f(x + h) - f(x - h)) / (2.0 * h);
  };
  Fn d2 = [f](double x) {
    const double h = rel_step * x;
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
  };
  GrushinProfile p = custom(std::move(name), std::move(f), std::move(d1), std::move(d2), kappa);
  p.numeric_derivatives_ = true;
  return p;
}

double GrushinProfile::alpha() const {
  if (kind_ != Kind::PowerLaw) throw UsageError("alpha: profile '" + name_ + "' is not a power law");
  return alpha_;
}

GrushinProfile GrushinProfile::as_custom() const {
  GrushinProfile p = *this;
  p.kind_ = Kind::Custom;
  return p;
}

GrushinProfile GrushinProfile::scaled(double lambda) const {
  if (!(lambda > 0.0)) throw UsageError("lambda: must be positive");
  GrushinProfile p = as_custom();
  p.name_ = name_ + "*" + std::to_string(lambda);
  p.kappa_ = kappa_ * lambda;
  p.f_ = [g = f_, lambda](double x) { return lambda * g(x); };
  p.f1_ = [g = f1_, lambda](double x) { return lambda * g(x); };
  p.f2_ = [g = f2_, lambda](double x) { return lambda * g(x); };
  return p;
}

double FibrePotential::operator()(double x) const { return effective_potential(*profile, xi, x); }

double curvature(const GrushinProfile& p, double x) {
  require_positive(x, "curvature");
  if (p.is_power_law()) {
    const double a = p.alpha();
    return -a * (a + 1.0) / (x * x);
  }
  return -p.log_d2(x);
}

double volume_density(const GrushinProfile& p, double x) {
  require_positive(x, "volume_density");
  return p.f(x);
}

double effective_potential(const GrushinProfile& p, double xi, double x) {
  require_positive(x, "effective_potential");
  if (p.is_power_law()) {
    const double a = p.alpha();
    return xi * xi * std::pow(x, 2.0 * a) + a * (2.0 + a) / (4.0 * x * x);
  }
  const double f = p.f(x);
  const double r1 = p.log_d1(x);
  const double r2 = p.log_d2(x);
  return xi * xi / (f * f) + (2.0 * r2 - r1 * r1) / 4.0;
}

double effective_potential(const FibrePotential& pot, double x) {
  return effective_potential(*pot.profile, pot.xi, x);
}

double confinement_gap(const GrushinProfile& p, double x) {
  require_positive(x, "confinement_gap");
  if (p.is_power_law()) {
    const double a = p.alpha();
    return (a - 1.0) * (a + 3.0) / (4.0 * x * x);
  }
  const double r1 = p.log_d1(x);
  const double r2 = p.log_d2(x);
  return (2.0 * r2 - r1 * r1) / 4.0 - 3.0 / (4.0 * x * x);
}

double curvature_ratio(const GrushinProfile& p, double x) {
  require_positive(x, "curvature_ratio");
  if (p.is_power_law()) {
    const double a = p.alpha();
    return a * (a + 2.0);
  }
  const double r1 = p.log_d1(x);
  const double r2 = p.log_d2(x);
  return (2.0 * r2 - r1 * r1) * x * x;
}

std::vector<double> log_grid(double x_min, double x_max, std::size_t n) {
  if (!(x_min > 0.0) || !(x_max > x_min) || n < 2) {
    throw UsageError("log_grid: need 0 < x_min < x_max and n >= 2");
  }
  std::vector<double> g(n);
  const double lo = std::log(x_min);
  const double step = (std::log(x_max) - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g[i] = std::exp(lo + step * static_cast<double>(i));
  g.front() = x_min;
  g.back() = x_max;
  return g;
}

AssumptionReport check_assumptions(const GrushinProfile& p, std::span<const double> grid,
                                   double neighbourhood) {
  if (grid.empty()) throw UsageError("check_assumptions: empty grid");
  if (!(neighbourhood > 0.0)) throw UsageError("neighbourhood: must be positive");

  AssumptionReport rep;
  rep.neighbourhood = neighbourhood;
  rep.grid_min = *std::min_element(grid.begin(), grid.end());
  rep.grid_max = *std::max_element(grid.begin(), grid.end());
  rep.grid_size = grid.size();
  if (!(rep.grid_min > 0.0)) throw UsageError("check_assumptions: grid must lie in (0, inf)");

  auto fail = [](ConditionResult& c, double x) {
    if (c.pass) {
      c.pass = false;
      c.first_violation = x;
    }
  };

  for (double x : grid) {
    const double f = p.f(x);
    const double r1 = p.log_d1(x);
    const double r2 = p.log_d2(x);
    if (!(f > 0.0)) fail(rep.positive, x);
    if (x <= neighbourhood && !(f >= p.kappa())) fail(rep.bounded_below, x);
    if (std::isnan(f) || !std::isfinite(r1) || !std::isfinite(r2)) fail(rep.smooth, x);
    // (2ff'' - f'^2)/f^2 = 2 r2 - r1^2; relative slack for the f == const case.
    const double lhs = 2.0 * r2 - r1 * r1;
    const double scale = 2.0 * std::abs(r2) + r1 * r1;
    if (!(lhs >= -1e-12 * scale)) fail(rep.convexity, x);
  }
  return rep;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_real(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw UsageError(key + ": not a real number: '" + value + "'");
  return out;
}

} // namespace

ProfileSpec parse_profile_config(std::string_view text) {
  ProfileSpec spec;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto c = line.find_first_of("#;"); c != std::string::npos) line.erase(c);
    const std::string t = trim(line);
    if (t.empty() || t.front() == '[') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError("profile config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key == "kind") spec.kind = value;
    else if (key == "alpha") spec.alpha = parse_real(key, value);
    else if (key == "name") spec.name = value;
    else if (key == "lambda") spec.lambda = parse_real(key, value);
  }
  return spec;
}

std::vector<std::string> builtin_custom_profiles() {
  return {"lambda_power", "shifted_power", "exp_inverse", "log_threshold"};
}

GrushinProfile make_profile(const ProfileSpec& spec) {
  if (spec.kind == "power_law") return GrushinProfile::power_law(spec.alpha);
  if (spec.kind != "custom") throw UsageError("kind: expected power_law or custom, got '" + spec.kind + "'");

  const double a = spec.alpha;
  if (spec.name == "lambda_power") {
    if (!(spec.lambda > 0.0)) throw UsageError("lambda: must be positive");
    return GrushinProfile::power_law(a).scaled(spec.lambda);
  }
  if (spec.name == "shifted_power") {
    // f = 1 + x^{-alpha}: power-law singularity, bounded below by 1.
    return GrushinProfile::custom(
        "shifted_power(alpha=" + std::to_string(a) + ")",
        [a](double x) { return 1.0 + std::pow(x, -a); },
        [a](double x) { return -a * std::pow(x, -a - 1.0); },
        [a](double x) { return a * (a + 1.0) * std::pow(x, -a - 2.0); }, 1.0);
  }
  if (spec.name == "exp_inverse") {
    // f = exp(1/x); log-derivatives in closed form since f overflows near 0.
    return GrushinProfile::custom(
        "exp_inverse", [](double x) { return std::exp(1.0 / x); },
        [](double x) { return -std::exp(1.0 / x) / (x * x); },
        [](double x) { return std::exp(1.0 / x) * (2.0 / (x * x * x) + 1.0 / (x * x * x * x)); },
        [](double x) { return -1.0 / (x * x); },
        [](double x) { return 2.0 / (x * x * x) + 1.0 / (x * x * x * x); }, 1.0);
  }
  if (spec.name == "log_threshold") {
    // f = x^{-1} L^alpha with L = 1 + ln(1 + 1/x). x^2 W -> 3/4 like alpha / ln(1/x),
    // so for alpha in (-1, 0) both classification routes sit on the threshold.
    auto L = [](double x) { return 1.0 + std::log1p(1.0 / x); };
    auto L1 = [](double x) { return -1.0 / (x * (x + 1.0)); };
    auto L2 = [](double x) { return (2.0 * x + 1.0) / (x * x * (x + 1.0) * (x + 1.0)); };
    auto r1 = [=](double x) { return -1.0 / x + a * L1(x) / L(x); };
    auto r2 = [=](double x) {
      const double l = L(x), d = L1(x);
      const double h2 = 1.0 / (x * x) + a * (L2(x) * l - d * d) / (l * l);
      const double h1 = r1(x);
      return h2 + h1 * h1;
    };
    auto f = [=](double x) { return std::pow(L(x), a) / x; };
    return GrushinProfile::custom(
        "log_threshold(alpha=" + std::to_string(a) + ")", f, [=](double x) { return f(x) * r1(x); },
        [=](double x) { return f(x) * r2(x); }, r1, r2, 1.0);
  }
  throw UsageError("name: unknown custom profile '" + spec.name + "'");
}

} // namespace grushin
