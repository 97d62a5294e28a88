#include "grushin/geodesics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "grushin/errors.hpp"
#include "grushin/parallel.hpp"
#include "grushin/quadrature.hpp"

namespace grushin {

namespace {

// (x, P_x, y); P_y is a constant of motion and stays outside the state.
using State = Eigen::Vector3d;

// |x|^{2a} extension keeps trial stages with x < 0 finite near the boundary.
void geodesic_rhs(double alpha, double py, const State& s, State& ds) {
  const double x = s(0);
  const double ax = std::abs(x);
  const double sgn = x < 0 ? -1.0 : 1.0;
  ds(0) = s(1);
  ds(1) = alpha == 0.0 ? 0.0 : -alpha * sgn * std::pow(ax, 2.0 * alpha - 1.0) * py * py;
  ds(2) = std::pow(ax, 2.0 * alpha) * py;
}

struct Leg {
  std::vector<GeodesicSample> samples;
  std::optional<double> hit;
  double drift = 0.0;
};

Leg integrate_leg(const GeodesicInitialData& init, double t_end, double tol,
                  const GeodesicOptions& opts) {
  const double alpha = init.alpha;
  const double py = init.py();
  const double e0 = geodesic_energy(alpha, init.x0, init.px0(), py);
  ode::DormandPrince<State> dp(
      [alpha, py](double, const State& s, State& ds) { geodesic_rhs(alpha, py, s, ds); }, opts.ode);

  Leg leg;
  State y(init.x0, init.px0(), init.y0);
  leg.samples.push_back({0.0, y(0), y(2), y(1), py});
  auto observe = [&](const ode::DenseStep<State>& step) {
    State end = step(step.t1);
    if (end(0) <= opts.x_stop) {
      const double th = ode::locate_event(
          step, [&](const State& s) { return s(0) - opts.x_stop; }, tol);
      const State at = step(th);
      leg.hit = th;
      leg.samples.push_back({th, at(0), at(2), at(1), py});
      leg.drift = std::max(leg.drift, std::abs(geodesic_energy(alpha, at(0), at(1), py) - e0));
      return false;
    }
    leg.samples.push_back({step.t1, end(0), end(2), end(1), py});
    leg.drift = std::max(leg.drift, std::abs(geodesic_energy(alpha, end(0), end(1), py) - e0));
    return true;
  };
  dp.integrate(0.0, t_end, y, observe);
  return leg;
}

} // namespace

double GeodesicInitialData::px0() const { return std::cos(theta); }

double GeodesicInitialData::py() const { return std::sin(theta) * std::pow(x0, -alpha); }

double geodesic_energy(double alpha, double x, double px, double py) {
  return 0.5 * (px * px + std::pow(std::abs(x), 2.0 * alpha) * py * py);
}

GeodesicTrajectory integrate_geodesic(const GeodesicInitialData& init, TimeSpan span, double tol,
                                      const GeodesicOptions& opts) {
  if (!(init.x0 > 0.0)) throw DomainError("integrate_geodesic: x0 must be positive");
  if (!(tol > 1e-13 && tol < 1e-3)) throw UsageError("tol: must lie in (1e-13, 1e-3)");
  if (!(span.t_min <= 0.0 && span.t_max >= 0.0)) {
    throw UsageError("t_span: must contain t = 0");
  }

  Leg fwd = integrate_leg(init, span.t_max, tol, opts);
  Leg bwd = integrate_leg(init, span.t_min, tol, opts);

  GeodesicTrajectory traj;
  traj.init = init;
  traj.samples.reserve(fwd.samples.size() + bwd.samples.size());
  for (auto it = bwd.samples.rbegin(); it != bwd.samples.rend(); ++it) traj.samples.push_back(*it);
  // t = 0 appears in both legs; keep one copy.
  traj.samples.insert(traj.samples.end(), fwd.samples.begin() + 1, fwd.samples.end());
  traj.hit_time_plus = fwd.hit;
  traj.hit_time_minus = bwd.hit;
  traj.energy_drift = std::max(fwd.drift, bwd.drift);
  traj.rel_tol = opts.ode.rel;
  traj.abs_tol = opts.ode.abs;
  traj.event_tol = tol;
  traj.x_stop = opts.x_stop;
  return traj;
}

std::optional<double> hit_time_quadrature(const GeodesicInitialData& init, double abs_tol) {
  const double a = init.alpha;
  if (!(a > 0.0)) throw DomainError("hit_time_quadrature: requires alpha > 0");
  if (!(init.x0 > 0.0)) throw DomainError("hit_time_quadrature: x0 must be positive");
  const double c = std::cos(init.theta);
  const double p = std::abs(init.py());
  // sin(theta) == 0 up to the rounding of theta itself.
  const bool horizontal = p <= 1e-15 * std::pow(init.x0, -a);

  if (horizontal) {
    if (c > 0.0) return std::nullopt;
    return init.x0;
  }

  // Turning point of x where the kinetic part vanishes: p^2 x_c^{2a} = 1.
  const double xc = std::pow(p, -1.0 / a);

  // I(b) = int_0^b dx / sqrt(1 - (x/xc)^{2a}), with x = xc (1 - u^2) to
  // remove the inverse-square-root singularity at x = xc.
  auto partial = [&](double b) {
    const double sigma = std::min(b / xc, 1.0);
    const double u0 = std::sqrt(std::max(0.0, 1.0 - sigma));
    auto integrand = [a](double u) {
      const double u2 = u * u;
      const double denom = -std::expm1(2.0 * a * std::log1p(-u2));
      if (u2 < 1e-12) return 2.0 / std::sqrt(2.0 * a) * (1.0 + (2.0 * a - 1.0) * u2 / 4.0);
      return 2.0 * u / std::sqrt(denom);
    };
    return xc * quad::integrate(integrand, u0, 1.0, abs_tol / (4.0 * xc), 1e-14).value;
  };

  if (c <= 0.0) return partial(init.x0);
  return 2.0 * partial(xc) - partial(init.x0);
}

std::vector<GeodesicTrajectory> geodesic_fan(double alpha, int n_angles, TimeSpan span,
                                             unsigned jobs, double tol) {
  if (n_angles < 2) throw UsageError("n_angles: must be at least 2");
  std::vector<GeodesicTrajectory> fan(static_cast<std::size_t>(n_angles));
  parallel_for(fan.size(), jobs, [&](std::size_t i) {
    GeodesicInitialData init;
    init.alpha = alpha;
    init.theta = 2.0 * std::numbers::pi * static_cast<double>(i) / n_angles;
    fan[i] = integrate_geodesic(init, span, tol);
  });
  return fan;
}

nlohmann::ordered_json trajectory_summary(const GeodesicTrajectory& traj) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::ordered_json {
    if (v) return *v;
    return nullptr;
  };
  nlohmann::ordered_json j;
  j["alpha"] = traj.init.alpha;
  j["theta"] = traj.init.theta;
  j["x0"] = traj.init.x0;
  j["y0"] = traj.init.y0;
  j["hit_time_plus"] = opt(traj.hit_time_plus);
  j["hit_time_minus"] = opt(traj.hit_time_minus);
  j["energy_drift"] = traj.energy_drift;
  j["samples"] = traj.samples.size();
  j["integrator"] = {{"method", traj.method},
                     {"rel_tol", traj.rel_tol},
                     {"abs_tol", traj.abs_tol},
                     {"event_tol", traj.event_tol},
                     {"x_stop", traj.x_stop}};
  return j;
}

void write_trajectory_csv(const std::filesystem::path& path, const GeodesicTrajectory& traj,
                          const std::string& preamble) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path.string());
  if (!preamble.empty()) {
    std::istringstream lines(preamble);
    for (std::string line; std::getline(lines, line);) out << "# " << line << '\n';
  }
  out << std::setprecision(17);
  out << "t,x,y,P_x,P_y\n";
  for (const auto& s : traj.samples) {
    out << s.t << ',' << s.x << ',' << s.y << ',' << s.px << ',' << s.py << '\n';
  }
}

std::string trajectory_file_stem(const GeodesicTrajectory& traj) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << "geodesic_alpha" << traj.init.alpha << "_theta"
     << traj.init.theta;
  return os.str();
}

} // namespace grushin
