// Acceptance runner: `acceptance` runs every criterion, `acceptance <n>` one.
// Prints one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cli.hpp"
#include "grushin/evolution.hpp"
#include "grushin/geodesics.hpp"
#include "grushin/weyl.hpp"
#include "json.hpp"

using namespace grushin;
using nlohmann::json;
constexpr double pi = std::numbers::pi;

namespace tol {
constexpr double c1_seconds = 1.0;
constexpr double c2_seconds = 1.0;
constexpr double c4_seconds = 30.0;
constexpr double c5_hit = 1e-6;
constexpr double c5_known = 1e-8;
constexpr double c5_energy = 1e-9;
constexpr double c5_seconds = 10.0;
constexpr double c6_residual = 1e-6;
constexpr double c6_cross = 1e-10;
constexpr double c6_seconds = 30.0;
constexpr double c7_confining = 0.2;
constexpr double c7_open = 0.8;
constexpr double c7_stability = 0.10;
constexpr double c7_seconds = 300.0;
constexpr double c8_drift = 1e-6;
constexpr std::size_t c8_steps = 1000;
} // namespace tol

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

json classify(const std::vector<std::string>& args) {
  std::vector<std::string> all = {"grushin_cli", "classify"};
  all.insert(all.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : all) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) throw std::runtime_error("classify exited " + std::to_string(code) + ": " + err.str());
  return json::parse(out.str());
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Outcome c1() {
  Outcome o;
  int wrong = 0;
  for (int i = 0; i <= 20; ++i) {
    const double a = 0.1 * i;
    const json d = classify({"--mode", "plane", "--alpha", std::to_string(a)});
    const bool esa = d["verdict"]["verdict"] == "EssentiallySelfAdjoint";
    if (esa != (i >= 10)) {
      ++wrong;
      o.detail += "alpha=" + fmt(a) + " wrong; ";
    }
  }
  o.pass = wrong == 0;
  o.detail += "21 profiles, " + std::to_string(wrong) + " wrong";
  return o;
}

Outcome c2() {
  Outcome o;
  int wrong = 0;
  for (double a : {-4.0, -3.0, -2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0}) {
    const json d = classify({"--mode", "cylinder", "--alpha", std::to_string(a), "--k-max", "5"});
    for (const auto& f : d["fibres"]) {
      const double k = f["k"];
      int expected = 0;
      if (a > -3.0 && a <= -1.0) expected = k == 0.0 ? 1 : 0;
      if (a > -1.0 && a < 1.0) expected = 1;
      if (f["deficiency"].get<int>() != expected) {
        ++wrong;
        o.detail += "alpha=" + fmt(a) + " k=" + fmt(k) + " wrong; ";
      }
    }
  }
  o.pass = wrong == 0;
  o.detail += "110 modes, " + std::to_string(wrong) + " wrong";
  return o;
}

Outcome c3() {
  Outcome o;
  const json d = classify({"--mode", "plane", "--alpha", "-1", "--xi-min", "0", "--xi-max", "2", "--xi-count", "9"});
  int wrong = 0;
  for (const auto& f : d["fibres"]) {
    const double xi = f["xi"];
    const bool esa = f["deficiency"] == 0;
    if (esa != (std::abs(xi) >= 1.0)) {
      ++wrong;
      o.detail += "xi=" + fmt(xi) + " wrong; ";
    }
  }
  o.pass = wrong == 0 && d["fibres"].size() == 9;
  o.detail += "9 fibres, " + std::to_string(wrong) + " wrong";
  return o;
}

Outcome c4() {
  Outcome o;
  int wrong = 0, pairs = 0;
  for (double a : {-2.0, -1.0, -0.5, 0.0, 0.5, 0.9, 1.0, 1.5, 3.0}) {
    const auto p = GrushinProfile::power_law(a);
    for (double xi : {0.0, 0.5, 1.0, 2.0}) {
      ++pairs;
      try {
        const auto num = classify_numeric(FibrePotential(xi, p), default_eps_grid());
        if (num.endpoint_zero != classify_power_law(a, xi, FibreMode::Plane).endpoint_zero) {
          ++wrong;
          o.detail += "(" + fmt(a) + ", " + fmt(xi) + ") disagree; ";
        }
      } catch (const std::exception& e) {
        ++wrong;
        o.detail += "(" + fmt(a) + ", " + fmt(xi) + "): " + e.what() + "; ";
      }
    }
  }
  o.pass = wrong == 0 && pairs == 36;
  o.detail += std::to_string(pairs) + " pairs, " + std::to_string(wrong) + " disagree";
  return o;
}

Outcome c5() {
  Outcome o;
  double worst_hit = 0.0, worst_energy = 0.0;
  for (double a : {0.5, 1.0, 2.0}) {
    for (double th : {pi / 4, pi / 2, 3 * pi / 4, pi}) {
      GeodesicInitialData init;
      init.alpha = a;
      init.theta = th;
      const auto tr = integrate_geodesic(init, {-50.0, 50.0});
      const auto q = hit_time_quadrature(init);
      worst_energy = std::max(worst_energy, tr.energy_drift);
      if (!tr.hit_time_plus || !q) {
        o.pass = false;
        o.detail += "alpha=" + fmt(a) + " theta=" + fmt(th) + " no hit; ";
        continue;
      }
      worst_hit = std::max(worst_hit, std::abs(*tr.hit_time_plus - *q));
      const bool known_half = a == 0.5 && th == pi / 2, known_one = a == 1.0 && th == pi / 2;
      if (known_half || known_one) {
        const double exact = known_half ? 2.0 : pi / 2;
        const double err = std::max(std::abs(*tr.hit_time_plus - exact), std::abs(*q - exact));
        o.detail += "T(" + fmt(a) + ") err " + fmt(err) + "; ";
        if (err > tol::c5_known) o.pass = false;
      }
    }
  }
  if (worst_hit > tol::c5_hit || worst_energy > tol::c5_energy) o.pass = false;
  o.detail += "max |ODE - quadrature| " + fmt(worst_hit) + ", max energy drift " + fmt(worst_energy);
  return o;
}

Outcome c6() {
  Outcome o;
  const auto rep = verify_deficiency_family(0.5, 0.0, 1.0, 16);
  o.pass = rep.max_residual <= tol::c6_residual && rep.cross_inner_product <= tol::c6_cross && !rep.contradiction;
  o.detail = "max residual " + fmt(rep.max_residual) + ", cross " + fmt(rep.cross_inner_product) + " (J' = [" +
             fmt(rep.jp_from) + ", " + fmt(rep.jp_to) + "]), max norm error " + fmt(rep.max_norm_error);
  return o;
}

Outcome c7() {
  Outcome o;
  SensitivityOptions base;  // t_final 1, dt 1e-3, eps {1e-1, 1e-2, 1e-3}, matched probe, Gaussian at 2 width 0.3
  const unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  for (double a : {0.3, 0.5, 0.7, 1.0, 1.5, 2.0}) {
    const auto p = GrushinProfile::power_law(a);
    const auto coarse = bc_sensitivity(p, 0.5, base, jobs);
    SensitivityOptions fine = base;
    fine.grid.resolution = 0.5;
    const auto halved = bc_sensitivity(p, 0.5, fine, jobs);
    const double change = std::abs(halved.ratio - coarse.ratio) / coarse.ratio;
    const bool confining = a >= 1.0;
    const bool side = confining ? coarse.ratio < tol::c7_confining : coarse.ratio > tol::c7_open;
    const bool stable = change < tol::c7_stability;
    if (!side || !stable) o.pass = false;
    o.detail += "alpha=" + fmt(a) + ": " + fmt(coarse.ratio) + (side ? "" : " (wrong side)") + ", halved " +
                fmt(halved.ratio) + (stable ? "" : " (unstable)") + "; ";
  }
  return o;
}

Outcome c8() {
  Outcome o;
  double worst = 0.0;
  std::size_t runs = 0, fewest = static_cast<std::size_t>(-1);
  for (double a : {0.3, 0.5, 1.0, 1.5, 2.0}) {
    for (const char* bc : {"dirichlet", "matched", "robin:2"}) {
      auto grid = std::make_shared<const FibreGrid>(make_fibre_grid(GrushinProfile::power_law(a), 0.5, 1e-3));
      auto s = gaussian_state(grid, parse_boundary_condition(bc));
      const auto tr = evolve_fibre(s, 1.0, 1e-3, 0);
      worst = std::max(worst, tr.cumulative_drift);
      fewest = std::min(fewest, tr.steps);
      ++runs;
    }
  }
  const auto p = GrushinProfile::power_law(1.0);
  const Eigen::Index ny = 7;
  const double dy = 0.75;
  const std::vector<double> xis = {0.0, 2.0 * pi / (ny * dy) * ((ny - 1) / 2)};
  const auto grid = make_fibre_grid(p, xis, 1e-3);
  const auto psi = to_transformed(gaussian_plane(grid, p, ny, dy), p);
  const auto res = evolve_plane(psi, p, grid, BoundaryCondition::dirichlet(), 1.0, 1e-3, false,
                                std::max(1u, std::thread::hardware_concurrency()), 100);
  for (const auto& f : res.fibres) {
    worst = std::max(worst, f.trace.cumulative_drift);
    fewest = std::min(fewest, f.trace.steps);
    ++runs;
  }
  worst = std::max(worst, std::abs(res.final_norm - res.initial_norm));
  o.pass = worst <= tol::c8_drift && fewest >= tol::c8_steps;
  o.detail = std::to_string(runs) + " runs, >= " + std::to_string(fewest) + " steps, max cumulative drift " +
             fmt(worst);
  return o;
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
  double budget_seconds;  // 0: no runtime bound
};

} // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {"plane threshold alpha in [0, 2]", c1, tol::c1_seconds},
      {"cylinder table", c2, tol::c2_seconds},
      {"alpha = -1 xi-resolved split", c3, 0.0},
      {"analytic/numeric agreement", c4, tol::c4_seconds},
      {"geodesic hit times", c5, tol::c5_seconds},
      {"deficiency family", c6, tol::c6_seconds},
      {"confinement dichotomy", c7, tol::c7_seconds},
      {"unitarity", c8, 0.0},
  };
  std::vector<int> which;
  if (argc > 1) {
    const int n = std::atoi(argv[1]);
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "usage: acceptance [1-%zu]\n", criteria.size());
      return 2;
    }
    which.push_back(n);
  } else {
    for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) which.push_back(i);
  }
  bool all = true;
  for (int n : which) {
    const auto& c = criteria[static_cast<std::size_t>(n - 1)];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_seconds > 0.0 && secs > c.budget_seconds) {
      o.pass = false;
      o.detail += "; over time budget " + fmt(c.budget_seconds) + " s";
    }
    std::printf("criterion %d %s: %s (%.2f s) %s\n", n, o.pass ? "PASS" : "FAIL", c.name, secs, o.detail.c_str());
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
