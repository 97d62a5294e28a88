#include "doctest.h"

#include <cmath>
#include <numbers>

#include "grushin/errors.hpp"
#include "grushin/profile.hpp"
#include "support/generators.hpp"

using namespace grushin;

namespace {

// W built from f alone by central differences: an oracle that shares no code
// with the closed forms.
double fd_potential(const std::function<double(double)>& f, double xi, double x) {
  const double h = 1e-4 * x;
  const double f0 = f(x), fp = f(x + h), fm = f(x - h);
  const double d1 = (fp - fm) / (2 * h), d2 = (fp - 2 * f0 + fm) / (h * h);
  return xi * xi / (f0 * f0) + (2 * f0 * d2 - d1 * d1) / (4 * f0 * f0);
}

} // namespace

TEST_CASE("curvature of power laws") {
  CHECK(curvature(GrushinProfile::power_law(1), 1) == doctest::Approx(-2.0));
  CHECK(curvature(GrushinProfile::power_law(0), 5) == 0.0);
  CHECK(curvature(GrushinProfile::power_law(2), 2) == doctest::Approx(-1.5));
  CHECK_THROWS_AS(curvature(GrushinProfile::power_law(1), 0.0), DomainError);
  CHECK_THROWS_AS(curvature(GrushinProfile::power_law(1), -1.0), DomainError);
}

TEST_CASE("volume density") {
  CHECK(volume_density(GrushinProfile::power_law(1), 2) == doctest::Approx(0.5));
  CHECK(volume_density(GrushinProfile::power_law(0), 7) == 1.0);
  const auto e = make_profile({"custom", 1.0, "exp_inverse", 1.0});
  CHECK(volume_density(e, 1.0) == doctest::Approx(std::numbers::e));
  CHECK_THROWS_AS(volume_density(e, 0.0), DomainError);
}

TEST_CASE("effective potential examples") {
  CHECK(effective_potential(GrushinProfile::power_law(1), 0, 2) == doctest::Approx(3.0 / 16));
  CHECK(effective_potential(GrushinProfile::power_law(0), 3, 1) == doctest::Approx(9.0));
  // Closed form at alpha = -1, xi = 1/2 cancels exactly; the FD oracle agrees.
  const auto p = GrushinProfile::power_law(-1);
  CHECK(effective_potential(p, 0.5, 1) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(fd_potential([](double x) { return x; }, 0.5, 1.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-7));
  const FibrePotential pot(0.5, p);
  CHECK(pot(3.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(effective_potential(p, 0.5, 0.0), DomainError);
}

TEST_CASE("confinement gap") {
  CHECK(confinement_gap(GrushinProfile::power_law(1), 3) == doctest::Approx(0.0).scale(1.0));
  CHECK(confinement_gap(GrushinProfile::power_law(3), 1) == doctest::Approx(3.0));
  // Independent route: FD potential minus the 3/(4x^2) threshold.
  const double fd = fd_potential([](double x) { return std::pow(x, -3.0); }, 0.0, 1.0) - 0.75;
  CHECK(fd == doctest::Approx(3.0).epsilon(1e-6));
  const auto flat = GrushinProfile::power_law(0);
  CHECK(confinement_gap(flat, 1) == doctest::Approx(-0.75));
  CHECK(confinement_gap(flat, 1) == doctest::Approx(effective_potential(flat, 0, 1) - 0.75));
}

TEST_CASE("check_assumptions") {
  const auto grid = log_grid(1e-3, 10.0, 200);
  CHECK(check_assumptions(GrushinProfile::power_law(1), grid).all_pass());
  const auto neg = check_assumptions(GrushinProfile::power_law(-0.5), grid);
  CHECK_FALSE(neg.convexity.pass);
  REQUIRE(neg.convexity.first_violation);
  CHECK(*neg.convexity.first_violation == doctest::Approx(grid.front()));
  const auto one = GrushinProfile::custom(
      "one", [](double) { return 1.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }, 1.0);
  const auto r = check_assumptions(one, grid);
  CHECK(r.all_pass());
  CHECK(r.grid_size == grid.size());
  CHECK_THROWS_AS(check_assumptions(one, std::vector<double>{}), UsageError);
  // f = x^{-alpha} with alpha < 0 vanishes at 0, so (ii) fails.
  CHECK_FALSE(check_assumptions(GrushinProfile::power_law(-1), grid).bounded_below.pass);
}

TEST_CASE("power-law derivatives match central differences") {
  for (double a : {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0}) {
    const auto p = GrushinProfile::power_law(a);
    for (double x : log_grid(1e-3, 1e2, 60)) {
      const double h = 1e-5 * x;
      const double d1 = (p.f(x + h) - p.f(x - h)) / (2 * h);
      const double d2 = (p.f1(x + h) - p.f1(x - h)) / (2 * h);
      CHECK(p.f1(x) == doctest::Approx(d1).epsilon(1e-6).scale(1e-300));
      CHECK(p.f2(x) == doctest::Approx(d2).epsilon(1e-6).scale(1e-300));
    }
  }
}

TEST_CASE("custom branch reproduces the power-law closed form") {
  for (double a : {-2.0, -1.0, 0.0, 0.5, 1.0, 2.0}) {
    const auto p = GrushinProfile::power_law(a);
    const auto c = p.as_custom();
    CHECK_FALSE(c.is_power_law());
    for (double x : log_grid(1e-2, 1e2, 50)) {
      for (double xi : {0.0, 0.7, 3.0}) {
        const double ref = effective_potential(p, xi, x);
        CHECK(std::abs(effective_potential(c, xi, x) - ref) <= 1e-10 * std::max(1.0, std::abs(ref)));
      }
    }
  }
}

TEST_CASE("property: W(xi) - W(0) = xi^2 / f^2 on both branches") {
  gen::Source g(11);
  std::vector<GrushinProfile> profiles;
  for (double a : {-1.5, -0.5, 0.3, 1.0, 2.5}) {
    profiles.push_back(GrushinProfile::power_law(a));
    profiles.push_back(GrushinProfile::power_law(a).as_custom());
  }
  profiles.push_back(make_profile({"custom", 0.7, "shifted_power", 1.0}));
  for (int i = 0; i < 500; ++i) {
    const auto& p = g.pick(profiles);
    const double x = g.log_uniform(1e-2, 1e2), xi = g.uniform(-5, 5);
    const double lhs = effective_potential(p, xi, x) - effective_potential(p, 0.0, x);
    const double rhs = xi * xi / (p.f(x) * p.f(x));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9).scale(std::abs(effective_potential(p, 0.0, x)) + 1e-12));
  }
}

TEST_CASE("property: confinement-gap sign is invariant under f -> lambda f") {
  gen::Source g(12);
  for (int i = 0; i < 400; ++i) {
    const double a = g.uniform(-2.5, 3.0), lambda = g.log_uniform(1e-3, 1e3), x = g.log_uniform(1e-3, 1e2);
    const auto p = GrushinProfile::power_law(a);
    const double base = confinement_gap(p, x), scaled = confinement_gap(p.scaled(lambda), x);
    const double tol = 1e-9 / (x * x);
    if (std::abs(base) > tol) CHECK((base > 0) == (scaled > 0));
  }
}

TEST_CASE("property: W >= 0 wherever 2ff'' - f'^2 >= 0") {
  gen::Source g(13);
  for (int i = 0; i < 400; ++i) {
    const double a = g.uniform(0.0, 3.0), x = g.log_uniform(1e-3, 1e2), xi = g.uniform(-4, 4);
    CHECK(effective_potential(GrushinProfile::power_law(a), xi, x) >= 0.0);
  }
  const auto e = make_profile({"custom", 1.0, "exp_inverse", 1.0});
  for (double x : log_grid(1e-3, 1e2, 100)) CHECK(effective_potential(e, 1.0, x) >= 0.0);
}

TEST_CASE("exp_inverse stays finite where f overflows") {
  const auto e = make_profile({"custom", 1.0, "exp_inverse", 1.0});
  const double x = 1e-3;
  CHECK(std::isinf(e.f(x)));
  // W = (2 r2 - r1^2)/4 with r1 = -1/x^2, r2 = 2/x^3 + 1/x^4; xi^2/f^2 underflows.
  CHECK(effective_potential(e, 2.0, x) == doctest::Approx(1.0 / std::pow(x, 3) + 0.25 / std::pow(x, 4)));
  CHECK(curvature_ratio(e, 1.0) == doctest::Approx(5.0));
}

TEST_CASE("finite-difference profiles are flagged") {
  const auto p = GrushinProfile::with_finite_differences("cube", [](double x) { return std::pow(x, -1.5); }, 1.0);
  CHECK(p.derivatives_are_numeric());
  CHECK(effective_potential(p, 0.0, 0.5) ==
        doctest::Approx(effective_potential(GrushinProfile::power_law(1.5), 0.0, 0.5)).epsilon(1e-6));
}

TEST_CASE("profile config") {
  const auto s = parse_profile_config("# comment\nkind = power_law\nalpha = 0.25\n");
  CHECK(s.kind == "power_law");
  CHECK(s.alpha == 0.25);
  const auto c = parse_profile_config("[profile]\nkind = \"custom\"\nname = lambda_power\nlambda = 2 ; trailing\nalpha = 1\n");
  const auto p = make_profile(c);
  CHECK(p.f(2.0) == doctest::Approx(1.0));
  try {
    parse_profile_config("alpha = one");
    FAIL("expected UsageError");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("alpha") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_profile_config("alpha"), UsageError);
  CHECK_THROWS_AS(make_profile({"custom", 1.0, "nope", 1.0}), UsageError);
  CHECK_THROWS_AS(make_profile({"spline", 1.0, "", 1.0}), UsageError);
  for (const auto& name : builtin_custom_profiles()) {
    const auto q = make_profile({"custom", 1.0, name, 1.0});
    CHECK(check_assumptions(q, log_grid(1e-3, 10.0, 200)).all_pass());
  }
}
