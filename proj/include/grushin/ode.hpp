#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "grushin/errors.hpp"

namespace grushin::ode {

struct Tolerances {
  double rel = 1e-12;
  double abs = 1e-14;
  double initial_step = 1e-3;
  double min_step = 1e-14;   // relative to |t|+1; smaller means underflow
  std::size_t max_steps = 5'000'000;
};

/// Step-size underflow or budget exhaustion; carries the last accepted state.
template <typename State>
class IntegrationError : public NumericError {
public:
  IntegrationError(const std::string& what, double t, State y)
      : NumericError(what), t_last(t), y_last(std::move(y)) {}
  double t_last;
  State y_last;
};

/// One accepted Dormand-Prince step with its continuous extension.
template <typename State>
struct DenseStep {
  double t0 = 0, t1 = 0;
  State r1, r2, r3, r4, r5;

  State operator()(double t) const {
    const double s = (t - t0) / (t1 - t0);
    const double s1 = 1.0 - s;
    return r1 + s * (r2 + s1 * (r3 + s * (r4 + s1 * r5)));
  }
};

/// Dormand-Prince 5(4) with Hairer's 4th-order dense output.
///
/// State is any fixed- or dynamic-size Eigen column vector (real or complex
/// scalar); RHS has signature `void(double t, const State& y, State& dydt)`.
/// Integration runs in either time direction.
template <typename State>
class DormandPrince {
public:
  using Rhs = std::function<void(double, const State&, State&)>;
  // Return false to stop after the step just accepted.
  using Observer = std::function<bool(const DenseStep<State>&)>;

  DormandPrince(Rhs rhs, Tolerances tol = {}) : rhs_(std::move(rhs)), tol_(tol) {}

  const Tolerances& tolerances() const { return tol_; }
  std::size_t steps_taken() const { return accepted_; }
  std::size_t steps_rejected() const { return rejected_; }

  /// Advance y from t0 to t1; returns the final time reached (t1 unless the
  /// observer stopped early).
  double integrate(double t0, double t1, State& y, const Observer& observe = {}) {
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    double t = t0;
    double h = h_next_ > 0 ? h_next_ : tol_.initial_step;
    State k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y, ytmp = y, ynew = y, err = y;
    rhs_(t, y, k1);
    std::size_t steps = 0;
    double err_prev = 1e-4;

    while (dir * (t1 - t) > 0) {
      if (++steps > tol_.max_steps) {
        throw IntegrationError<State>("ode: step budget exhausted", t, y);
      }
      const double min_h = tol_.min_step * (std::abs(t) + 1.0);
      if (h < min_h) throw IntegrationError<State>("ode: step size underflow", t, y);
      bool last = false;
      if (h >= dir * (t1 - t)) {
        h = dir * (t1 - t);
        last = true;
      }
      const double hs = dir * h;

      ytmp = y + hs * (a21 * k1);
      rhs_(t + c2 * hs, ytmp, k2);
      ytmp = y + hs * (a31 * k1 + a32 * k2);
      rhs_(t + c3 * hs, ytmp, k3);
      ytmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
      rhs_(t + c4 * hs, ytmp, k4);
      ytmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      rhs_(t + c5 * hs, ytmp, k5);
      ytmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      rhs_(t + hs, ytmp, k6);
      ynew = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      rhs_(t + hs, ynew, k7);
      err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double en = 0.0;
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        using std::abs;
        const double sc = tol_.abs + tol_.rel * std::max(double(abs(y[i])), double(abs(ynew[i])));
        const double q = double(abs(err[i])) / sc;
        en += q * q;
      }
      en = std::sqrt(en / static_cast<double>(y.size()));
      if (!std::isfinite(en)) {
        ++rejected_;
        h *= 0.2;
        continue;
      }

      if (en <= 1.0) {
        DenseStep<State> d;
        if (observe) {
          d.t0 = t;
          d.t1 = t + hs;
          d.r1 = y;
          d.r2 = ynew - y;
          d.r3 = hs * k1 - d.r2;
          d.r4 = d.r2 - hs * k7 - d.r3;
          d.r5 = hs * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
        }
        t = last ? t1 : t + hs;
        y = ynew;
        k1 = k7;
        ++accepted_;
        // PI step-size controller (Hairer & Wanner, beta = 0.04).
        const double fac = std::clamp(0.9 * std::pow(std::max(en, 1e-10), -0.7 / 5.0) *
                                          std::pow(err_prev, 0.04),
                                      0.2, 5.0);
        err_prev = std::max(en, 1e-4);
        if (!last) h_next_ = h * fac;
        h = h * fac;
        if (observe && !observe(d)) return t;
      } else {
        ++rejected_;
        h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
      }
    }
    return t;
  }

  void reset_step(double h) { h_next_ = h; }

private:
  Rhs rhs_;
  Tolerances tol_;
  double h_next_ = 0.0;
  std::size_t accepted_ = 0, rejected_ = 0;

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};

/// Root of g(y(t)) on a dense step by bisection; g must change sign on [t0, t1].
template <typename State, typename G>
double locate_event(const DenseStep<State>& step, G&& g, double tol) {
  double lo = step.t0, hi = step.t1;
  double glo = g(step(lo));
  for (int it = 0; it < 200 && std::abs(hi - lo) > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(step(mid));
    if ((gm > 0) == (glo > 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

} // namespace grushin::ode
