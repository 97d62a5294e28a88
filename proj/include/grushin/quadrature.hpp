#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <vector>

#include "grushin/errors.hpp"

namespace grushin::quad {

template <typename Scalar>
struct Result {
  Scalar value{};
  Scalar abs_error{};
  std::size_t evaluations = 0;
};

namespace detail {

// QUADPACK qk15 abscissae and weights on [-1, 1].
inline constexpr std::array<double, 8> xgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> wgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename Scalar, typename F>
Result<Scalar> kronrod15(F&& f, Scalar a, Scalar b) {
  const Scalar center = (a + b) / 2;
  const Scalar half = (b - a) / 2;
  const Scalar fc = f(center);
  Scalar kron = fc * Scalar(wgk[7]);
  Scalar gauss = fc * Scalar(wg[3]);
  for (int j = 0; j < 7; ++j) {
    const Scalar dx = half * Scalar(xgk[j]);
    const Scalar sum = f(center - dx) + f(center + dx);
    kron += Scalar(wgk[j]) * sum;
    if (j % 2 == 1) gauss += Scalar(wg[j / 2]) * sum;
  }
  using std::abs;
  return {kron * half, abs((kron - gauss) * half), 15};
}

} // namespace detail

/// Globally adaptive 7/15-point Gauss-Kronrod integration of f over [a, b].
///
/// The interval with the largest error estimate is bisected until the summed
/// estimate falls below max(abs_tol, rel_tol * |I|). Integrable endpoint
/// singularities are tolerated (no node sits on an endpoint) but converge
/// slowly; remove them by substitution where the form is known.
template <typename Scalar, typename F>
Result<Scalar> integrate(F&& f, Scalar a, Scalar b, Scalar abs_tol,
                         Scalar rel_tol = Scalar(0), std::size_t max_intervals = 2000) {
  struct Piece {
    Scalar a, b;
    Result<Scalar> r;
    bool operator<(const Piece& o) const { return r.abs_error < o.r.abs_error; }
  };
  std::priority_queue<Piece> heap;
  auto first = detail::kronrod15<Scalar>(f, a, b);
  Result<Scalar> total = first;
  heap.push({a, b, first});

  using std::abs;
  while (total.abs_error > std::max(abs_tol, rel_tol * abs(total.value))) {
    if (heap.size() >= max_intervals) {
      throw NumericError("quad::integrate: interval budget exhausted, error estimate " +
                         std::to_string(static_cast<double>(total.abs_error)));
    }
    Piece worst = heap.top();
    heap.pop();
    const Scalar mid = (worst.a + worst.b) / 2;
    if (!(mid > std::min(worst.a, worst.b) && mid < std::max(worst.a, worst.b))) {
      throw NumericError("quad::integrate: interval collapsed to machine precision");
    }
    auto left = detail::kronrod15<Scalar>(f, worst.a, mid);
    auto right = detail::kronrod15<Scalar>(f, mid, worst.b);
    total.value += left.value + right.value - worst.r.value;
    total.abs_error += left.abs_error + right.abs_error - worst.r.abs_error;
    total.evaluations += 30;
    heap.push({worst.a, mid, left});
    heap.push({mid, worst.b, right});
  }
  // Re-sum to shed accumulated cancellation from the running updates.
  Scalar value{}, err{};
  while (!heap.empty()) {
    value += heap.top().r.value;
    err += heap.top().r.abs_error;
    heap.pop();
  }
  total.value = value;
  total.abs_error = err;
  return total;
}

} // namespace grushin::quad
