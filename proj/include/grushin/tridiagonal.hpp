#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "grushin/errors.hpp"

namespace grushin {

/// LU factorization (no pivoting) of a tridiagonal matrix, reused across
/// many right-hand sides. `lower(i)` couples rows i+1 and i, `upper(i)` rows
/// i and i+1.
template <typename Scalar>
class TridiagonalLU {
public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  TridiagonalLU() = default;

  TridiagonalLU(const Vector& lower, const Vector& diag, const Vector& upper) {
    factor(lower, diag, upper);
  }

  void factor(const Vector& lower, const Vector& diag, const Vector& upper) {
    const Eigen::Index n = diag.size();
    if (lower.size() != n - 1 || upper.size() != n - 1) {
      throw UsageError("TridiagonalLU: inconsistent band sizes");
    }
    lower_ = lower;
    upper_ = upper;
    pivot_.resize(n);
    using std::abs;
    double scale = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) scale = std::max(scale, double(abs(diag(i))));
    pivot_(0) = diag(0);
    for (Eigen::Index i = 1; i < n; ++i) {
      if (double(abs(pivot_(i - 1))) <= 1e-300 + 1e-15 * scale) {
        throw NumericError("TridiagonalLU: vanishing pivot at row " + std::to_string(i - 1));
      }
      pivot_(i) = diag(i) - lower_(i - 1) / pivot_(i - 1) * upper_(i - 1);
    }
    if (double(abs(pivot_(n - 1))) <= 1e-300 + 1e-15 * scale) {
      throw NumericError("TridiagonalLU: vanishing pivot at last row");
    }
    // Solves only multiply.
    inv_pivot_ = pivot_.cwiseInverse();
    mult_.resize(n - 1);
    for (Eigen::Index i = 1; i < n; ++i) mult_(i - 1) = lower_(i - 1) * inv_pivot_(i - 1);
  }

  Eigen::Index size() const { return pivot_.size(); }

  // Overwrites x (holding the right-hand side) with the solution.
  void solve_in_place(Vector& x) const {
    const Eigen::Index n = pivot_.size();
    for (Eigen::Index i = 1; i < n; ++i) x(i) -= mult_(i - 1) * x(i - 1);
    x(n - 1) *= inv_pivot_(n - 1);
    for (Eigen::Index i = n - 2; i >= 0; --i) x(i) = (x(i) - upper_(i) * x(i + 1)) * inv_pivot_(i);
  }

  Vector solve(Vector rhs) const {
    solve_in_place(rhs);
    return rhs;
  }

private:
  Vector lower_, upper_, pivot_, inv_pivot_, mult_;
};

/// y = T x for the tridiagonal T given by its three bands.
template <typename Lower, typename Diag, typename Upper, typename X>
auto tridiagonal_apply(const Lower& lower, const Diag& diag, const Upper& upper, const X& x) {
  using Scalar = typename X::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y = diag.template cast<Scalar>().cwiseProduct(x);
  const Eigen::Index n = x.size();
  y.head(n - 1) += upper.template cast<Scalar>().cwiseProduct(x.tail(n - 1));
  y.tail(n - 1) += lower.template cast<Scalar>().cwiseProduct(x.head(n - 1));
  return y;
}

} // namespace grushin
