#include "grushin/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "grushin/errors.hpp"
#include "grushin/parallel.hpp"
#include "grushin/weyl.hpp"

namespace grushin {

namespace {

using cd = std::complex<double>;

constexpr double kGaussX[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                               0.9602898564975363};
constexpr double kGaussW[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                               0.1012285362903763};

// 8-point Gauss-Legendre on [a, b].
template <typename F>
double gauss8(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s += kGaussW[i] * (f(mid - half * kGaussX[i]) + f(mid + half * kGaussX[i]));
  return s * half;
}

double residual_potential(const GrushinProfile& p, double xi, double c_ref, double x) {
  if (p.is_power_law()) {
    const double a = p.alpha();
    return xi * xi * std::pow(x, 2.0 * a) + (a * (2.0 + a) / 4.0 - c_ref) / (x * x);
  }
  return effective_potential(p, xi, x) - c_ref / (x * x);
}

} // namespace

ReferenceSolution ReferenceSolution::make(double c, double b, double L) {
  if (!(b >= 0.0) || !std::isfinite(b)) throw UsageError("reference_b: must be finite and >= 0");
  ReferenceSolution r;
  r.c = c;
  r.b = b;
  r.L = L;
  r.nu = std::sqrt(std::max(0.0, c + 0.25));
  r.logarithmic = r.nu < 1e-6;
  return r;
}

double ReferenceSolution::operator()(double x) const {
  if (logarithmic) return std::sqrt(x) * (1.0 + b * std::log(L / x));
  return std::pow(x, 0.5 + nu) + b * std::pow(x, 0.5 - nu);
}

double ReferenceSolution::derivative(double x) const {
  if (logarithmic) {
    const double r = 1.0 / std::sqrt(x);
    return 0.5 * r * (1.0 + b * std::log(L / x)) - b * r;
  }
  return (0.5 + nu) * std::pow(x, nu - 0.5) + b * (0.5 - nu) * std::pow(x, -0.5 - nu);
}

double FibreGrid::min_spacing() const { return (x.tail(size() - 1) - x.head(size() - 1)).minCoeff(); }
double FibreGrid::max_spacing() const { return (x.tail(size() - 1) - x.head(size() - 1)).maxCoeff(); }

double FibreGrid::resolution_number() const {
  double worst = 0.0;
  for (Eigen::Index j = 0; j + 1 < size(); ++j) {
    const double h = x(j + 1) - x(j);
    const double w0 = std::abs(potential(j) + phi.c / (x(j) * x(j)));
    const double w1 = std::abs(potential(j + 1) + phi.c / (x(j + 1) * x(j + 1)));
    worst = std::max(worst, h * h * std::max(w0, w1));
  }
  return worst;
}

Eigen::VectorXd FibreGrid::u_weights() const {
  Eigen::VectorXd w(size());
  for (Eigen::Index j = 0; j < size(); ++j) {
    const double p = phi(x(j));
    w(j) = mass(j) / (p * p);
  }
  return w;
}

FibreGrid FibreGrid::with_xi(double xi_new, const GrushinProfile& profile) const {
  FibreGrid g = *this;
  g.xi = xi_new;
  for (Eigen::Index j = 0; j < size(); ++j) g.potential(j) = residual_potential(profile, xi_new, phi.c, x(j));
  return g;
}

double reference_coefficient(const GrushinProfile& profile) {
  double c;
  if (profile.is_power_law()) {
    const double a = profile.alpha();
    c = a * (2.0 + a) / 4.0;
  } else {
    try {
      const auto grid = default_eps_grid();
      c = fit_near_zero_coefficient(FibrePotential(0.0, profile), grid).c0;
    } catch (const std::exception&) {
      c = 0.0;
    }
  }
  if (std::isnan(c)) c = 0.0;
  return std::clamp(c, -0.25, 100.0);
}

FibreGrid make_fibre_grid(const GrushinProfile& profile, std::span<const double> xis, double eps,
                          const GridOptions& opts) {
  if (xis.empty()) throw UsageError("make_fibre_grid: no xi values");
  if (!(eps > 0.0) || !(eps < 1.0)) throw UsageError("eps: must lie in (0, 1)");
  if (!(opts.resolution > 0.0) || !(opts.gamma > 0.0) || !(opts.h_max > 0.0)) {
    throw UsageError("grid spacing parameters must be positive");
  }
  if (!(opts.L_max > 2.0)) throw UsageError("L_max: must exceed 2");
  double xi_lo = std::abs(xis[0]), xi_hi = std::abs(xis[0]);
  for (double xi : xis) {
    xi_lo = std::min(xi_lo, std::abs(xi));
    xi_hi = std::max(xi_hi, std::abs(xi));
  }

  double L = opts.L_max;
  for (double x = 2.0; x < opts.L_max; x += 0.01) {
    if (effective_potential(profile, xi_lo, x) >= opts.wall_potential) {
      L = x;
      break;
    }
  }

  auto w_max = [&](double x) {
    return std::max(std::abs(effective_potential(profile, xi_lo, x)),
                    std::abs(effective_potential(profile, xi_hi, x)));
  };
  const double gamma = opts.gamma * opts.resolution;
  const double h_cap = opts.h_max * opts.resolution;
  std::vector<double> nodes{eps};
  while (nodes.back() < L) {
    const double x = nodes.back();
    double h = std::min(gamma * x, h_cap);
    for (int it = 0; it < 60; ++it) {
      const double w = std::max(w_max(x), w_max(x + h));
      if (h * h * w <= 0.49 * opts.resolution * opts.resolution) break;
      h *= 0.8;
    }
    if (x + h >= L - 0.3 * h) {
      nodes.push_back(L);
      break;
    }
    nodes.push_back(x + h);
  }

  FibreGrid g;
  g.eps = eps;
  g.L = L;
  g.xi = xis[0];
  g.phi = ReferenceSolution::make(reference_coefficient(profile), opts.reference_b, L);
  const auto n = static_cast<Eigen::Index>(nodes.size());
  if (static_cast<std::size_t>(n) < opts.min_points) {
    throw UsageError("fibre grid: fewer than " + std::to_string(opts.min_points) + " points");
  }
  g.x = Eigen::Map<const Eigen::VectorXd>(nodes.data(), n);
  g.mass = Eigen::VectorXd::Zero(n);
  g.stiffness.resize(n - 1);
  const auto& phi = g.phi;
  auto phi2 = [&](double x) { const double p = phi(x); return p * p; };
  auto inv_phi2 = [&](double x) { const double p = phi(x); return 1.0 / (p * p); };
  for (Eigen::Index j = 0; j + 1 < n; ++j) {
    const double a = g.x(j), b = g.x(j + 1), mid = 0.5 * (a + b);
    g.mass(j) += gauss8(phi2, a, mid);
    g.mass(j + 1) += gauss8(phi2, mid, b);
    g.stiffness(j) = 1.0 / gauss8(inv_phi2, a, b);
  }
  g.potential.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) g.potential(j) = residual_potential(profile, g.xi, phi.c, g.x(j));
  return g;
}

FibreGrid make_fibre_grid(const GrushinProfile& profile, double xi, double eps, const GridOptions& opts) {
  const double xis[1] = {xi};
  return make_fibre_grid(profile, std::span<const double>(xis, 1), eps, opts);
}

BoundaryCondition BoundaryCondition::robin(double beta) {
  if (!std::isfinite(beta)) throw UsageError("beta: must be finite");
  return {Kind::Robin, beta};
}

std::string to_string(const BoundaryCondition& bc) {
  switch (bc.kind) {
    case BoundaryCondition::Kind::Dirichlet: return "dirichlet";
    case BoundaryCondition::Kind::Matched: return "matched";
    case BoundaryCondition::Kind::Robin: {
      std::ostringstream os;
      os << "robin:" << bc.beta;
      return os.str();
    }
  }
  return "?";
}

BoundaryCondition parse_boundary_condition(const std::string& text) {
  if (text == "dirichlet") return BoundaryCondition::dirichlet();
  if (text == "matched") return BoundaryCondition::matched();
  if (text.rfind("robin", 0) == 0) {
    if (text == "robin") return BoundaryCondition::robin(1.0);
    if (text.size() > 6 && text[5] == ':') {
      try {
        std::size_t used = 0;
        const double beta = std::stod(text.substr(6), &used);
        if (used == text.size() - 6) return BoundaryCondition::robin(beta);
      } catch (const std::exception&) {
      }
    }
  }
  throw UsageError("bc: expected dirichlet, matched, robin or robin:<beta>, got '" + text + "'");
}

FibreOperator assemble(const FibreGrid& grid, const BoundaryCondition& bc) {
  const Eigen::Index n = grid.size();
  FibreOperator op;
  op.first = bc.kind == BoundaryCondition::Kind::Dirichlet ? 1 : 0;
  const Eigen::Index last = n - 2;  // node n-1 is the Dirichlet wall
  const Eigen::Index m = last - op.first + 1;
  op.mass = grid.mass.segment(op.first, m);
  op.diag.resize(m);
  op.off = -grid.stiffness.segment(op.first, m - 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index j = op.first + i;
    double d = grid.stiffness(j) + grid.potential(j) * grid.mass(j);
    if (j > 0) d += grid.stiffness(j - 1);
    op.diag(i) = d;
  }
  if (bc.kind == BoundaryCondition::Kind::Robin) {
    const double p = grid.phi(grid.eps);
    op.diag(0) += (bc.beta - grid.phi.derivative(grid.eps) / p) * p * p;
  }
  return op;
}

Eigen::Index FibreEvolutionState::first() const {
  return bc.kind == BoundaryCondition::Kind::Dirichlet ? 1 : 0;
}

double FibreEvolutionState::norm() const {
  const auto m = grid->mass.segment(first(), w.size());
  return std::sqrt(m.dot(w.cwiseAbs2()));
}

double FibreEvolutionState::energy() const {
  const FibreOperator op = assemble(*grid, bc);
  const Eigen::VectorXcd kw = tridiagonal_apply(op.off, op.diag, op.off, w);
  return w.dot(kw).real() / op.mass.dot(w.cwiseAbs2());
}

Eigen::VectorXcd FibreEvolutionState::u() const {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(grid->size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const Eigen::Index j = first() + i;
    out(j) = grid->phi(grid->x(j)) * w(i);
  }
  return out;
}

double FibreEvolutionState::mass_in(double a, double b) const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const Eigen::Index j = first() + i;
    if (grid->x(j) >= a && grid->x(j) <= b) s += grid->mass(j) * std::norm(w(i));
  }
  return s;
}

FibreEvolutionState state_from_u(std::shared_ptr<const FibreGrid> grid, const BoundaryCondition& bc,
                                 const Eigen::VectorXcd& u) {
  if (u.size() != grid->size()) throw UsageError("state_from_u: size mismatch with grid");
  if (!u.allFinite()) throw NumericError("state_from_u: non-finite samples");
  FibreEvolutionState s;
  s.grid = std::move(grid);
  s.bc = bc;
  const Eigen::Index first = s.first();
  const Eigen::Index m = s.grid->size() - 1 - first;
  s.w.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index j = first + i;
    s.w(i) = u(j) / s.grid->phi(s.grid->x(j));
  }
  return s;
}

FibreEvolutionState gaussian_state(std::shared_ptr<const FibreGrid> grid, const BoundaryCondition& bc,
                                   double center, double width) {
  if (!(width > 0.0)) throw UsageError("width: must be positive");
  Eigen::VectorXcd u(grid->size());
  for (Eigen::Index j = 0; j < grid->size(); ++j) {
    const double d = (grid->x(j) - center) / width;
    u(j) = std::exp(-0.5 * d * d);
  }
  auto s = state_from_u(std::move(grid), bc, u);
  const double n = s.norm();
  if (!(n > 0.0)) throw NumericError("gaussian_state: data not supported on the grid");
  s.w /= n;
  return s;
}

FibrePropagator::FibrePropagator(const FibreGrid& grid, const BoundaryCondition& bc, double dt)
    : op_(assemble(grid, bc)), dt_(dt) {
  if (!(dt > 0.0)) throw UsageError("dt: must be positive");
  const cd h(0.0, 0.5 * dt);
  const Eigen::VectorXcd band = h * op_.off.cast<cd>();
  const Eigen::VectorXcd diag = op_.mass.cast<cd>() + h * op_.diag.cast<cd>();
  lu_.factor(band, diag, band);
  rhs_diag_ = op_.mass.cast<cd>() - h * op_.diag.cast<cd>();
  rhs_off_ = -band;
}

void FibrePropagator::step(FibreEvolutionState& state) const {
  const Eigen::Index n = state.w.size();
  if (n != op_.mass.size()) throw UsageError("FibrePropagator: state does not match operator");
  Eigen::VectorXcd r = rhs_diag_.cwiseProduct(state.w);
  r.head(n - 1) += rhs_off_.cwiseProduct(state.w.tail(n - 1));
  r.tail(n - 1) += rhs_off_.cwiseProduct(state.w.head(n - 1));
  lu_.solve_in_place(r);
  state.w.swap(r);
  state.t += dt_;
}

FibreEvolutionState step_fibre(FibreEvolutionState state, double dt) {
  FibrePropagator(*state.grid, state.bc, dt).step(state);
  return state;
}

NormTrace evolve_fibre(FibreEvolutionState& state, double t_final, double dt, std::size_t record_every) {
  if (!(t_final >= 0.0)) throw UsageError("t_final: must be >= 0");
  if (!(dt > 0.0)) throw UsageError("dt: must be positive");
  const auto steps = static_cast<std::size_t>(std::llround(t_final / dt));
  NormTrace tr;
  tr.steps = steps;
  const double n0 = state.norm();
  tr.t.push_back(state.t);
  tr.norm.push_back(n0);
  if (steps == 0) return tr;
  const FibrePropagator prop(*state.grid, state.bc, t_final / static_cast<double>(steps));
  double prev = n0;
  for (std::size_t k = 1; k <= steps; ++k) {
    prop.step(state);
    const double n = state.norm();
    if (!std::isfinite(n)) throw NumericError("evolve_fibre: non-finite norm at step " + std::to_string(k));
    tr.max_step_drift = std::max(tr.max_step_drift, std::abs(n - prev));
    tr.cumulative_drift = std::max(tr.cumulative_drift, std::abs(n - n0));
    prev = n;
    if (record_every > 0 && (k % record_every == 0 || k == steps)) {
      tr.t.push_back(state.t);
      tr.norm.push_back(n);
    }
  }
  return tr;
}

SensitivityReport bc_sensitivity(const GrushinProfile& profile, double xi, const SensitivityOptions& opts,
                                 unsigned jobs) {
  if (opts.eps_grid.size() < 2) throw UsageError("eps_grid: need at least 2 values");
  for (std::size_t i = 1; i < opts.eps_grid.size(); ++i) {
    if (!(opts.eps_grid[i] < opts.eps_grid[i - 1])) throw UsageError("eps_grid: must be strictly decreasing");
  }
  if (!(opts.t_final > 0.0)) throw UsageError("t_final: must be positive");
  const std::size_t n = opts.eps_grid.size();
  std::vector<std::shared_ptr<const FibreGrid>> grids(n);
  for (std::size_t i = 0; i < n; ++i) {
    grids[i] = std::make_shared<const FibreGrid>(make_fibre_grid(profile, xi, opts.eps_grid[i], opts.grid));
    if (grids[i]->L < opts.center + 10.0 * opts.width) {
      throw ProtocolError("outer wall at L = " + std::to_string(grids[i]->L) +
                          " cuts into the initial data");
    }
  }

  std::vector<FibreEvolutionState> runs(2 * n);
  std::vector<NormTrace> traces(2 * n);
  parallel_for(2 * n, jobs, [&](std::size_t k) {
    const auto& g = grids[k / 2];
    const BoundaryCondition bc = k % 2 == 0 ? BoundaryCondition::dirichlet() : opts.probe;
    runs[k] = gaussian_state(g, bc, opts.center, opts.width);
    traces[k] = evolve_fibre(runs[k], opts.t_final, opts.dt, 0);
  });

  SensitivityReport rep;
  rep.xi = xi;
  rep.profile = profile.name();
  rep.probe = opts.probe;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& g = *grids[i];
    const auto& dir = runs[2 * i];
    const auto& probe = runs[2 * i + 1];
    SensitivityRow row;
    row.eps = opts.eps_grid[i];
    row.L = g.L;
    row.nodes = static_cast<std::size_t>(g.size());
    row.steps = traces[2 * i].steps;
    row.wall_mass = std::max(dir.mass_in(0.9 * g.L, g.L), probe.mass_in(0.9 * g.L, g.L));
    row.norm_drift = std::max(traces[2 * i].cumulative_drift, traces[2 * i + 1].cumulative_drift);
    if (row.wall_mass > opts.contamination_limit) {
      std::ostringstream os;
      os << "outer-wall contamination: mass " << row.wall_mass << " beyond 0.9 L (L = " << g.L
         << ", eps = " << row.eps << "); enlarge L";
      throw ProtocolError(os.str());
    }
    const Eigen::VectorXcd diff = dir.u() - probe.u();
    row.D = std::sqrt(g.u_weights().dot(diff.cwiseAbs2()));
    rep.rows.push_back(row);
  }
  rep.ratio = rep.rows.back().D / rep.rows.front().D;
  rep.monotone_decreasing = true;
  for (std::size_t i = 1; i < n; ++i) {
    if (!(rep.rows[i].D < rep.rows[i - 1].D)) rep.monotone_decreasing = false;
  }
  return rep;
}

std::string to_string(Representation r) { return r == Representation::Original ? "Original" : "Transformed"; }

double PlaneWavefunction::dxi() const {
  return 2.0 * std::numbers::pi / (static_cast<double>(ny()) * dy);
}

Eigen::VectorXd PlaneWavefunction::y() const {
  return Eigen::VectorXd::LinSpaced(ny(), 0.0, static_cast<double>(ny() - 1)).array() * dy + y0;
}

Eigen::VectorXd PlaneWavefunction::xi() const {
  const double m = static_cast<double>((ny() - 1) / 2);
  return (Eigen::VectorXd::LinSpaced(ny(), 0.0, static_cast<double>(ny() - 1)).array() - m) * dxi();
}

PlaneWavefunction PlaneWavefunction::on_grid(const Eigen::VectorXd& x, const Eigen::VectorXd& x_weights,
                                             Eigen::Index ny, double dy, bool cylinder) {
  if (ny < 1 || ny % 2 == 0) throw UsageError("ny: must be odd and positive");
  if (x.size() != x_weights.size()) throw UsageError("x_weights: size mismatch");
  PlaneWavefunction p;
  p.cylinder = cylinder;
  p.x = x;
  p.x_weights = x_weights;
  p.dy = cylinder ? 2.0 * std::numbers::pi / static_cast<double>(ny) : dy;
  if (!(p.dy > 0.0)) throw UsageError("dy: must be positive");
  p.y0 = -static_cast<double>((ny - 1) / 2) * p.dy;
  p.values = Eigen::MatrixXcd::Zero(x.size(), ny);
  return p;
}

Eigen::VectorXd column_norms_sq(const PlaneWavefunction& psi, const GrushinProfile& profile) {
  Eigen::VectorXd w = psi.x_weights;
  if (psi.representation == Representation::Original) {
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) *= profile.f(psi.x(i));
  }
  const double d = psi.representation == Representation::Original ? psi.dy : psi.dxi();
  return (psi.values.cwiseAbs2().transpose() * w) * d;
}

double norm(const PlaneWavefunction& psi, const GrushinProfile& profile) {
  return std::sqrt(column_norms_sq(psi, profile).sum());
}

PlaneWavefunction to_transformed(const PlaneWavefunction& psi, const GrushinProfile& profile) {
  if (psi.representation != Representation::Original) throw UsageError("to_transformed: expects Original data");
  if (!psi.values.allFinite()) throw NumericError("to_transformed: non-finite samples");
  const Eigen::Index N = psi.ny(), m = (N - 1) / 2;
  PlaneWavefunction out = psi;
  out.representation = Representation::Transformed;
  const Eigen::VectorXd xi = psi.xi();
  const double scale = psi.dy / std::sqrt(2.0 * std::numbers::pi);
  Eigen::FFT<double> fft;
  std::vector<cd> row(N), spec(N);
  for (Eigen::Index i = 0; i < psi.x.size(); ++i) {
    const double s = std::sqrt(profile.f(psi.x(i)));
    for (Eigen::Index j = 0; j < N; ++j) row[j] = s * psi.values(i, j);
    fft.fwd(spec, row);
    for (Eigen::Index k = 0; k < N; ++k) {
      const Eigen::Index idx = ((k - m) % N + N) % N;
      out.values(i, k) = scale * std::polar(1.0, -xi(k) * psi.y0) * spec[idx];
    }
  }
  if (!out.values.allFinite()) throw NumericError("to_transformed: f^{1/2} overflow on the x-grid");
  return out;
}

PlaneWavefunction from_transformed(const PlaneWavefunction& psi, const GrushinProfile& profile) {
  if (psi.representation != Representation::Transformed) {
    throw UsageError("from_transformed: expects Transformed data");
  }
  const Eigen::Index N = psi.ny(), m = (N - 1) / 2;
  PlaneWavefunction out = psi;
  out.representation = Representation::Original;
  const Eigen::VectorXd xi = psi.xi();
  const double scale = psi.dxi() * static_cast<double>(N) / std::sqrt(2.0 * std::numbers::pi);
  Eigen::FFT<double> fft;
  std::vector<cd> spec(N), row(N);
  for (Eigen::Index i = 0; i < psi.x.size(); ++i) {
    for (Eigen::Index k = 0; k < N; ++k) {
      const Eigen::Index idx = ((k - m) % N + N) % N;
      spec[idx] = psi.values(i, k) * std::polar(1.0, xi(k) * psi.y0);
    }
    fft.inv(row, spec);
    const double s = 1.0 / std::sqrt(profile.f(psi.x(i)));
    for (Eigen::Index j = 0; j < N; ++j) out.values(i, j) = scale * s * row[j];
  }
  return out;
}

PlaneWavefunction gaussian_plane(const FibreGrid& grid, const GrushinProfile& profile, Eigen::Index ny,
                                 double dy, double x0, double wx, double y_center, double wy, bool cylinder) {
  auto psi = PlaneWavefunction::on_grid(grid.x, grid.u_weights(), ny, dy, cylinder);
  const Eigen::VectorXd y = psi.y();
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double dx = (grid.x(i) - x0) / wx;
    const double gx = std::exp(-0.5 * dx * dx) / std::sqrt(profile.f(grid.x(i)));
    for (Eigen::Index j = 0; j < psi.ny(); ++j) {
      const double d = (y(j) - y_center) / wy;
      psi.values(i, j) = gx * std::exp(-0.5 * d * d);
    }
  }
  const double n = norm(psi, profile);
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericError("gaussian_plane: cannot normalize");
  psi.values /= n;
  return psi;
}

PlaneEvolution evolve_plane(const PlaneWavefunction& psi0, const GrushinProfile& profile, const FibreGrid& grid,
                            const BoundaryCondition& bc, double t_final, double dt, bool to_original,
                            unsigned jobs, std::size_t record_every) {
  if (psi0.representation != Representation::Transformed) {
    throw UsageError("evolve_plane: initial data must be Transformed");
  }
  if (psi0.x.size() != grid.size()) throw UsageError("evolve_plane: x-grid does not match the fibre grid");
  const Eigen::VectorXd xi = psi0.xi();
  const Eigen::Index N = psi0.ny();
  PlaneEvolution res;
  res.psi = psi0;
  res.fibres.resize(static_cast<std::size_t>(N));
  parallel_for(static_cast<std::size_t>(N), jobs, [&](std::size_t k) {
    const auto col = static_cast<Eigen::Index>(k);
    try {
      auto g = std::make_shared<const FibreGrid>(grid.with_xi(xi(col), profile));
      auto state = state_from_u(g, bc, psi0.values.col(col));
      FibreTrace& ft = res.fibres[k];
      ft.xi = xi(col);
      ft.initial_norm_sq = std::pow(state.norm(), 2);
      ft.trace = evolve_fibre(state, t_final, dt, record_every);
      ft.final_norm_sq = std::pow(state.norm(), 2);
      ft.boundary_mass = state.mass_in(grid.eps, 0.05);
      res.psi.values.col(col) = state.u();
    } catch (const NumericError& e) {
      std::ostringstream os;
      os << "fibre " << k << " (xi = " << xi(col) << "): " << e.what();
      throw NumericError(os.str());
    }
  });
  const double d = psi0.dxi();
  for (const auto& f : res.fibres) {
    res.initial_norm += f.initial_norm_sq * d;
    res.final_norm += f.final_norm_sq * d;
    res.steps = f.trace.steps;
  }
  res.initial_norm = std::sqrt(res.initial_norm);
  res.final_norm = std::sqrt(res.final_norm);
  if (to_original) res.psi = from_transformed(res.psi, profile);
  return res;
}

} // namespace grushin
