#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "grushin/profile.hpp"
#include "grushin/tridiagonal.hpp"

namespace grushin {

/// Positive solution phi of -phi'' + c/x^2 phi = 0 used to factor the fibre
/// wavefunction as u = phi w. For nu = sqrt(c + 1/4) > 0 it is
/// x^{1/2+nu} + b x^{1/2-nu}; at nu = 0 the logarithmic pair is used.
struct ReferenceSolution {
  double c = 0.0;
  double b = 1.0;
  double L = 1.0;  // only enters the logarithmic case
  double nu = 0.5;
  bool logarithmic = false;

  static ReferenceSolution make(double c, double b, double L);
  double operator()(double x) const;
  double derivative(double x) const;
};

struct GridOptions {
  double gamma = 0.05;          // spacing <= gamma x near the cutoff
  double h_max = 0.01;
  double resolution = 1.0;      // multiplies both spacings; 0.5 halves them
  double L_max = 40.0;
  double wall_potential = 2e3;  // outer wall placed where W first exceeds this past x = 2
  double reference_b = 1.0;     // weight of the singular branch of phi
  std::size_t min_points = 100;
};

/// Graded half-line grid on [eps, L] with a cell-wise weighted discretization
/// of -d^2/dx^2 + W in the variable w = u / phi:
///   K = edge stiffness 1 / int phi^-2 + lumped (W - c/x^2) phi^2,
///   M = lumped int phi^2.
/// Nodes, mass and stiffness do not depend on xi; only `potential` does.
struct FibreGrid {
  double eps = 0.0;
  double L = 0.0;
  double xi = 0.0;
  ReferenceSolution phi;
  Eigen::VectorXd x;          // nodes, x(0) = eps, x(n-1) = L
  Eigen::VectorXd mass;       // lumped int phi^2 over the dual cell
  Eigen::VectorXd stiffness;  // per edge, size n-1
  Eigen::VectorXd potential;  // W - c/x^2 at the nodes

  Eigen::Index size() const { return x.size(); }
  double min_spacing() const;
  double max_spacing() const;
  // max over nodes of spacing^2 * |W|; must stay below 0.5.
  double resolution_number() const;
  // Quadrature weights for |u|^2 dx at the nodes.
  Eigen::VectorXd u_weights() const;

  FibreGrid with_xi(double xi_new, const GrushinProfile& profile) const;
};

/// c used by phi: lim x^2 W at xi = 0, clamped to [-1/4, 100].
double reference_coefficient(const GrushinProfile& profile);

/// Grid resolving W_xi for every xi in `xis`; the outer wall is placed for the
/// smallest |xi| and the spacing for the largest.
FibreGrid make_fibre_grid(const GrushinProfile& profile, std::span<const double> xis, double eps,
                          const GridOptions& opts = {});
FibreGrid make_fibre_grid(const GrushinProfile& profile, double xi, double eps,
                          const GridOptions& opts = {});

/// Condition at the inner cutoff; the outer wall is always Dirichlet.
/// Robin means u'(eps) = beta u(eps). Matched keeps the ratio u'/u equal to
/// that of the reference solution phi (natural condition for w).
struct BoundaryCondition {
  enum class Kind { Dirichlet, Robin, Matched };
  Kind kind = Kind::Dirichlet;
  double beta = 0.0;

  static BoundaryCondition dirichlet() { return {Kind::Dirichlet, 0.0}; }
  static BoundaryCondition robin(double beta);
  static BoundaryCondition matched() { return {Kind::Matched, 0.0}; }
};

std::string to_string(const BoundaryCondition& bc);
BoundaryCondition parse_boundary_condition(const std::string& text);  // dirichlet | matched | robin:<beta>

/// Band matrices of the discretized fibre operator on the active nodes.
struct FibreOperator {
  Eigen::Index first = 0;     // index of the first active node (1 under Dirichlet)
  Eigen::VectorXd mass;       // diagonal M
  Eigen::VectorXd diag;       // diagonal of K
  Eigen::VectorXd off;        // off-diagonal of K (symmetric)
};

FibreOperator assemble(const FibreGrid& grid, const BoundaryCondition& bc);

struct FibreEvolutionState {
  std::shared_ptr<const FibreGrid> grid;
  BoundaryCondition bc;
  Eigen::VectorXcd w;  // u / phi on the active nodes
  double t = 0.0;

  double xi() const { return grid->xi; }
  Eigen::Index first() const;
  double norm() const;              // sqrt(sum m |w|^2), approximates ||u||_{L^2}
  double energy() const;            // <w, K w> / <w, M w>
  Eigen::VectorXcd u() const;       // wavefunction on all nodes, zero where inactive
  double mass_in(double a, double b) const;  // int_a^b |u|^2 over nodes in [a, b]
};

/// Unit-norm Gaussian exp(-(x-center)^2 / (2 width^2)) in u.
FibreEvolutionState gaussian_state(std::shared_ptr<const FibreGrid> grid, const BoundaryCondition& bc,
                                   double center = 2.0, double width = 0.3);

/// State from u values on all nodes of the grid.
FibreEvolutionState state_from_u(std::shared_ptr<const FibreGrid> grid, const BoundaryCondition& bc,
                                 const Eigen::VectorXcd& u);

/// Crank-Nicolson step (M + i dt/2 K) w+ = (M - i dt/2 K) w, factored once.
/// The map is a Cayley transform, unitary in the M-inner product.
class FibrePropagator {
public:
  FibrePropagator(const FibreGrid& grid, const BoundaryCondition& bc, double dt);

  void step(FibreEvolutionState& state) const;
  double dt() const { return dt_; }
  const FibreOperator& op() const { return op_; }

private:
  FibreOperator op_;
  double dt_;
  TridiagonalLU<std::complex<double>> lu_;
  Eigen::VectorXcd rhs_diag_, rhs_off_;
};

FibreEvolutionState step_fibre(FibreEvolutionState state, double dt);

struct NormTrace {
  std::vector<double> t;
  std::vector<double> norm;
  double max_step_drift = 0.0;   // max | ||w_{n+1}|| - ||w_n|| |
  double cumulative_drift = 0.0; // max | ||w_n|| - ||w_0|| |
  std::size_t steps = 0;
};

/// Evolves to t_final with round(t_final/dt) steps, recording the norm every
/// `record_every` steps.
NormTrace evolve_fibre(FibreEvolutionState& state, double t_final, double dt,
                       std::size_t record_every = 1);

struct SensitivityOptions {
  double t_final = 1.0;
  double dt = 1e-3;
  std::vector<double> eps_grid = {1e-1, 1e-2, 1e-3};
  BoundaryCondition probe = BoundaryCondition::matched();
  GridOptions grid;
  double center = 2.0;
  double width = 0.3;
  double contamination_limit = 1e-8;  // mass beyond 0.9 L
};

struct SensitivityRow {
  double eps = 0.0;
  double D = 0.0;
  double L = 0.0;
  std::size_t nodes = 0;
  std::size_t steps = 0;
  double wall_mass = 0.0;
  double norm_drift = 0.0;  // worst cumulative drift of the two runs
};

struct SensitivityReport {
  double xi = 0.0;
  std::string profile;
  BoundaryCondition probe;
  std::vector<SensitivityRow> rows;
  double ratio = 0.0;        // D(last eps) / D(first eps)
  bool monotone_decreasing = false;
};

/// Distance at t_final between the Dirichlet evolution and the probe
/// evolution, for each inner cutoff. Throws ProtocolError if mass reaches the
/// outer wall.
SensitivityReport bc_sensitivity(const GrushinProfile& profile, double xi,
                                 const SensitivityOptions& opts = {}, unsigned jobs = 1);

enum class Representation { Original, Transformed };
std::string to_string(Representation r);

/// Wavefunction on a rectangular grid: rows are x nodes, columns y samples
/// (Original, in L^2(f dx dy)) or xi samples (Transformed, in L^2(dx dxi)).
/// The y-grid has an odd number N of points y_j = y0 + j dy; the dual grid is
/// xi_k = (k - (N-1)/2) dxi with dxi = 2 pi / (N dy). In cylinder mode
/// dy = 2 pi / N and the xi_k are the integer modes.
struct PlaneWavefunction {
  Representation representation = Representation::Original;
  bool cylinder = false;
  Eigen::VectorXd x;
  Eigen::VectorXd x_weights;
  double y0 = 0.0;
  double dy = 1.0;
  Eigen::MatrixXcd values;

  Eigen::Index ny() const { return values.cols(); }
  double dxi() const;
  Eigen::VectorXd y() const;
  Eigen::VectorXd xi() const;

  static PlaneWavefunction on_grid(const Eigen::VectorXd& x, const Eigen::VectorXd& x_weights,
                                   Eigen::Index ny, double dy, bool cylinder = false);
};

/// Discrete L^2 norm in the representation's own measure.
double norm(const PlaneWavefunction& psi, const GrushinProfile& profile);
/// Per-column squared norms (per fibre when Transformed).
Eigen::VectorXd column_norms_sq(const PlaneWavefunction& psi, const GrushinProfile& profile);

PlaneWavefunction to_transformed(const PlaneWavefunction& psi, const GrushinProfile& profile);
PlaneWavefunction from_transformed(const PlaneWavefunction& psi, const GrushinProfile& profile);

/// Gaussian centred at (x0, y0) whose transformed x-profile is
/// exp(-(x-x0)^2/(2 wx^2)), unit norm, in the Original representation.
PlaneWavefunction gaussian_plane(const FibreGrid& grid, const GrushinProfile& profile,
                                 Eigen::Index ny, double dy, double x0 = 2.0, double wx = 0.3,
                                 double y_center = 0.0, double wy = 1.0, bool cylinder = false);

struct FibreTrace {
  double xi = 0.0;
  NormTrace trace;
  double initial_norm_sq = 0.0;
  double final_norm_sq = 0.0;
  double boundary_mass = 0.0;  // int_eps^0.05 |u|^2 at t_final
};

struct PlaneEvolution {
  PlaneWavefunction psi;  // Transformed, or Original if requested
  std::vector<FibreTrace> fibres;
  double initial_norm = 0.0;
  double final_norm = 0.0;
  std::size_t steps = 0;
};

/// Fibre-by-fibre evolution of Transformed data on grid.x. Fibres are
/// independent and run on up to `jobs` threads; results are keyed by xi index.
PlaneEvolution evolve_plane(const PlaneWavefunction& psi0, const GrushinProfile& profile,
                            const FibreGrid& grid, const BoundaryCondition& bc, double t_final,
                            double dt, bool to_original = false, unsigned jobs = 1,
                            std::size_t record_every = 10);

} // namespace grushin
