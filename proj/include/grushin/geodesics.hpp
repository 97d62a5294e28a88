#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "grushin/ode.hpp"

namespace grushin {

/// Launch data for a unit-speed geodesic of g_alpha = dx^2 + x^{-2 alpha} dy^2.
/// theta is measured in the orthonormal frame {d/dx, x^alpha d/dy}, so the
/// initial momenta are P_x = cos(theta), P_y = sin(theta) x0^{-alpha}.
struct GeodesicInitialData {
  double x0 = 1.0;
  double y0 = 0.0;
  double theta = 0.0;
  double alpha = 1.0;

  double px0() const;
  double py() const;
};

struct GeodesicSample {
  double t, x, y, px, py;
};

struct TimeSpan {
  double t_min = -50.0;
  double t_max = 50.0;
};

struct GeodesicTrajectory {
  GeodesicInitialData init;
  std::vector<GeodesicSample> samples;  // ordered by t
  std::optional<double> hit_time_plus;
  std::optional<double> hit_time_minus;
  double energy_drift = 0.0;

  // Integrator metadata, recorded for reproducibility.
  std::string method = "dormand_prince_5(4), bisection on dense output";
  double rel_tol = 0.0;
  double abs_tol = 0.0;
  double event_tol = 0.0;
  double x_stop = 0.0;
};

struct GeodesicOptions {
  double x_stop = 1e-10;
  ode::Tolerances ode{1e-12, 1e-14, 1e-3, 1e-14, 5'000'000};
};

// h_alpha = (P_x^2 + x^{2 alpha} P_y^2) / 2
double geodesic_energy(double alpha, double x, double px, double py);

/// Integrates forward to span.t_max and backward to span.t_min, stopping each
/// direction when x falls below the floor; hit times are located on the
/// dense output to within `tol`.
GeodesicTrajectory integrate_geodesic(const GeodesicInitialData& init, TimeSpan span,
                                      double tol = 1e-10, const GeodesicOptions& opts = {});

/// Forward boundary hit time from the conserved energy, by quadrature.
/// Returns nullopt when the geodesic moves straight away from x = 0.
std::optional<double> hit_time_quadrature(const GeodesicInitialData& init, double abs_tol = 1e-12);

/// Fan of geodesics through (1, 0) with theta = 2 pi i / n_angles.
std::vector<GeodesicTrajectory> geodesic_fan(double alpha, int n_angles, TimeSpan span,
                                             unsigned jobs = 1, double tol = 1e-10);

nlohmann::ordered_json trajectory_summary(const GeodesicTrajectory& traj);
// `preamble` lines are written first, each prefixed with '# '.
void write_trajectory_csv(const std::filesystem::path& path, const GeodesicTrajectory& traj,
                          const std::string& preamble = {});
std::string trajectory_file_stem(const GeodesicTrajectory& traj);

} // namespace grushin
