#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "grushin/errors.hpp"
#include "grushin/evolution.hpp"
#include "grushin/geodesics.hpp"
#include "grushin/parallel.hpp"
#include "grushin/profile.hpp"
#include "grushin/weyl.hpp"

namespace grushin::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// JSON has no infinities; keep them readable.
json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "+inf" : "-inf";
}

struct ProfileArgs {
  std::string file;
  ProfileSpec spec;
  CLI::Option *kind = nullptr, *alpha = nullptr, *name = nullptr, *lambda = nullptr;

  void add(CLI::App* app) {
    app->add_option("--profile-file", file, "profile config (kind = ..., alpha = ...)");
    kind = app->add_option("--kind", spec.kind, "power_law | custom");
    alpha = app->add_option("--alpha", spec.alpha, "power-law exponent");
    name = app->add_option("--name", spec.name, "built-in custom profile");
    lambda = app->add_option("--lambda", spec.lambda, "scale factor for f");
  }

  // Flags beat the profile file, which beats defaults.
  ProfileSpec resolve() const {
    if (file.empty()) return spec;
    std::ifstream in(file);
    if (!in) throw UsageError("profile-file: cannot read '" + file + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    ProfileSpec r = parse_profile_config(ss.str());
    if (kind->count()) r.kind = spec.kind;
    if (alpha->count()) r.alpha = spec.alpha;
    if (name->count()) r.name = spec.name;
    if (lambda->count()) r.lambda = spec.lambda;
    return r;
  }
};

json profile_json(const ProfileSpec& s) {
  json j;
  j["kind"] = s.kind;
  if (s.kind == "power_law") {
    j["alpha"] = s.alpha;
  } else {
    j["name"] = s.name;
    j["alpha"] = s.alpha;
    j["lambda"] = s.lambda;
  }
  return j;
}

FibreMode parse_mode(const std::string& m) {
  if (m == "plane") return FibreMode::Plane;
  if (m == "cylinder") return FibreMode::Cylinder;
  throw UsageError("mode: expected plane or cylinder, got '" + m + "'");
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw UsageError("out: cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

std::ofstream open_csv(const fs::path& path, const json& config) {
  std::ofstream out(path);
  if (!out) throw UsageError("out: cannot write " + path.string());
  out << "# config = " << config.dump() << '\n' << std::setprecision(17);
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("out: cannot create directory '" + dir + "'");
}

// ---------------------------------------------------------------- classify

struct ClassifyArgs {
  ProfileArgs profile;
  std::string mode = "plane";
  std::string method = "auto";
  double xi_min = -5.0, xi_max = 5.0;
  int xi_count = 41;
  int k_max = 5;
  std::string out;
};

json classify_config(const ClassifyArgs& a, const ProfileSpec& spec, unsigned jobs) {
  json c;
  c["command"] = "classify";
  c["profile"] = profile_json(spec);
  c["mode"] = a.mode;
  c["method"] = a.method;
  if (a.mode == "plane") {
    c["xi_min"] = a.xi_min;
    c["xi_max"] = a.xi_max;
    c["xi_count"] = a.xi_count;
  } else {
    c["k_max"] = a.k_max;
  }
  c["jobs"] = jobs;
  return c;
}

int run_classify(const ClassifyArgs& a, unsigned jobs, std::ostream& out) {
  const ProfileSpec spec = a.profile.resolve();
  const FibreMode mode = parse_mode(a.mode);
  if (a.method != "auto" && a.method != "analytic" && a.method != "inequality" && a.method != "numeric") {
    throw UsageError("method: expected auto, analytic, inequality or numeric");
  }
  std::vector<double> xs;
  if (mode == FibreMode::Plane) {
    if (a.xi_count < 2) throw UsageError("xi-count: plane mode needs at least 2 samples");
    if (!(a.xi_max > a.xi_min)) throw UsageError("xi-max: must exceed xi-min");
    for (int i = 0; i < a.xi_count; ++i) xs.push_back(a.xi_min + (a.xi_max - a.xi_min) * i / (a.xi_count - 1));
  } else {
    if (a.k_max < 0) throw UsageError("k-max: must be >= 0");
    for (int k = -a.k_max; k <= a.k_max; ++k) xs.push_back(k);
  }
  const GrushinProfile profile = make_profile(spec);
  std::string method = a.method;
  if (method == "auto") method = profile.is_power_law() ? "analytic" : "inequality";
  if (method == "analytic" && !profile.is_power_law()) {
    throw UsageError("method: analytic classification needs a power_law profile");
  }

  json doc;
  doc["config"] = classify_config(a, spec, jobs);
  std::vector<WeylReport> reports(xs.size());
  auto numeric = [&] {
    const auto eps = default_eps_grid();
    parallel_for(xs.size(), jobs, [&](std::size_t i) {
      reports[i] = classify_numeric(FibrePotential(xs[i], profile), eps, mode);
    });
  };
  if (method == "analytic") {
    for (std::size_t i = 0; i < xs.size(); ++i) reports[i] = classify_power_law(profile.alpha(), xs[i], mode);
  } else if (method == "numeric") {
    numeric();
  } else {
    const auto grid = log_grid(1e-8, 1.0, 400);
    const auto ir = classify_by_inequality(profile, grid);
    json ij;
    ij["verdict"] = to_string(ir.verdict);
    ij["min_ratio"] = num(ir.min_ratio);
    ij["max_ratio"] = num(ir.max_ratio);
    ij["epsilon"] = ir.epsilon ? num(*ir.epsilon) : json(nullptr);
    ij["grid"] = {{"x_min", ir.grid_min}, {"x_max", ir.grid_max}, {"points", ir.grid_size}};
    if (ir.verdict == InequalityVerdict::Inconclusive) {
      ij["deferred_to"] = "numeric";
      numeric();
    } else {
      const bool lp = ir.verdict == InequalityVerdict::ConfinementCondition;
      const double c0 = curvature_ratio(profile, grid.front()) / 4.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        WeylReport& r = reports[i];
        r.xi = xs[i];
        r.mode = mode;
        r.endpoint_zero = lp ? Endpoint::LimitPoint : Endpoint::LimitCircle;
        r.deficiency = lp ? 0 : 1;
        r.method = WeylMethod::InequalityGrid;
        r.near_zero_coefficient = c0;
      }
    }
    doc["inequality"] = ij;
  }

  const auto verdict = aggregate_verdict(reports, mode);
  doc["mode"] = to_string(mode);
  if (spec.kind == "power_law") doc["alpha"] = spec.alpha;
  else doc["profile"] = profile.name();
  json fibres = json::array();
  for (const auto& r : reports) {
    json f;
    f[mode == FibreMode::Plane ? "xi" : "k"] = r.xi;
    f["endpoint_zero"] = to_string(r.endpoint_zero);
    f["endpoint_infinity"] = to_string(r.endpoint_infinity);
    f["deficiency"] = r.deficiency;
    f["method"] = to_string(r.method);
    f["near_zero_coefficient"] = num(r.near_zero_coefficient);
    fibres.push_back(f);
  }
  doc["fibres"] = fibres;
  json v;
  v["verdict"] = to_string(verdict.verdict);
  v["total_deficiency"] = to_string(verdict.total_deficiency);
  if (verdict.finite_deficiency) v["deficiency_count"] = *verdict.finite_deficiency;
  v["failing_fibres"] = verdict.failing_description;
  json runs = json::array();
  for (const auto& r : verdict.failing_runs) runs.push_back({{"from", r.from}, {"to", r.to}, {"count", r.count}});
  v["failing_runs"] = runs;
  doc["verdict"] = v;
  doc["grid"] = {{"samples", verdict.sample_count},
                 {"resolution", verdict.grid_resolution},
                 {"min", xs.front()},
                 {"max", xs.back()}};
  if (mode == FibreMode::Plane) {
    doc["grid"]["note"] = "isolated failing samples are treated as a null set";
  }
  out << doc.dump(2) << '\n';
  if (!a.out.empty()) {
    ensure_dir(a.out);
    write_json(fs::path(a.out) / "classify.json", doc);
  }
  return kOk;
}

// --------------------------------------------------------------- geodesics

struct GeodesicArgs {
  ProfileArgs profile;
  int angles = 16;
  std::optional<double> theta;
  double x0 = 1.0;
  double t_min = -50.0, t_max = 50.0;
  double tol = 1e-10;
  std::string out = "results";
};

int run_geodesics(const GeodesicArgs& a, unsigned jobs, std::ostream& out) {
  const ProfileSpec spec = a.profile.resolve();
  if (spec.kind != "power_law") throw UsageError("kind: geodesics need a power_law profile");
  if (!a.theta && a.angles < 1) throw UsageError("angles: must be >= 1");
  if (!(a.x0 > 0.0)) throw UsageError("x0: must be positive");
  if (!(a.t_min <= 0.0 && a.t_max >= 0.0)) throw UsageError("t-min/t-max: span must contain 0");
  if (!(a.tol > 1e-13 && a.tol < 1e-3)) throw UsageError("tol: must lie in (1e-13, 1e-3)");

  json config;
  config["command"] = "geodesics";
  config["profile"] = profile_json(spec);
  if (a.theta) config["theta"] = *a.theta;
  else config["angles"] = a.angles;
  config["x0"] = a.x0;
  config["t_min"] = a.t_min;
  config["t_max"] = a.t_max;
  config["tol"] = a.tol;
  config["jobs"] = jobs;

  std::vector<double> thetas;
  if (a.theta) thetas.push_back(*a.theta);
  else for (int i = 0; i < a.angles; ++i) thetas.push_back(2.0 * std::numbers::pi * i / a.angles);

  std::vector<GeodesicTrajectory> trajs(thetas.size());
  std::vector<std::optional<double>> quad(thetas.size());
  parallel_for(thetas.size(), jobs, [&](std::size_t i) {
    GeodesicInitialData init;
    init.alpha = spec.alpha;
    init.x0 = a.x0;
    init.theta = thetas[i];
    trajs[i] = integrate_geodesic(init, {a.t_min, a.t_max}, a.tol);
    quad[i] = hit_time_quadrature(init);
  });

  ensure_dir(a.out);
  json manifest;
  manifest["config"] = config;
  json list = json::array();
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const std::string file = trajectory_file_stem(trajs[i]) + ".csv";
    write_trajectory_csv(fs::path(a.out) / file, trajs[i], "config = " + config.dump());
    json e;
    e["file"] = file;
    e["summary"] = trajectory_summary(trajs[i]);
    e["hit_time_quadrature"] = quad[i] ? json(*quad[i]) : json(nullptr);
    list.push_back(e);
  }
  manifest["trajectories"] = list;
  write_json(fs::path(a.out) / "manifest.json", manifest);
  out << "wrote " << trajs.size() << " trajectories and manifest.json to " << a.out << '\n';
  return kOk;
}

// ------------------------------------------------------------------ evolve

struct EvolveArgs {
  ProfileArgs profile;
  std::string protocol = "sensitivity";
  std::string mode = "plane";
  double xi = 0.5;
  std::vector<double> eps_list = {1e-1, 1e-2, 1e-3};
  double eps = 1e-3;
  std::string bc;
  double t_final = 1.0;
  double dt = 1e-3;
  double resolution = 1.0;
  double L_max = 40.0;
  double reference_b = 1.0;
  int ny = 21;
  double dy = 0.5;
  double y_width = 1.0;
  std::string snapshot = "csv";
  int record_every = 10;
  std::string out = "results";
};

json evolve_config(const EvolveArgs& a, const ProfileSpec& spec, const std::string& bc, unsigned jobs) {
  json c;
  c["command"] = "evolve";
  c["profile"] = profile_json(spec);
  c["protocol"] = a.protocol;
  if (a.protocol == "sensitivity") {
    c["xi"] = a.xi;
    c["eps_list"] = a.eps_list;
    c["probe"] = bc;
  } else {
    c["mode"] = a.mode;
    c["eps"] = a.eps;
    c["bc"] = bc;
    c["ny"] = a.ny;
    if (a.mode == "plane") c["dy"] = a.dy;
    c["y_width"] = a.y_width;
    c["snapshot"] = a.snapshot;
    c["record_every"] = a.record_every;
  }
  c["t_final"] = a.t_final;
  c["dt"] = a.dt;
  c["resolution"] = a.resolution;
  c["L_max"] = a.L_max;
  c["reference_b"] = a.reference_b;
  c["jobs"] = jobs;
  return c;
}

void write_snapshot(const fs::path& dir, const std::string& stem, const PlaneWavefunction& psi,
                    const GrushinProfile& profile, double t, const std::string& format, const json& config) {
  (void)profile;
  const Eigen::VectorXd y = psi.y();
  if (format == "csv") {
    auto out = open_csv(dir / (stem + ".csv"), config);
    out << "x,y,density\n";
    for (Eigen::Index i = 0; i < psi.x.size(); ++i) {
      for (Eigen::Index j = 0; j < psi.ny(); ++j) {
        out << psi.x(i) << ',' << y(j) << ',' << std::norm(psi.values(i, j)) << '\n';
      }
    }
  } else if (format == "raster") {
    std::ofstream bin(dir / (stem + ".f32"), std::ios::binary);
    if (!bin) throw UsageError("out: cannot write raster");
    for (Eigen::Index i = 0; i < psi.x.size(); ++i) {
      for (Eigen::Index j = 0; j < psi.ny(); ++j) {
        const float v = static_cast<float>(std::norm(psi.values(i, j)));
        bin.write(reinterpret_cast<const char*>(&v), sizeof v);
      }
    }
    json h;
    h["config"] = config;
    h["file"] = stem + ".f32";
    h["dtype"] = "float32";
    h["byte_order"] = "little";
    h["layout"] = "row-major, rows = x nodes, columns = y samples";
    h["quantity"] = "|psi(x, y)|^2, original representation";
    h["t"] = t;
    h["nx"] = psi.x.size();
    h["ny"] = psi.ny();
    h["y0"] = psi.y0;
    h["dy"] = psi.dy;
    h["x"] = std::vector<double>(psi.x.data(), psi.x.data() + psi.x.size());
    write_json(dir / (stem + ".json"), h);
  }
}

int run_evolve(const EvolveArgs& a, unsigned jobs, std::ostream& out) {
  const ProfileSpec spec = a.profile.resolve();
  if (a.protocol != "sensitivity" && a.protocol != "plane") {
    throw UsageError("protocol: expected sensitivity or plane");
  }
  if (!(a.t_final > 0.0)) throw UsageError("t-final: must be positive");
  if (!(a.dt > 0.0) || a.dt > a.t_final) throw UsageError("dt: must lie in (0, t-final]");
  if (!(a.resolution > 0.0)) throw UsageError("resolution: must be positive");
  if (!(a.L_max > 2.0)) throw UsageError("L-max: must exceed 2");
  if (!(a.reference_b >= 0.0)) throw UsageError("reference-b: must be >= 0");
  const std::string bc_text = a.bc.empty() ? (a.protocol == "sensitivity" ? "matched" : "dirichlet") : a.bc;
  const BoundaryCondition bc = parse_boundary_condition(bc_text);
  const GrushinProfile profile = make_profile(spec);
  GridOptions gopt;
  gopt.resolution = a.resolution;
  gopt.L_max = a.L_max;
  gopt.reference_b = a.reference_b;
  const json config = evolve_config(a, spec, to_string(bc), jobs);

  if (a.protocol == "sensitivity") {
    if (a.eps_list.size() < 2) throw UsageError("eps-list: need at least 2 values");
    for (std::size_t i = 0; i < a.eps_list.size(); ++i) {
      if (!(a.eps_list[i] > 0.0 && a.eps_list[i] < 1.0)) throw UsageError("eps-list: values must lie in (0, 1)");
      if (i > 0 && !(a.eps_list[i] < a.eps_list[i - 1])) throw UsageError("eps-list: must be strictly decreasing");
    }
    ensure_dir(a.out);
    SensitivityOptions so;
    so.t_final = a.t_final;
    so.dt = a.dt;
    so.eps_grid = a.eps_list;
    so.probe = bc;
    so.grid = gopt;
    const auto rep = bc_sensitivity(profile, a.xi, so, jobs);
    auto csv = open_csv(fs::path(a.out) / "sensitivity.csv", config);
    csv << "eps,D,L,nodes,steps,wall_mass,norm_drift\n";
    for (const auto& r : rep.rows) {
      csv << r.eps << ',' << r.D << ',' << r.L << ',' << r.nodes << ',' << r.steps << ',' << r.wall_mass << ','
          << r.norm_drift << '\n';
    }
    json doc;
    doc["config"] = config;
    json rows = json::array();
    double drift = 0.0;
    for (const auto& r : rep.rows) {
      rows.push_back({{"eps", r.eps}, {"D", r.D}, {"L", r.L}, {"nodes", r.nodes}, {"norm_drift", r.norm_drift}});
      drift = std::max(drift, r.norm_drift);
    }
    doc["rows"] = rows;
    doc["ratio_last_first"] = rep.ratio;
    doc["monotone_decreasing"] = rep.monotone_decreasing;
    doc["max_norm_drift"] = drift;
    doc["steps"] = rep.rows.front().steps;
    write_json(fs::path(a.out) / "evolve.json", doc);
    out << doc.dump(2) << '\n';
    return kOk;
  }

  const FibreMode mode = parse_mode(a.mode);
  const bool cylinder = mode == FibreMode::Cylinder;
  if (!(a.eps > 0.0 && a.eps < 1.0)) throw UsageError("eps: must lie in (0, 1)");
  if (a.ny < 1 || a.ny % 2 == 0) throw UsageError("ny: must be odd and positive");
  if (!cylinder && !(a.dy > 0.0)) throw UsageError("dy: must be positive");
  if (!(a.y_width > 0.0)) throw UsageError("y-width: must be positive");
  if (a.snapshot != "csv" && a.snapshot != "raster" && a.snapshot != "none") {
    throw UsageError("snapshot: expected csv, raster or none");
  }
  if (a.record_every < 1) throw UsageError("record-every: must be >= 1");
  ensure_dir(a.out);

  const double dy = cylinder ? 2.0 * std::numbers::pi / a.ny : a.dy;
  const double dxi = 2.0 * std::numbers::pi / (a.ny * dy);
  const double xi_max = dxi * ((a.ny - 1) / 2);
  const double xis[2] = {0.0, xi_max};
  const FibreGrid grid = make_fibre_grid(profile, std::span<const double>(xis, 2), a.eps, gopt);
  const PlaneWavefunction psi0 = gaussian_plane(grid, profile, a.ny, dy, 2.0, 0.3, 0.0, a.y_width, cylinder);
  const PlaneWavefunction hat0 = to_transformed(psi0, profile);
  const auto res = evolve_plane(hat0, profile, grid, bc, a.t_final, a.dt, true, jobs,
                                static_cast<std::size_t>(a.record_every));

  auto traces = open_csv(fs::path(a.out) / "norm_traces.csv", config);
  traces << (cylinder ? "k" : "xi") << ",t,norm\n";
  double drift = 0.0, boundary = 0.0;
  for (const auto& f : res.fibres) {
    for (std::size_t i = 0; i < f.trace.t.size(); ++i) traces << f.xi << ',' << f.trace.t[i] << ',' << f.trace.norm[i] << '\n';
    drift = std::max(drift, f.trace.cumulative_drift);
    boundary += f.boundary_mass * dxi;
  }
  if (a.snapshot != "none") {
    write_snapshot(a.out, "density_t0", psi0, profile, 0.0, a.snapshot, config);
    write_snapshot(a.out, "density_tfinal", res.psi, profile, a.t_final, a.snapshot, config);
  }
  json doc;
  doc["config"] = config;
  doc["grid"] = {{"eps", grid.eps},
                 {"L", grid.L},
                 {"nodes", grid.size()},
                 {"min_spacing", grid.min_spacing()},
                 {"max_spacing", grid.max_spacing()},
                 {"reference_c", grid.phi.c}};
  doc["xi_grid"] = {{"count", a.ny},
                    {"dxi", dxi},
                    {"xi_max", xi_max},
                    {"spectral_mass_outside", std::erfc(xi_max * a.y_width)}};
  doc["steps"] = res.steps;
  doc["initial_norm"] = res.initial_norm;
  doc["final_norm"] = res.final_norm;
  doc["max_fibre_norm_drift"] = drift;
  doc["total_norm_drift"] = std::abs(res.final_norm - res.initial_norm);
  doc["boundary_mass"] = boundary;
  doc["boundary_window"] = {grid.eps, 0.05};
  doc["original_norm_final"] = norm(res.psi, profile);
  write_json(fs::path(a.out) / "evolve.json", doc);
  out << doc.dump(2) << '\n';
  return kOk;
}

// ------------------------------------------------------- verify-deficiency

struct DeficiencyArgs {
  double alpha = 0.5;
  double j_from = 0.0, j_to = 1.0;
  std::optional<double> jp_from, jp_to;
  int samples = 16;
  double x_min = 1e-6;
  double grid_step = 0.02;
  std::string out;
};

int run_verify(const DeficiencyArgs& a, unsigned jobs, std::ostream& out) {
  if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw UsageError("alpha: must lie in (0, 1)");
  if (!(a.j_to > a.j_from)) throw UsageError("j-to: must exceed j-from");
  if (a.samples < 8) throw UsageError("samples: must be >= 8");
  if (!(a.x_min > 0.0 && a.x_min < 0.1)) throw UsageError("x-min: must lie in (0, 0.1)");
  if (!(a.grid_step > 0.0 && a.grid_step <= 0.1)) throw UsageError("grid-step: must lie in (0, 0.1]");
  DeficiencyFamilyOptions opts;
  opts.x_min = a.x_min;
  opts.grid_step = a.grid_step;
  const auto rep = verify_deficiency_family(a.alpha, a.j_from, a.j_to, a.samples, a.jp_from, a.jp_to, opts, jobs);

  json config;
  config["command"] = "verify-deficiency";
  config["alpha"] = a.alpha;
  config["J"] = {a.j_from, a.j_to};
  config["J_prime"] = {rep.jp_from, rep.jp_to};
  config["samples"] = a.samples;
  config["x_min"] = a.x_min;
  config["grid_step"] = a.grid_step;
  config["jobs"] = jobs;
  json doc;
  doc["config"] = config;
  doc["max_residual"] = num(rep.max_residual);
  doc["max_norm_error"] = num(rep.max_norm_error);
  doc["family_norm_sq"] = num(rep.family_norm_sq);
  doc["interval_length"] = a.j_to - a.j_from;
  doc["cross_inner_product"] = num(rep.cross_inner_product);
  doc["contradiction"] = rep.contradiction;
  json fam = json::array();
  for (const auto& f : rep.family) {
    fam.push_back({{"xi", f.xi}, {"norm", num(f.norm)}, {"residual", num(f.residual)},
                   {"inner_exponent", f.inner_exponent}, {"grid_points", f.t.size()}});
  }
  doc["family"] = fam;
  out << doc.dump(2) << '\n';
  if (!a.out.empty()) {
    ensure_dir(a.out);
    write_json(fs::path(a.out) / "verify_deficiency.json", doc);
  }
  return rep.contradiction ? kNumeric : kOk;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grushin confinement laboratory"};
  app.set_config("--config", "", "config file (key = value, [command] sections); flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the command name
  unsigned jobs = 1;
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1u, 1024u));

  ClassifyArgs ca;
  auto* classify = app.add_subcommand("classify", "essential self-adjointness verdict");
  ca.profile.add(classify);
  classify->add_option("--mode", ca.mode, "plane | cylinder");
  classify->add_option("--method", ca.method, "auto | analytic | inequality | numeric");
  classify->add_option("--xi-min", ca.xi_min);
  classify->add_option("--xi-max", ca.xi_max);
  classify->add_option("--xi-count", ca.xi_count);
  classify->add_option("--k-max", ca.k_max, "cylinder modes -k..k");
  classify->add_option("--out", ca.out, "also write classify.json here");

  GeodesicArgs ga;
  auto* geodesics = app.add_subcommand("geodesics", "geodesic fan with boundary hit times");
  ga.profile.add(geodesics);
  geodesics->add_option("--angles", ga.angles, "fan size, theta = 2 pi i / n");
  geodesics->add_option("--theta", ga.theta, "single launch angle");
  geodesics->add_option("--x0", ga.x0);
  geodesics->add_option("--t-min", ga.t_min);
  geodesics->add_option("--t-max", ga.t_max);
  geodesics->add_option("--tol", ga.tol);
  geodesics->add_option("--out", ga.out);

  EvolveArgs ea;
  auto* evolve = app.add_subcommand("evolve", "fibre-wise Schrodinger evolution");
  ea.profile.add(evolve);
  evolve->add_option("--protocol", ea.protocol, "sensitivity | plane");
  evolve->add_option("--mode", ea.mode, "plane | cylinder");
  evolve->add_option("--xi", ea.xi);
  evolve->add_option("--eps-list", ea.eps_list)->delimiter(',');
  evolve->add_option("--eps", ea.eps);
  evolve->add_option("--bc", ea.bc, "dirichlet | matched | robin:<beta>");
  evolve->add_option("--t-final", ea.t_final);
  evolve->add_option("--dt", ea.dt);
  evolve->add_option("--resolution", ea.resolution, "spacing multiplier");
  evolve->add_option("--L-max", ea.L_max);
  evolve->add_option("--reference-b", ea.reference_b);
  evolve->add_option("--ny", ea.ny);
  evolve->add_option("--dy", ea.dy);
  evolve->add_option("--y-width", ea.y_width);
  evolve->add_option("--snapshot", ea.snapshot, "csv | raster | none");
  evolve->add_option("--record-every", ea.record_every);
  evolve->add_option("--out", ea.out);

  DeficiencyArgs da;
  auto* verify = app.add_subcommand("verify-deficiency", "deficiency eigenfunction family check");
  verify->add_option("--alpha", da.alpha);
  verify->add_option("--j-from", da.j_from);
  verify->add_option("--j-to", da.j_to);
  verify->add_option("--jp-from", da.jp_from);
  verify->add_option("--jp-to", da.jp_to);
  verify->add_option("--samples", da.samples);
  verify->add_option("--x-min", da.x_min);
  verify->add_option("--grid-step", da.grid_step);
  verify->add_option("--out", da.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (classify->parsed()) return run_classify(ca, jobs, out);
    if (geodesics->parsed()) return run_geodesics(ga, jobs, out);
    if (evolve->parsed()) return run_evolve(ea, jobs, out);
    if (verify->parsed()) return run_verify(da, jobs, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DomainError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const InconclusiveError& e) {
    err << "inconclusive: " << e.what() << '\n';
    return kInconclusive;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  }
  return kUsage;
}

} // namespace grushin::cli
