#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
  json doc() const { return json::parse(out); }
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "grushin_cli");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = grushin::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("grushin_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// Everything after the first line, which carries the config (and job count).
std::string body(const fs::path& p) {
  const std::string s = slurp(p);
  return s.substr(s.find('\n') + 1);
}

} // namespace

TEST_CASE("classify verdicts") {
  auto r = cli({"classify", "--alpha", "1"});
  REQUIRE(r.code == 0);
  CHECK(r.doc()["verdict"]["verdict"] == "EssentiallySelfAdjoint");
  CHECK(r.doc()["fibres"].size() == 41);

  r = cli({"classify", "--alpha", "0.5"});
  CHECK(r.doc()["verdict"]["verdict"] == "NotEssentiallySelfAdjoint");
  CHECK(r.doc()["verdict"]["total_deficiency"] == "Infinite");

  r = cli({"classify", "--alpha", "-1"});
  const auto runs = r.doc()["verdict"]["failing_runs"];
  REQUIRE(runs.size() == 1);
  CHECK(runs[0]["from"].get<double>() == doctest::Approx(-0.75));
  CHECK(runs[0]["to"].get<double>() == doctest::Approx(0.75));

  r = cli({"classify", "--alpha", "-2", "--mode", "cylinder"});
  CHECK(r.doc()["verdict"]["total_deficiency"] == "Finite");
  CHECK(r.doc()["verdict"]["deficiency_count"] == 1);
  CHECK(r.doc()["verdict"]["failing_fibres"] == "k = 0");

  r = cli({"classify", "--alpha", "0.5", "--method", "numeric", "--xi-count", "5"});
  REQUIRE(r.code == 0);
  CHECK(r.doc()["fibres"][0]["method"] == "NumericODE");
  CHECK(r.doc()["verdict"]["verdict"] == "NotEssentiallySelfAdjoint");

  r = cli({"classify", "--kind", "custom", "--name", "shifted_power", "--alpha", "2", "--method", "inequality"});
  CHECK(r.code == 0);
  CHECK(r.doc().contains("inequality"));
}

TEST_CASE("exit codes") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"classify", "--mode", "sphere"}).code == 2);
  CHECK(cli({"classify", "--no-such-flag"}).code == 2);
  CHECK(cli({"classify", "--method", "guess"}).code == 2);
  CHECK(cli({"--jobs", "0", "classify"}).code == 2);
  CHECK(cli({"classify", "--kind", "custom", "--name", "nope"}).code == 2);
  CHECK(cli({"verify-deficiency", "--alpha", "1.0"}).code == 2);
  CHECK(cli({"evolve", "--bc", "neumann", "--out", scratch("bad_bc").string()}).code == 2);
  const auto r = cli({"classify", "--kind", "custom", "--name", "log_threshold", "--alpha", "-0.5", "--method",
                      "numeric", "--xi-count", "3"});
  CHECK(r.code == 4);
  CHECK(r.err.find("inconclusive") != std::string::npos);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("config files") {
  const auto dir = scratch("config");
  write(dir / "run.ini", "[classify]\nalpha = 0.5\nmode = \"cylinder\"\nk-max = 3\n");
  auto r = cli({"--config", (dir / "run.ini").string(), "classify"});
  REQUIRE(r.code == 0);
  CHECK(r.doc()["config"]["mode"] == "cylinder");
  CHECK(r.doc()["config"]["profile"]["alpha"] == 0.5);
  CHECK(r.doc()["fibres"].size() == 7);
  // Flags override the file.
  r = cli({"--config", (dir / "run.ini").string(), "classify", "--alpha", "1"});
  CHECK(r.doc()["config"]["profile"]["alpha"] == 1.0);
  CHECK(r.doc()["verdict"]["verdict"] == "EssentiallySelfAdjoint");

  write(dir / "bad.ini", "[classify]\nbogus = 1\n");
  CHECK(cli({"--config", (dir / "bad.ini").string(), "classify"}).code == 2);

  write(dir / "profile.txt", "kind = power_law\nalpha = 0.5\n");
  r = cli({"classify", "--profile-file", (dir / "profile.txt").string()});
  CHECK(r.doc()["config"]["profile"]["alpha"] == 0.5);
  r = cli({"classify", "--profile-file", (dir / "profile.txt").string(), "--alpha", "2"});
  CHECK(r.doc()["config"]["profile"]["alpha"] == 2.0);
  CHECK(cli({"classify", "--profile-file", (dir / "missing.txt").string()}).code == 2);
}

TEST_CASE("geodesics writes one CSV per angle and a manifest") {
  const auto dir = scratch("geo");
  auto r = cli({"geodesics", "--alpha", "1", "--angles", "16", "--t-min", "-10", "--t-max", "10", "--out",
                dir.string()});
  REQUIRE(r.code == 0);
  std::size_t csv = 0;
  for (const auto& e : fs::directory_iterator(dir)) csv += e.path().extension() == ".csv";
  CHECK(csv == 16);
  const json manifest = json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["trajectories"].size() == 16);
  CHECK(manifest["config"]["angles"] == 16);
  const std::string first = manifest["trajectories"][0]["file"];
  CHECK(slurp(dir / first).rfind("# config = ", 0) == 0);

  const auto one = scratch("geo_theta");
  r = cli({"geodesics", "--alpha", "1", "--theta", "3.14159", "--t-min", "-5", "--t-max", "5", "--out",
           one.string()});
  REQUIRE(r.code == 0);
  const json m = json::parse(slurp(one / "manifest.json"));
  REQUIRE(m["trajectories"].size() == 1);
  CHECK(m["trajectories"][0]["hit_time_quadrature"].get<double>() == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("evolve protocols") {
  const auto dir = scratch("sens");
  auto r = cli({"evolve", "--alpha", "1.5", "--xi", "1", "--out", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(r.doc()["monotone_decreasing"] == true);
  CHECK(r.doc()["rows"].size() == 3);
  CHECK(fs::exists(dir / "sensitivity.csv"));
  CHECK(slurp(dir / "sensitivity.csv").rfind("# config = ", 0) == 0);

  r = cli({"evolve", "--alpha", "0.5", "--xi", "1", "--out", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(r.doc()["ratio_last_first"].get<double>() > 0.5);

  const auto plane = scratch("plane");
  r = cli({"evolve", "--protocol", "plane", "--alpha", "1", "--ny", "5", "--t-final", "0.05", "--dt", "1e-3",
           "--L-max", "10", "--snapshot", "raster", "--out", plane.string()});
  REQUIRE(r.code == 0);
  const json doc = r.doc();
  CHECK(doc["steps"] == 50);
  CHECK(doc["total_norm_drift"].get<double>() <= 1e-6);
  const json header = json::parse(slurp(plane / "density_tfinal.json"));
  CHECK(fs::file_size(plane / "density_tfinal.f32") ==
        header["nx"].get<std::size_t>() * header["ny"].get<std::size_t>() * sizeof(float));
  CHECK(fs::exists(plane / "norm_traces.csv"));

  const auto cyl = scratch("cyl");
  r = cli({"evolve", "--protocol", "plane", "--mode", "cylinder", "--alpha", "1", "--ny", "5", "--t-final",
           "0.02", "--dt", "1e-3", "--L-max", "10", "--out", cyl.string()});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(cyl / "density_t0.csv"));
}

TEST_CASE("verify-deficiency") {
  auto r = cli({"verify-deficiency", "--alpha", "0.5", "--samples", "8"});
  REQUIRE(r.code == 0);
  CHECK(r.doc()["max_residual"].get<double>() <= 1e-6);
  CHECK(r.doc()["cross_inner_product"].get<double>() <= 1e-10);
  CHECK(r.doc()["family"].size() == 8);
  CHECK(r.doc()["contradiction"] == false);
}

TEST_CASE("results do not depend on --jobs") {
  auto a = cli({"--jobs", "1", "classify", "--alpha", "0.5", "--method", "numeric", "--xi-count", "6"});
  auto b = cli({"classify", "--alpha", "0.5", "--method", "numeric", "--xi-count", "6", "--jobs", "3"});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(a.doc()["fibres"] == b.doc()["fibres"]);
  CHECK(b.doc()["config"]["jobs"] == 3);

  const auto d1 = scratch("jobs1"), d3 = scratch("jobs3");
  REQUIRE(cli({"geodesics", "--alpha", "0.7", "--angles", "6", "--t-max", "10", "--t-min", "-10", "--out",
               d1.string()}).code == 0);
  REQUIRE(cli({"--jobs", "3", "geodesics", "--alpha", "0.7", "--angles", "6", "--t-max", "10", "--t-min", "-10",
               "--out", d3.string()}).code == 0);
  for (const auto& e : fs::directory_iterator(d1)) {
    if (e.path().extension() == ".csv") CHECK(body(e.path()) == body(d3 / e.path().filename()));
  }
}
