#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "catch_amalgamated.hpp"
#include "json.hpp"
#include "sc/config.hpp"
#include "sc/io.hpp"
#include "sc/pipeline.hpp"
#include "sc/stability.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sc;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sclayer_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

int cli(const std::string& args) {
  const char* exe = std::getenv("SCLAYER_CLI");
  REQUIRE(exe != nullptr);
  const std::string cmd = std::string(exe) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::set<std::string> files_in(const fs::path& dir) {
  std::set<std::string> s;
  for (const auto& e : fs::directory_iterator(dir)) s.insert(e.path().filename().string());
  return s;
}

json manifest(const fs::path& dir) { return json::parse(io::read_file(dir / "manifest.json")); }

std::string config_error(const std::string& text) {
  try {
    config::parse(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config errors name the offending field") {
  CHECK_THAT(config_error(R"({"epsilon": -1})"), Catch::Matchers::ContainsSubstring("epsilon"));
  CHECK_THAT(config_error(R"({"iota": 1.0})"), Catch::Matchers::ContainsSubstring("iota"));
  CHECK_THAT(config_error(R"({"grid": {"hh": 0.1}})"), Catch::Matchers::ContainsSubstring("grid.hh"));
  CHECK_THAT(config_error(R"({"stability": {"beta": "x"}})"), Catch::Matchers::ContainsSubstring("stability.beta"));
  CHECK_THAT(config_error(R"({"domain": {"preset": "torus"}})"), Catch::Matchers::ContainsSubstring("domain.preset"));
  CHECK_THAT(config_error(R"({"sweep": {"axis": "l"}})"), Catch::Matchers::ContainsSubstring("sweep.axis"));
  CHECK_THAT(config_error(R"({"continuation": {"linear_solver": "lu"}})"),
             Catch::Matchers::ContainsSubstring("continuation.linear_solver"));
  CHECK_THAT(config_error("{"), Catch::Matchers::ContainsSubstring("JSON"));
  CHECK(config_error("{}").empty());
}

TEST_CASE("config echo parses back to the same echo") {
  const auto c = config::parse(R"({"epsilon": 0.02, "domain": {"preset": "ellipse", "a": 1.25},
                                   "sweep": {"axis": "sigma0", "values": [50, 100]}})");
  CHECK(c.domain.a == 1.25);
  CHECK(c.sweep.values.size() == 2);
  const std::string echo = config::to_json(c);
  CHECK(config::to_json(config::parse(echo)) == echo);
}

TEST_CASE("stage names map onto subcommands") {
  CHECK(pipeline::stages_for("all").size() == 5);
  CHECK(pipeline::stages_for("evolve1d") == std::vector{pipeline::Stage::Evolve1d});
  CHECK_THROWS_AS(pipeline::stages_for("plot"), Error);
  CHECK(pipeline::exit_code(ErrorKind::Geometry) == 4);
  CHECK(pipeline::exit_code(ErrorKind::Infeasible) == 2);
  CHECK(pipeline::exit_code(ErrorKind::LossOfEllipticity) == 3);
}

TEST_CASE("infeasible current stops after the feasibility report") {
  const auto dir = scratch("infeasible");
  // a pointwise amplitude above 2 / (3 sqrt 3) ~ 0.385
  const auto cfg = write_config(dir, R"({"current": {"preset": "cosine", "amplitude": 0.5}})");
  CHECK(cli("all --config " + cfg.string() + " --out " + (dir / "out").string()) == 2);
  CHECK(files_in(dir / "out") ==
        std::set<std::string>{"feasibility.json", "feasibility_pairs.csv", "manifest.json", "timings.json"});
  const auto m = manifest(dir / "out");
  CHECK(m["exit_code"] == 2);
  CHECK(m["stages"][0]["status"] == "infeasible");
  CHECK(m["stages"][1]["status"] == "skipped");

  // the override lets the outer stage try; it then loses ellipticity, a solver failure
  CHECK(cli("all --override-feasibility --config " + cfg.string() + " --out " + (dir / "over").string()) == 3);
  const auto o = manifest(dir / "over");
  CHECK(o["stages"][0]["status"] == "overridden");
  CHECK(o["stages"][1]["error"] == "LossOfEllipticity");
}

TEST_CASE("stability-only run writes no PDE artifacts") {
  const auto dir = scratch("stability");
  const auto cfg = write_config(dir, R"({"stability": {"beta": 0.5, "sigma": 1}})");
  CHECK(cli("stability --config " + cfg.string() + " --out " + (dir / "out").string()) == 0);
  CHECK(files_in(dir / "out") ==
        std::set<std::string>{"stability.json", "stability_modes.csv", "manifest.json", "timings.json"});
  const auto s = json::parse(io::read_file(dir / "out" / "stability.json"));
  CHECK(s["verdict"] == "stable");
  const auto t = io::read_csv(dir / "out" / "stability_modes.csv");
  CHECK(t.rows() == 20);
  // the table reproduces the closed-form eigenvalues
  const auto e = stability::eigenvalues(0.5, 1.0, t.column("gamma")[2]);
  CHECK(t.column("lambda_minus")[2] == e.lambda_minus);
}

TEST_CASE("config and usage errors exit with status 4") {
  const auto dir = scratch("config");
  CHECK(cli("stability --config " + write_config(dir, R"({"iota": 2})").string()) == 4);
  CHECK(cli("stability --config " + write_config(dir, R"({"stabilty": {}})").string()) == 4);
  CHECK(cli("stability --config " + (dir / "absent.json").string()) == 4);
  CHECK(cli("bogus --config " + write_config(dir, "{}").string()) == 4);
  // composite without its predecessors' artifacts
  CHECK(cli("composite --config " + write_config(dir, "{}").string() + " --out " + (dir / "empty").string()) == 4);
  // a sweep with no values
  CHECK(cli("sweep --config " + write_config(dir, R"({"sweep": {"axis": "beta", "values": []}})").string() +
            " --out " + (dir / "sw").string()) == 4);
}

TEST_CASE("beta sweep flips the verdict exactly once") {
  const auto dir = scratch("beta");
  const auto cfg = write_config(dir, R"({"sweep": {"axis": "beta", "values": [0.5, 0.577, 0.65]}})");
  CHECK(cli("sweep --jobs 2 --config " + cfg.string() + " --out " + (dir / "out").string()) == 0);
  const auto t = io::read_csv(dir / "out" / "sweep.csv");
  REQUIRE(t.rows() == 3);
  const auto& stable = t.column("stable");
  int flips = 0;
  for (std::size_t i = 1; i < stable.size(); ++i) flips += stable[i] != stable[i - 1];
  CHECK(flips == 1);
  // the flip sits between the rows bracketing 1 / sqrt 3
  CHECK(stable[1] == 1);
  CHECK(stable[2] == 0);
  CHECK(manifest(dir / "out")["artifacts"].size() == 1 + 3 * 2);
}

TEST_CASE("full pipeline artifacts are hashed and byte-reproducible") {
  const auto dir = scratch("full");
  const auto cfg = write_config(dir, "{}");
  const auto out = dir / "out";
  REQUIRE(cli("all --config " + cfg.string() + " --out " + out.string()) == 0);
  const auto m = manifest(out);
  std::map<std::string, std::string> first;
  for (const auto& a : m["artifacts"]) {
    const std::string data = io::read_file(out / a["file"].get<std::string>());
    CHECK(io::sha256_hex(data) == a["sha256"]);
    first[a["file"]] = data;
  }
  for (const char* f : {"feasibility.json", "outer_fields.csv", "boundary_trace.csv", "inner_stations.csv",
                        "inner_profiles.csv", "composite_fields.csv", "residuals.json", "stability_modes.csv"})
    CHECK(first.count(f) == 1);
  first["manifest.json"] = io::read_file(out / "manifest.json");

  REQUIRE(cli("all --config " + cfg.string() + " --out " + out.string()) == 0);
  for (const auto& [f, data] : first) CHECK(io::read_file(out / f) == data);

  // stages rerun in isolation read the saved artifacts and reproduce them
  REQUIRE(cli("composite --config " + cfg.string() + " --out " + out.string()) == 0);
  CHECK(io::read_file(out / "residuals.json") == first["residuals.json"]);
}

TEST_CASE("epsilon sweep writes one row per value and records failures") {
  const auto dir = scratch("eps");
  // on a 0.025 mesh the smallest eps leaves the band under-resolved, which must not stop the sweep
  const auto cfg = write_config(
      dir, R"({"grid": {"h": 0.025}, "sweep": {"axis": "epsilon", "values": [0.04, 0.02, 0.01]}})");
  CHECK(cli("sweep --config " + cfg.string() + " --out " + (dir / "out").string()) == 0);
  const auto t = io::read_csv(dir / "out" / "sweep.csv");
  REQUIRE(t.rows() == 3);
  CHECK(t.column("exit_code") == std::vector<double>{0, 0, 3});
  CHECK(t.column("h1")[0] > 0);
  CHECK(t.column("h1_ratio")[1] == t.column("h1")[0] / t.column("h1")[1]);
  CHECK(std::isnan(t.column("h1")[2]));
  const auto m = manifest(dir / "out" / "epsilon_2");
  CHECK(m["stages"][3]["error"] == "ResolutionError");
}
