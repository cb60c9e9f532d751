// sclayer: configuration-driven runner for the boundary-layer pipeline.
// Exit codes: 0 ok, 2 infeasible current, 3 solver failure, 4 configuration error.

#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "sc/config.hpp"
#include "sc/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Matched-asymptotic superconducting layer solver"};
  app.require_subcommand(1);

  std::string config_path, out;
  bool override_feasibility = false;
  int jobs = 1;
  std::optional<double> j_r, rho_r;

  app.add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory (overrides the config)");
  app.add_flag("--override-feasibility", override_feasibility, "continue past an infeasible current");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  const char* names[] = {"feasibility", "outer", "inner", "composite", "stability", "evolve1d", "sweep", "all"};
  for (const char* n : names) app.add_subcommand(n)->fallthrough();
  auto* inner = app.get_subcommand("inner");
  inner->add_option("--j-r", j_r, "single station: rescaled current j / rho_r^3");
  inner->add_option("--rho-r", rho_r, "single station: rho_r (default 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 4;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    const auto cfg = sc::config::load(config_path);
    sc::pipeline::RunOptions opt;
    opt.out = out;
    opt.override_feasibility = override_feasibility;
    opt.jobs = jobs;
    if (j_r) {
      sc::inner::InnerParams p;
      p.j_r = *j_r;
      p.rho_r = rho_r.value_or(1.0);
      opt.single_station = p;
    }
    const auto r = cmd == "sweep" ? sc::pipeline::sweep(cfg, opt)
                                  : sc::pipeline::run(cfg, sc::pipeline::stages_for(cmd), opt);
    for (const auto& s : r.stages) {
      std::cerr << s.name << ": " << s.status;
      if (!s.message.empty()) std::cerr << " (" << s.error << ": " << s.message << ")";
      std::cerr << "\n";
    }
    return r.exit_code;
  } catch (const sc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sc::pipeline::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
