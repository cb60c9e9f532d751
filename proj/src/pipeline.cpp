#include "sc/pipeline.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "json.hpp"
#include "sc/composite.hpp"
#include "sc/io.hpp"
#include "sc/mesh.hpp"
#include "sc/outer.hpp"
#include "sc/stability.hpp"

namespace sc::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json versions() {
  return {{"sclayer", kVersion},
          {"compiler", __VERSION__},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                       "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

// Artifacts each stage owns; cleared before the stage runs so a failure never leaves stale output.
const std::map<Stage, std::vector<std::string>>& owned() {
  static const std::map<Stage, std::vector<std::string>> m{
      {Stage::Feasibility, {"feasibility.json", "feasibility_pairs.csv"}},
      {Stage::Outer, {"outer.json", "outer_fields.csv", "boundary_trace.csv"}},
      {Stage::Inner, {"inner.json", "inner_stations.csv", "inner_profiles.csv"}},
      {Stage::Composite, {"residuals.json", "composite_fields.csv", "composite_band.csv"}},
      {Stage::Stability, {"stability.json", "stability_modes.csv"}},
      {Stage::Evolve1d, {"evolve.json", "evolve_history.csv"}},
  };
  return m;
}

class Context {
 public:
  Context(const config::RunConfig& c, const RunOptions& opt, fs::path dir) : c(c), opt(opt), dir(std::move(dir)) {}

  const config::RunConfig& c;
  const RunOptions& opt;
  fs::path dir;
  RunResult result;

  void write(const std::string& name, const std::string& content) {
    io::write_atomic(dir / name, content);
    result.artifacts.push_back(name);
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }
  void write_csv(const std::string& name, const io::Table& t) { write(name, io::to_csv(t)); }

  io::Table need_csv(const std::string& name, const char* producer) const {
    if (!fs::exists(dir / name))
      throw Error(ErrorKind::Config, "missing " + name + " in " + dir.string() + "; run the " + producer + " stage first");
    return io::read_csv(dir / name);
  }
  json need_json(const std::string& name, const char* producer) const {
    if (!fs::exists(dir / name))
      throw Error(ErrorKind::Config, "missing " + name + " in " + dir.string() + "; run the " + producer + " stage first");
    return json::parse(io::read_file(dir / name));
  }

  mesh::Mesh build_mesh() const {
    const auto g = config::make_boundary(c);
    return mesh::make_star_mesh_h(g, c.grid.h);
  }
};

std::vector<double> column(std::size_t n, auto f) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = f(i);
  return v;
}

json split_json(const composite::NormSplit& s) {
  return {{"total", s.total}, {"band", s.band}, {"interior", s.interior}, {"outer_region", s.outer_region}};
}

// ---------------------------------------------------------------------------------------------

void stage_feasibility(Context& x) {
  const auto g = config::make_boundary(x.c);
  const auto j = config::make_current(x.c, g);
  feasibility::FeasibilityOptions fo;
  fo.grid_h = x.c.grid.feasibility_h;
  fo.record_pairs = true;
  fo.jobs = x.opt.jobs;
  const auto r = feasibility::sup_M(g, j, fo);

  io::Table t;
  t.add("a", column(r.pairs.size(), [&](std::size_t i) { return double(r.pairs[i].a); }));
  t.add("b", column(r.pairs.size(), [&](std::size_t i) { return double(r.pairs[i].b); }));
  t.add("distance", column(r.pairs.size(), [&](std::size_t i) { return r.pairs[i].distance; }));
  t.add("integral", column(r.pairs.size(), [&](std::size_t i) { return r.pairs[i].integral; }));
  t.add("M", column(r.pairs.size(), [&](std::size_t i) { return r.pairs[i].M; }));
  x.write_csv("feasibility_pairs.csv", t);
  x.write_json("feasibility.json", {{"pointwise_ok", r.pointwise_ok},
                                    {"max_abs_j", r.max_abs_j},
                                    {"critical_current", feasibility::critical_current()},
                                    {"sup_M", r.sup_M},
                                    {"argmax_x", {r.argmax_x.x, r.argmax_x.y}},
                                    {"argmax_y", {r.argmax_y.x, r.argmax_y.y}},
                                    {"margin", r.margin},
                                    {"feasible", r.feasible},
                                    {"distance_method", r.distance_method},
                                    {"samples", g.size()},
                                    {"pairs", r.pairs.size()}});
  x.result.scalars["sup_M"] = r.sup_M;
  x.result.scalars["margin"] = r.margin;
  x.result.scalars["feasible"] = r.feasible ? 1 : 0;
  if (!r.feasible)
    throw Error(ErrorKind::Infeasible, "sup_M = " + io::format_double(r.sup_M) + " is not below the critical current");
}

void require_feasible(Context& x) {
  const json f = x.need_json("feasibility.json", "feasibility");
  if (!f.at("feasible").get<bool>() && !x.opt.override_feasibility)
    throw Error(ErrorKind::Infeasible, "feasibility.json reports an infeasible current; pass --override-feasibility");
}

void stage_outer(Context& x) {
  require_feasible(x);
  const auto g = config::make_boundary(x.c);
  const auto prof = config::make_current(x.c, g);
  const auto m = mesh::make_star_mesh_h(g, x.c.grid.h);
  const auto j = outer::current_on_mesh(m, g, prof);
  const auto sol = outer::solve_zeta(m, j, x.c.continuation);
  const auto z1 = outer::solve_zeta1(m, sol.zeta, x.c.continuation);
  const auto mg = outer::max_gradient_check(m, sol.zeta, 1, 1e-9, false);
  const auto f = outer::outer_fields(m, sol.zeta, z1.zeta1, x.c.epsilon, j);
  const auto tr = outer::boundary_trace(m, sol.zeta, j);
  const auto id = outer::boundary_identities(m, sol.zeta, j);

  const std::size_t n = m.size();
  io::Table t;
  t.add("x", column(n, [&](std::size_t i) { return m.nodes[i].x; }));
  t.add("y", column(n, [&](std::size_t i) { return m.nodes[i].y; }));
  t.add("zeta", sol.zeta);
  t.add("zeta1", z1.zeta1);
  t.add("zeta_x", f.zeta_x);
  t.add("zeta_y", f.zeta_y);
  t.add("rho_o", f.rho_o);
  t.add("chi_o", f.chi_o);
  x.write_csv("outer_fields.csv", t);

  const std::size_t nb = tr.s.size();
  io::Table b;
  b.add("s", tr.s);
  b.add("x", column(nb, [&](std::size_t i) { return tr.point[i].x; }));
  b.add("y", column(nb, [&](std::size_t i) { return tr.point[i].y; }));
  b.add("nx", column(nb, [&](std::size_t i) { return tr.normal[i].x; }));
  b.add("ny", column(nb, [&](std::size_t i) { return tr.normal[i].y; }));
  b.add("tx", column(nb, [&](std::size_t i) { return tr.tangent[i].x; }));
  b.add("ty", column(nb, [&](std::size_t i) { return tr.tangent[i].y; }));
  b.add("kappa", tr.kappa);
  b.add("j", tr.j);
  b.add("zeta_s", tr.zeta_s);
  b.add("zeta_t", tr.zeta_t);
  b.add("rho_r", tr.rho_r);
  b.add("rho_out0", tr.rho_out0);
  b.add("drho0_dt", tr.drho0_dt);
  x.write_csv("boundary_trace.csv", b);

  json path = json::array();
  for (const auto& s : sol.mu_path)
    path.push_back({{"mu", s.mu}, {"max_grad", s.max_grad}, {"newton_iterations", s.newton_iterations},
                    {"energy", s.energy}});
  x.write_json("outer.json", {{"nodes", n},
                              {"boundary_nodes", nb},
                              {"h", x.c.grid.h},
                              {"epsilon", x.c.epsilon},
                              {"mu_path", path},
                              {"max_grad", sol.max_grad},
                              {"gradient_bound", kEllipticGradient},
                              {"argmax", {mg.location.x, mg.location.y}},
                              {"argmax_rank", mg.rank},
                              {"argmax_in_band", mg.in_band},
                              {"residual_interior", sol.residual_interior},
                              {"flux_mismatch", sol.flux_mismatch},
                              {"zeta1_compatibility", z1.compatibility},
                              {"zeta1_residual", z1.residual},
                              {"identity_rms_1", id.rms_1},
                              {"identity_rms_2", id.rms_2},
                              {"identity_max_1", id.max_1},
                              {"identity_max_2", id.max_2}});
  x.result.scalars["max_grad"] = sol.max_grad;
  x.result.scalars["argmax_in_band"] = mg.in_band ? 1 : 0;
}

outer::BoundaryTrace read_trace(const io::Table& b) {
  outer::BoundaryTrace tr;
  tr.s = b.column("s");
  tr.kappa = b.column("kappa");
  tr.j = b.column("j");
  tr.zeta_s = b.column("zeta_s");
  tr.zeta_t = b.column("zeta_t");
  tr.rho_r = b.column("rho_r");
  tr.rho_out0 = b.column("rho_out0");
  tr.drho0_dt = b.column("drho0_dt");
  const auto &px = b.column("x"), &py = b.column("y"), &nx = b.column("nx"), &ny = b.column("ny"),
             &tx = b.column("tx"), &ty = b.column("ty");
  for (std::size_t i = 0; i < px.size(); ++i) {
    tr.point.push_back({px[i], py[i]});
    tr.normal.push_back({nx[i], ny[i]});
    tr.tangent.push_back({tx[i], ty[i]});
  }
  return tr;
}

void stage_inner(Context& x) {
  inner::SweepOptions so;
  so.leading.h = x.c.grid.inner_h;
  so.leading.eta_max = x.c.grid.inner_eta_max;
  so.jobs = x.opt.jobs;
  so.tau_keep = composite::tau_needed(x.c.epsilon, x.c.iota);

  std::vector<inner::StationResult> st;
  std::vector<double> s;
  if (x.opt.single_station) {
    auto p = *x.opt.single_station;
    p.sigma0 = x.c.sigma0;
    so.tau_keep = 0;
    st.push_back(inner::solve_station(p, so));
    s.push_back(0);
  } else {
    const auto tr = read_trace(x.need_csv("boundary_trace.csv", "outer"));
    st = inner::sweep(tr, x.c.sigma0, so);
    s = tr.s;
  }

  const std::size_t n = st.size();
  io::Table t;
  t.add("station", column(n, [&](std::size_t i) { return double(i); }));
  t.add("s", s);
  t.add("j", column(n, [&](std::size_t i) { return st[i].profile.j; }));
  t.add("rho_r", column(n, [&](std::size_t i) { return st[i].params.rho_r; }));
  t.add("j_r", column(n, [&](std::size_t i) { return st[i].params.j_r; }));
  t.add("sigma0", column(n, [&](std::size_t i) { return st[i].params.sigma0; }));
  t.add("dzeta_dt0", column(n, [&](std::size_t i) { return st[i].params.dzeta_dt0; }));
  t.add("mu_j", column(n, [&](std::size_t i) { return st[i].mu_j; }));
  t.add("rho_j", column(n, [&](std::size_t i) { return st[i].profile.rho_j; }));
  t.add("w0", column(n, [&](std::size_t i) { return st[i].w0; }));
  t.add("leading_iterations", column(n, [&](std::size_t i) { return double(st[i].leading_iterations); }));
  t.add("corrected_iterations", column(n, [&](std::size_t i) { return double(st[i].corrected_iterations); }));
  t.add("contraction", column(n, [&](std::size_t i) { return st[i].contraction; }));
  t.add("mu1_norm", column(n, [&](std::size_t i) { return st[i].mu1_norm; }));
  t.add("decay_rate_phi", column(n, [&](std::size_t i) { return st[i].profile.decay_rate_phi; }));
  t.add("decay_rate_rho", column(n, [&](std::size_t i) { return st[i].profile.decay_rate_rho; }));
  x.write_csv("inner_stations.csv", t);

  io::Table p;
  std::vector<double> sid, tau, rho, phi, dphi, dups, ups;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pr = st[i].profile;
    for (std::size_t k = 0; k < pr.tau.size(); ++k) {
      sid.push_back(double(i));
      tau.push_back(pr.tau[k]);
      rho.push_back(pr.rho_i0[k]);
      phi.push_back(pr.phi_i0[k]);
      dphi.push_back(pr.dphi_i0[k]);
      dups.push_back(pr.dupsilon_i0[k]);
      ups.push_back(pr.upsilon_i0[k]);
    }
  }
  p.add("station", sid);
  p.add("tau", tau);
  p.add("rho_i0", rho);
  p.add("phi_i0", phi);
  p.add("dphi_i0", dphi);
  p.add("dupsilon_i0", dups);
  p.add("upsilon_i0", ups);
  x.write_csv("inner_profiles.csv", p);

  auto range = [&](auto f) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& r : st) lo = std::min(lo, f(r)), hi = std::max(hi, f(r));
    return std::pair{lo, hi};
  };
  const auto mu = range([](const auto& r) { return r.mu_j; });
  const auto rj = range([](const auto& r) { return r.profile.rho_j; });
  const auto dp = range([](const auto& r) { return r.profile.decay_rate_phi; });
  const auto dr = range([](const auto& r) { return r.profile.decay_rate_rho; });
  const auto li = range([](const auto& r) { return double(r.leading_iterations); });
  const auto ci = range([](const auto& r) { return double(r.corrected_iterations); });
  const auto m1 = range([](const auto& r) { return r.mu1_norm; });
  x.write_json("inner.json", {{"stations", n},
                              {"sigma0", x.c.sigma0},
                              {"tau_keep", so.tau_keep},
                              {"mu_j", {mu.first, mu.second}},
                              {"rho_j", {rj.first, rj.second}},
                              {"decay_rate_phi", {dp.first, dp.second}},
                              {"decay_rate_rho", {dr.first, dr.second}},
                              {"leading_iterations_max", li.second},
                              {"corrected_iterations_max", ci.second},
                              {"mu1_norm_max", m1.second}});
  x.result.scalars["mu_j_min"] = mu.first;
  x.result.scalars["mu_j_max"] = mu.second;
}

std::vector<inner::StationResult> read_stations(const io::Table& t, const io::Table& p) {
  const auto& jr = t.column("j_r");
  const std::size_t n = jr.size();
  std::vector<inner::StationResult> st(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = st[i];
    r.params.j_r = jr[i];
    r.params.rho_r = t.column("rho_r")[i];
    r.params.sigma0 = t.column("sigma0")[i];
    r.params.dzeta_dt0 = t.column("dzeta_dt0")[i];
    r.mu_j = t.column("mu_j")[i];
    r.w0 = t.column("w0")[i];
    r.leading_iterations = static_cast<int>(t.column("leading_iterations")[i]);
    r.corrected_iterations = static_cast<int>(t.column("corrected_iterations")[i]);
    r.contraction = t.column("contraction")[i];
    r.mu1_norm = t.column("mu1_norm")[i];
    auto& pr = r.profile;
    pr.j = t.column("j")[i];
    pr.rho_r = r.params.rho_r;
    pr.sigma0 = r.params.sigma0;
    pr.dzeta_dt0 = r.params.dzeta_dt0;
    pr.rho_j = t.column("rho_j")[i];
    pr.decay_rate_phi = t.column("decay_rate_phi")[i];
    pr.decay_rate_rho = t.column("decay_rate_rho")[i];
  }
  const auto& sid = p.column("station");
  for (std::size_t k = 0; k < sid.size(); ++k) {
    const auto i = static_cast<std::size_t>(sid[k]);
    if (i >= n) throw Error(ErrorKind::Config, "inner_profiles.csv refers to an unknown station");
    auto& pr = st[i].profile;
    pr.tau.push_back(p.column("tau")[k]);
    pr.rho_i0.push_back(p.column("rho_i0")[k]);
    pr.phi_i0.push_back(p.column("phi_i0")[k]);
    pr.dphi_i0.push_back(p.column("dphi_i0")[k]);
    pr.dupsilon_i0.push_back(p.column("dupsilon_i0")[k]);
    pr.upsilon_i0.push_back(p.column("upsilon_i0")[k]);
  }
  for (const auto& r : st)
    if (r.profile.tau.size() < 4) throw Error(ErrorKind::Config, "inner_profiles.csv has a station with fewer than 4 samples");
  return st;
}

void stage_composite(Context& x) {
  const auto f = x.need_csv("outer_fields.csv", "outer");
  const auto stations = read_stations(x.need_csv("inner_stations.csv", "inner"), x.need_csv("inner_profiles.csv", "inner"));
  const auto m = x.build_mesh();
  const auto& zeta = f.column("zeta");
  if (zeta.size() != m.size())
    throw Error(ErrorKind::Config, "outer_fields.csv does not match the configured mesh; rerun the outer stage");
  const auto& zeta1 = f.column("zeta1");
  const auto j = x.need_csv("boundary_trace.csv", "outer").column("j");
  if (j.size() != m.boundary.size())
    throw Error(ErrorKind::Config, "boundary_trace.csv does not match the configured mesh; rerun the outer stage");

  composite::CompositeOptions co;
  co.cells_per_eps = x.c.grid.cells_per_eps;
  co.secular_matching = x.c.secular_matching;
  const auto cs = composite::assemble_composite(m, zeta, zeta1, j, stations, x.c.epsilon,
                                                composite::CutoffSpec::for_eps(x.c.epsilon, x.c.iota), co);
  const auto r = composite::residuals(m, cs, zeta, j);

  const std::size_t n = m.size();
  io::Table t;
  t.add("x", column(n, [&](std::size_t i) { return m.nodes[i].x; }));
  t.add("y", column(n, [&](std::size_t i) { return m.nodes[i].y; }));
  t.add("t", cs.mesh_t);
  t.add("rho0", cs.mesh_rho0);
  t.add("chi0", cs.mesh_chi0);
  t.add("phi0", cs.mesh_phi0);
  x.write_csv("composite_fields.csv", t);

  const auto& g = cs.band;
  const std::size_t nbnd = g.size();
  io::Table b;
  b.add("s", column(nbnd, [&](std::size_t q) { return g.s[q / g.nt]; }));
  b.add("t", column(nbnd, [&](std::size_t q) { return g.t(static_cast<int>(q % g.nt)); }));
  b.add("x", column(nbnd, [&](std::size_t q) { return g.x(int(q / g.nt), int(q % g.nt)).x; }));
  b.add("y", column(nbnd, [&](std::size_t q) { return g.x(int(q / g.nt), int(q % g.nt)).y; }));
  b.add("cutoff", cs.cutoff);
  b.add("rho0", cs.rho0);
  b.add("chi0", cs.chi0);
  b.add("phi0", cs.phi0);
  b.add("h1", r.band_h1);
  b.add("div_h2", r.band_div_h2);
  b.add("h3", r.band_h3);
  x.write_csv("composite_band.csv", b);

  x.write_json("residuals.json", {{"epsilon", r.eps},
                                  {"iota", r.iota},
                                  {"delta", r.delta},
                                  {"sigma0", r.sigma0},
                                  {"stations", cs.stations},
                                  {"band", {{"ns", g.ns}, {"nt", g.nt}, {"ds", g.ds}, {"dt", g.dt}}},
                                  {"secular_matching", cs.secular_matching},
                                  {"h1", split_json(r.h1)},
                                  {"div_h2", split_json(r.div_h2)},
                                  {"h3", split_json(r.h3)},
                                  {"gauge_ratio", r.gauge_ratio},
                                  {"gauge_ok", r.gauge_ok},
                                  {"continuity_jump", r.continuity_jump},
                                  {"rho0_range", {r.rho0_min, r.rho0_max}},
                                  {"identity_rms_1", r.identities.rms_1},
                                  {"identity_rms_2", r.identities.rms_2}});
  x.result.scalars["h1"] = r.h1.total;
  x.result.scalars["h1_interior"] = r.h1.interior;
  x.result.scalars["h1_outer_region"] = r.h1.outer_region;
  x.result.scalars["div_h2"] = r.div_h2.total;
  x.result.scalars["h3"] = r.h3.total;
  x.result.scalars["gauge_ratio"] = r.gauge_ratio;
}

void stage_stability(Context& x) {
  const auto& s = x.c.stability;
  const auto v = stability::stability_verdict(s.beta, s.sigma, s.l, s.eps, s.n_max);
  const std::size_t n = v.modes.size();
  io::Table t;
  t.add("n", column(n, [&](std::size_t i) { return double(i + 1); }));
  t.add("gamma", column(n, [&](std::size_t i) { return v.modes[i].gamma; }));
  t.add("A_plus", column(n, [&](std::size_t i) { return v.modes[i].A_plus; }));
  t.add("A_minus", column(n, [&](std::size_t i) { return v.modes[i].A_minus; }));
  t.add("lambda_plus", column(n, [&](std::size_t i) { return v.modes[i].lambda_plus; }));
  t.add("lambda_minus", column(n, [&](std::size_t i) { return v.modes[i].lambda_minus; }));
  t.add("discriminant", column(n, [&](std::size_t i) { return v.modes[i].discriminant; }));
  x.write_csv("stability_modes.csv", t);
  x.write_json("stability.json", {{"beta", s.beta},
                                  {"sigma", s.sigma},
                                  {"l", s.l},
                                  {"eps", s.eps},
                                  {"n_max", s.n_max},
                                  {"verdict", stability::to_string(v.verdict)},
                                  {"min_lambda_minus", v.min_lambda_minus},
                                  {"argmin_mode", v.argmin_mode},
                                  {"lambda_minus_zero", v.lambda_minus_zero},
                                  {"threshold_beta", stability::threshold_beta(s.sigma)}});
  x.result.scalars["min_lambda_minus"] = v.min_lambda_minus;
  x.result.scalars["stable"] = v.verdict == stability::Verdict::Unstable ? 0 : 1;
}

void stage_evolve(Context& x) {
  const auto& s = x.c.stability;
  const auto& e = x.c.evolve;
  stability::StabilityInput in{s.beta, s.sigma, s.l, s.eps, {e.mode}};
  stability::EvolveOptions eo;
  eo.n_cells = e.n_cells;
  eo.mode = e.mode;
  eo.amplitude = e.amplitude;
  const auto r = stability::evolve_1d(in, e.T, e.dt, eo);
  io::Table t;
  t.add("time", r.times);
  t.add("norm", r.norms);
  x.write_csv("evolve_history.csv", t);
  x.write_json("evolve.json", {{"beta", s.beta},
                               {"sigma", s.sigma},
                               {"mode", e.mode},
                               {"T", e.T},
                               {"dt", e.dt},
                               {"n_cells", e.n_cells},
                               {"fitted_rate", r.fitted_rate},
                               {"predicted_rate", r.predicted_rate},
                               {"relative_error", std::abs(r.fitted_rate - r.predicted_rate) /
                                                      std::max(1e-300, std::abs(r.predicted_rate))},
                               {"max_gauge_avg", r.max_gauge_avg}});
  x.result.scalars["fitted_rate"] = r.fitted_rate;
  x.result.scalars["predicted_rate"] = r.predicted_rate;
}

void run_stage(Context& x, Stage s) {
  switch (s) {
    case Stage::Feasibility: return stage_feasibility(x);
    case Stage::Outer: return stage_outer(x);
    case Stage::Inner: return stage_inner(x);
    case Stage::Composite: return stage_composite(x);
    case Stage::Stability: return stage_stability(x);
    case Stage::Evolve1d: return stage_evolve(x);
  }
}

void write_manifest(Context& x) {
  json stages = json::array();
  json timings = json::object();
  for (const auto& s : x.result.stages) {
    stages.push_back({{"name", s.name}, {"status", s.status}, {"error", s.error}, {"message", s.message}});
    timings[s.name] = s.seconds;
  }
  json artifacts = json::array();
  for (const auto& a : x.result.artifacts) {
    const std::string data = io::read_file(x.dir / a);
    artifacts.push_back({{"file", a}, {"bytes", data.size()}, {"sha256", io::sha256_hex(data)}});
  }
  json scalars = json::object();
  for (const auto& [k, v] : x.result.scalars) scalars[k] = v;
  json m{{"config", json::parse(config::to_json(x.c))},
         {"versions", versions()},
         {"stages", stages},
         {"scalars", scalars},
         {"artifacts", artifacts},
         {"exit_code", x.result.exit_code},
         {"timings_file", "timings.json"}};
  io::write_atomic(x.dir / "timings.json", timings.dump(2) + "\n");
  io::write_atomic(x.dir / "manifest.json", m.dump(2) + "\n");
}

fs::path out_dir(const config::RunConfig& c, const RunOptions& opt) {
  return opt.out.empty() ? fs::path(c.output) : opt.out;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::Config, "cannot create output directory " + dir.string());
}

}  // namespace

const char* to_string(Stage s) {
  switch (s) {
    case Stage::Feasibility: return "feasibility";
    case Stage::Outer: return "outer";
    case Stage::Inner: return "inner";
    case Stage::Composite: return "composite";
    case Stage::Stability: return "stability";
    case Stage::Evolve1d: return "evolve1d";
  }
  return "?";
}

std::vector<Stage> stages_for(const std::string& name) {
  if (name == "all") return {Stage::Feasibility, Stage::Outer, Stage::Inner, Stage::Composite, Stage::Stability};
  for (Stage s : {Stage::Feasibility, Stage::Outer, Stage::Inner, Stage::Composite, Stage::Stability, Stage::Evolve1d})
    if (name == to_string(s)) return {s};
  throw Error(ErrorKind::Config, "unknown subcommand " + name);
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config:
    case ErrorKind::Geometry: return 4;
    case ErrorKind::Infeasible: return 2;
    default: return 3;
  }
}

RunResult run(const config::RunConfig& c, const std::vector<Stage>& stages, const RunOptions& opt) {
  const fs::path dir = out_dir(c, opt);
  prepare_dir(dir);
  Context x(c, opt, dir);
  for (Stage s : stages)
    for (const auto& f : owned().at(s)) fs::remove(dir / f);

  bool halted = false;
  for (Stage s : stages) {
    StageRecord rec;
    rec.name = to_string(s);
    if (halted) {
      rec.status = "skipped";
      x.result.stages.push_back(rec);
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    try {
      run_stage(x, s);
      rec.status = "ok";
    } catch (const Error& e) {
      rec.error = sc::to_string(e.kind());
      rec.message = e.what();
      if (e.kind() == ErrorKind::Infeasible && s == Stage::Feasibility && opt.override_feasibility) {
        rec.status = "overridden";
      } else {
        rec.status = e.kind() == ErrorKind::Infeasible ? "infeasible" : "failed";
        x.result.exit_code = exit_code(e.kind());
        halted = true;
      }
    } catch (const std::exception& e) {
      rec.status = "failed";
      rec.error = "Internal";
      rec.message = e.what();
      x.result.exit_code = 3;
      halted = true;
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    x.result.stages.push_back(rec);
  }
  write_manifest(x);
  return x.result;
}

RunResult sweep(const config::RunConfig& c, const RunOptions& opt) {
  if (c.sweep.values.empty()) throw Error(ErrorKind::Config, "sweep.values: must not be empty");
  const fs::path dir = out_dir(c, opt);
  prepare_dir(dir);
  const auto& axis = c.sweep.axis;
  const std::vector<Stage> stages =
      axis == "beta" ? std::vector<Stage>{Stage::Stability}
                     : std::vector<Stage>{Stage::Feasibility, Stage::Outer, Stage::Inner, Stage::Composite};

  const std::size_t n = c.sweep.values.size();
  std::vector<RunResult> runs(n);
  std::vector<std::string> sub(n);
  const int outer_jobs = std::clamp<int>(opt.jobs, 1, static_cast<int>(n));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      config::RunConfig ci = c;
      const double v = c.sweep.values[i];
      if (axis == "epsilon") ci.epsilon = v;
      else if (axis == "sigma0") ci.sigma0 = v;
      else if (axis == "beta") ci.stability.beta = v;
      else ci.current.spec.amplitude = v;
      sub[i] = axis + "_" + std::to_string(i);
      RunOptions oi = opt;
      oi.out = dir / sub[i];
      oi.jobs = outer_jobs > 1 ? 1 : opt.jobs;
      try {
        config::parse(config::to_json(ci));  // re-validates the substituted value
        runs[i] = run(ci, stages, oi);
      } catch (const Error& e) {
        runs[i].exit_code = exit_code(e.kind());
        runs[i].stages.push_back({"config", "failed", sc::to_string(e.kind()), e.what(), 0});
      }
    }
  };
  if (outer_jobs == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < outer_jobs; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  static const std::vector<std::string> keys{"sup_M", "max_grad", "mu_j_min", "mu_j_max", "h1", "h1_interior",
                                             "h1_outer_region", "div_h2", "h3", "min_lambda_minus", "stable"};
  io::Table t;
  t.add(axis, c.sweep.values);
  t.add("exit_code", column(n, [&](std::size_t i) { return double(runs[i].exit_code); }));
  for (const auto& k : keys) {
    t.add(k, column(n, [&](std::size_t i) {
            const auto it = runs[i].scalars.find(k);
            return it == runs[i].scalars.end() ? kNaN : it->second;
          }));
  }
  // ratios between consecutive rows: the per-halving improvement of an epsilon sweep
  for (const char* k : {"h1", "div_h2", "h3", "h1_interior"}) {
    const auto& col = t.column(k);
    t.add(std::string(k) + "_ratio", column(n, [&](std::size_t i) { return i == 0 ? kNaN : col[i - 1] / col[i]; }));
  }

  Context x(c, opt, dir);
  x.write_csv("sweep.csv", t);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& a : runs[i].artifacts) x.result.artifacts.push_back(sub[i] + "/" + a);
    StageRecord rec;
    rec.name = sub[i];
    rec.status = runs[i].exit_code == 0 ? "ok" : "failed";
    for (const auto& s : runs[i].stages) {
      rec.seconds += s.seconds;
      if (s.status == "failed" || s.status == "infeasible") rec.error = s.error, rec.message = s.message;
    }
    x.result.stages.push_back(rec);
  }
  write_manifest(x);
  return x.result;
}

}  // namespace sc::pipeline
