#include "sc/config.hpp"

#include <cmath>
#include <set>

#include "json.hpp"
#include "sc/io.hpp"

namespace sc::config {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::Config, path + ": " + what);
}

// Reads the keys of one object and rejects any key it was not asked for.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }
  template <class T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, int>) {
        if (!v.is_number_integer()) fail(name(key), "expected an integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) fail(name(key), "expected a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) fail(name(key), "expected true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) fail(name(key), "expected a string");
      }
      out = v.get<T>();
    } catch (const json::exception&) {
      fail(name(key), "wrong type");
    }
  }
  bool has(const char* key) const { return j_.contains(key); }
  Reader sub(const char* key) {
    seen_.insert(key);
    return Reader(j_.at(key), name(key));
  }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(name(it.key().c_str()), "unknown key");
  }
  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void positive(double v, const char* path) {
  if (!(v > 0) || !std::isfinite(v)) fail(path, "must be positive");
}

void validate(const RunConfig& c) {
  static const std::set<std::string> presets{"circle", "ellipse", "stadium", "dumbbell", "rectangle", "csv"};
  if (!presets.count(c.domain.preset)) fail("domain.preset", "unknown preset '" + c.domain.preset + "'");
  if (c.domain.preset == "csv" && c.domain.csv.empty()) fail("domain.csv", "required when domain.preset is csv");
  if (c.domain.samples < 16) fail("domain.samples", "must be at least 16");
  for (auto [v, p] : {std::pair{c.domain.radius, "domain.radius"}, {c.domain.a, "domain.a"}, {c.domain.b, "domain.b"},
                      {c.domain.half_length, "domain.half_length"}, {c.domain.lx, "domain.lx"}, {c.domain.ly, "domain.ly"},
                      {c.domain.lobe, "domain.lobe"}, {c.domain.neck_width, "domain.neck_width"},
                      {c.domain.neck_length, "domain.neck_length"}})
    positive(v, p);
  static const std::set<std::string> profiles{"zero", "cosine", "arcs", "edges"};
  if (c.current.csv.empty() && !profiles.count(c.current.spec.preset))
    fail("current.preset", "unknown profile '" + c.current.spec.preset + "'");
  if (!(c.current.spec.amplitude >= 0)) fail("current.amplitude", "must be nonnegative");
  positive(c.epsilon, "epsilon");
  positive(c.sigma0, "sigma0");
  if (!(c.iota > 0 && c.iota < 1)) fail("iota", "must lie in (0, 1)");
  positive(c.grid.h, "grid.h");
  positive(c.grid.feasibility_h, "grid.feasibility_h");
  positive(c.grid.inner_h, "grid.inner_h");
  if (c.grid.inner_eta_max < 0) fail("grid.inner_eta_max", "must be nonnegative");
  if (c.grid.cells_per_eps < 8) fail("grid.cells_per_eps", "must be at least 8");
  const auto& k = c.continuation;
  positive(k.initial_step, "continuation.initial_step");
  positive(k.max_step, "continuation.max_step");
  positive(k.min_step, "continuation.min_step");
  if (!(k.growth > 1)) fail("continuation.growth", "must exceed 1");
  if (!(k.safeguard >= 0 && k.safeguard < 1 / std::sqrt(3.0))) fail("continuation.safeguard", "must lie in [0, 1/sqrt 3)");
  if (!(c.stability.beta >= 0 && c.stability.beta < 1)) fail("stability.beta", "must lie in [0, 1)");
  positive(c.stability.sigma, "stability.sigma");
  positive(c.stability.l, "stability.l");
  positive(c.stability.eps, "stability.eps");
  if (c.stability.n_max < 1) fail("stability.n_max", "must be at least 1");
  positive(c.evolve.T, "evolve.T");
  positive(c.evolve.dt, "evolve.dt");
  if (c.evolve.n_cells < 8) fail("evolve.n_cells", "must be at least 8");
  if (c.evolve.mode < 1) fail("evolve.mode", "must be at least 1");
  static const std::set<std::string> axes{"epsilon", "sigma0", "beta", "amplitude"};
  if (!axes.count(c.sweep.axis)) fail("sweep.axis", "must be one of epsilon, sigma0, beta, amplitude");
  if (c.output.empty()) fail("output", "must not be empty");
}

}  // namespace

RunConfig parse(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Reader r(j, "");
  if (r.has("domain")) {
    auto d = r.sub("domain");
    d.get("preset", c.domain.preset);
    d.get("csv", c.domain.csv);
    d.get("radius", c.domain.radius);
    d.get("a", c.domain.a);
    d.get("b", c.domain.b);
    d.get("half_length", c.domain.half_length);
    d.get("lx", c.domain.lx);
    d.get("ly", c.domain.ly);
    d.get("lobe", c.domain.lobe);
    d.get("neck_width", c.domain.neck_width);
    d.get("neck_length", c.domain.neck_length);
    d.get("fillet", c.domain.fillet);
    d.get("samples", c.domain.samples);
    d.finish();
  }
  if (r.has("current")) {
    auto d = r.sub("current");
    auto& s = c.current.spec;
    d.get("preset", s.preset);
    d.get("amplitude", s.amplitude);
    d.get("mode", s.mode);
    d.get("phase", s.phase);
    d.get("inlet", s.inlet);
    d.get("outlet", s.outlet);
    d.get("width", s.width);
    d.get("axis", s.axis);
    d.get("csv", c.current.csv);
    d.finish();
  }
  r.get("epsilon", c.epsilon);
  r.get("sigma0", c.sigma0);
  r.get("iota", c.iota);
  r.get("secular_matching", c.secular_matching);
  r.get("output", c.output);
  if (r.has("grid")) {
    auto d = r.sub("grid");
    d.get("h", c.grid.h);
    d.get("feasibility_h", c.grid.feasibility_h);
    d.get("inner_h", c.grid.inner_h);
    d.get("inner_eta_max", c.grid.inner_eta_max);
    d.get("cells_per_eps", c.grid.cells_per_eps);
    d.finish();
  }
  if (r.has("continuation")) {
    auto d = r.sub("continuation");
    auto& k = c.continuation;
    d.get("initial_step", k.initial_step);
    d.get("growth", k.growth);
    d.get("max_step", k.max_step);
    d.get("min_step", k.min_step);
    d.get("safeguard", k.safeguard);
    d.get("max_newton", k.max_newton);
    d.get("newton_tol", k.newton_tol);
    std::string solver = k.linear_solver == outer::LinearSolver::Direct ? "direct" : "cg";
    d.get("linear_solver", solver);
    if (solver != "direct" && solver != "cg") fail("continuation.linear_solver", "must be direct or cg");
    k.linear_solver = solver == "direct" ? outer::LinearSolver::Direct : outer::LinearSolver::DiagonalCG;
    d.finish();
  }
  if (r.has("stability")) {
    auto d = r.sub("stability");
    d.get("beta", c.stability.beta);
    d.get("sigma", c.stability.sigma);
    d.get("l", c.stability.l);
    d.get("eps", c.stability.eps);
    d.get("n_max", c.stability.n_max);
    d.finish();
  }
  if (r.has("evolve")) {
    auto d = r.sub("evolve");
    d.get("T", c.evolve.T);
    d.get("dt", c.evolve.dt);
    d.get("n_cells", c.evolve.n_cells);
    d.get("mode", c.evolve.mode);
    d.get("amplitude", c.evolve.amplitude);
    d.finish();
  }
  if (r.has("sweep")) {
    auto d = r.sub("sweep");
    d.get("axis", c.sweep.axis);
    d.get("values", c.sweep.values);
    d.finish();
  }
  r.finish();
  validate(c);
  return c;
}

RunConfig load(const std::filesystem::path& path) { return parse(io::read_file(path)); }

std::string to_json(const RunConfig& c) {
  json j;
  j["domain"] = {{"preset", c.domain.preset}, {"csv", c.domain.csv}, {"radius", c.domain.radius},
                 {"a", c.domain.a}, {"b", c.domain.b}, {"half_length", c.domain.half_length},
                 {"lx", c.domain.lx}, {"ly", c.domain.ly}, {"lobe", c.domain.lobe},
                 {"neck_width", c.domain.neck_width}, {"neck_length", c.domain.neck_length},
                 {"fillet", c.domain.fillet}, {"samples", c.domain.samples}};
  const auto& s = c.current.spec;
  j["current"] = {{"preset", s.preset}, {"amplitude", s.amplitude}, {"mode", s.mode}, {"phase", s.phase},
                  {"inlet", s.inlet}, {"outlet", s.outlet}, {"width", s.width}, {"axis", s.axis},
                  {"csv", c.current.csv}};
  j["epsilon"] = c.epsilon;
  j["sigma0"] = c.sigma0;
  j["iota"] = c.iota;
  j["secular_matching"] = c.secular_matching;
  j["output"] = c.output;
  j["grid"] = {{"h", c.grid.h}, {"feasibility_h", c.grid.feasibility_h}, {"inner_h", c.grid.inner_h},
               {"inner_eta_max", c.grid.inner_eta_max}, {"cells_per_eps", c.grid.cells_per_eps}};
  const auto& k = c.continuation;
  j["continuation"] = {{"initial_step", k.initial_step}, {"growth", k.growth}, {"max_step", k.max_step},
                       {"min_step", k.min_step}, {"safeguard", k.safeguard}, {"max_newton", k.max_newton},
                       {"newton_tol", k.newton_tol},
                       {"linear_solver", k.linear_solver == outer::LinearSolver::Direct ? "direct" : "cg"}};
  j["stability"] = {{"beta", c.stability.beta}, {"sigma", c.stability.sigma}, {"l", c.stability.l},
                    {"eps", c.stability.eps}, {"n_max", c.stability.n_max}};
  j["evolve"] = {{"T", c.evolve.T}, {"dt", c.evolve.dt}, {"n_cells", c.evolve.n_cells}, {"mode", c.evolve.mode},
                 {"amplitude", c.evolve.amplitude}};
  j["sweep"] = {{"axis", c.sweep.axis}, {"values", c.sweep.values}};
  return j.dump(2);
}

geometry::BoundaryGeometry make_boundary(const RunConfig& c) {
  const auto& d = c.domain;
  const int n = d.samples;
  if (d.preset == "circle") return geometry::build_boundary(geometry::circle_samples(d.radius, {0, 0}, n));
  if (d.preset == "ellipse") return geometry::build_boundary(geometry::ellipse_samples(d.a, d.b, {0, 0}, n));
  if (d.preset == "stadium") return geometry::build_boundary(geometry::stadium_samples(d.half_length, d.radius, n));
  if (d.preset == "rectangle") return geometry::build_boundary(geometry::rectangle_samples(d.lx, d.ly, n));
  if (d.preset == "dumbbell")
    return geometry::build_boundary(geometry::dumbbell_samples(d.lobe, d.neck_width, d.neck_length, d.fillet, n));
  const auto t = io::read_csv(d.csv);
  const auto& x = t.column("x");
  const auto& y = t.column("y");
  std::vector<Vec2> pts(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) pts[i] = {x[i], y[i]};
  if (!pts.empty() && (pts.front().x != pts.back().x || pts.front().y != pts.back().y)) pts.push_back(pts.front());
  return geometry::build_boundary(std::move(pts));
}

feasibility::CurrentProfile make_current(const RunConfig& c, const geometry::BoundaryGeometry& g) {
  if (c.current.csv.empty()) return feasibility::make_current(g, c.current.spec);
  const auto t = io::read_csv(c.current.csv);
  feasibility::CurrentProfile p;
  p.j = t.column("j");
  if (p.j.size() != g.size())
    throw Error(ErrorKind::Config, "current.csv: expected " + std::to_string(g.size()) + " values, one per boundary sample");
  feasibility::enforce_mean_free(g, p);
  return p;
}

}  // namespace sc::config
