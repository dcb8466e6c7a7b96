#include "khess/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <set>
#include <sstream>

#include "khess/errors.hpp"
#include "khess/grid_solver.hpp"
#include "khess/radial.hpp"
#include "khess/symfun.hpp"

namespace khess {

namespace {

Json point_json(const Point& p, int dim) {
  Json a = Json::array();
  for (int i = 0; i < dim; ++i) a.push_back(p[static_cast<std::size_t>(i)]);
  return a;
}

Point parse_point(const Json& j, int dim, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    throw ConfigError(std::string(what) + ": expected an array of " + std::to_string(dim) + " numbers");
  }
  Point p{0.0, 0.0, 0.0};
  for (int i = 0; i < dim; ++i) p[static_cast<std::size_t>(i)] = j.at(static_cast<std::size_t>(i)).get<double>();
  return p;
}

std::vector<std::pair<int, int>> parse_pairs(const Json& j, const char* what) {
  std::vector<std::pair<int, int>> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2) throw ConfigError(std::string(what) + ": expected [n, k] pairs");
    out.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  return out;
}

Json pairs_json(const std::vector<std::pair<int, int>>& v) {
  Json a = Json::array();
  for (const auto& [n, k] : v) a.push_back({n, k});
  return a;
}

template <class T>
T take(const Json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void check_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

Json witness_json(const std::optional<Witness>& w, int dim) {
  if (!w) return nullptr;
  return Json{{"a", point_json(w->a, dim)}, {"b", point_json(w->b, dim)}, {"point", point_json(w->point, dim)}};
}

Json solve_json(const SolveReport& r) {
  return Json{{"iterations", r.iterations},
              {"residual_inf", r.residual_inf},
              {"damping_history", r.damping_history},
              {"repair_count", r.repair_count},
              {"pseudo_time_steps", r.pseudo_time_steps},
              {"initialization", r.initialization},
              {"converged", r.converged}};
}

Json estimates_json(const EstimateReport& r, int dim) {
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    checks.push_back(Json{{"name", c.name},
                          {"applicable", c.applicable},
                          {"pass", c.pass},
                          {"checked", c.checked},
                          {"violations", c.violations},
                          {"worst", c.worst},
                          {"worst_location", point_json(c.worst_location, dim)},
                          {"note", c.note}});
  }
  return Json{{"all_pass", r.all_pass()}, {"gradient_constant", r.gradient_constant}, {"checks", checks}};
}

Json convexity_json(const ConvexityReport& r, int dim) {
  Json levels = Json::array();
  for (const auto& l : r.levels) {
    levels.push_back(Json{{"level", l.level},
                          {"defect", l.defect},
                          {"hull_ratio", l.hull_ratio},
                          {"set_size", l.set_size},
                          {"pairs_tested", l.pairs_tested},
                          {"verdict", l.verdict},
                          {"witness", witness_json(l.witness, dim)}});
  }
  return Json{{"h", r.h},
              {"M", r.M},
              {"threshold", r.threshold},
              {"quantum", r.quantum},
              {"worst_level", r.worst_level},
              {"max_defect", r.max_defect()},
              {"levels", levels}};
}

// Runs `task(i)` for i in [0, n) with at most `workers` in flight; results keep index order.
template <class R, class F>
std::vector<R> run_ordered(std::size_t n, int workers, F task) {
  std::vector<R> out(n);
  const std::size_t batch = static_cast<std::size_t>(std::max(1, workers));
  for (std::size_t start = 0; start < n; start += batch) {
    std::vector<std::future<R>> futs;
    for (std::size_t i = start; i < std::min(n, start + batch); ++i)
      futs.push_back(std::async(batch == 1 ? std::launch::deferred : std::launch::async, task, i));
    for (std::size_t i = 0; i < futs.size(); ++i) out[start + i] = futs[i].get();
  }
  return out;
}

SolveOptions solve_options(const ExperimentConfig& cfg) {
  SolveOptions o;
  o.tolerance = cfg.tolerance;
  o.max_iterations = cfg.max_iterations;
  return o;
}

double node_min(const GridField& f) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t u = 0; u < f.disc->unknowns(); ++u) m = std::min(m, f.values[f.disc->node_of(u)]);
  return m;
}

ExtendedField as_extended(const GridField& f) {
  ExtendedField e;
  e.disc = f.disc;
  e.values = f.values;
  e.M = f.meta.M;
  return e;
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// Configuration

ConvexDomain ExperimentConfig::make_domain() const {
  if (domain.kind == "ball") return ConvexDomain::ball(dim, domain.center, domain.radius);
  if (domain.kind == "ellipsoid") return ConvexDomain::ellipsoid(dim, domain.center, domain.semi_axes);
  if (domain.kind == "p_ball") return ConvexDomain::p_ball(dim, domain.center, domain.radius, domain.p);
  throw ConfigError("domain.kind must be ball, ellipsoid or p_ball");
}

void ExperimentConfig::validate() const {
  if (mode != "counterexample" && mode != "measure" && mode != "barrier")
    throw ConfigError("mode must be counterexample, measure or barrier");
  if (dim != 2 && dim != 3) throw ConfigError("dim must be 2 or 3");
  const int ne = n_equation();
  if (ne < 2) throw ConfigError("n must be at least 2");
  if (k < 1 || k > ne) throw ConfigError("k must satisfy 1 <= k <= n");
  if (eps_list.empty()) throw ConfigError("eps_list must not be empty");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0)) throw ConfigError("eps values must be positive");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw ConfigError("eps_list must be strictly decreasing");
  }
  if (grid_h.empty()) throw ConfigError("grid_h must not be empty");
  for (std::size_t i = 0; i < grid_h.size(); ++i) {
    if (!(grid_h[i] > 0.0)) throw ConfigError("grid spacings must be positive");
    if (i > 0 && !(grid_h[i] < grid_h[i - 1])) throw ConfigError("grid_h must be strictly decreasing");
  }
  const bool grid_mode = mode == "counterexample" || (mode == "measure" && !measure_radial) ||
                         (mode == "barrier" && barrier_grid);
  if (grid_mode) {
    if (ne != dim) throw ConfigError("grid solves need n equal to dim");
    const double hmax = grid_h.front();
    for (double e : eps_list)
      if (e < 2.0 * hmax * (1.0 - 1e-12))
        throw ConfigError("every eps must be at least 2h (eps " + std::to_string(e) + ", h " + std::to_string(hmax) + ")");
  }
  if (hole_rule != "auto" && hole_rule != "explicit" && hole_rule != "centered")
    throw ConfigError("hole.rule must be auto, explicit or centered");
  if (!(hole_t > 0.0 && hole_t < 1.0)) throw ConfigError("hole.t must lie in (0, 1)");
  if (M_rule != "auto" && M_rule != "explicit") throw ConfigError("M.rule must be auto or explicit");
  if (M_rule == "auto" && !(M_factor >= 1.0)) throw ConfigError("M.factor below 1 violates M >= M1");
  if (M_rule == "explicit" && !(M_value > 0.0)) throw ConfigError("M.value must be positive");
  if (levels < 2) throw ConfigError("levels must be at least 2");
  if (!(defect_threshold > 0.0)) throw ConfigError("defect_threshold must be positive");
  if (!(gap_fraction >= 0.0 && gap_fraction < 1.0)) throw ConfigError("gap_fraction must lie in [0, 1)");
  for (double f : eta_fractions)
    if (!(f > 0.0 && f < 1.0)) throw ConfigError("eta fractions must lie in (0, 1)");
  if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  if (max_iterations < 1) throw ConfigError("max_iterations must be positive");
  if (workers < 1) throw ConfigError("workers must be positive");
  if (!random_free) throw ConfigError("random_free must be true: all sampling is deterministic");
  for (const auto& b : measure_balls)
    if (!(b.radius > 0.0)) throw ConfigError("measure ball radius must be positive");
  for (const auto& [cn, ck] : barrier_cases)
    if (ck < 1 || ck > cn) throw ConfigError("barrier case needs 1 <= k <= n");
  for (const auto& [cn, ck] : scaling_families)
    if (ck < 1 || ck > cn) throw ConfigError("scaling family needs 1 <= k <= n");
  make_domain();
}

ExperimentConfig parse_config(const Json& j) {
  ExperimentConfig c;
  check_keys(j,
             {"mode", "dim", "domain", "hole", "eps_list", "k", "n", "M", "grid_h", "levels", "eta_fractions",
              "defect_threshold", "gap_fraction", "tolerance", "max_iterations", "workers", "output_dir",
              "random_free", "write_fields", "refine", "measure", "barrier"},
             "config");
  c.mode = take<std::string>(j, "mode", c.mode);
  c.dim = take<int>(j, "dim", c.dim);
  if (j.contains("domain")) {
    const Json& d = j["domain"];
    check_keys(d, {"kind", "center", "radius", "semi_axes", "p"}, "domain");
    c.domain.kind = take<std::string>(d, "kind", c.domain.kind);
    if (d.contains("center")) c.domain.center = parse_point(d["center"], c.dim, "domain.center");
    c.domain.radius = take<double>(d, "radius", c.domain.radius);
    if (d.contains("semi_axes")) c.domain.semi_axes = parse_point(d["semi_axes"], c.dim, "domain.semi_axes");
    c.domain.p = take<double>(d, "p", c.domain.p);
  }
  if (j.contains("hole")) {
    const Json& h = j["hole"];
    check_keys(h, {"rule", "t", "x0"}, "hole");
    c.hole_rule = take<std::string>(h, "rule", c.hole_rule);
    c.hole_t = take<double>(h, "t", c.hole_t);
    if (h.contains("x0")) c.hole_x0 = parse_point(h["x0"], c.dim, "hole.x0");
    if (c.hole_rule == "explicit" && !h.contains("x0")) throw ConfigError("hole.rule explicit needs hole.x0");
  }
  c.eps_list = take<std::vector<double>>(j, "eps_list", c.eps_list);
  c.k = take<int>(j, "k", c.k);
  if (j.contains("n") && !j["n"].is_null()) c.n = take<int>(j, "n", 0);
  if (j.contains("M")) {
    const Json& m = j["M"];
    check_keys(m, {"rule", "factor", "value"}, "M");
    c.M_rule = take<std::string>(m, "rule", c.M_rule);
    c.M_factor = take<double>(m, "factor", c.M_factor);
    c.M_value = take<double>(m, "value", c.M_value);
    if (c.M_rule == "explicit" && !m.contains("value")) throw ConfigError("M.rule explicit needs M.value");
  }
  if (j.contains("grid_h")) {
    if (j["grid_h"].is_number())
      c.grid_h = {j["grid_h"].get<double>()};
    else
      c.grid_h = take<std::vector<double>>(j, "grid_h", c.grid_h);
  }
  c.levels = take<int>(j, "levels", c.levels);
  c.eta_fractions = take<std::vector<double>>(j, "eta_fractions", c.eta_fractions);
  c.defect_threshold = take<double>(j, "defect_threshold", c.defect_threshold);
  c.gap_fraction = take<double>(j, "gap_fraction", c.gap_fraction);
  c.tolerance = take<double>(j, "tolerance", c.tolerance);
  c.max_iterations = take<int>(j, "max_iterations", c.max_iterations);
  c.workers = take<int>(j, "workers", c.workers);
  c.output_dir = take<std::string>(j, "output_dir", c.output_dir);
  c.random_free = take<bool>(j, "random_free", c.random_free);
  c.write_fields = take<bool>(j, "write_fields", c.write_fields);
  c.refine = take<bool>(j, "refine", c.refine);
  if (j.contains("measure")) {
    const Json& m = j["measure"];
    check_keys(m, {"balls", "radial"}, "measure");
    c.measure_radial = take<bool>(m, "radial", c.measure_radial);
    if (m.contains("balls")) {
      c.measure_balls.clear();
      for (const auto& b : m["balls"]) {
        check_keys(b, {"center", "radius"}, "measure.balls[]");
        Ball ball;
        if (b.contains("center")) ball.center = parse_point(b["center"], c.dim, "measure.balls[].center");
        ball.radius = take<double>(b, "radius", 0.0);
        c.measure_balls.push_back(ball);
      }
    }
  }
  if (j.contains("barrier")) {
    const Json& b = j["barrier"];
    check_keys(b, {"cases", "scaling_families", "grid"}, "barrier");
    if (b.contains("cases")) c.barrier_cases = parse_pairs(b["cases"], "barrier.cases");
    if (b.contains("scaling_families")) c.scaling_families = parse_pairs(b["scaling_families"], "barrier.scaling_families");
    c.barrier_grid = take<bool>(b, "grid", c.barrier_grid);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  return parse_config(j);
}

Json ExperimentConfig::to_json() const {
  Json dom{{"kind", domain.kind}, {"center", point_json(domain.center, dim)}};
  if (domain.kind == "ellipsoid")
    dom["semi_axes"] = point_json(domain.semi_axes, dim);
  else
    dom["radius"] = domain.radius;
  if (domain.kind == "p_ball") dom["p"] = domain.p;
  Json hole{{"rule", hole_rule}};
  if (hole_rule == "auto") hole["t"] = hole_t;
  if (hole_rule == "explicit") hole["x0"] = point_json(hole_x0, dim);
  Json m{{"rule", M_rule}};
  if (M_rule == "auto")
    m["factor"] = M_factor;
  else
    m["value"] = M_value;
  Json balls = Json::array();
  for (const auto& b : measure_balls) balls.push_back(Json{{"center", point_json(b.center, dim)}, {"radius", b.radius}});
  return Json{{"mode", mode},
              {"dim", dim},
              {"domain", dom},
              {"hole", hole},
              {"eps_list", eps_list},
              {"k", k},
              {"n", n_equation()},
              {"M", m},
              {"grid_h", grid_h},
              {"levels", levels},
              {"eta_fractions", eta_fractions},
              {"defect_threshold", defect_threshold},
              {"gap_fraction", gap_fraction},
              {"tolerance", tolerance},
              {"max_iterations", max_iterations},
              {"workers", workers},
              {"output_dir", output_dir},
              {"random_free", random_free},
              {"write_fields", write_fields},
              {"refine", refine},
              {"measure", Json{{"balls", balls}, {"radial", measure_radial}}},
              {"barrier", Json{{"cases", pairs_json(barrier_cases)},
                               {"scaling_families", pairs_json(scaling_families)},
                               {"grid", barrier_grid}}}};
}

// ---------------------------------------------------------------------------------------------
// Counterexample pipeline

namespace {

struct EpsOutcome {
  EpsResult result;
  std::optional<GridField> field;
};

struct CounterexampleSetup {
  ConvexDomain domain;
  Point y{}, x0{};
  double psi_y = 0.0, psi_x0 = 0.0, M = 0.0, M1 = 0.0;
};

EpsOutcome solve_and_test(const ExperimentConfig& cfg, const CounterexampleSetup& s, const Grid& grid, double h,
                          double eps, const GridField* psi, const std::vector<double>& eta_levels) {
  EpsOutcome out;
  EpsResult& r = out.result;
  r.eps = eps;
  try {
    const RingDomain ring(s.domain, s.x0, eps);
    SolveOptions opt = solve_options(cfg);
    opt.psi = psi;
    auto [field, rep] = solve_ring(ring, grid, s.M, cfg.k, opt);
    r.solve = rep;
    const ExtendedField ef = extend_utilde(field, ring);
    const double threshold = cfg.defect_threshold * h * s.M;
    r.convexity = quasiconvexity_report(ef, cfg.levels, threshold, eta_levels);
    for (double lv : eta_levels) r.segment_levels.emplace_back(lv, segment_defect(ef, s.x0, s.y, lv).first);
    for (const auto& [lv, d] : r.segment_levels) {
      if (d > r.best_defect) {
        r.best_defect = d;
        r.best_level = lv;
        r.best_source = "segment";
        r.best_witness = Witness{s.x0, s.y, segment_defect(ef, s.x0, s.y, lv).second};
      }
    }
    for (const auto& l : r.convexity.levels) {
      if (l.defect > r.best_defect) {
        r.best_defect = l.defect;
        r.best_level = l.level;
        r.best_source = "pairs";
        r.best_witness = l.witness;
      }
    }
    if (r.best_source.empty()) r.best_level = r.convexity.levels[r.convexity.worst_level].level;
    r.estimates = verify_estimates(field, ring, psi);
    out.field = std::move(field);
  } catch (const Error& e) {
    r.status = std::string("failed: ") + e.what();
  }
  return out;
}

}  // namespace

CounterexampleReport run_counterexample(const ExperimentConfig& cfg, FileSet* files) {
  cfg.validate();
  if (cfg.mode != "counterexample") throw ConfigError("run_counterexample needs mode counterexample");
  const int d = cfg.dim, k = cfg.k;
  if (k != 1 && k != d) throw ConfigError("the counterexample pipeline runs k = 1, or k = dim as a convex control");

  CounterexampleReport rep;
  CounterexampleSetup s{cfg.make_domain()};
  rep.h = cfg.grid_h.front();
  rep.h_fine = cfg.fine_h();
  const Grid grid = make_grid(s.domain, rep.h);
  const GridField psi = solve_hole_free(s.domain, grid, k, solve_options(cfg));
  const ExtendedField psi_e = as_extended(psi);

  const std::size_t ynode = argmin_node(psi);
  s.y = grid.position(ynode);
  s.psi_y = psi.values[ynode];
  const double M0 = -s.psi_y;
  if (cfg.hole_rule == "auto") {
    const Point b = s.domain.farthest_boundary_point(s.y);
    for (std::size_t a = 0; a < 3; ++a) s.x0[a] = s.y[a] + cfg.hole_t * (b[a] - s.y[a]);
  } else if (cfg.hole_rule == "centered") {
    s.x0 = s.y;
  } else {
    s.x0 = cfg.hole_x0;
  }
  s.psi_x0 = psi_e.sample(s.x0);
  rep.gap = s.psi_x0 - s.psi_y;
  if (cfg.hole_rule != "centered" && s.psi_x0 < -M0 + cfg.gap_fraction * M0 - 1e-9 * M0) {
    throw ConfigError("hole center violates psi(x0) >= -M0 + gap: psi(x0) = " + std::to_string(s.psi_x0) +
                      ", -M0 = " + std::to_string(-M0));
  }

  s.M1 = choose_M1(node_min(psi), s.domain, d, k);
  s.M = cfg.M_rule == "auto" ? cfg.M_factor * s.M1 : cfg.M_value;
  if (cfg.M_rule == "auto") {
    const LowerBarrier centered(s.domain.center(), cfg.eps_list.front(), s.M, d, k);
    if (!(s.M >= M0) || centered.radial_value(s.domain.max_boundary_distance(s.domain.center())) > 0.0)
      throw Error("auto M violates the barrier constraints");
  }
  rep.y = s.y;
  rep.psi_y = s.psi_y;
  rep.x0 = s.x0;
  rep.psi_x0 = s.psi_x0;
  rep.M = s.M;
  rep.M1 = s.M1;
  rep.threshold = cfg.defect_threshold * rep.h * s.M;

  std::vector<double> eta_levels;
  for (double f : cfg.eta_fractions) {
    const double lv = s.psi_y + f * rep.gap;
    if (lv > -s.M && lv < 0.0) eta_levels.push_back(lv);
  }

  auto outcomes = run_ordered<EpsOutcome>(cfg.eps_list.size(), cfg.workers, [&](std::size_t i) {
    return solve_and_test(cfg, s, grid, rep.h, cfg.eps_list[i], &psi, eta_levels);
  });

  if (files && cfg.write_fields) files->emplace_back("fields/psi_h.csv", field_csv(psi));
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    rep.per_eps.push_back(outcomes[i].result);
    if (!files || !cfg.write_fields || !outcomes[i].field) continue;
    const std::string tag = "eps" + std::to_string(i);
    files->emplace_back("fields/u_" + tag + ".csv", field_csv(*outcomes[i].field));
    if (d == 2) {
      const RingDomain ring(s.domain, s.x0, cfg.eps_list[i]);
      const ExtendedField ef = extend_utilde(*outcomes[i].field, ring);
      for (std::size_t j = 0; j < eta_levels.size(); ++j)
        files->emplace_back("levelsets/u_" + tag + "_eta" + std::to_string(j) + ".csv",
                            polylines_csv(level_set_polylines(ef, eta_levels[j])));
    }
  }

  for (std::size_t i = 0; i < rep.per_eps.size(); ++i) {
    const auto& r = rep.per_eps[i];
    if (r.status != "ok") continue;
    if (!rep.flagged_eps || r.best_defect > rep.per_eps[*rep.flagged_eps].best_defect) rep.flagged_eps = i;
  }
  if (rep.flagged_eps) {
    const auto& r = rep.per_eps[*rep.flagged_eps];
    rep.flagged_level = r.best_level;
    rep.flagged_defect = r.best_defect;
    rep.flagged_witness = r.best_witness;
  }
  if (!rep.flagged_eps) {
    rep.verdict = "inconclusive";  // no ring solve converged
    return rep;
  }
  if (rep.flagged_defect <= rep.threshold) {
    rep.verdict = "not detected";
    return rep;
  }
  rep.verdict = "inconclusive";
  if (!cfg.refine) return rep;

  // Refinement: the flagged level must keep a defect above the threshold and retain half of it at h/2.
  const double eps = cfg.eps_list[*rep.flagged_eps];
  const Grid fine = make_grid(s.domain, rep.h_fine);
  try {
    const RingDomain ring(s.domain, s.x0, eps);
    auto [field, frep] = solve_ring(ring, fine, s.M, k, solve_options(cfg));
    (void)frep;
    const ExtendedField ef = extend_utilde(field, ring);
    const double fd = std::max(segment_defect(ef, s.x0, s.y, rep.flagged_level).first,
                               convexity_defect(ef, rep.flagged_level).defect);
    rep.fine_defect = fd;
    rep.refinement_confirmed = fd > rep.threshold && fd >= 0.5 * rep.flagged_defect;
  } catch (const Error&) {
    rep.refinement_confirmed = false;
  }
  if (rep.refinement_confirmed) rep.verdict = "detected";
  return rep;
}

Json CounterexampleReport::to_json(int dim) const {
  Json eps_arr = Json::array();
  for (const auto& r : per_eps) {
    Json seg = Json::array();
    for (const auto& [lv, d] : r.segment_levels) seg.push_back(Json{{"level", lv}, {"defect", d}});
    Json e{{"eps", r.eps}, {"status", r.status}};
    if (r.status == "ok") {
      e["solve"] = solve_json(r.solve);
      e["convexity"] = convexity_json(r.convexity, dim);
      e["segment_x0_y"] = seg;
      e["best"] = Json{{"defect", r.best_defect},
                       {"level", r.best_level},
                       {"source", r.best_source.empty() ? "none" : r.best_source},
                       {"witness", witness_json(r.best_witness, dim)}};
      e["estimates"] = estimates_json(r.estimates, dim);
    }
    eps_arr.push_back(e);
  }
  Json flagged = nullptr;
  if (flagged_eps) {
    flagged = Json{{"eps", per_eps[*flagged_eps].eps},
                   {"level", flagged_level},
                   {"defect", flagged_defect},
                   {"defect_over_hM", flagged_defect / (h * M)},
                   {"witness", witness_json(flagged_witness, dim)}};
  }
  return Json{{"h", h},
              {"h_fine", h_fine},
              {"psi_minimizer", point_json(y, dim)},
              {"psi_min", psi_y},
              {"M0", -psi_y},
              {"x0", point_json(x0, dim)},
              {"psi_x0", psi_x0},
              {"gap", gap},
              {"M", M},
              {"M1", M1},
              {"defect_threshold", threshold},
              {"per_eps", eps_arr},
              {"verdict", verdict},
              {"flagged", flagged},
              {"fine_defect", fine_defect ? Json(*fine_defect) : Json(nullptr)},
              {"refinement_confirmed", refinement_confirmed}};
}

// ---------------------------------------------------------------------------------------------
// Measure study

std::vector<MeasureReport> run_measure_study(const ExperimentConfig& cfg) {
  cfg.validate();
  const ConvexDomain dom = cfg.make_domain();
  const int n = cfg.n_equation(), k = cfg.k;
  std::vector<MeasureReport> out;
  for (const auto& ball : cfg.measure_balls) {
    MeasureReport r;
    r.ball = ball;
    r.n = n;
    r.k = k;
    r.eps = cfg.eps_list;
    r.dim = cfg.dim;
    r.volume = ball_volume(n, ball.radius);
    out.push_back(r);
  }

  if (cfg.measure_radial) {
    if (dom.kind() != ConvexDomain::Kind::ball) throw ConfigError("radial measure study needs a ball domain");
    const double R = dom.radius();
    double M = cfg.M_value;
    if (cfg.M_rule == "auto") M = cfg.M_factor * choose_M1(radial_hole_free(0.0, R, n, k), dom, n, k);
    for (auto& r : out) {
      if (distance(r.ball.center, dom.center()) > 1e-12) throw ConfigError("radial measure balls must share the hole center");
      r.path = "radial";
    }
    for (double eps : cfg.eps_list) {
      const RadialProfile prof = solve_radial_ring(eps, R, M, n, k);
      for (auto& r : out) {
        r.measures.push_back(hessian_measure_radial_flux(prof, r.ball.radius));
        r.cross_check.push_back(hessian_measure_radial_quadrature(prof, r.ball.radius));
      }
    }
  } else {
    const double h = cfg.grid_h.front();
    const Grid grid = make_grid(dom, h);
    double M = cfg.M_value;
    if (cfg.M_rule == "auto") {
      const GridField psi = solve_hole_free(dom, grid, k, solve_options(cfg));
      M = cfg.M_factor * choose_M1(node_min(psi), dom, n, k);
    }
    const Point x0 = cfg.hole_rule == "explicit" ? cfg.hole_x0 : dom.center();
    for (auto& r : out) r.path = "grid";
    auto per_eps = run_ordered<std::vector<double>>(cfg.eps_list.size(), cfg.workers, [&](std::size_t i) {
      const RingDomain ring(dom, x0, cfg.eps_list[i]);
      auto [field, rep] = solve_ring(ring, grid, M, k, solve_options(cfg));
      (void)rep;
      const ExtendedField ef = extend_utilde(field, ring);
      std::vector<double> m;
      for (const auto& r : out) m.push_back(hessian_measure(ef, r.ball, k));
      return m;
    });
    for (const auto& m : per_eps)
      for (std::size_t b = 0; b < out.size(); ++b) out[b].measures.push_back(m[b]);
  }

  for (auto& r : out) {
    std::tie(r.extrapolated, r.extrapolation) = extrapolate_limit(r.measures);
    bool mono = r.measures.size() >= 2;
    for (std::size_t i = 1; i < r.measures.size(); ++i) {
      const double step = r.measures[i] - r.measures[i - 1];
      const double first = r.measures[1] - r.measures[0];
      if (step == 0.0 || (step > 0.0) != (first > 0.0)) mono = false;
      if (std::abs(r.measures[i] - r.volume) > std::abs(r.measures[i - 1] - r.volume)) mono = false;
    }
    r.monotone = mono;
  }
  return out;
}

Json to_json(const MeasureReport& r) {
  const Json center = point_json(r.ball.center, r.dim);
  return Json{{"ball", Json{{"center", center}, {"radius", r.ball.radius}}},
              {"n", r.n},
              {"k", r.k},
              {"path", r.path},
              {"eps", r.eps},
              {"measures", r.measures},
              {"cross_check", r.cross_check},
              {"volume", r.volume},
              {"extrapolated", r.extrapolated},
              {"extrapolation", r.extrapolation},
              {"relative_error", r.relative_error()},
              {"monotone", r.monotone},
              {"asserted", 2 * r.k <= r.n},
              {"units", "length^" + std::to_string(r.n)}};
}

// ---------------------------------------------------------------------------------------------
// Barrier study

IdentityCheck check_barrier_identities(int n, int k, double eps, double M, double R, int radii) {
  IdentityCheck c;
  c.n = n;
  c.k = k;
  c.kind = select_case(n, k);
  const LowerBarrier lower(Point{}, eps, M, n, k);
  const UpperBarrier phi(Point{}, eps, M, n, k, R);
  const std::vector<double> lower_spec(static_cast<std::size_t>(n), lower.curvature());
  for (int i = 0; i < radii; ++i) {
    const double r = eps * std::pow(R / eps, static_cast<double>(i) / (radii - 1));
    c.lower_error = std::max(c.lower_error, std::abs(sigma_k(lower_spec, k) - 1.0));
    c.upper_error = std::max(c.upper_error, std::abs(sigma_k(phi.radial_spectrum(r), k)));
  }
  c.pass = c.lower_error <= 1e-12 && c.upper_error <= 1e-10;
  return c;
}

ScalingFamily scaling_family(int n, int k, const std::vector<double>& eps, double M, double R) {
  ScalingFamily f;
  f.n = n;
  f.k = k;
  f.eps = eps;
  for (double e : eps) {
    const BoundaryScalings s = boundary_scalings(solve_radial_ring(e, R, M, n, k));
    f.eps_slope.push_back(s.eps_slope);
    f.case_quantity.push_back(s.case_quantity);
    f.curvature_ratio.push_back(s.curvature_ratio);
    f.regime = s.regime;
  }
  const auto [lo, hi] = std::minmax_element(f.case_quantity.begin(), f.case_quantity.end());
  f.spread = (*hi - *lo) / *lo;
  f.pass = *lo > 0.0 && f.spread < 0.15;
  return f;
}

BarrierStudy run_barrier_study(const ExperimentConfig& cfg, FileSet* files) {
  cfg.validate();
  const ConvexDomain dom = cfg.make_domain();
  BarrierStudy st;
  const double R = dom.min_boundary_distance(dom.center());
  for (const auto& [n, k] : cfg.barrier_cases) {
    st.identities.push_back(check_barrier_identities(n, k, 0.1, 1.0, R));
    if (!st.identities.back().pass) st.failures.push_back("identity n=" + std::to_string(n) + " k=" + std::to_string(k));
  }
  const double M_radial = cfg.M_rule == "explicit" ? cfg.M_value : 1.0;
  for (const auto& [n, k] : cfg.scaling_families) {
    ScalingFamily f = scaling_family(n, k, cfg.eps_list, M_radial, R);
    // The n/k < 2 regime is reported without a bound.
    if (!f.pass && 2 * k <= n) st.failures.push_back("scaling n=" + std::to_string(n) + " k=" + std::to_string(k));
    st.scalings.push_back(std::move(f));
  }
  if (cfg.barrier_grid) {
    const double h = cfg.grid_h.front();
    const Grid grid = make_grid(dom, h);
    const GridField psi = solve_hole_free(dom, grid, cfg.k, solve_options(cfg));
    const double M = cfg.M_rule == "auto" ? cfg.M_factor * choose_M1(node_min(psi), dom, cfg.dim, cfg.k) : cfg.M_value;
    const Point x0 = cfg.hole_rule == "explicit" ? cfg.hole_x0 : dom.center();
    auto reports = run_ordered<std::pair<EstimateReport, std::string>>(cfg.eps_list.size(), cfg.workers, [&](std::size_t i) {
      const RingDomain ring(dom, x0, cfg.eps_list[i]);
      SolveOptions opt = solve_options(cfg);
      opt.psi = &psi;
      auto [field, rep] = solve_ring(ring, grid, M, cfg.k, opt);
      (void)rep;
      return std::make_pair(verify_estimates(field, ring, &psi),
                            files && cfg.write_fields ? field_csv(field) : std::string());
    });
    for (std::size_t i = 0; i < reports.size(); ++i) {
      if (!reports[i].first.all_pass()) st.failures.push_back("estimates eps=" + std::to_string(cfg.eps_list[i]));
      st.estimates.emplace_back(cfg.eps_list[i], reports[i].first);
      if (files && cfg.write_fields) files->emplace_back("fields/u_eps" + std::to_string(i) + ".csv", reports[i].second);
    }
  }
  return st;
}

Json BarrierStudy::to_json() const {
  Json ids = Json::array();
  for (const auto& c : identities)
    ids.push_back(Json{{"n", c.n},
                       {"k", c.k},
                       {"case", khess::to_string(c.kind)},
                       {"lower_error", c.lower_error},
                       {"upper_error", c.upper_error},
                       {"pass", c.pass}});
  Json sc = Json::array();
  for (const auto& f : scalings)
    sc.push_back(Json{{"n", f.n},
                      {"k", f.k},
                      {"regime", f.regime},
                      {"eps", f.eps},
                      {"eps_slope", f.eps_slope},
                      {"case_quantity", f.case_quantity},
                      {"curvature_ratio", f.curvature_ratio},
                      {"spread", f.spread},
                      {"asserted", 2 * f.k <= f.n},
                      {"pass", f.pass}});
  Json est = Json::array();
  for (const auto& [eps, r] : estimates) {
    Json e = estimates_json(r, 2);
    e["eps"] = eps;
    est.push_back(e);
  }
  return Json{{"identities", ids}, {"scalings", sc}, {"estimates", est}, {"failures", failures}, {"pass", failures.empty()}};
}

// ---------------------------------------------------------------------------------------------

std::pair<Json, FileSet> run_pipeline(const ExperimentConfig& cfg) {
  FileSet files;
  Json report{{"schema_version", kReportSchemaVersion}, {"mode", cfg.mode}, {"config", cfg.to_json()}};
  if (cfg.mode == "counterexample") {
    report["counterexample"] = run_counterexample(cfg, &files).to_json(cfg.dim);
  } else if (cfg.mode == "measure") {
    Json arr = Json::array();
    for (const auto& r : run_measure_study(cfg)) arr.push_back(to_json(r));
    report["measure"] = arr;
  } else {
    report["barrier"] = run_barrier_study(cfg, &files).to_json();
  }
  return {report, files};
}

void emit_outputs(const std::string& dir, const Json& report, const FileSet& files) {
  namespace fs = std::filesystem;
  auto write = [](const fs::path& path, const std::string& content) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
  };
  const fs::path root(dir);
  write(root / "report.json", report.dump(2) + "\n");
  for (const auto& [rel, content] : files) write(root / rel, content);
}

}  // namespace khess
