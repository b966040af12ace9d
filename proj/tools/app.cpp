#include "app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "semitoric/suites.hpp"

namespace semitoric::app {

namespace fs = std::filesystem;

double RunConfig::tol(const std::string& key, double fallback) const {
  const auto it = tolerances.find(key);
  return it == tolerances.end() ? fallback : it->second;
}

namespace {

const std::set<std::string> kToleranceKeys{
    "rank",        "refine",       "dedup",       "closure",  "fit",         "direction", "graph",
    "isolation",   "conservation", "periodicity", "agreement", "upsilon",    "pullback",  "symplectic",
    "structure",   "qmax",         "integrator"};

void reject_unknown(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

double number(const Json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(where + ": not finite");
  return x;
}

int integer(const Json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return v.get<int>();
}

std::string string(const Json& v, const std::string& where) {
  if (!v.is_string()) throw ConfigError(where + ": expected a string");
  return v.get<std::string>();
}

std::pair<double, double> range(const Json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2) throw ConfigError(where + ": expected [min, max]");
  return {number(v[0], where), number(v[1], where)};
}

}  // namespace

void apply_config(const Json& doc, RunConfig& cfg) {
  reject_unknown(doc, {"system", "region", "grid", "tolerances", "seed", "workers", "outputs", "nodal", "flows",
                       "model", "classify"},
                 "config");
  if (doc.contains("system")) cfg.system = string(doc["system"], "system");
  if (doc.contains("region")) {
    const Json& r = doc["region"];
    reject_unknown(r, {"axes", "charts"}, "region");
    Region region;
    if (!r.contains("axes") || !r["axes"].is_array()) throw ConfigError("region: 'axes' must be a list of [min, max]");
    for (const auto& a : r["axes"]) region.axes.push_back(range(a, "region.axes"));
    if (r.contains("charts")) {
      if (!r["charts"].is_array()) throw ConfigError("region.charts: expected a list");
      for (const auto& c : r["charts"]) region.charts.push_back(string(c, "region.charts"));
    }
    cfg.region = region;
  }
  if (doc.contains("grid")) {
    std::vector<double> steps;
    if (doc["grid"].is_array()) {
      for (const auto& s : doc["grid"]) steps.push_back(number(s, "grid"));
    } else {
      steps.push_back(number(doc["grid"], "grid"));
    }
    if (steps.empty()) throw ConfigError("grid: no steps");
    for (double s : steps) {
      if (!(s > 0.0)) throw ConfigError("grid: steps must be positive");
    }
    cfg.grid = steps;
  }
  if (doc.contains("tolerances")) {
    reject_unknown(doc["tolerances"], kToleranceKeys, "tolerances");
    for (const auto& [key, value] : doc["tolerances"].items()) {
      const double x = number(value, "tolerances." + key);
      if (!(x > 0.0)) throw ConfigError("tolerances." + key + ": must be positive");
      cfg.tolerances[key] = x;
    }
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw ConfigError("seed: expected a non-negative integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("workers")) {
    cfg.workers = integer(doc["workers"], "workers");
    if (cfg.workers < 1) throw ConfigError("workers: must be at least 1");
  }
  if (doc.contains("outputs")) {
    reject_unknown(doc["outputs"], {"dir", "svg"}, "outputs");
    if (doc["outputs"].contains("dir")) cfg.out_dir = string(doc["outputs"]["dir"], "outputs.dir");
    if (doc["outputs"].contains("svg")) {
      if (!doc["outputs"]["svg"].is_boolean()) throw ConfigError("outputs.svg: expected a boolean");
      cfg.svg = doc["outputs"]["svg"].get<bool>();
    }
  }
  if (doc.contains("nodal")) {
    const Json& j = doc["nodal"];
    reject_unknown(j, {"type", "step", "max_steps", "bounds", "radius", "axis", "samples_per_witness",
                       "phase_radius", "max_witnesses"},
                   "nodal");
    NodalConfig& nc = cfg.nodal;
    if (j.contains("type")) nc.type = string(j["type"], "nodal.type");
    if (j.contains("step")) nc.step = number(j["step"], "nodal.step");
    if (j.contains("max_steps")) nc.max_steps = integer(j["max_steps"], "nodal.max_steps");
    if (j.contains("bounds")) nc.bounds = range(j["bounds"], "nodal.bounds");
    if (j.contains("radius")) nc.radius = number(j["radius"], "nodal.radius");
    if (j.contains("axis")) nc.axis = integer(j["axis"], "nodal.axis");
    if (j.contains("samples_per_witness")) nc.sampling.samples_per_witness = integer(j["samples_per_witness"], "nodal");
    if (j.contains("phase_radius")) nc.sampling.phase_radius = number(j["phase_radius"], "nodal.phase_radius");
    if (j.contains("max_witnesses")) {
      const int m = integer(j["max_witnesses"], "nodal.max_witnesses");
      if (m < 1) throw ConfigError("nodal.max_witnesses: must be positive");
      nc.sampling.max_witnesses = static_cast<std::size_t>(m);
    }
    if (!(nc.step > 0.0) || nc.max_steps < 0 || !(nc.radius > 0.0) || !(nc.sampling.phase_radius > 0.0)) {
      throw ConfigError("nodal: step, radius and phase_radius must be positive");
    }
  }
  if (doc.contains("flows")) {
    reject_unknown(doc["flows"], {"type", "t_max"}, "flows");
    if (doc["flows"].contains("type")) cfg.type = string(doc["flows"]["type"], "flows.type");
    if (doc["flows"].contains("t_max")) cfg.t_max = number(doc["flows"]["t_max"], "flows.t_max");
  }
  if (doc.contains("model")) {
    reject_unknown(doc["model"], {"type", "n"}, "model");
    if (doc["model"].contains("type")) cfg.type = string(doc["model"]["type"], "model.type");
    if (doc["model"].contains("n")) cfg.n = integer(doc["model"]["n"], "model.n");
  }
  if (doc.contains("classify")) {
    reject_unknown(doc["classify"], {"chart", "point"}, "classify");
    if (doc["classify"].contains("chart")) cfg.chart = string(doc["classify"]["chart"], "classify.chart");
    if (doc["classify"].contains("point")) {
      cfg.point.clear();
      for (const auto& x : doc["classify"]["point"]) cfg.point.push_back(number(x, "classify.point"));
    }
  }
}

std::pair<Region, GridSpec> default_scan(const MomentMapSystem& sys) {
  if (sys.name().rfind("ff-x-family", 0) == 0) {
    // The FF-X curve sits over the pole of the first sphere and the origin of the plane.
    Region r;
    r.axes = {{-0.3, 0.3}, {-0.3, 0.3}, {-1.5, 1.5}, {-0.3, 0.3}, {-0.3, 0.3}, {-1.5, 1.5}};
    r.charts = {"N.P.N", "N.P.S"};
    return {r, GridSpec{{0.15, 0.15, 0.25, 0.15, 0.15, 0.25}}};
  }
  return {sys.default_region(), GridSpec::uniform(2 * sys.n(), 0.25)};
}

namespace {

struct Outcome {
  Json report;
  int code = kPass;
};

WilliamsonType parse_type(const std::string& text, std::optional<int> n) {
  WilliamsonType w = WilliamsonType::of(0, 0, 0, 0);
  try {
    w = WilliamsonType::parse(text);
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid type: ") + e.what());
  }
  if (n && *n != w.n()) {
    throw ConfigError("type " + w.to_string() + " implies n = " + std::to_string(w.n()) + ", not " +
                      std::to_string(*n));
  }
  return w;
}

Json checks_json(const std::vector<StructureCheck>& checks) {
  Json a = Json::array();
  for (const auto& c : checks) a.push_back(to_json(c));
  return a;
}

bool all_pass(const std::vector<StructureCheck>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const StructureCheck& c) { return c.pass; });
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

Json region_json(const Region& r) {
  Json axes = Json::array();
  for (const auto& [lo, hi] : r.axes) axes.push_back(Json::array({lo, hi}));
  return Json{{"axes", axes}, {"charts", r.charts}};
}

CriticalOptions critical_options(const RunConfig& cfg) {
  CriticalOptions o;
  o.rank_tol = cfg.tol("rank", o.rank_tol);
  o.refine_tol = cfg.tol("refine", o.refine_tol);
  o.dedup_radius = cfg.tol("dedup", o.dedup_radius);
  o.seed = cfg.seed;
  o.workers = cfg.workers;
  return o;
}

struct ScanSetup {
  Region region;
  GridSpec grid;
};

ScanSetup scan_setup(const RunConfig& cfg, const MomentMapSystem& sys) {
  auto [region, grid] = default_scan(sys);
  if (cfg.region) region = *cfg.region;
  if (cfg.grid) grid.steps = *cfg.grid;
  const auto dim = static_cast<std::size_t>(2 * sys.n());
  if (region.axes.size() != dim) throw ConfigError("region: need " + std::to_string(dim) + " axes");
  if (grid.steps.size() == 1) grid.steps.assign(dim, grid.steps.front());
  if (grid.steps.size() != dim) throw ConfigError("grid: need 1 or " + std::to_string(dim) + " steps");
  const auto known = sys.chart_ids();
  for (const auto& c : region.charts) {
    if (std::find(known.begin(), known.end(), c) == known.end()) throw ConfigError("region: unknown chart " + c);
  }
  return {region, grid};
}

std::string points_csv(const StratumMap& strata) {
  std::string out = csv_header(strata.n) + "\n";
  for (const auto& [w, pts] : strata.strata) {
    for (const auto& p : pts) out += csv_row(p) + "\n";
  }
  for (const auto& p : strata.degenerate) out += csv_row(p) + "\n";
  return out;
}

Json base_report(const RunConfig& cfg) {
  // Worker count and timings stay out of the report so that it is identical
  // for any number of workers; they go to timing.json.
  Json echo{{"system", cfg.system}, {"seed", cfg.seed}};
  if (!cfg.type.empty()) echo["type"] = cfg.type;
  if (cfg.region) echo["region"] = region_json(*cfg.region);
  if (cfg.grid) echo["grid"] = *cfg.grid;
  if (!cfg.tolerances.empty()) echo["tolerances"] = cfg.tolerances;
  return Json{{"command", cfg.command}, {"config", echo}};
}

Outcome cmd_model_verify(const RunConfig& cfg) {
  if (cfg.type.empty()) throw ConfigError("model-verify: --type is required");
  const WilliamsonType w = parse_type(cfg.type, cfg.n);
  ModelSuiteOptions o;
  o.pullback_tol = cfg.tol("pullback", o.pullback_tol);
  o.symplectic_tol = cfg.tol("symplectic", o.symplectic_tol);
  o.structure_tol = cfg.tol("structure", o.structure_tol);
  const SuiteResult r = model_verify_suite(w, cfg.seed, o);
  Outcome out;
  out.report = base_report(cfg);
  out.report["checks"] = checks_json(r.checks);
  out.report["notes"] = r.notes;
  out.report["pass"] = r.pass();
  out.code = r.pass() ? kPass : kFailure;
  return out;
}

Outcome cmd_flows(const RunConfig& cfg) {
  FlowSuiteOptions o;
  if (!cfg.type.empty()) o.type = parse_type(cfg.type, cfg.n);
  if (o.type.k_f() != 1 || o.type.k_h() != 0) throw ConfigError("flows: type needs k_f = 1 and k_h = 0");
  if (!(cfg.t_max > 0.0)) throw ConfigError("flows: t-max must be positive");
  o.t_max = cfg.t_max;
  o.seed = cfg.seed;
  o.orientation = cfg.wrong_orientation ? -1.0 : 1.0;
  o.integrator_tol = cfg.tol("integrator", o.integrator_tol);
  o.conservation_tol = cfg.tol("conservation", o.conservation_tol);
  o.periodicity_tol = cfg.tol("periodicity", o.periodicity_tol);
  o.agreement_tol = cfg.tol("agreement", o.agreement_tol);
  o.upsilon_tol = cfg.tol("upsilon", o.upsilon_tol);
  const SuiteResult r = flow_suite(o);
  Outcome out;
  out.report = base_report(cfg);
  out.report["config"]["t_max"] = o.t_max;
  out.report["config"]["orientation"] = o.orientation;
  out.report["checks"] = checks_json(r.checks);
  out.report["pass"] = r.pass();
  out.code = r.pass() ? kPass : kFailure;
  return out;
}

Outcome cmd_classify(const RunConfig& cfg) {
  Outcome out;
  out.report = base_report(cfg);
  std::vector<StructureCheck> checks;
  if (!cfg.system.empty()) {
    const MomentMapSystem sys = make_system(cfg.system);
    if (cfg.chart.empty() || cfg.point.empty()) throw ConfigError("classify: --chart and --point are required");
    const auto known = sys.chart_ids();
    if (std::find(known.begin(), known.end(), cfg.chart) == known.end()) {
      throw ConfigError("classify: unknown chart " + cfg.chart);
    }
    const Vec p = Eigen::Map<const Vec>(cfg.point.data(), static_cast<Eigen::Index>(cfg.point.size()));
    if (p.size() != 2 * sys.n()) throw ConfigError("classify: point needs " + std::to_string(2 * sys.n()) + " coordinates");
    if (!sys.contains(cfg.chart, p)) throw ConfigError("classify: point outside chart " + cfg.chart);
    const CriticalPoint cp = classify_point(sys, cfg.chart, p, critical_options(cfg), cfg.seed);
    out.report["point"] = Json{{"chart", cp.chart},
                               {"coords", to_json(cp.coords)},
                               {"rank", cp.rank},
                               {"type", cp.wtype.to_string()},
                               {"nondegenerate", cp.nondegenerate},
                               {"value", to_json(cp.value)},
                               {"residual", cp.residual},
                               {"diagnostics", cp.diagnostics}};
    checks.push_back({"nondegenerate", cp.nondegenerate, cp.nondegenerate ? 0.0 : 1.0, 0.0});
  } else {
    // Planted model type under a random symplectic conjugation.
    if (cfg.type.empty()) throw ConfigError("classify: give --system with --chart/--point, or --type");
    const WilliamsonType w = parse_type(cfg.type, cfg.n);
    if (w.m() == 0) throw ConfigError("classify: the regular type has nothing to classify");
    CartanCandidate c = model_candidate(w);
    CounterRng rng(cfg.seed);
    const Mat M = random_symplectic_matrix(w.m(), rng);
    for (auto& h : c.hessians) h = QuadraticHamiltonian(M.transpose() * h.matrix() * M);
    const ClassificationReport r = classify_fixed(c, rng.next_u64());
    out.report["planted"] = w.to_string();
    out.report["recovered"] = r.wtype.to_string();
    out.report["nondegenerate"] = r.nondegenerate;
    out.report["diagnostics"] = r.diagnostics;
    checks.push_back({"recovered", r.nondegenerate && r.wtype == w, r.wtype == w ? 0.0 : 1.0, 0.0});
  }
  out.report["checks"] = checks_json(checks);
  out.report["pass"] = all_pass(checks);
  out.code = all_pass(checks) ? kPass : kFailure;
  return out;
}

struct ScanResult {
  StratumMap strata;
  AdjacencyReport closure;
  ScanDiagnostics diag;
  ScanSetup setup;
};

ScanResult run_scan(const RunConfig& cfg, const MomentMapSystem& sys, const fs::path& dir) {
  ScanResult s;
  s.setup = scan_setup(cfg, sys);
  spdlog::info("scanning {} over {} axes", sys.name(), s.setup.region.axes.size());
  s.strata = stratum_scan(sys, s.setup.region, s.setup.grid, critical_options(cfg), false, &s.diag);
  const double step = *std::max_element(s.setup.grid.steps.begin(), s.setup.grid.steps.end());
  s.closure = closure_check(s.strata, cfg.tol("closure", 2.0 * step));
  write_file(dir / "points.csv", points_csv(s.strata));
  Json strata = strata_summary(s.strata, s.closure);
  strata["system"] = sys.name();
  strata["region"] = region_json(s.setup.region);
  strata["grid"] = s.setup.grid.steps;
  write_file(dir / "strata.json", strata.dump(2) + "\n");
  spdlog::info("{} critical points, {} degenerate, {} closure violations", s.strata.total(), s.strata.degenerate.size(),
               s.closure.violations);
  return s;
}

Outcome cmd_scan(const RunConfig& cfg, const fs::path& dir) {
  if (cfg.system.empty()) throw ConfigError("scan: --system is required");
  const MomentMapSystem sys = make_system(cfg.system);
  const ScanResult s = run_scan(cfg, sys, dir);
  std::vector<StructureCheck> checks;
  checks.push_back({"closure", s.closure.ok(), static_cast<double>(s.closure.violations), 0.0});
  long bad_types = 0;
  for (const auto& [w, pts] : s.strata.strata) {
    if (w.k_e() + 2 * w.k_f() + w.k_h() + w.k_x() != sys.n()) bad_types += static_cast<long>(pts.size());
  }
  checks.push_back({"type-equation", bad_types == 0, static_cast<double>(bad_types), 0.0});
  Outcome out;
  out.report = base_report(cfg);
  out.report["counts"] = strata_summary(s.strata, s.closure)["counts"];
  out.report["checks"] = checks_json(checks);
  out.report["artifacts"] = Json{{"csv", "points.csv"}, {"strata", "strata.json"}};
  out.report["pass"] = all_pass(checks);
  out.code = all_pass(checks) ? kPass : kFailure;
  return out;
}

WilliamsonType pick_nodal_type(const StratumMap& strata, const std::string& requested) {
  if (!requested.empty()) return parse_type(requested, std::nullopt);
  for (const auto& [w, pts] : strata.strata) {
    if (w.k_f() == 1 && w.k_x() == 1 && !pts.empty()) return w;
  }
  for (const auto& [w, pts] : strata.strata) {
    if (w.k_f() == 1 && w.k_x() >= 1 && !pts.empty()) return w;
  }
  return WilliamsonType::regular(0);
}

Outcome cmd_nodal(const RunConfig& cfg, const fs::path& dir) {
  if (cfg.system.empty()) throw ConfigError("nodal: --system is required");
  const MomentMapSystem sys = make_system(cfg.system);
  const ScanResult s = run_scan(cfg, sys, dir);
  const NodalConfig& nc = cfg.nodal;
  Outcome out;
  out.report = base_report(cfg);
  out.report["config"]["nodal"] = Json{{"step", nc.step}, {"max_steps", nc.max_steps}, {"radius", nc.radius}};
  if (nc.bounds) out.report["config"]["nodal"]["bounds"] = Json::array({nc.bounds->first, nc.bounds->second});

  const WilliamsonType w = pick_nodal_type(s.strata, nc.type);
  std::vector<StructureCheck> checks;
  const CriticalValueCloud scan_cloud = w.n() == sys.n() ? collect_values(s.strata, w) : CriticalValueCloud{};
  if (scan_cloud.values.empty()) {
    out.report["diagnostics"] = "no focus-focus points with transverse components found in the region";
    out.report["checks"] = checks_json({{"ff-x-found", false, 0.0, 1.0}});
    out.report["pass"] = false;
    out.code = kFailure;
    return out;
  }
  checks.push_back({"ff-x-found", true, static_cast<double>(scan_cloud.values.size()), 1.0});

  NodalOptions no;
  no.qmax = static_cast<int>(cfg.tol("qmax", no.qmax));
  no.direction_tol = cfg.tol("direction", no.direction_tol);
  no.graph_tol = cfg.tol("graph", no.graph_tol);
  no.fit_tol = cfg.tol("fit", no.fit_tol);
  const double plane_tol = 1e-6;
  Json nodal;
  try {
    NodalSurface surface = build_surface(scan_cloud, no);
    CriticalValueCloud cloud = scan_cloud;
    if (w.k_x() == 1) {
      // Continue from the witness nearest t = 0 and rebuild on the traced cloud.
      std::size_t seed = 0;
      for (std::size_t i = 1; i < surface.t.size(); ++i) {
        if (std::abs(surface.t[i][0]) < std::abs(surface.t[seed][0])) seed = i;
      }
      TraceOptions to;
      to.bounds = nc.bounds;
      to.critical = critical_options(cfg);
      const TraceResult tr = trace_curve(sys, surface.witnesses[seed], nc.step, nc.max_steps, to);
      CriticalValueCloud traced;
      traced.wtype = w;
      for (const auto& p : tr.points) {
        traced.values.push_back(p.value);
        traced.witnesses.push_back(p);
      }
      surface = build_surface(traced, no);
      cloud = traced;
      // A traced graph is single-valued when its parameter is strictly monotone
      // along the trace; a closed loop would revisit its start.
      double monotone = 0.0;
      for (std::size_t i = 1; i < surface.t.size(); ++i) {
        monotone = std::max(monotone, surface.t[i - 1][0] - surface.t[i][0] + 1e-12);
      }
      const double closure = tr.points.size() > 2 ? (tr.points.front().value - tr.points.back().value).norm() : 0.0;
      checks.push_back({"single-valued", monotone <= 0.0, monotone, 0.0});
      checks.push_back({"not-a-loop", closure > nc.step, closure, nc.step});
      nodal["trace"] = Json{{"direction", to_json(tr.direction)},
                            {"params", tr.params},
                            {"truncated", tr.truncated},
                            {"diagnostics", tr.diagnostics}};
      std::vector<Vec> all = traced.values;
      all.insert(all.end(), scan_cloud.values.begin(), scan_cloud.values.end());
      const auto labels = link_components(all, 3.0 * nc.step);
      const int comps = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
      nodal["components"] = comps;
    }
    checks.push_back({"plane-residual", surface.planeResidual <= plane_tol, surface.planeResidual, plane_tol});
    checks.push_back({"graph-residual", surface.graphResidual <= no.graph_tol, surface.graphResidual, no.graph_tol});

    // Every scanned value of the type must lie on the surface or away from it.
    const IsolationResult scan_iso =
        isolation_check(surface, scan_cloud.values, nc.radius, cfg.tol("isolation", 1e-5));
    SamplingSpec sp = nc.sampling;
    sp.seed = cfg.seed;
    sp.workers = cfg.workers;
    const IsolationResult iso =
        isolation_check(sys, surface, nc.radius, sp, critical_options(cfg), cfg.tol("isolation", 1e-5));
    const bool isolated = scan_iso.isolated && iso.isolated;
    checks.push_back({"isolated", isolated, static_cast<double>(scan_iso.witnesses.size() + iso.witnesses.size()), 0.0});
    nodal["surface"] = to_json(surface);
    nodal["isolation"] = to_json(iso, nc.radius);
    nodal["isolation_scan"] = to_json(scan_iso, nc.radius);

    if (cfg.svg) {
      int axis = nc.axis;
      if (axis < 0 || axis >= sys.n()) {
        Eigen::Index big = 1;
        surface.v.front().cwiseAbs().maxCoeff(&big);
        axis = static_cast<int>(big);
      }
      SvgSeries others{{}, "#bbbbbb", false, "critical values"};
      for (const auto& [ws, pts] : s.strata.strata) {
        for (const auto& p : pts) others.points.emplace_back(p.value[axis], p.value[0]);
      }
      SvgSeries ff{{}, "#1f5fbf", false, "focus-focus scan"};
      for (const auto& v : scan_cloud.values) ff.points.emplace_back(v[axis], v[0]);
      SvgSeries curve{{}, "#c0392b", true, "nodal curve"};
      for (const auto& v : cloud.values) curve.points.emplace_back(v[axis], v[0]);
      write_file(dir / "nodal.svg", render_svg({others, ff, curve}, "f" + std::to_string(axis + 1), "f1"));
    }
  } catch (const NoIntegerDirection& e) {
    checks.push_back({"integer-direction", false, 1.0, 0.0});
    out.report["diagnostics"] = e.what();
  } catch (const NotAGraph& e) {
    checks.push_back({"graph-residual", false, 1.0, 0.0});
    out.report["diagnostics"] = e.what();
  }
  nodal["type"] = w.to_string();
  write_file(dir / "nodal.json", nodal.dump(2) + "\n");
  out.report["checks"] = checks_json(checks);
  out.report["artifacts"] = Json{{"csv", "points.csv"}, {"strata", "strata.json"}, {"nodal", "nodal.json"}};
  if (cfg.svg) out.report["artifacts"]["svg"] = "nodal.svg";
  out.report["pass"] = all_pass(checks);
  out.code = all_pass(checks) ? kPass : kFailure;
  return out;
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// Summarizes the report.json of an earlier run in the output directory.
int cmd_report(const fs::path& dir) {
  const Json r = read_json(dir / "report.json");
  if (!r.contains("pass") || !r.contains("checks")) throw ConfigError("report.json lacks pass/checks");
  std::cout << r.value("command", std::string("?")) << ": " << (r["pass"].get<bool>() ? "pass" : "FAIL") << "\n";
  for (const auto& c : r["checks"]) {
    std::cout << "  " << (c["pass"].get<bool>() ? "pass" : "FAIL") << "  " << c["name"].get<std::string>()
              << "  measured " << c["measured"].dump() << "  tolerance " << c["tolerance"].dump() << "\n";
  }
  if (fs::exists(dir / "strata.json")) {
    const Json s = read_json(dir / "strata.json");
    std::cout << "strata:";
    for (const auto& [type, count] : s["counts"].items()) std::cout << " " << type << "=" << count.dump();
    std::cout << "\n";
  }
  if (fs::exists(dir / "nodal.json")) {
    const Json nd = read_json(dir / "nodal.json");
    if (nd.contains("surface")) {
      std::cout << "nodal surface " << nd["type"].get<std::string>() << ": P=" << nd["surface"]["P"].dump()
                << " v=" << nd["surface"]["v"].dump() << " samples=" << nd["surface"]["samples"].size() << "\n";
    }
  }
  return r["pass"].get<bool>() ? kPass : kFailure;
}

void setup_logging() {
  auto logger = spdlog::get("semitoric");
  if (!logger) logger = spdlog::stderr_color_mt("semitoric");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("SEMITORIC_LOG");
  const std::string level = env ? env : "info";
  if (level == "quiet") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
  }
}

}  // namespace

int run(const std::vector<std::string>& args) {
  setup_logging();
  RunConfig cfg;
  std::string config_path;
  std::optional<std::string> system, type, out_dir, chart;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers, n;
  std::optional<double> t_max;
  std::vector<double> point;
  bool svg = true;
  bool no_svg = false;

  CLI::App cli{"Williamson types, semi-toric local models and focus-focus nodal loci"};
  cli.name("semitoric");
  cli.require_subcommand(1);
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--system", system, "system name");
    sub->add_option("--type", type, "Williamson type a,b,c,d");
    sub->add_option("--n", n, "ambient n the type must match");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--svg", svg, "emit SVG (default)");
    sub->add_flag("--no-svg", no_svg, "skip SVG");
  };
  CLI::App* model = cli.add_subcommand("model-verify", "check the local model suite for a type");
  CLI::App* flows = cli.add_subcommand("flows", "check model flows against closed forms");
  CLI::App* classify = cli.add_subcommand("classify", "classify a point or a planted type");
  CLI::App* scan = cli.add_subcommand("scan", "grid scan for critical points and strata");
  CLI::App* nodal = cli.add_subcommand("nodal", "extract focus-focus nodal loci");
  CLI::App* report = cli.add_subcommand("report", "summarize report.json in the output directory");
  for (CLI::App* sub : {model, flows, classify, scan, nodal, report}) common(sub);
  flows->add_option("--t-max", t_max, "largest |t|");
  flows->add_flag("--debug-wrong-orientation", cfg.wrong_orientation, "integrate with the opposite sign");
  classify->add_option("--chart", chart, "chart id");
  classify->add_option("--point", point, "chart coordinates")->delimiter(',');

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    cli.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e) == 0 ? kPass : kConfigError;
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return kConfigError;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    CLI::App* sub = cli.get_subcommands().front();
    cfg.command = sub->get_name();
    if (!config_path.empty()) apply_config(read_json(config_path), cfg);
    if (system) cfg.system = *system;
    if (type) cfg.type = *type;
    if (type && cfg.command == "nodal") cfg.nodal.type = *type;
    if (n) cfg.n = *n;
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.out_dir = *out_dir;
    if (workers) cfg.workers = *workers;
    if (t_max) cfg.t_max = *t_max;
    if (chart) cfg.chart = *chart;
    if (!point.empty()) cfg.point = point;
    if (no_svg) cfg.svg = false;

    const fs::path dir(cfg.out_dir);
    if (cfg.command == "report") return cmd_report(dir);
    fs::create_directories(dir);
    Outcome outcome;
    if (cfg.command == "model-verify") {
      outcome = cmd_model_verify(cfg);
    } else if (cfg.command == "flows") {
      outcome = cmd_flows(cfg);
    } else if (cfg.command == "classify") {
      outcome = cmd_classify(cfg);
    } else if (cfg.command == "scan") {
      outcome = cmd_scan(cfg, dir);
    } else {
      outcome = cmd_nodal(cfg, dir);
    }
    write_file(dir / "report.json", outcome.report.dump(2) + "\n");
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file(dir / "timing.json", Json{{"command", cfg.command}, {"workers", cfg.workers}, {"wall_seconds", seconds}}
                                            .dump(2) + "\n");
    for (const auto& c : outcome.report["checks"]) {
      spdlog::info("{} {} (measured {}, tolerance {})", c["pass"].get<bool>() ? "pass" : "FAIL",
                   c["name"].get<std::string>(), c["measured"].dump(), c["tolerance"].dump());
    }
    std::cout << cfg.command << ": " << (outcome.code == kPass ? "pass" : "FAIL") << "\n";
    return outcome.code;
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfigError;
  } catch (const PreconditionError& e) {
    spdlog::error("invalid input: {}", e.what());
    return kConfigError;
  } catch (const DimensionError& e) {
    spdlog::error("invalid input: {}", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    spdlog::error("numerical failure: {}", e.what());
    return kNumericalFailure;
  }
}

}  // namespace semitoric::app
