// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "semitoric/critical.hpp"
#include "semitoric/localmodel.hpp"
#include "semitoric/nodal.hpp"
#include "semitoric/suites.hpp"

using namespace semitoric;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool type_equation(const WilliamsonType& w) { return w.k_e() + 2 * w.k_f() + w.k_h() + w.k_x() == w.n(); }

// Every classified point seen during the run, for the type equation.
struct TypeTally {
  long checked = 0;
  long violations = 0;
  void add(const WilliamsonType& w) {
    ++checked;
    if (!type_equation(w)) ++violations;
  }
  void add(const StratumMap& s) {
    for (const auto& [w, pts] : s.strata) {
      for (const auto& p : pts) add(p.wtype);
    }
    for (const auto& p : s.degenerate) add(p.wtype);
  }
  void add(const SuiteResult& r) {
    for (const char* name : {"type-equation", "type-equation-classified"}) {
      if (const StructureCheck* c = r.find(name)) {
        ++checked;
        if (!c->pass) ++violations;
      }
    }
  }
};

TypeTally tally;

WilliamsonType random_type(CounterRng& rng) {
  for (;;) {
    const int n = static_cast<int>(rng.integer(1, 3));
    const int kf = static_cast<int>(rng.integer(0, n / 2));
    const int rest = n - 2 * kf;
    const int ke = static_cast<int>(rng.integer(0, rest));
    const int kh = static_cast<int>(rng.integer(0, rest - ke));
    const int kx = rest - ke - kh;
    if (kx < n) return WilliamsonType(ke, kf, kh, kx, n);
  }
}

WilliamsonType random_type_of_dim(CounterRng& rng, int n) {
  const int kf = static_cast<int>(rng.integer(0, n / 2));
  const int rest = n - 2 * kf;
  const int ke = static_cast<int>(rng.integer(0, rest));
  const int kh = static_cast<int>(rng.integer(0, rest - ke));
  return WilliamsonType(ke, kf, kh, rest - ke - kh, n);
}

// Types with one focus-focus block and no hyperbolic part, n <= 4.
const std::vector<WilliamsonType> kSemitoric{WilliamsonType::of(0, 1, 0, 0), WilliamsonType::of(0, 1, 0, 1),
                                             WilliamsonType::of(1, 1, 0, 0), WilliamsonType::of(1, 1, 0, 1),
                                             WilliamsonType::of(0, 1, 0, 2), WilliamsonType::of(2, 1, 0, 0)};

Verdict classification() {
  CounterRng rng(2024);
  const auto t0 = std::chrono::steady_clock::now();
  int right = 0;
  const int total = 200;
  for (int i = 0; i < total; ++i) {
    const WilliamsonType w = random_type(rng);
    CartanCandidate c = model_candidate(w);
    const Mat M = random_symplectic_matrix(w.m(), rng);
    for (auto& h : c.hessians) h = QuadraticHamiltonian(M.transpose() * h.matrix() * M);
    const ClassificationReport r = classify_fixed(c, rng.next_u64());
    tally.add(r.wtype);
    if (r.nondegenerate && r.wtype == w) ++right;
  }
  const double secs = seconds_since(t0);
  return {right == total && secs < 30.0,
          std::to_string(right) + "/" + std::to_string(total) + " recovered in " + fmt("%.2f", secs) + " s (limit 30 s)"};
}

Verdict poset() {
  CounterRng rng(99);
  long refl = 0, anti = 0, trans = 0;
  for (int i = 0; i < 1000; ++i) {
    const int n = static_cast<int>(rng.integer(1, 4));
    const WilliamsonType a = random_type_of_dim(rng, n), b = random_type_of_dim(rng, n), c = random_type_of_dim(rng, n);
    if (!type_leq(a, a)) ++refl;
    if (type_leq(a, b) && type_leq(b, a) && !(a == b)) ++anti;
    if (type_leq(a, b) && type_leq(b, c) && !type_leq(a, c)) ++trans;
  }
  return {refl + anti + trans == 0, "1000 triples; violations reflexive " + std::to_string(refl) + ", antisymmetric " +
                                         std::to_string(anti) + ", transitive " + std::to_string(trans)};
}

std::vector<SuiteResult> flow_runs;

Verdict flows() {
  double cons = 0.0, per = 0.0, agree = 0.0;
  bool ok = true;
  for (const auto& w : kSemitoric) {
    FlowSuiteOptions o;
    o.type = w;
    o.seed = 17;
    flow_runs.push_back(flow_suite(o));
    const SuiteResult& r = flow_runs.back();
    for (const char* name : {"conservation", "periodicity", "closed-form-vs-ode"}) {
      const StructureCheck* c = r.find(name);
      ok = ok && c && c->pass;
    }
    cons = std::max(cons, r.find("conservation")->measured);
    per = std::max(per, r.find("periodicity")->measured);
    agree = std::max(agree, r.find("closed-form-vs-ode")->measured);
  }
  return {ok, "t in [-2pi, 2pi]; conservation " + fmt("%.2e", cons) + " (<= 1e-8), periodicity " + fmt("%.2e", per) +
                  " (<= 1e-6), closed form vs ODE " + fmt("%.2e", agree) + " (<= 1e-7)"};
}

Verdict joint_flow() {
  double worst = 0.0;
  bool ok = !flow_runs.empty();
  for (const auto& r : flow_runs) {
    const StructureCheck* c = r.find("upsilon");
    ok = ok && c && c->pass && c->tolerance <= 1e-9;
    if (c) worst = std::max(worst, c->measured);
  }
  return {ok, std::to_string(flow_runs.size()) + " x 100 random (c, delta); end-state error " + fmt("%.2e", worst) +
                  " (<= 1e-9)"};
}

std::vector<SuiteResult> model_runs;

void run_model_suites() {
  ModelSuiteOptions o;
  o.points = 100;
  o.bound = 3;
  o.structure_tol = 1e-9;
  std::uint64_t seed = 1;
  for (int rep = 0; rep < 3; ++rep) {
    for (const auto& w : kSemitoric) model_runs.push_back(model_verify_suite(w, seed++, o));
  }
  // Types outside the semi-toric class still exercise the type equation.
  for (const auto& w : {WilliamsonType::of(0, 0, 1, 1), WilliamsonType::of(1, 0, 1, 0), WilliamsonType::of(0, 2, 0, 0),
                        WilliamsonType::of(2, 0, 0, 1)}) {
    model_runs.push_back(model_verify_suite(w, seed++, o));
  }
  for (const auto& r : model_runs) tally.add(r);
}

double worst_of(const char* name, bool& ok) {
  double worst = 0.0;
  for (const auto& r : model_runs) {
    if (!r.notes.empty() && !r.find(name)) continue;
    const StructureCheck* c = r.find(name);
    if (!c) {
      ok = false;
      continue;
    }
    ok = ok && c->pass;
    worst = std::max(worst, c->measured);
  }
  return worst;
}

Verdict local_model() {
  bool ok = true;
  const double zp = worst_of("zeta-pullback", ok);
  const double ep = worst_of("eta-pullback", ok);
  const double zs = worst_of("zeta-symplectic", ok);
  const double es = worst_of("eta-symplectic", ok);
  const double rs = worst_of("realize-symplectic", ok);
  const double rows = worst_of("E-rows", ok);
  const double esym = worst_of("E-symplectic", ok);
  return {ok, "pullbacks zeta " + fmt("%.1e", zp) + ", eta " + fmt("%.1e", ep) + " (<= 1e-10); FD symplectic zeta " +
                  fmt("%.1e", zs) + ", eta " + fmt("%.1e", es) + ", composed " + fmt("%.1e", rs) +
                  " (<= 1e-5); E1/E2 rows " + fmt("%g", rows) + ", E symplectic " + fmt("%.1e", esym)};
}

Verdict transitions() {
  bool ok = true;
  const double jac = worst_of("transition-jacobian", ok);
  worst_of("spade-realized", ok);
  worst_of("star-realized", ok);
  const double comp = worst_of("star-composition", ok);
  const double neg = worst_of("negative-controls", ok);
  int runs = 0;
  for (const auto& r : model_runs) runs += r.find("spade-realized") ? 1 : 0;
  return {ok && runs > 0, std::to_string(runs) + " composed transitions, snap tol 1e-9; Jacobian error " +
                              fmt("%.1e", jac) + ", block error " + fmt("%g", comp) +
                              ", negative controls accepted " + fmt("%g", neg)};
}

StratumMap spin_strata;

Verdict spin_scan() {
  const MomentMapSystem sys = spin_oscillator();
  const auto t0 = std::chrono::steady_clock::now();
  spin_strata = stratum_scan(sys, sys.default_region(), GridSpec::uniform(4, 0.25));
  const double secs = seconds_since(t0);
  tally.add(spin_strata);
  std::vector<CriticalPoint> fixed;
  for (const auto& [w, pts] : spin_strata.strata) {
    for (const auto& p : pts) {
      if (p.rank == 0) fixed.push_back(p);
    }
  }
  for (const auto& p : spin_strata.degenerate) {
    if (p.rank == 0) fixed.push_back(p);
  }
  bool ff = false, ee = false;
  double loc = 1.0;
  Vec pole(5);
  pole << 0, 0, 1, 0, 0;
  for (const auto& p : fixed) {
    if (p.wtype == WilliamsonType::of(0, 1, 0, 0)) {
      ff = true;
      loc = (p.embedded - pole).norm();
    }
    if (p.wtype == WilliamsonType::of(2, 0, 0, 0)) ee = true;
  }
  // A finer grid must see the same fixed points.
  const auto fine = find_critical(sys, sys.default_region(), GridSpec::uniform(4, 0.2));
  const long fine_fixed = std::count_if(fine.begin(), fine.end(), [](const CriticalPoint& p) { return p.rank == 0; });
  const bool ok = fixed.size() == 2 && ff && ee && loc <= 1e-6 && secs < 60.0 && fine_fixed == 2;
  return {ok, std::to_string(fixed.size()) + " rank-0 points (fine grid " + std::to_string(fine_fixed) +
                  "), types (0,1,0,0) " + (ff ? "yes" : "no") + " and (2,0,0,0) " + (ee ? "yes" : "no") +
                  ", FF offset " + fmt("%.1e", loc) + " (<= 1e-6), " + fmt("%.2f", secs) + " s (limit 60 s)"};
}

StratumMap ffx_strata;

Verdict nodal() {
  const MomentMapSystem sys = ff_x_family(0.5);
  Region region;
  region.axes = {{-0.3, 0.3}, {-0.3, 0.3}, {-1.5, 1.5}, {-0.3, 0.3}, {-0.3, 0.3}, {-1.5, 1.5}};
  region.charts = {"N.P.N", "N.P.S"};
  ffx_strata = stratum_scan(sys, region, GridSpec{{0.15, 0.15, 0.25, 0.15, 0.15, 0.25}});
  tally.add(ffx_strata);
  const WilliamsonType w = WilliamsonType::of(0, 1, 0, 1);
  const CriticalValueCloud scan_cloud = collect_values(ffx_strata, w);
  if (scan_cloud.values.size() < 3) return {false, "scan found " + std::to_string(scan_cloud.values.size()) + " FF-X values"};
  try {
    const NodalSurface coarse = build_surface(scan_cloud);
    std::size_t seed = 0;
    for (std::size_t i = 1; i < coarse.t.size(); ++i) {
      if (std::abs(coarse.t[i][0]) < std::abs(coarse.t[seed][0])) seed = i;
    }
    TraceOptions to;
    to.bounds = std::make_pair(-0.8, 0.8);
    const TraceResult tr = trace_curve(sys, coarse.witnesses[seed], 0.05, 200, to);
    CriticalValueCloud traced;
    traced.wtype = w;
    for (const auto& p : tr.points) {
      traced.values.push_back(p.value);
      traced.witnesses.push_back(p);
      tally.add(p.wtype);
    }
    const NodalSurface s = build_surface(traced);

    const bool plane = s.planeResidual <= 1e-6 && std::abs(s.P[1] - 1.0) <= 1e-6 && s.e1[1] == 0.0 &&
                       s.v.size() == 1 && s.v[0][1] == 0;
    VecI expected(3);
    expected << 0, 0, 1;
    const bool direction = s.v.size() == 1 && (s.v[0] == expected || s.v[0] == -expected);
    double graph = 0.0;
    for (int k = 0; k <= 160; ++k) {
      const double t = -0.8 + 0.01 * k;
      Vec tv(1);
      tv << t;
      graph = std::max(graph, std::abs(s.h_at(tv) - 0.5 * t * t));
    }
    const double lo = s.t.front()[0], hi = s.t.back()[0];
    bool single = tr.points.size() >= 3;
    for (std::size_t i = 1; i < s.t.size(); ++i) single = single && s.t[i][0] > s.t[i - 1][0];
    const IsolationResult core = isolation_check(s, scan_cloud.values, 0.05);
    SamplingSpec spec;
    spec.seed = 3;
    const IsolationResult iso = isolation_check(sys, s, 0.05, spec);
    const bool ok = plane && direction && graph <= 1e-4 && lo <= -0.75 && hi >= 0.75 && single && s.graphResidual <= 1e-6 &&
                    core.isolated && iso.isolated && iso.in_tube > 0;
    std::ostringstream d;
    d << "plane residual " << fmt("%.1e", s.planeResidual) << " on {f2 = " << fmt("%.9g", s.P[1]) << "}, v = ("
      << (s.v.empty() ? VecI() : s.v[0]).transpose() << "), max |h - t^2/2| " << fmt("%.1e", graph)
      << " on [-0.8, 0.8] (samples " << tr.points.size() << " over [" << fmt("%.3f", lo) << ", " << fmt("%.3f", hi)
      << "]), graph residual " << fmt("%.1e", s.graphResidual) << ", single-valued " << (single ? "yes" : "no")
      << ", isolated at r = 0.05 " << (core.isolated && iso.isolated ? "yes" : "no") << " (" << iso.in_tube
      << " tube values)";
    return {ok, d.str()};
  } catch (const std::exception& e) {
    return {false, std::string("pipeline error: ") + e.what()};
  }
}

Verdict closure() {
  std::ostringstream d;
  int violations = 0, systems = 0;
  auto check = [&](const std::string& name, const StratumMap& s, double tol) {
    const AdjacencyReport r = closure_check(s, tol);
    violations += r.violations;
    ++systems;
    d << (systems > 1 ? ", " : "") << name << " " << r.pairs.size() << " pairs/" << r.violations;
  };
  struct ModelGrid {
    WilliamsonType w;
    double half;
    double step;
  };
  const std::vector<ModelGrid> grids{{WilliamsonType::of(0, 1, 0, 1), 0.5, 0.25}, {WilliamsonType::of(1, 0, 0, 1), 1.0, 0.25},
                                     {WilliamsonType::of(0, 0, 1, 1), 1.0, 0.25}, {WilliamsonType::of(2, 0, 0, 0), 1.0, 0.25},
                                     {WilliamsonType::of(0, 1, 0, 0), 1.0, 0.25}, {WilliamsonType::of(1, 0, 0, 2), 0.5, 0.25},
                                     {WilliamsonType::of(1, 1, 0, 0), 0.5, 0.25}};
  for (const auto& g : grids) {
    const MomentMapSystem sys = model_system(g.w);
    Region r;
    r.axes.assign(static_cast<std::size_t>(2 * sys.n()), {-g.half, g.half});
    const StratumMap s = stratum_scan(sys, r, GridSpec::uniform(2 * sys.n(), g.step), {}, true);
    tally.add(s);
    check(sys.name(), s, 2.0 * g.step);
  }
  const MomentMapSystem toric = toric_oscillator(2);
  const StratumMap ts = stratum_scan(toric, toric.default_region(), GridSpec::uniform(4, 0.5));
  tally.add(ts);
  check(toric.name(), ts, 1.0);
  check("spin-oscillator", spin_strata, 0.5);
  check("ff-x-family:0.5", ffx_strata, 0.5);
  return {violations == 0 && systems > 0, std::to_string(systems) + " systems, pairs/violations: " + d.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return "<missing>";
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args, const fs::path& out) {
  fs::create_directories(out);
  const std::string cmd = std::string("SEMITORIC_LOG=quiet ") + SEMITORIC_CLI_PATH + " " + args + " --out " +
                          out.string() + " > " + (out / "stdout.txt").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "semitoric_acceptance";
  fs::remove_all(root);
  struct Run {
    std::string args;
    std::vector<std::string> files;
  };
  const std::vector<Run> runs{{"scan --system spin-oscillator --seed 7", {"points.csv", "strata.json", "report.json"}},
                              {"nodal --system ff-x-family:0.5 --seed 7",
                               {"points.csv", "strata.json", "nodal.json", "nodal.svg", "report.json"}}};
  int compared = 0, differing = 0, failed = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const fs::path a = root / (std::to_string(i) + "_w1"), b = root / (std::to_string(i) + "_w8");
    const fs::path c = root / (std::to_string(i) + "_w1_again");
    if (cli(runs[i].args + " --workers 1", a) != 0) ++failed;
    if (cli(runs[i].args + " --workers 8", b) != 0) ++failed;
    if (cli(runs[i].args + " --workers 1", c) != 0) ++failed;
    for (const auto& f : runs[i].files) {
      compared += 2;
      const std::string x = slurp(a / f);
      if (x == "<missing>" || x != slurp(b / f)) ++differing;
      if (x != slurp(c / f)) ++differing;
    }
  }
  return {differing == 0 && failed == 0, std::to_string(compared) + " file comparisons (1 vs 8 workers, repeat), " +
                                             std::to_string(differing) + " differ, " + std::to_string(failed) +
                                             " runs failed"};
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, Verdict>> rows(11);
  rows[0] = {"Williamson classification of planted types", classification()};
  rows[2] = {"order axioms on random triples", poset()};
  rows[3] = {"model flow suite", flows()};
  rows[4] = {"joint-flow endpoint", joint_flow()};
  run_model_suites();
  rows[5] = {"zeta/eta pullbacks, symplecticity and E-matrix rows", local_model()};
  rows[6] = {"transition verifiers and negative controls", transitions()};
  rows[7] = {"spin-oscillator scan", spin_scan()};
  rows[8] = {"nodal pipeline on ff-x-family(1/2)", nodal()};
  rows[9] = {"closure/adjacency of strata", closure()};
  rows[10] = {"determinism across worker counts", determinism()};
  rows[1] = {"type equation for every classified point",
             {tally.violations == 0 && tally.checked > 0,
              std::to_string(tally.checked) + " classified points, " + std::to_string(tally.violations) + " violations"}};
  int failures = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& [name, v] = rows[i];
    std::printf("%s [%zu] %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, name.c_str(), v.detail.c_str());
    if (!v.pass) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(rows.size()) - failures, rows.size());
  return failures == 0 ? 0 : 1;
}
