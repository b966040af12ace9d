#include <doctest.h>

#include <cmath>

#include "semitoric/errors.hpp"
#include "semitoric/nodal.hpp"

using namespace semitoric;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

VecI veci(std::initializer_list<long> xs) {
  VecI v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (long x : xs) v[i++] = x;
  return v;
}

const WilliamsonType kFFX = WilliamsonType::of(0, 1, 0, 1);

std::vector<Vec> parabola(double lambda, int count, double lo = -0.8, double hi = 0.8) {
  std::vector<Vec> out;
  for (int i = 0; i < count; ++i) {
    const double t = lo + (hi - lo) * i / (count - 1);
    out.push_back(vec({lambda * t * t, 1, t}));
  }
  return out;
}

CriticalPoint ffx_point(const MomentMapSystem& sys, double z) {
  return classify_point(sys, "N.P.N", vec({0, 0, std::sqrt(2.0 * (1.0 - z)), 0, 0, 0}));
}

StratumMap ffx_strata(double lambda) {
  const auto sys = ff_x_family(lambda);
  Region r;
  r.axes = {{-0.3, 0.3}, {-0.3, 0.3}, {-1.5, 1.5}, {-0.3, 0.3}, {-0.3, 0.3}, {-1.5, 1.5}};
  r.charts = {"N.P.N", "N.P.S"};
  return stratum_scan(sys, r, GridSpec{{0.15, 0.15, 0.25, 0.15, 0.15, 0.25}});
}

}  // namespace

TEST_SUITE("nodal") {
  TEST_CASE("collect_values: ff-x cloud lies on the parabola") {
    const auto strata = ffx_strata(0.5);
    const auto cloud = collect_values(strata, kFFX);
    REQUIRE(cloud.values.size() >= 4);
    REQUIRE(cloud.witnesses.size() == cloud.values.size());
    for (std::size_t i = 0; i < cloud.values.size(); ++i) {
      const Vec& v = cloud.values[i];
      CHECK(std::abs(v[0] - 0.5 * v[2] * v[2]) <= 1e-8);
      CHECK(std::abs(v[1] - 1.0) <= 1e-8);
      CHECK(cloud.witnesses[i].wtype == kFFX);
    }
  }

  TEST_CASE("collect_values: spin has one focus-focus value, toric none") {
    const auto spin = spin_oscillator();
    const auto s = stratum_scan(spin, spin.default_region(), GridSpec::uniform(4, 0.3));
    const auto c = collect_values(s, WilliamsonType::of(0, 1, 0, 0));
    REQUIRE(c.values.size() == 1);
    CHECK((c.values[0] - vec({0, 1})).norm() <= 1e-9);

    const auto toric = toric_oscillator(2);
    Region r;
    r.axes.assign(4, {-2, 2});
    const auto t = stratum_scan(toric, r, GridSpec::uniform(4, 0.5));
    CHECK(collect_values(t, WilliamsonType::of(0, 1, 0, 0)).values.empty());
    CHECK_THROWS_AS(collect_values(t, WilliamsonType::of(2, 0, 0, 0)), PreconditionError);
  }

  TEST_CASE("collect_values merges duplicates") {
    StratumMap m;
    m.n = 3;
    for (double eps : {0.0, 1e-10, 0.5}) {
      CriticalPoint p;
      p.embedded = Vec::Zero(7);
      p.wtype = kFFX;
      p.nondegenerate = true;
      p.value = vec({0, 1, eps});
      m.insert(p);
    }
    CHECK(collect_values(m, kFFX).values.size() == 2);
  }

  TEST_CASE("fit_affine examples") {
    const auto flat = fit_affine(parabola(0.0, 9), 1);
    CHECK(flat.degenerate);
    CHECK(flat.spanned == 1);

    const auto curved = fit_affine(parabola(0.5, 17), 1);
    CHECK(!curved.degenerate);
    CHECK(curved.spanned == 2);
    CHECK(curved.planeResidual <= 1e-9);
    // normal of the plane is the y axis
    const Vec normal = vec({0, 1, 0});
    CHECK((curved.basis.transpose() * normal).norm() <= 1e-9);
    CHECK(std::abs(curved.P[1] - 1.0) <= 1e-12);

    CounterRng rng(5);
    std::vector<Vec> three;
    for (int i = 0; i < 3; ++i) three.push_back(vec({rng.normal(), rng.normal(), rng.normal()}));
    const auto exact = fit_affine(three, 1);
    CHECK(exact.planeResidual <= 1e-12);
    CHECK(!exact.degenerate);
  }

  TEST_CASE("best_rational") {
    CHECK(best_rational(0.5, 64) == std::pair<long, long>{1, 2});
    CHECK(best_rational(M_PI, 7) == std::pair<long, long>{22, 7});
    CHECK(best_rational(-2.0, 64) == std::pair<long, long>{-2, 1});
  }

  TEST_CASE("rationalize_direction examples") {
    CHECK(rationalize_direction(vec({0, 0.4472136, 0.8944272})) == veci({0, 1, 2}));
    CHECK(rationalize_direction(vec({0, 1, 0})) == veci({0, 1, 0}));
    CHECK(rationalize_direction(vec({0.3, 0, -1})) == veci({0, 0, 1}));
    const Vec irr = vec({0, 1, std::sqrt(2.0)}).normalized();
    CHECK_THROWS_AS(rationalize_direction(irr, 64, 1e-9), NoIntegerDirection);
  }

  TEST_CASE("extract_graph examples") {
    const Vec P = vec({0, 1, 0});
    const Vec e1 = vec({1, 0, 0});
    const std::vector<VecI> v{veci({0, 0, 1})};

    const auto g = extract_graph(parabola(0.5, 33), P, e1, v);
    REQUIRE(g.t.size() == 33);
    for (std::size_t i = 0; i < g.t.size(); ++i) CHECK(std::abs(g.h[i] - 0.5 * g.t[i][0] * g.t[i][0]) <= 1e-4);
    CHECK(g.planeDistance <= 1e-12);

    const auto flat = extract_graph(parabola(0.0, 9), P, e1, v);
    for (double h : flat.h) CHECK(std::abs(h) <= 1e-12);

    std::vector<Vec> folded;
    for (int i = 0; i < 9; ++i) {
      const double t = -0.4 + 0.1 * i;
      folded.push_back(vec({1, 1, t}));
      folded.push_back(vec({-1, 1, t}));
    }
    CHECK_THROWS_AS(extract_graph(folded, P, e1, v), NotAGraph);
  }

  TEST_CASE("build_surface on the parabola and the degenerate line") {
    CriticalValueCloud c;
    c.wtype = kFFX;
    c.values = parabola(0.5, 33);
    const auto s = build_surface(c);
    REQUIRE(s.v.size() == 1);
    CHECK(s.v[0] == veci({0, 0, 1}));
    CHECK((s.P - vec({0, 1, 0})).norm() <= 1e-12);
    CHECK(std::abs(s.h_at(vec({0.33})) - 0.5 * 0.33 * 0.33) <= 1e-4);
    CHECK(s.distance(vec({0.5 * 0.25, 1, 0.5})) <= 1e-6);

    CriticalValueCloud flat;
    flat.wtype = kFFX;
    flat.values = parabola(0.0, 9);
    const auto d = build_surface(flat);
    CHECK(d.degenerateFit);
    REQUIRE(d.v.size() == 1);
    CHECK(d.v[0] == veci({0, 0, 1}));
    for (double h : d.h) CHECK(std::abs(h) <= 1e-12);
  }

  TEST_CASE("isolation on synthetic clouds") {
    CriticalValueCloud c;
    c.wtype = kFFX;
    c.values = parabola(0.0, 41);
    const auto s = build_surface(c);
    std::vector<Vec> shifted;
    for (const auto& v : c.values) shifted.push_back(v + vec({0.01, 0, 0}));
    const auto bad = isolation_check(s, shifted, 0.05);
    CHECK(!bad.isolated);
    CHECK(!bad.witnesses.empty());
    CHECK(bad.in_tube == shifted.size());

    const auto empty = isolation_check(s, {}, 0.05);
    CHECK(empty.isolated);
    CHECK(empty.examined == 0);

    const auto same = isolation_check(s, c.values, 0.05);
    CHECK(same.isolated);
  }

  TEST_CASE("trace and isolation on ff-x(1/2)") {
    const auto sys = ff_x_family(0.5);
    const auto seed = ffx_point(sys, 0.0);
    REQUIRE(seed.wtype == kFFX);
    TraceOptions opt;
    opt.bounds = std::make_pair(-0.8, 0.8);
    const auto tr = trace_curve(sys, seed, 0.05, 200, opt);
    CHECK(!tr.truncated);
    CHECK(tr.points.size() >= 30);
    CHECK(tr.points.size() <= 34);
    CHECK(tr.params.front() <= -0.75);
    CHECK(tr.params.back() >= 0.75);
    for (std::size_t i = 0; i < tr.points.size(); ++i) {
      const Vec& v = tr.points[i].value;
      CHECK((v - vec({0.5 * v[2] * v[2], 1, v[2]})).norm() <= 1e-6);
      CHECK(tr.points[i].wtype == kFFX);
      if (i > 0) CHECK(tr.params[i] > tr.params[i - 1]);
    }

    CriticalValueCloud c;
    c.wtype = kFFX;
    for (const auto& p : tr.points) {
      c.values.push_back(p.value);
      c.witnesses.push_back(p);
    }
    const auto s = build_surface(c);
    CHECK(s.planeResidual <= 1e-6);
    CHECK(s.graphResidual <= 1e-6);
    REQUIRE(s.v.size() == 1);
    CHECK(s.v[0] == veci({0, 0, 1}));
    SamplingSpec spec;
    spec.max_witnesses = 16;
    const auto iso = isolation_check(sys, s, 0.05, spec);
    CHECK(iso.isolated);
    CHECK(iso.in_tube > 0);
  }

  TEST_CASE("trace with a step larger than the domain") {
    const auto sys = ff_x_family(0.5);
    TraceOptions opt;
    opt.bounds = std::make_pair(-0.8, 0.8);
    const auto tr = trace_curve(sys, ffx_point(sys, 0.0), 5.0, 10, opt);
    CHECK(tr.points.size() <= 2);
    CHECK(!tr.points.empty());
  }

  TEST_CASE("trace rejects a seed that is not FF-X") {
    const auto spin = spin_oscillator();
    const auto ff = classify_point(spin, "N.P", Vec::Zero(4));
    CHECK_THROWS_AS(trace_curve(spin, ff, 0.05, 10), PreconditionError);
  }

  TEST_CASE("link_components") {
    std::vector<Vec> pts;
    for (int i = 0; i < 5; ++i) pts.push_back(vec({0.1 * i, 0}));
    for (int i = 0; i < 5; ++i) pts.push_back(vec({0.1 * i, 3}));
    const auto labels = link_components(pts, 0.15);
    for (int i = 1; i < 5; ++i) CHECK(labels[i] == labels[0]);
    for (int i = 6; i < 10; ++i) CHECK(labels[i] == labels[5]);
    CHECK(labels[0] != labels[5]);
    CHECK(link_components({}, 1.0).empty());
  }
}
