#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "semitoric/critical.hpp"
#include "semitoric/errors.hpp"
#include "semitoric/rng.hpp"

using namespace semitoric;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Region box(int dim, double lo, double hi, std::vector<ChartId> charts = {}) {
  Region r;
  r.axes.assign(static_cast<std::size_t>(dim), {lo, hi});
  r.charts = std::move(charts);
  return r;
}

std::vector<CriticalPoint> of_rank(const std::vector<CriticalPoint>& pts, int r) {
  std::vector<CriticalPoint> out;
  std::copy_if(pts.begin(), pts.end(), std::back_inserter(out), [r](const CriticalPoint& p) { return p.rank == r; });
  return out;
}

const WilliamsonType kFFX = WilliamsonType::of(0, 1, 0, 1);

}  // namespace

TEST_SUITE("critical") {
  TEST_CASE("numerical_rank examples") {
    CHECK(numerical_rank(Mat::Zero(2, 4), 1e-8) == 0);
    CounterRng rng(3);
    for (int n = 1; n <= 4; ++n) {
      Mat J(n, 2 * n);
      for (Eigen::Index i = 0; i < J.size(); ++i) J(i) = rng.normal();
      CHECK(numerical_rank(J, 1e-8) == n);
    }
    const auto sys = spin_oscillator();
    CHECK(numerical_rank(chart_eval(sys, "N.P", Vec::Zero(4)).jacobian, 1e-8) == 0);
    CHECK_THROWS_AS(numerical_rank(Mat::Identity(2, 4), 0.0), PreconditionError);
  }

  TEST_CASE("toric oscillator: origin refined to 1e-8 and circles sampled") {
    const auto sys = toric_oscillator(2);
    const auto pts = find_critical(sys, box(4, -2, 2), GridSpec::uniform(4, 0.25));
    const auto fixed = of_rank(pts, 0);
    REQUIRE(fixed.size() == 1);
    CHECK(fixed[0].coords.norm() <= 1e-8);
    CHECK(fixed[0].wtype == WilliamsonType::of(2, 0, 0, 0));
    const auto circles = of_rank(pts, 1);
    CHECK(circles.size() > 10);
    for (const auto& p : circles) {
      CHECK(p.wtype == WilliamsonType::of(1, 0, 0, 1));
      // one of the two planes collapses
      const double a = std::hypot(p.coords[0], p.coords[2]);
      const double b = std::hypot(p.coords[1], p.coords[3]);
      CHECK(std::min(a, b) <= 1e-8);
    }
  }

  TEST_CASE("spin oscillator: exactly two fixed points") {
    const auto sys = spin_oscillator();
    const auto pts = find_critical(sys, sys.default_region(), GridSpec::uniform(4, 0.3));
    const auto fixed = of_rank(pts, 0);
    REQUIRE(fixed.size() == 2);
    int ff = 0, ee = 0;
    for (const auto& p : fixed) {
      if (p.wtype == WilliamsonType::of(0, 1, 0, 0)) {
        ++ff;
        Vec north(5);
        north << 0, 0, 1, 0, 0;
        CHECK((p.embedded - north).norm() <= 1e-6);
        CHECK((p.value - vec({0, 1})).norm() <= 1e-9);
      }
      if (p.wtype == WilliamsonType::of(2, 0, 0, 0)) {
        ++ee;
        CHECK((p.value - vec({0, -1})).norm() <= 1e-9);
      }
    }
    CHECK(ff == 1);
    CHECK(ee == 1);
  }

  TEST_CASE("empty region gives no points") {
    const auto sys = spin_oscillator();
    Region r = box(4, 1, -1);
    CHECK(r.empty());
    CHECK(find_critical(sys, r, GridSpec::uniform(4, 0.3)).empty());
  }

  TEST_CASE("reduce_hessians at a fixed point is the full Hessian") {
    const auto sys = toric_oscillator(2);
    const auto c = reduce_hessians(sys, "P.P", Vec::Zero(4), 0);
    REQUIRE(c.hessians.size() == 2);
    const auto ev = chart_eval(sys, "P.P", Vec::Zero(4), true);
    for (int i = 0; i < 2; ++i) CHECK((c.hessians[i].hessian() - ev.hessians[i]).norm() <= 1e-12);
  }

  TEST_CASE("reduce_hessians at the spin focus-focus point") {
    const auto sys = spin_oscillator();
    const auto c = reduce_hessians(sys, "N.P", Vec::Zero(4), 0);
    REQUIRE(c.hessians.size() == 2);
    CHECK(c.hessians[0].dim() == 4);
    const auto rep = classify_fixed(c, 1);
    CHECK(rep.nondegenerate);
    CHECK(rep.wtype == WilliamsonType::of(0, 1, 0, 0));
  }

  TEST_CASE("ff-x family: focus-focus times equator is FF-X") {
    const auto sys = ff_x_family(0.0);
    const Vec p = vec({0, 0, std::sqrt(2.0), 0, 0, 0});
    const auto c = reduce_hessians(sys, "N.P.N", p, 1);
    CHECK(c.hessians.size() == 2);
    const auto cp = classify_point(sys, "N.P.N", p);
    CHECK(cp.rank == 1);
    CHECK(cp.nondegenerate);
    CHECK(cp.wtype == kFFX);
  }

  TEST_CASE("classify_point examples") {
    const auto spin = spin_oscillator();
    const auto south = classify_point(spin, "S.P", Vec::Zero(4));
    CHECK(south.wtype == WilliamsonType::of(2, 0, 0, 0));
    CHECK(south.rank == 0);

    const auto ffx = ff_x_family(0.5);
    const double z = 0.3;
    const Vec p = vec({0, 0, std::sqrt(2.0 * (1.0 - z)), 0, 0, 0});
    const auto cp = classify_point(ffx, "N.P.N", p);
    CHECK(cp.wtype == kFFX);
    CHECK((cp.value - vec({0.5 * z * z, 1, z})).norm() <= 1e-12);

    CounterRng rng(11);
    for (const char* name : {"toric-oscillator:2", "spin-oscillator", "ff-x-family:0.5"}) {
      const auto sys = make_system(name);
      for (int i = 0; i < 5; ++i) {
        const auto [chart, q] = sys.random_point(rng);
        const auto r = classify_point(sys, chart, q);
        CHECK(r.wtype == WilliamsonType::regular(sys.n()));
        CHECK(r.rank == sys.n());
      }
    }
  }

  TEST_CASE("scan points satisfy the type equation and reclassify identically") {
    const auto sys = spin_oscillator();
    const auto pts = find_critical(sys, sys.default_region(), GridSpec::uniform(4, 0.3));
    REQUIRE(!pts.empty());
    for (const auto& p : pts) {
      const auto& w = p.wtype;
      CHECK(w.k_e() + 2 * w.k_f() + w.k_h() + w.k_x() == sys.n());
      CHECK(w.k_x() == p.rank);
      const auto again = classify_point(sys, p.chart, p.coords);
      CHECK(again.wtype == p.wtype);
      CHECK(again.nondegenerate == p.nondegenerate);
    }
  }

  TEST_CASE("chart independence on overlaps") {
    const auto sys = ff_x_family(0.5);
    const Vec p = vec({0, 0, std::sqrt(1.4), 0, 0, 0});
    const auto a = classify_point(sys, "N.P.N", p);
    const Vec q = sys.rechart("N.P.N", "N.P.S", p);
    const auto b = classify_point(sys, "N.P.S", q);
    CHECK(a.wtype == b.wtype);
    CHECK((a.value - b.value).norm() <= 1e-6);
    CHECK((a.embedded - b.embedded).norm() <= 1e-6);

    const auto ra = refine_critical(sys, "N.P.N", p + 1e-3 * Vec::Ones(6), 1);
    REQUIRE(ra);
    const auto rb = refine_critical(sys, "N.P.S", sys.rechart("N.P.N", "N.P.S", p + 1e-3 * Vec::Ones(6)), 1);
    REQUIRE(rb);
    const auto va = sys.values("N.P.N", ra->coords);
    const auto vb = sys.values("N.P.S", rb->coords);
    CHECK(classify_point(sys, "N.P.N", ra->coords).wtype == classify_point(sys, "N.P.S", rb->coords).wtype);
    // both refine onto the FF-X curve
    CHECK(std::abs(va[1] - 1.0) <= 1e-8);
    CHECK(std::abs(vb[1] - 1.0) <= 1e-8);
  }

  TEST_CASE("closure on the FF-X model grid with its regular stratum") {
    const auto sys = model_system(kFFX);
    const auto strata = stratum_scan(sys, box(6, -0.5, 0.5), GridSpec::uniform(6, 0.25), {}, true);
    CHECK(strata.count(kFFX) > 0);
    CHECK(strata.count(WilliamsonType::regular(3)) > 0);
    const auto rep = closure_check(strata, 0.3);
    CHECK(rep.ok());
    bool seen = false;
    for (const auto& a : rep.pairs)
      if (a.lower == kFFX && a.upper == WilliamsonType::regular(3)) seen = true;
    CHECK(seen);
  }

  TEST_CASE("closure on ff-x strata") {
    const auto sys = ff_x_family(0.5);
    Region r;
    r.axes = {{-0.3, 0.3}, {-0.3, 0.3}, {-1.5, 1.5}, {-0.3, 0.3}, {-0.3, 0.3}, {-1.5, 1.5}};
    r.charts = {"N.P.N", "N.P.S"};
    const auto strata = stratum_scan(sys, r, GridSpec{{0.15, 0.15, 0.25, 0.15, 0.15, 0.25}});
    CHECK(strata.count(kFFX) > 0);
    CHECK(strata.count(WilliamsonType::of(1, 1, 0, 0)) == 2);
    const auto rep = closure_check(strata, 0.5);
    CHECK(rep.ok());
    bool seen = false;
    for (const auto& a : rep.pairs)
      if (a.lower == WilliamsonType::of(1, 1, 0, 0) && a.upper == kFFX) seen = a.consistent;
    CHECK(seen);
  }

  TEST_CASE("closure on a single stratum is vacuous") {
    StratumMap m;
    m.n = 2;
    CriticalPoint p;
    p.embedded = Vec::Zero(4);
    p.wtype = WilliamsonType::of(2, 0, 0, 0);
    p.nondegenerate = true;
    m.insert(p);
    const auto rep = closure_check(m, 1.0);
    CHECK(rep.ok());
    CHECK(rep.pairs.empty());
  }

  TEST_CASE("scan output is independent of the worker count") {
    const auto sys = spin_oscillator();
    CriticalOptions one;
    one.workers = 1;
    CriticalOptions four = one;
    four.workers = 4;
    const auto a = find_critical(sys, sys.default_region(), GridSpec::uniform(4, 0.3), one);
    const auto b = find_critical(sys, sys.default_region(), GridSpec::uniform(4, 0.3), four);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(csv_row(a[i]) == csv_row(b[i]));
  }

  TEST_CASE("csv layout") {
    CHECK(csv_header(2) == "chart,x1,x2,xi1,xi2,rank,k_e,k_f,k_h,k_x,nondegenerate,f1,f2,residual");
  }
}
