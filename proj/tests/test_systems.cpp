#include <doctest.h>

#include <cmath>

#include "semitoric/critical.hpp"
#include "semitoric/rng.hpp"

using namespace semitoric;

namespace {

WilliamsonType T(const char* s) { return WilliamsonType::parse(s); }

Vec pt(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// A point of the north Lambert chart at height z.
double lambert_radius(double z) { return std::sqrt(2.0 * (1.0 - z)); }

double max_bracket(const MomentMapSystem& sys, int samples, std::uint64_t seed) {
  CounterRng rng(seed);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const auto [chart, p] = sys.random_point(rng);
    for (int i = 0; i < sys.n(); ++i) {
      for (int j = i + 1; j < sys.n(); ++j) {
        worst = std::max(worst, std::abs(poisson_bracket(sys.component(chart, i), sys.component(chart, j), p)));
      }
    }
  }
  return worst;
}

}  // namespace

TEST_SUITE("systems") {
  TEST_CASE("toric oscillator") {
    const MomentMapSystem sys = toric_oscillator(2);
    CHECK(sys.n() == 2);
    CHECK(chart_eval(sys, "P.P", Vec::Zero(4)).values.norm() == 0.0);
    CHECK(classify_point(sys, "P.P", Vec::Zero(4)).wtype == T("2,0,0,0"));
    const CriticalPoint half = classify_point(sys, "P.P", pt({0.0, 1.0, 0.0, 0.5}));
    CHECK(half.rank == 1);
    CHECK(half.wtype == T("1,0,0,1"));
    const CriticalPoint reg = classify_point(sys, "P.P", pt({0.3, 1.0, -0.2, 0.5}));
    CHECK(reg.rank == 2);
    CHECK(reg.wtype == WilliamsonType::regular(2));
    CHECK_THROWS_AS(toric_oscillator(0), PreconditionError);
  }

  TEST_CASE("spin oscillator fixed points") {
    const MomentMapSystem sys = spin_oscillator();
    const CriticalPoint ff = classify_point(sys, "N.P", Vec::Zero(4));
    CHECK(ff.rank == 0);
    CHECK(ff.wtype == T("0,1,0,0"));
    CHECK(ff.nondegenerate);
    CHECK(ff.value[0] == doctest::Approx(0.0));
    CHECK(ff.value[1] == doctest::Approx(1.0));
    const CriticalPoint sp = classify_point(sys, "S.P", Vec::Zero(4));
    CHECK(sp.wtype == T("2,0,0,0"));
    CHECK(sp.value[1] == doctest::Approx(-1.0));
    CHECK(chart_eval(sys, "N.P", Vec::Zero(4)).values[1] == doctest::Approx(1.0));
  }

  TEST_CASE("ff-x family values along the focus-focus locus") {
    for (double lambda : {0.0, 0.5}) {
      const MomentMapSystem sys = ff_x_family(lambda);
      for (double z : {-0.6, -0.2, 0.0, 0.3, 0.7}) {
        const double r = lambert_radius(z);
        const Vec p = pt({0.0, 0.0, r, 0.0, 0.0, 0.0});
        const CriticalPoint cp = classify_point(sys, "N.P.N", p);
        CHECK(cp.wtype == T("0,1,0,1"));
        CHECK(cp.value[0] == doctest::Approx(lambda * z * z));
        CHECK(cp.value[1] == doctest::Approx(1.0));
        CHECK(cp.value[2] == doctest::Approx(z));
      }
      const CriticalPoint pole = classify_point(sys, "N.P.N", Vec::Zero(6));
      CHECK(pole.wtype == T("1,1,0,0"));
      CHECK(classify_point(sys, "N.P.S", Vec::Zero(6)).wtype == T("1,1,0,0"));
    }
    CHECK(make_system("ff-x-family:0.5").name() == ff_x_family(0.5).name());
  }

  TEST_CASE("catalog names") {
    CHECK(make_system("toric-oscillator:3").n() == 3);
    CHECK(make_system("spin-oscillator").n() == 2);
    CHECK_THROWS_AS(make_system("toric-oscillator:x"), ConfigError);
    CHECK_THROWS_AS(make_system("pendulum"), ConfigError);
  }

  TEST_CASE("charts") {
    const MomentMapSystem sys = spin_oscillator();
    CHECK_THROWS_AS(chart_eval(sys, "N.P", pt({1.95, 0.3, 0.0, 0.0})), ChartError);
    CHECK_THROWS_AS(chart_eval(sys, "Q.P", Vec::Zero(4)), ChartError);
    CounterRng rng(5);
    double val = 0.0, der = 0.0, trip = 0.0;
    for (int i = 0; i < 100; ++i) {
      Vec p(4);
      // Sphere points well inside both charts (0.63 < r < 1.9).
      const double r = rng.uniform(0.8, 1.6), phi = rng.uniform(0.0, kTwoPi);
      p << r * std::cos(phi), rng.uniform(-2, 2), r * std::sin(phi), rng.uniform(-2, 2);
      const Vec q = sys.rechart("N.P", "S.P", p);
      trip = std::max(trip, (sys.rechart("S.P", "N.P", q) - p).norm());
      const ChartEval a = chart_eval(sys, "N.P", p);
      const ChartEval b = chart_eval(sys, "S.P", q);
      val = std::max(val, (a.values - b.values).cwiseAbs().maxCoeff());
      const Mat T = finite_difference_jacobian([&](const Vec& x) { return sys.rechart("N.P", "S.P", x); }, p, 1e-6);
      der = std::max(der, max_abs(a.jacobian - b.jacobian * T));
    }
    CHECK(trip <= 1e-12);
    CHECK(val <= 1e-10);
    CHECK(der <= 1e-8);
  }

  TEST_CASE("chart transitions are symplectic") {
    const MomentMapSystem sys = height_sphere();
    CounterRng rng(7);
    for (int i = 0; i < 20; ++i) {
      const double r = rng.uniform(0.8, 1.6), phi = rng.uniform(0.0, kTwoPi);
      const Vec p = pt({r * std::cos(phi), r * std::sin(phi)});
      const Mat T = finite_difference_jacobian([&](const Vec& x) { return sys.rechart("N", "S", x); }, p, 1e-6);
      CHECK(symplectic_residual(T, SymplecticForm(1)) < 1e-8);
    }
  }

  TEST_CASE("catalog systems are integrable") {
    CHECK(max_bracket(toric_oscillator(2), 500, 1) <= 1e-8);
    CHECK(max_bracket(spin_oscillator(), 500, 2) <= 1e-8);
    CHECK(max_bracket(ff_x_family(0.5), 500, 3) <= 1e-8);
  }

  TEST_CASE("components after the first generate 2pi-periodic flows") {
    for (const MomentMapSystem& sys : {spin_oscillator(), ff_x_family(0.5)}) {
      CounterRng rng(11);
      double worst = 0.0;
      for (int s = 0; s < 50; ++s) {
        auto [chart, p] = sys.random_point(rng);
        for (int i = 1; i < sys.n(); ++i) {
          const Vec q = flow(sys.component(chart, i), p, kTwoPi, 1e-11, sys.flow_options(chart));
          worst = std::max(worst, (q - p).norm());
        }
      }
      CHECK(worst <= 1e-6);
    }
  }

  TEST_CASE("product points classify as the product of their factors") {
    const MomentMapSystem prod = product(spin_oscillator(), height_sphere());
    const MomentMapSystem sphere = height_sphere();
    const MomentMapSystem spin = spin_oscillator();
    struct Case {
      const char* spin_chart;
      Vec spin_p;
      const char* sphere_chart;
      Vec sphere_p;
    };
    const std::vector<Case> cases{{"N.P", Vec::Zero(4), "N", Vec::Zero(2)},
                                  {"S.P", Vec::Zero(4), "S", Vec::Zero(2)},
                                  {"N.P", Vec::Zero(4), "N", pt({0.8, 0.3})},
                                  {"S.P", Vec::Zero(4), "N", pt({-0.4, 0.9})}};
    for (const auto& c : cases) {
      const WilliamsonType a = classify_point(spin, c.spin_chart, c.spin_p).wtype;
      const WilliamsonType b = classify_point(sphere, c.sphere_chart, c.sphere_p).wtype;
      const std::string chart = std::string(c.spin_chart) + "." + c.sphere_chart;
      Vec p(6);
      p << c.spin_p.head(2), c.sphere_p[0], c.spin_p.tail(2), c.sphere_p[1];
      CHECK(classify_point(prod, chart, p).wtype == type_of_product(a, b));
    }
  }
}
