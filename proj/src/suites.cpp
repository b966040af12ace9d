#include "semitoric/suites.hpp"

#include <algorithm>
#include <cmath>

#include "semitoric/rng.hpp"

namespace semitoric {

bool SuiteResult::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const StructureCheck& c) { return c.pass; });
}

const StructureCheck* SuiteResult::find(const std::string& check) const {
  for (const auto& c : checks) {
    if (c.name == check) return &c;
  }
  return nullptr;
}

namespace {

void add(SuiteResult& r, const std::string& name, double measured, double tol) {
  r.checks.push_back({name, measured <= tol, measured, tol});
}

Complex random_complex(CounterRng& rng) { return {rng.normal(), rng.normal()}; }

ModelPoint random_model_point(CounterRng& rng, int k_e, int k_x) {
  ModelPoint p;
  p.z1 = random_complex(rng);
  p.z2 = random_complex(rng);
  for (int l = 0; l < k_e; ++l) p.ze.push_back(random_complex(rng));
  p.theta = Vec(k_x);
  p.I = Vec(k_x);
  for (int j = 0; j < k_x; ++j) {
    p.theta[j] = rng.uniform(0.0, kTwoPi);
    p.I[j] = rng.normal();
  }
  return p;
}

double point_distance(const ModelPoint& a, const ModelPoint& b) {
  double d2 = std::norm(a.z1 - b.z1) + std::norm(a.z2 - b.z2);
  for (std::size_t l = 0; l < a.ze.size(); ++l) d2 += std::norm(a.ze[l] - b.ze[l]);
  for (Eigen::Index j = 0; j < a.theta.size(); ++j) {
    const double dt = angle_diff(a.theta[j], b.theta[j]);
    d2 += dt * dt + (a.I[j] - b.I[j]) * (a.I[j] - b.I[j]);
  }
  return std::sqrt(d2);
}

double point_norm(const ModelPoint& a) {
  double s = std::norm(a.z1) + std::norm(a.z2) + a.I.squaredNorm();
  for (const auto& z : a.ze) s += std::norm(z);
  return std::sqrt(s);
}

VecI random_int_vec(CounterRng& rng, int k, int bound) {
  VecI v(k);
  for (int i = 0; i < k; ++i) v[i] = rng.integer(-bound, bound);
  return v;
}

MatI random_int_mat(CounterRng& rng, int r, int c, int bound) {
  MatI m(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) m(i, j) = rng.integer(-bound, bound);
  }
  return m;
}

// Central differences of a phase map; angle coordinates are differenced
// modulo 2π.
Mat phase_jacobian(const WilliamsonType& w, const std::function<ModelPoint(const ModelPoint&)>& psi, const Vec& p,
                   double step) {
  const ModelQ model(w);
  const int dim = 2 * w.n();
  auto image = [&](const Vec& x) { return psi(ModelPoint::from_phase(w, x)).to_phase(w); };
  Mat J(dim, dim);
  for (int k = 0; k < dim; ++k) {
    Vec a = p, b = p;
    a[k] += step;
    b[k] -= step;
    Vec d = image(a) - image(b);
    for (int j = 0; j < w.k_x(); ++j) {
      const int idx = model.transverse_pair(j);
      d[idx] = angle_diff(d[idx], 0.0);
    }
    J.col(k) = d / (2.0 * step);
  }
  return J;
}

double upsilon_error(CounterRng& rng, int k_x, int samples) {
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const Complex c = std::polar(std::exp(rng.uniform(std::log(0.1), std::log(10.0))), rng.uniform(-kPi, kPi));
    const Complex delta = std::polar(std::exp(rng.uniform(std::log(0.1), std::log(10.0))), rng.uniform(-kPi, kPi));
    Vec theta(k_x), I(k_x);
    for (int j = 0; j < k_x; ++j) {
      theta[j] = rng.uniform(0.0, kTwoPi);
      I[j] = rng.normal();
    }
    const UpsilonResult u = upsilon(c, delta, theta, I);
    ModelPoint target;
    target.z1 = delta;
    target.z2 = std::conj(c);
    target.theta = theta;
    target.I = I;
    worst = std::max(worst, point_distance(u.end, target) / (1.0 + point_norm(target)));
  }
  return worst;
}

void structure_checks(SuiteResult& r, const WilliamsonType& w, std::uint64_t seed, const ModelSuiteOptions& opt) {
  const int ke = w.k_e(), kx = w.k_x();
  CounterRng rng(seed, 0x73746172ULL);
  const StarData a = StarData::random(ke, kx, rng.next_u64(), opt.bound);
  const StarData b = StarData::random(ke, kx, rng.next_u64(), opt.bound);
  const StarData c = compose(a, b);
  Vec q(2 + ke + kx);
  q[0] = rng.normal();
  q[1] = rng.normal();
  for (int l = 0; l < ke; ++l) q[2 + l] = rng.uniform(0.2, 1.5);
  for (int j = 0; j < kx; ++j) q[2 + ke + j] = rng.normal();
  Vec theta(kx);
  for (int j = 0; j < kx; ++j) theta[j] = rng.uniform(0.5, kTwoPi - 0.5);
  const Mat J = transition_jacobian(ke, kx, [&](const ModelPoint& p) { return a.realize(b.realize(p)); }, q, theta);

  add(r, "transition-jacobian", max_abs(J - c.jacobian()), 1e-6);
  const StructureReport spade = verify_spade(J, w, opt.structure_tol);
  add(r, "spade-realized", spade.pass() ? 0.0 : 1.0, 0.0);
  const StructureReport star = verify_star(J, w, true, opt.structure_tol);
  add(r, "star-realized", star.pass() ? 0.0 : 1.0, 0.0);
  // The recovered blocks must be the group-law composition of the inputs.
  const Mat expected = c.jacobian().bottomRightCorner(w.n() - 1, w.n() - 1);
  double block_err = 1.0;
  if (star.blocks && star.eps) {
    block_err = max_abs(star.blocks->A.cast<double>() - expected);
    if (!(*star.eps == c.eps)) block_err = 1.0;
  }
  add(r, "star-composition", block_err, 0.0);

  // Negative controls: each perturbed Jacobian must be rejected.
  int accepted = 0;
  Mat bad = J;
  bad(w.n() - 1, w.n() - 1) += 0.5;
  if (verify_spade(bad, w, opt.structure_tol).pass()) ++accepted;
  bad = J;
  if (ke > 0) {
    bad(2, 1) += 1.0;  // E^f
  } else {
    bad(1, 1) *= 2.0;  // F^f
  }
  if (verify_star(bad, w, false, opt.structure_tol).pass()) ++accepted;
  bad = J;
  bad(0, 1) += 0.1;
  if (verify_star(bad, w, true, opt.structure_tol).pass()) ++accepted;
  bad = J;
  bad(1, 0) += 0.25;
  if (verify_spade(bad, w, opt.structure_tol).pass()) ++accepted;
  add(r, "negative-controls", accepted, 0.0);
}

}  // namespace

SuiteResult model_verify_suite(const WilliamsonType& w, std::uint64_t seed, const ModelSuiteOptions& opt) {
  SuiteResult r;
  r.name = "model-verify " + w.to_string();
  CounterRng rng(seed);
  const ModelQ model(w);
  const int n = w.n();

  add(r, "type-equation", std::abs(w.k_e() + 2 * w.k_f() + w.k_h() + w.k_x() - n), 0.0);

  double bracket = 0.0;
  for (int s = 0; s < opt.points; ++s) {
    const Vec p = rng.normal_vector(2 * n);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        bracket = std::max(bracket, std::abs(poisson_bracket(model.component(i), model.component(j), p)));
      }
    }
  }
  add(r, "model-commuting", bracket, 1e-10);

  if (w.m() > 0) {
    const ClassificationReport cls = classify_fixed(model_candidate(w), rng.next_u64());
    add(r, "model-classification", cls.nondegenerate && cls.wtype == w ? 0.0 : 1.0, 0.0);
    add(r, "type-equation-classified",
        std::abs(cls.wtype.k_e() + 2 * cls.wtype.k_f() + cls.wtype.k_h() + cls.wtype.k_x() - cls.wtype.n()), 0.0);
  } else {
    r.notes.push_back("model-classification: regular type has no fixed-point part");
  }

  if (w.k_f() != 1 || w.k_h() != 0) {
    r.notes.push_back("zeta/eta and transition checks need k_f = 1 and k_h = 0");
    return r;
  }
  const int ke = w.k_e(), kx = w.k_x();

  double zeta_pull = 0.0, eta_pull = 0.0, zeta_sym = 0.0, eta_sym = 0.0, star_sym = 0.0;
  const SymplecticForm form(n);
  for (int s = 0; s < opt.points; ++s) {
    const ModelPoint p = random_model_point(rng, ke, kx);
    const VecI Xf = random_int_vec(rng, kx, opt.bound);
    const MatI Xe = random_int_mat(rng, kx, ke, opt.bound);
    const ModelPoint zp = zeta(Xf, Xe, p);
    const Complex q = focus_value(p);
    double err = std::abs(focus_value(zp) - q);
    Vec qe(ke);
    for (int l = 0; l < ke; ++l) {
      qe[l] = std::norm(p.ze[static_cast<std::size_t>(l)]);
      err = std::max(err, std::abs(std::norm(zp.ze[static_cast<std::size_t>(l)]) - qe[l]));
    }
    if (kx > 0) {
      const Vec I_expected = p.I + q.imag() * Xf.cast<double>() + Xe.cast<double>() * qe;
      err = std::max(err, (zp.I - I_expected).cwiseAbs().maxCoeff());
    }
    zeta_pull = std::max(zeta_pull, err);

    EpsilonSigns eps;
    eps.eps_f1 = rng.uniform() < 0.5 ? -1 : 1;
    eps.eps_f2 = rng.uniform() < 0.5 ? -1 : 1;
    eps.eps_e.assign(static_cast<std::size_t>(ke), 1);
    const MatI Xx = random_unimodular(kx, rng.next_u64(), opt.bound);
    const ModelPoint ep = eta(eps, Xx, p);
    const Complex eq = focus_value(ep);
    err = std::max(std::abs(eq.real() - eps.eps_f1 * q.real()), std::abs(eq.imag() - eps.eps_f2 * q.imag()));
    for (int l = 0; l < ke; ++l) {
      err = std::max(err, std::abs(std::norm(ep.ze[static_cast<std::size_t>(l)]) - qe[l]));
    }
    if (kx > 0) err = std::max(err, (ep.I - Xx.cast<double>() * p.I).cwiseAbs().maxCoeff());
    eta_pull = std::max(eta_pull, err);

    const Vec x = p.to_phase(w);
    zeta_sym = std::max(zeta_sym, symplectic_residual(phase_jacobian(
                                      w, [&](const ModelPoint& m) { return zeta(Xf, Xe, m); }, x, opt.fd_step), form));
    eta_sym = std::max(eta_sym, symplectic_residual(phase_jacobian(
                                    w, [&](const ModelPoint& m) { return eta(eps, Xx, m); }, x, opt.fd_step), form));
    const StarData d = StarData::random(ke, kx, rng.next_u64(), opt.bound);
    star_sym = std::max(star_sym, symplectic_residual(phase_jacobian(
                                      w, [&](const ModelPoint& m) { return d.realize(m); }, x, opt.fd_step), form));
  }
  add(r, "zeta-pullback", zeta_pull, opt.pullback_tol);
  add(r, "eta-pullback", eta_pull, opt.pullback_tol);
  add(r, "zeta-symplectic", zeta_sym, opt.symplectic_tol);
  add(r, "eta-symplectic", eta_sym, opt.symplectic_tol);
  add(r, "realize-symplectic", star_sym, opt.symplectic_tol);

  Vec v(4);
  v << 1, 2, 3, 4;
  Vec e1(4), e2(4);
  e1 << 2, -1, 4, -3;
  e2 << 3, 4, 1, 2;
  double rows = std::max((E1(-1) * v - e1).cwiseAbs().maxCoeff(), (E2(-1) * v - e2).cwiseAbs().maxCoeff());
  rows = std::max({rows, max_abs(E1(1) - Mat::Identity(4, 4)), max_abs(E2(1) - Mat::Identity(4, 4))});
  add(r, "E-rows", rows, 0.0);
  double esym = 0.0;
  for (int s1 : {-1, 1}) {
    for (int s2 : {-1, 1}) {
      esym = std::max(esym, symplectic_residual(embed_focus_block(E1(s1) * E2(s2), w), form));
    }
  }
  add(r, "E-symplectic", esym, 1e-14);

  add(r, "upsilon", upsilon_error(rng, kx, opt.points), 1e-9);
  structure_checks(r, w, rng.next_u64(), opt);
  return r;
}

SuiteResult flow_suite(const FlowSuiteOptions& opt) {
  const WilliamsonType& w = opt.type;
  if (w.k_f() != 1 || w.k_h() != 0) throw PreconditionError("flow_suite: type needs k_f = 1 and k_h = 0");
  if (!(opt.t_max > 0.0) || opt.times < 2) throw PreconditionError("flow_suite: need t_max > 0 and times >= 2");
  SuiteResult r;
  r.name = "flows " + w.to_string();
  CounterRng rng(opt.seed);
  FlowOptions fo;
  fo.orientation = opt.orientation;
  const double tol = opt.integrator_tol;
  std::vector<double> times;
  for (int k = 0; k < opt.times; ++k) times.push_back(-opt.t_max + 2.0 * opt.t_max * k / (opt.times - 1));

  // Conservation runs on every species, hyperbolic included.
  const WilliamsonType wc(w.k_e(), w.k_f(), 1, w.k_x(), w.n() + 1);
  const ModelQ mc(wc);
  double cons = 0.0;
  for (int i = 0; i < wc.n(); ++i) {
    const SmoothHamiltonian h = mc.component(i);
    for (int s = 0; s < opt.points; ++s) {
      const Vec p = 0.5 * rng.normal_vector(2 * wc.n());
      const double h0 = h.value(p);
      for (double t : times) {
        const Vec q = flow(h, p, t, tol, fo);
        cons = std::max(cons, std::abs(h.value(q) - h0) / std::max(1.0, std::abs(h0)));
      }
    }
  }
  add(r, "conservation", cons, opt.conservation_tol);

  const ModelQ model(w);
  const int ke = w.k_e(), kx = w.k_x();
  auto hamiltonian_of = [&](const ComponentId& id) {
    switch (id.species) {
      case FlowSpecies::Elliptic:
        return model.component(id.index);
      case FlowSpecies::Q1:
        return model.component(ke);
      case FlowSpecies::Q2:
        return model.component(ke + 1);
      case FlowSpecies::Transverse:
        break;
    }
    return model.component(ke + 2 + id.index);
  };
  auto ode = [&](const ComponentId& id, const ModelPoint& p, double t) {
    return ModelPoint::from_phase(w, flow(hamiltonian_of(id), p.to_phase(w), t, tol, fo));
  };

  // 2π-periodicity of q2 and the transverse flows, plus the quarter-period
  // image, which separates the two orientations.
  std::vector<ComponentId> periodic{{FlowSpecies::Q2, 0}};
  for (int j = 0; j < kx; ++j) periodic.push_back({FlowSpecies::Transverse, j});
  double period = 0.0;
  for (const auto& id : periodic) {
    for (int s = 0; s < opt.points; ++s) {
      const ModelPoint p = random_model_point(rng, ke, kx);
      const double scale = 1.0 + point_norm(p);
      period = std::max(period, point_distance(ode(id, p, kTwoPi), p) / scale);
      period = std::max(period, point_distance(ode(id, p, kPi / 2), flow_closed_form(id, p, kPi / 2)) / scale);
    }
  }
  add(r, "periodicity", period, opt.periodicity_tol);

  // Under our quadratic normalization the elliptic period is π.
  double eper = 0.0;
  for (int l = 0; l < ke; ++l) {
    const ModelPoint p = random_model_point(rng, ke, kx);
    eper = std::max(eper, point_distance(ode({FlowSpecies::Elliptic, l}, p, kPi), p) / (1.0 + point_norm(p)));
  }
  if (ke > 0) add(r, "elliptic-period-pi", eper, opt.periodicity_tol);

  std::vector<ComponentId> ids{{FlowSpecies::Q1, 0}, {FlowSpecies::Q2, 0}};
  for (int l = 0; l < ke; ++l) ids.push_back({FlowSpecies::Elliptic, l});
  for (int j = 0; j < kx; ++j) ids.push_back({FlowSpecies::Transverse, j});
  double agree = 0.0;
  for (const auto& id : ids) {
    for (int s = 0; s < opt.points; ++s) {
      ModelPoint p = random_model_point(rng, ke, kx);
      if (id.species == FlowSpecies::Q1) {
        // Keep both e^{±t} branches of the hyperbolic flow within range.
        p.z1 *= 0.5;
        p.z2 *= 0.5;
      }
      for (double t : times) {
        const ModelPoint exact = flow_closed_form(id, p, t);
        agree = std::max(agree, point_distance(ode(id, p, t), exact) / (1.0 + point_norm(exact)));
      }
    }
  }
  add(r, "closed-form-vs-ode", agree, opt.agreement_tol);

  add(r, "upsilon", upsilon_error(rng, kx, opt.upsilon_samples), opt.upsilon_tol);
  return r;
}

}  // namespace semitoric
