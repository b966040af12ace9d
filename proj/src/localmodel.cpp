#include "semitoric/localmodel.hpp"

#include <algorithm>
#include <cmath>

#include "semitoric/rng.hpp"

namespace semitoric {

ModelQ::ModelQ(const WilliamsonType& w) : w_(w) {
  for (int j = 0; j < w.k_e(); ++j) components_.push_back({Species::Elliptic, elliptic_pair(j)});
  for (int j = 0; j < w.k_h(); ++j) components_.push_back({Species::Hyperbolic, hyperbolic_pair(j)});
  for (int j = 0; j < w.k_f(); ++j) {
    components_.push_back({Species::Focus1, focus_pair(j)});
    components_.push_back({Species::Focus2, focus_pair(j)});
  }
  for (int j = 0; j < w.k_x(); ++j) components_.push_back({Species::Transverse, transverse_pair(j)});
}

QuadraticHamiltonian ModelQ::quadratic(int index) const {
  const int n = w_.n();
  const auto& c = components_.at(static_cast<std::size_t>(index));
  Mat s = Mat::Zero(2 * n, 2 * n);
  const int a = c.pair;
  const int b = c.pair + 1;
  switch (c.species) {
    case Species::Elliptic:
      s(a, a) = 1.0;
      s(n + a, n + a) = 1.0;
      break;
    case Species::Hyperbolic:
      s(a, n + a) = s(n + a, a) = 0.5;
      break;
    case Species::Focus1:
      s(a, n + a) = s(n + a, a) = 0.5;
      s(b, n + b) = s(n + b, b) = 0.5;
      break;
    case Species::Focus2:
      s(a, n + b) = s(n + b, a) = 0.5;
      s(b, n + a) = s(n + a, b) = -0.5;
      break;
    case Species::Transverse:
      throw PreconditionError("ModelQ::quadratic: transverse components are linear");
  }
  return QuadraticHamiltonian(s);
}

SmoothHamiltonian ModelQ::component(int index) const {
  const auto& c = components_.at(static_cast<std::size_t>(index));
  if (c.species == Species::Transverse) return SmoothHamiltonian::coordinate(2 * n(), n() + c.pair);
  return SmoothHamiltonian::from_quadratic(quadratic(index));
}

Vec ModelQ::eval(const Vec& p) const {
  require_phase_dim(p, n(), "eval_model");
  Vec out(n());
  for (int i = 0; i < n(); ++i) {
    const auto& c = components_[static_cast<std::size_t>(i)];
    out[i] = c.species == Species::Transverse ? p[n() + c.pair] : quadratic(i).value(p);
  }
  return out;
}

Mat ModelQ::jacobian(const Vec& p) const {
  require_phase_dim(p, n(), "ModelQ::jacobian");
  Mat jac(n(), 2 * n());
  for (int i = 0; i < n(); ++i) jac.row(i) = component(i).gradient(p).transpose();
  return jac;
}

ModelQ build_model(const WilliamsonType& w) { return ModelQ(w); }

Vec eval_model(const ModelQ& m, const Vec& p) { return m.eval(p); }

CartanCandidate model_candidate(const WilliamsonType& w) {
  const WilliamsonType fixed(w.k_e(), w.k_f(), w.k_h(), 0, w.m());
  if (fixed.n() == 0) throw PreconditionError("model_candidate: type has no fixed-point part");
  const ModelQ model(fixed);
  CartanCandidate c;
  for (int i = 0; i < fixed.n(); ++i) c.hessians.push_back(model.quadratic(i));
  c.ambient_n = w.n();
  return c;
}

namespace {

void require_point_type(const WilliamsonType& w, const ModelPoint& p) {
  if (w.k_f() != 1 || w.k_h() != 0) {
    throw PreconditionError("ModelPoint: needs k_f = 1 and k_h = 0, got " + w.to_string());
  }
  if (p.k_e() != w.k_e() || p.k_x() != w.k_x() || p.I.size() != p.theta.size()) {
    throw DimensionError("ModelPoint: sizes do not match " + w.to_string());
  }
}

}  // namespace

Vec ModelPoint::to_phase(const WilliamsonType& w) const {
  require_point_type(w, *this);
  const ModelQ model(w);
  const int n = w.n();
  Vec p = Vec::Zero(2 * n);
  for (int j = 0; j < w.k_e(); ++j) {
    p[model.elliptic_pair(j)] = ze[static_cast<std::size_t>(j)].real();
    p[n + model.elliptic_pair(j)] = ze[static_cast<std::size_t>(j)].imag();
  }
  const int a = model.focus_pair(0);
  p[a] = z1.real();
  p[a + 1] = z1.imag();
  p[n + a] = z2.real();
  p[n + a + 1] = z2.imag();
  for (int j = 0; j < w.k_x(); ++j) {
    p[model.transverse_pair(j)] = theta[j];
    p[n + model.transverse_pair(j)] = I[j];
  }
  return p;
}

ModelPoint ModelPoint::from_phase(const WilliamsonType& w, const Vec& p) {
  if (w.k_f() != 1 || w.k_h() != 0) throw PreconditionError("ModelPoint: needs k_f = 1 and k_h = 0");
  require_phase_dim(p, w.n(), "ModelPoint::from_phase");
  const ModelQ model(w);
  const int n = w.n();
  ModelPoint out;
  for (int j = 0; j < w.k_e(); ++j) {
    out.ze.emplace_back(p[model.elliptic_pair(j)], p[n + model.elliptic_pair(j)]);
  }
  const int a = model.focus_pair(0);
  out.z1 = Complex(p[a], p[a + 1]);
  out.z2 = Complex(p[n + a], p[n + a + 1]);
  out.theta.resize(w.k_x());
  out.I.resize(w.k_x());
  for (int j = 0; j < w.k_x(); ++j) {
    out.theta[j] = wrap_angle(p[model.transverse_pair(j)]);
    out.I[j] = p[n + model.transverse_pair(j)];
  }
  return out;
}

ModelPoint flow_closed_form(const ComponentId& id, const ModelPoint& p, double t) {
  ModelPoint out = p;
  switch (id.species) {
    case FlowSpecies::Q2: {
      const Complex phase = std::polar(1.0, t);
      out.z1 *= phase;
      out.z2 *= phase;
      break;
    }
    case FlowSpecies::Q1:
      out.z1 *= std::exp(t);
      out.z2 *= std::exp(-t);
      break;
    case FlowSpecies::Elliptic:
      if (id.index < 0 || id.index >= p.k_e()) throw DimensionError("flow_closed_form: no such elliptic component");
      out.ze[static_cast<std::size_t>(id.index)] *= std::polar(1.0, -2.0 * t);
      break;
    case FlowSpecies::Transverse:
      if (id.index < 0 || id.index >= p.k_x()) throw DimensionError("flow_closed_form: no such transverse component");
      out.theta[id.index] = wrap_angle(p.theta[id.index] + t);
      break;
  }
  return out;
}

UpsilonResult upsilon(Complex c, Complex delta, const Vec& theta, const Vec& I) {
  if (c == Complex(0.0, 0.0) || delta == Complex(0.0, 0.0)) {
    throw DomainError("upsilon: c and delta must be nonzero");
  }
  if (theta.size() != I.size()) throw DimensionError("upsilon: theta and I differ in length");
  UpsilonResult r;
  r.s = std::log(std::abs(delta) / std::abs(c));
  r.t = std::arg(delta) - std::arg(c);
  ModelPoint start;
  start.z1 = c;
  start.z2 = std::conj(delta);
  start.theta = theta;
  start.I = I;
  r.end = flow_closed_form({FlowSpecies::Q1}, flow_closed_form({FlowSpecies::Q2}, start, r.t), r.s);
  return r;
}

ModelPoint zeta(const VecI& Xf, const MatI& Xe, const ModelPoint& p) {
  const int k_x = p.k_x();
  const int k_e = p.k_e();
  if (Xf.size() != k_x || Xe.rows() != k_x || Xe.cols() != k_e || p.I.size() != k_x) {
    throw DimensionError("zeta: block sizes do not match the point");
  }
  ModelPoint out = p;
  const Complex q = focus_value(p);
  // The focus-focus block follows the q2 flow for time -<theta, Xf>, each
  // elliptic block the e flow for time -(theta Xe)_l; both are well defined mod 2pi.
  const double s = -p.theta.dot(Xf.cast<double>());
  out.z1 = std::polar(1.0, s) * p.z1;
  out.z2 = std::polar(1.0, s) * p.z2;
  const Vec se = -(p.theta.transpose() * Xe.cast<double>()).transpose();
  Vec qe(k_e);
  for (int l = 0; l < k_e; ++l) {
    qe[l] = std::norm(p.ze[static_cast<std::size_t>(l)]);
    out.ze[static_cast<std::size_t>(l)] = std::polar(1.0, -2.0 * se[l]) * p.ze[static_cast<std::size_t>(l)];
  }
  out.I = p.I + q.imag() * Xf.cast<double>() + Xe.cast<double>() * qe;
  return out;
}

void EpsilonSigns::validate() const {
  auto ok = [](int e) { return e == 1 || e == -1; };
  if (!ok(eps_f1) || !ok(eps_f2) || !std::all_of(eps_e.begin(), eps_e.end(), ok)) {
    throw PreconditionError("EpsilonSigns: entries must be +1 or -1");
  }
}

Mat E1(int eps) {
  if (eps == 1) return Mat::Identity(4, 4);
  if (eps != -1) throw PreconditionError("E1: eps must be +1 or -1");
  // (x1, xi1, x2, xi2) -> (xi1, -x1, xi2, -x2)
  Mat m = Mat::Zero(4, 4);
  m(0, 1) = 1.0;
  m(1, 0) = -1.0;
  m(2, 3) = 1.0;
  m(3, 2) = -1.0;
  return m;
}

Mat E2(int eps) {
  if (eps == 1) return Mat::Identity(4, 4);
  if (eps != -1) throw PreconditionError("E2: eps must be +1 or -1");
  // (x1, xi1, x2, xi2) -> (x2, xi2, x1, xi1)
  Mat m = Mat::Zero(4, 4);
  m(0, 2) = 1.0;
  m(1, 3) = 1.0;
  m(2, 0) = 1.0;
  m(3, 1) = 1.0;
  return m;
}

Mat embed_focus_block(const Mat& block, const WilliamsonType& w) {
  if (w.k_f() < 1) throw PreconditionError("embed_focus_block: type has no focus-focus block");
  if (block.rows() != 4 || block.cols() != 4) throw DimensionError("embed_focus_block: block must be 4x4");
  const ModelQ model(w);
  const int n = w.n();
  const int a = model.focus_pair(0);
  const int idx[4] = {a, n + a, a + 1, n + a + 1};
  Mat m = Mat::Identity(2 * n, 2 * n);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) m(idx[i], idx[j]) = block(i, j);
  }
  return m;
}

long long integer_det(const MatI& m) {
  if (m.rows() != m.cols()) throw DimensionError("integer_det: matrix must be square");
  const auto k = m.rows();
  if (k == 0) return 1;
  // Bareiss elimination keeps every intermediate integral.
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> a = m.cast<long long>();
  long long sign = 1;
  long long prev = 1;
  for (Eigen::Index i = 0; i < k - 1; ++i) {
    if (a(i, i) == 0) {
      Eigen::Index swap = -1;
      for (Eigen::Index r = i + 1; r < k; ++r) {
        if (a(r, i) != 0) {
          swap = r;
          break;
        }
      }
      if (swap < 0) return 0;
      a.row(i).swap(a.row(swap));
      sign = -sign;
    }
    for (Eigen::Index r = i + 1; r < k; ++r) {
      for (Eigen::Index c = i + 1; c < k; ++c) {
        a(r, c) = (a(r, c) * a(i, i) - a(r, i) * a(i, c)) / prev;
      }
    }
    prev = a(i, i);
  }
  return sign * a(k - 1, k - 1);
}

namespace {

MatI integer_inverse(const MatI& x) {
  const long long det = integer_det(x);
  if (det != 1 && det != -1) throw DomainError("eta: Xx must have determinant +-1");
  if (x.size() == 0) return x;
  const Mat inv = x.cast<double>().inverse();
  const MatI rounded = inv.array().round().cast<int>().matrix();
  if ((x * rounded - MatI::Identity(x.rows(), x.cols())).cwiseAbs().maxCoeff() != 0) {
    throw NumericalError("eta: integer inverse failed");
  }
  return rounded;
}

}  // namespace

ModelPoint eta(const EpsilonSigns& eps, const MatI& Xx, const ModelPoint& p) {
  eps.validate();
  const int k_x = p.k_x();
  if (Xx.rows() != k_x || Xx.cols() != k_x || p.I.size() != k_x) throw DimensionError("eta: Xx size mismatch");
  const MatI inv = integer_inverse(Xx);
  ModelPoint out = p;
  Vec block(4);
  block << p.z1.real(), p.z2.real(), p.z1.imag(), p.z2.imag();
  const Vec mapped = E1(eps.eps_f1) * E2(eps.eps_f2) * block;
  out.z1 = Complex(mapped[0], mapped[2]);
  out.z2 = Complex(mapped[1], mapped[3]);
  const Vec th = (p.theta.transpose() * inv.cast<double>()).transpose();
  for (int j = 0; j < k_x; ++j) out.theta[j] = wrap_angle(th[j]);
  out.I = Xx.cast<double>() * p.I;
  return out;
}

Vec transition_coordinates(const ModelPoint& p) {
  const int k_e = p.k_e();
  const int k_x = p.k_x();
  Vec q(2 + k_e + k_x);
  const Complex f = focus_value(p);
  q[0] = f.real();
  q[1] = f.imag();
  for (int l = 0; l < k_e; ++l) q[2 + l] = std::norm(p.ze[static_cast<std::size_t>(l)]);
  q.tail(k_x) = p.I;
  return q;
}

ModelPoint model_section(int k_e, const Vec& q, const Vec& theta) {
  const auto k_x = static_cast<int>(theta.size());
  if (q.size() != 2 + k_e + k_x) throw DimensionError("model_section: q has the wrong length");
  ModelPoint p;
  p.z1 = Complex(1.0, 0.0);
  p.z2 = Complex(q[0], q[1]);
  for (int l = 0; l < k_e; ++l) {
    if (q[2 + l] < 0.0) throw DomainError("model_section: elliptic values must be non-negative");
    p.ze.emplace_back(std::sqrt(q[2 + l]), 0.0);
  }
  p.theta = theta;
  p.I = q.tail(k_x);
  return p;
}

StarData StarData::identity(int k_e, int k_x) {
  StarData d;
  d.eps.eps_e.assign(static_cast<std::size_t>(k_e), 1);
  d.Xf = VecI::Zero(k_x);
  d.Xe = MatI::Zero(k_x, k_e);
  d.Xx = MatI::Identity(k_x, k_x);
  return d;
}

MatI random_unimodular(int k, std::uint64_t seed, int bound) {
  CounterRng rng(seed, 0x756e696dULL);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    MatI m = MatI::Identity(k, k);
    if (k >= 2) {
      const int ops = 2 * k;
      for (int o = 0; o < ops; ++o) {
        const int i = rng.integer(0, k - 1);
        int j = rng.integer(0, k - 2);
        if (j >= i) ++j;
        const int c = rng.integer(-2, 2);
        m.row(i) += c * m.row(j);
      }
    }
    for (int i = 0; i < k; ++i) {
      if (rng.uniform() < 0.5) m.row(i) *= -1;
    }
    if (k == 0 || m.cwiseAbs().maxCoeff() <= bound) return m;
  }
  return MatI::Identity(k, k);
}

StarData StarData::random(int k_e, int k_x, std::uint64_t seed, int bound, bool elliptic_signs) {
  CounterRng rng(seed);
  StarData d;
  d.eps.eps_f1 = rng.uniform() < 0.5 ? -1 : 1;
  d.eps.eps_f2 = rng.uniform() < 0.5 ? -1 : 1;
  for (int l = 0; l < k_e; ++l) d.eps.eps_e.push_back(elliptic_signs && rng.uniform() < 0.5 ? -1 : 1);
  d.Xf = VecI(k_x);
  for (int j = 0; j < k_x; ++j) d.Xf[j] = rng.integer(-bound, bound);
  d.Xe = MatI(k_x, k_e);
  for (int j = 0; j < k_x; ++j) {
    for (int l = 0; l < k_e; ++l) d.Xe(j, l) = rng.integer(-bound, bound);
  }
  d.Xx = random_unimodular(k_x, rng.next_u64(), bound);
  return d;
}

Vec StarData::apply(const Vec& q) const {
  const int ke = k_e();
  const int kx = k_x();
  if (q.size() != 2 + ke + kx) throw DimensionError("StarData::apply: q has the wrong length");
  Vec out(q.size());
  out[0] = eps.eps_f1 * q[0];
  out[1] = eps.eps_f2 * q[1];
  for (int l = 0; l < ke; ++l) out[2 + l] = eps.eps_e[static_cast<std::size_t>(l)] * q[2 + l];
  out.tail(kx) = Xx.cast<double>() * q.tail(kx) + Xf.cast<double>() * q[1] + Xe.cast<double>() * q.segment(2, ke);
  return out;
}

Mat StarData::jacobian() const {
  const int ke = k_e();
  const int kx = k_x();
  const int n = 2 + ke + kx;
  Mat j = Mat::Zero(n, n);
  j(0, 0) = eps.eps_f1;
  j(1, 1) = eps.eps_f2;
  for (int l = 0; l < ke; ++l) j(2 + l, 2 + l) = eps.eps_e[static_cast<std::size_t>(l)];
  j.block(2 + ke, 1, kx, 1) = Xf.cast<double>();
  j.block(2 + ke, 2, kx, ke) = Xe.cast<double>();
  j.block(2 + ke, 2 + ke, kx, kx) = Xx.cast<double>();
  return j;
}

ModelPoint StarData::realize(const ModelPoint& p) const {
  if (std::any_of(eps.eps_e.begin(), eps.eps_e.end(), [](int e) { return e != 1; })) {
    throw PreconditionError("StarData::realize: elliptic signs must be +1");
  }
  return zeta(eps.eps_f2 * Xf, Xe, eta(eps, Xx, p));
}

StarData compose(const StarData& a, const StarData& b) {
  if (a.k_e() != b.k_e() || a.k_x() != b.k_x()) throw DimensionError("compose: block sizes differ");
  StarData out;
  out.eps.eps_f1 = a.eps.eps_f1 * b.eps.eps_f1;
  out.eps.eps_f2 = a.eps.eps_f2 * b.eps.eps_f2;
  MatI eb = MatI::Zero(b.k_e(), b.k_e());
  for (int l = 0; l < a.k_e(); ++l) {
    out.eps.eps_e.push_back(a.eps.eps_e[static_cast<std::size_t>(l)] * b.eps.eps_e[static_cast<std::size_t>(l)]);
    eb(l, l) = b.eps.eps_e[static_cast<std::size_t>(l)];
  }
  out.Xf = a.Xx * b.Xf + a.Xf * b.eps.eps_f2;
  out.Xe = a.Xx * b.Xe + a.Xe * eb;
  out.Xx = a.Xx * b.Xx;
  return out;
}

Mat transition_jacobian(int k_e, int k_x, const std::function<ModelPoint(const ModelPoint&)>& psi, const Vec& q,
                        const Vec& theta, double step) {
  if (theta.size() != k_x) throw DimensionError("transition_jacobian: theta length");
  auto map = [&](const Vec& qq) { return transition_coordinates(psi(model_section(k_e, qq, theta))); };
  return finite_difference_jacobian(map, q, step);
}

bool StructureReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const StructureCheck& c) { return c.pass; });
}

const StructureCheck* StructureReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

namespace {

void require_transition_type(const Mat& J, const WilliamsonType& w) {
  if (w.k_f() != 1 || w.k_h() != 0) {
    throw PreconditionError("structure checks need k_f = 1 and k_h = 0, got " + w.to_string());
  }
  if (J.rows() != w.n() || J.cols() != w.n()) throw DimensionError("structure checks: J must be n x n");
}

void add(StructureReport& r, const std::string& name, double measured, double tol) {
  r.checks.push_back({name, measured <= tol, measured, tol});
}

double block_max(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

StructureReport verify_spade(const Mat& J, const WilliamsonType& w, double tol) {
  require_transition_type(J, w);
  const int n = w.n();
  StructureReport r;
  add(r, "first-column", block_max(J.block(1, 0, n - 1, 1)), tol);
  const Mat lower = J.bottomRows(n - 1);
  const Mat rounded = lower.array().round().matrix();
  add(r, "integer-entries", block_max(lower - rounded), tol);
  TransitionBlocks b;
  b.k_e = w.k_e();
  b.k_x = w.k_x();
  b.A = rounded.block(0, 1, n - 1, n - 1).cast<int>();
  b.firstRow = J.row(0).transpose();
  const long long det = integer_det(b.A);
  add(r, "unimodular", static_cast<double>(std::llabs(std::llabs(det) - 1)), 0.0);
  r.blocks = b;
  return r;
}

StructureReport verify_star(const Mat& J, const WilliamsonType& w, bool critical_set, double tol) {
  StructureReport r = verify_spade(J, w, tol);
  const TransitionBlocks& b = *r.blocks;
  const Mat a = J.block(1, 1, w.n() - 1, w.n() - 1);
  const int ke = b.k_e;
  const int kx = b.k_x;
  add(r, "Ef-zero", block_max(a.block(1, 0, ke, 1)), tol);
  add(r, "Ex-zero", block_max(a.block(1, 1 + ke, ke, kx)), tol);
  Mat ee = a.block(1, 1, ke, ke);
  double ee_dev = 0.0;
  for (int i = 0; i < ke; ++i) {
    for (int j = 0; j < ke; ++j) {
      ee_dev = std::max(ee_dev, i == j ? std::abs(std::abs(ee(i, j)) - 1.0) : std::abs(ee(i, j)));
    }
  }
  add(r, "Ee-diagonal-sign", ee_dev, tol);
  add(r, "Fe-zero", block_max(a.block(0, 1, 1, ke)), tol);
  add(r, "Fx-zero", block_max(a.block(0, 1 + ke, 1, kx)), tol);
  add(r, "Ff-sign", std::abs(std::abs(a(0, 0)) - 1.0), tol);
  if (critical_set) {
    add(r, "first-row-flat", block_max(J.block(0, 1, 1, w.n() - 1)), tol);
    add(r, "first-row-sign", std::abs(std::abs(J(0, 0)) - 1.0), tol);
  }
  EpsilonSigns eps;
  eps.eps_f1 = J(0, 0) < 0.0 ? -1 : 1;
  eps.eps_f2 = a(0, 0) < 0.0 ? -1 : 1;
  for (int l = 0; l < ke; ++l) eps.eps_e.push_back(ee(l, l) < 0.0 ? -1 : 1);
  r.eps = eps;
  return r;
}

}  // namespace semitoric
