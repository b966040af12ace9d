#include "semitoric/symplectic.hpp"

#include <cmath>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "semitoric/rng.hpp"

namespace semitoric {

Mat finite_difference_jacobian(const std::function<Vec(const Vec&)>& map, const Vec& at, double step) {
  const Vec f0 = map(at);
  Mat jac(f0.size(), at.size());
  Vec probe = at;
  for (Eigen::Index k = 0; k < at.size(); ++k) {
    const double h = step * (1.0 + std::abs(at[k]));
    probe[k] = at[k] + h;
    const Vec fp = map(probe);
    probe[k] = at[k] - h;
    const Vec fm = map(probe);
    probe[k] = at[k];
    jac.col(k) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

void require_phase_dim(const Vec& p, int n, const char* what) {
  if (p.size() != 2 * n) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(2 * n) + ", got " +
                         std::to_string(p.size()));
  }
}

SymplecticForm::SymplecticForm(int n) : n_(n), omega_(Mat::Zero(2 * n, 2 * n)) {
  if (n < 1) throw DimensionError("SymplecticForm: n must be positive");
  // omega(u, v) = sum u_xi v_x - u_x v_xi
  omega_.topRightCorner(n, n) = -Mat::Identity(n, n);
  omega_.bottomLeftCorner(n, n) = Mat::Identity(n, n);
}

double omega_pair(const SymplecticForm& form, const Vec& u, const Vec& v) {
  require_phase_dim(u, form.n(), "omega_pair");
  require_phase_dim(v, form.n(), "omega_pair");
  return u.dot(form.matrix() * v);
}

QuadraticHamiltonian::QuadraticHamiltonian(const Mat& s) : s_(0.5 * (s + s.transpose())) {
  if (s.rows() != s.cols() || s.rows() % 2 != 0) {
    throw DimensionError("QuadraticHamiltonian: matrix must be square of even size");
  }
}

SmoothHamiltonian::SmoothHamiltonian(int dim, ValueFn value, GradientFn gradient, HessianFn hessian,
                                     FiniteDifferenceSteps steps)
    : dim_(dim),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      hessian_(std::move(hessian)),
      steps_(steps) {
  if (dim % 2 != 0 || dim <= 0) throw DimensionError("SmoothHamiltonian: dimension must be even");
}

SmoothHamiltonian SmoothHamiltonian::from_quadratic(const QuadraticHamiltonian& q) {
  return SmoothHamiltonian(
      q.dim(), [q](const Vec& p) { return q.value(p); }, [q](const Vec& p) { return q.gradient(p); },
      [q](const Vec&) { return q.hessian(); });
}

SmoothHamiltonian SmoothHamiltonian::coordinate(int dim, int index) {
  return SmoothHamiltonian(
      dim, [index](const Vec& p) { return p[index]; },
      [dim, index](const Vec&) {
        Vec g = Vec::Zero(dim);
        g[index] = 1.0;
        return g;
      },
      [dim](const Vec&) { return Mat::Zero(dim, dim); });
}

SmoothHamiltonian SmoothHamiltonian::constant(int dim, double c) {
  return SmoothHamiltonian(
      dim, [c](const Vec&) { return c; }, [dim](const Vec&) { return Vec::Zero(dim); },
      [dim](const Vec&) { return Mat::Zero(dim, dim); });
}

SmoothHamiltonian SmoothHamiltonian::numeric_only() const {
  return SmoothHamiltonian(dim_, value_, {}, {}, steps_);
}

double SmoothHamiltonian::value(const Vec& p) const {
  if (p.size() != dim_) throw DimensionError("SmoothHamiltonian::value: dimension mismatch");
  return value_(p);
}

Vec SmoothHamiltonian::gradient(const Vec& p) const {
  if (p.size() != dim_) throw DimensionError("SmoothHamiltonian::gradient: dimension mismatch");
  if (gradient_) return gradient_(p);
  Vec g(dim_);
  Vec probe = p;
  const double h = steps_.gradient;
  for (int k = 0; k < dim_; ++k) {
    probe[k] = p[k] + h;
    const double fp = value_(probe);
    probe[k] = p[k] - h;
    const double fm = value_(probe);
    probe[k] = p[k];
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Mat SmoothHamiltonian::hessian(const Vec& p) const {
  if (p.size() != dim_) throw DimensionError("SmoothHamiltonian::hessian: dimension mismatch");
  if (hessian_) return hessian_(p);
  const double h = steps_.hessian_scale * (1.0 + p.norm());
  Mat hess(dim_, dim_);
  Vec probe = p;
  if (gradient_) {
    for (int k = 0; k < dim_; ++k) {
      probe[k] = p[k] + h;
      const Vec gp = gradient_(probe);
      probe[k] = p[k] - h;
      const Vec gm = gradient_(probe);
      probe[k] = p[k];
      hess.col(k) = (gp - gm) / (2.0 * h);
    }
  } else {
    const double f0 = value_(p);
    for (int i = 0; i < dim_; ++i) {
      probe[i] = p[i] + h;
      const double fp = value_(probe);
      probe[i] = p[i] - h;
      const double fm = value_(probe);
      probe[i] = p[i];
      hess(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
      for (int j = 0; j < i; ++j) {
        auto eval = [&](double si, double sj) {
          probe[i] = p[i] + si * h;
          probe[j] = p[j] + sj * h;
          const double v = value_(probe);
          probe[i] = p[i];
          probe[j] = p[j];
          return v;
        };
        const double mixed = (eval(1, 1) - eval(1, -1) - eval(-1, 1) + eval(-1, -1)) / (4.0 * h * h);
        hess(i, j) = mixed;
        hess(j, i) = mixed;
      }
    }
  }
  return 0.5 * (hess + hess.transpose());
}

namespace {

Vec field_from_gradient(const Vec& grad) {
  const Eigen::Index n = grad.size() / 2;
  Vec chi(grad.size());
  chi.head(n) = grad.tail(n);
  chi.tail(n) = -grad.head(n);
  return chi;
}

}  // namespace

Vec hamiltonian_vector_field(const SmoothHamiltonian& h, const Vec& p) {
  const Vec grad = h.gradient(p);
  if (!grad.allFinite()) throw NumericalError("hamiltonian_vector_field: non-finite gradient");
  return field_from_gradient(grad);
}

double poisson_bracket(const SmoothHamiltonian& f, const SmoothHamiltonian& g, const Vec& p) {
  if (f.dim() != g.dim()) throw DimensionError("poisson_bracket: dimension mismatch");
  const Vec gf = f.gradient(p);
  const Vec gg = g.gradient(p);
  if (!gf.allFinite() || !gg.allFinite()) throw NumericalError("poisson_bracket: non-finite gradient");
  const Eigen::Index n = gf.size() / 2;
  // grad F^T Omega grad G = -F_x . G_xi + F_xi . G_x
  return -gf.head(n).dot(gg.tail(n)) + gf.tail(n).dot(gg.head(n));
}

PhasePoint flow(const SmoothHamiltonian& h, const PhasePoint& p, double t, double tol,
                const FlowOptions& options) {
  namespace odeint = boost::numeric::odeint;
  using State = std::vector<double>;

  if (!(tol > 0.0)) throw PreconditionError("flow: tol must be positive");
  if (p.size() != h.dim()) throw DimensionError("flow: dimension mismatch");
  if (t == 0.0) return p;

  const auto dim = static_cast<Eigen::Index>(p.size());
  auto rhs = [&](const State& x, State& dxdt, double) {
    const Eigen::Map<const Vec> xv(x.data(), dim);
    const Vec chi = options.orientation * hamiltonian_vector_field(h, xv);
    dxdt.assign(chi.data(), chi.data() + dim);
  };

  auto stepper = odeint::make_controlled(tol * 1e-2, tol, odeint::runge_kutta_dopri5<State>());
  State x(p.data(), p.data() + dim);
  double time = 0.0;
  const double direction = t > 0.0 ? 1.0 : -1.0;
  double dt = direction * std::min(std::abs(t), 1e-2);
  long steps = 0;
  while (direction * (t - time) > 0.0) {
    if (direction * (time + dt - t) > 0.0) dt = t - time;
    const auto result = stepper.try_step(rhs, x, time, dt);
    if (result == odeint::fail) {
      if (std::abs(dt) < options.min_step) throw IntegrationError("flow: step size underflow");
      continue;
    }
    if (++steps > options.max_steps) throw IntegrationError("flow: too many steps");
    const Eigen::Map<const Vec> xv(x.data(), dim);
    if (!xv.allFinite()) throw IntegrationError("flow: trajectory became non-finite");
    if (options.in_domain && !options.in_domain(xv)) throw IntegrationError("flow: trajectory left the chart");
  }
  return Eigen::Map<const Vec>(x.data(), dim);
}

double symplectic_residual(const Mat& m, const SymplecticForm& form) {
  if (m.rows() != form.dim() || m.cols() != form.dim()) {
    throw DimensionError("symplectic_residual: matrix must be " + std::to_string(form.dim()) + " square");
  }
  return max_abs(m.transpose() * form.matrix() * m - form.matrix());
}

Mat random_symplectic_matrix(int n, CounterRng& rng, double scale, double max_condition) {
  const SymplecticForm form(n);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Mat s(2 * n, 2 * n);
    for (int i = 0; i < 2 * n; ++i) {
      for (int j = 0; j <= i; ++j) {
        s(i, j) = s(j, i) = scale * rng.normal();
      }
    }
    const Mat m = (form.matrix() * s).exp();
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) > 0.0 && sv(0) / sv(sv.size() - 1) <= max_condition) return m;
  }
  throw NumericalError("random_symplectic_matrix: could not meet the condition bound");
}

}  // namespace semitoric
