#pragma once

// Linear symplectic machinery on R^{2n} with Darboux coordinates laid out as
// (x_1..x_n, xi_1..xi_n) and omega_0 = sum d(xi_i) ^ d(x_i).
//
// Sign convention: i_{X_H} omega_0 = -dH and {F,G} = omega_0(X_F, X_G).
// With it, X_H = (dH/dxi, -dH/dx), the flow of q2 = x1 xi2 - x2 xi1 is the
// rotation (e^{it} z1, e^{it} z2), and the flow of e = x^2 + xi^2 rotates
// z = x + i xi as e^{-2it} z (period pi).

#include <functional>
#include <optional>

#include "semitoric/errors.hpp"
#include "semitoric/linalg.hpp"

namespace semitoric {

/// A point of R^{2n}; length must be even.
using PhasePoint = Vec;

/// Throws DimensionError unless p has length 2n.
void require_phase_dim(const Vec& p, int n, const char* what);

class SymplecticForm {
 public:
  explicit SymplecticForm(int n);

  static SymplecticForm standard(int n) { return SymplecticForm(n); }

  int n() const { return n_; }
  int dim() const { return 2 * n_; }
  const Mat& matrix() const { return omega_; }

 private:
  int n_;
  Mat omega_;
};

/// omega_0(u, v) = u^T Omega v.
double omega_pair(const SymplecticForm& form, const Vec& u, const Vec& v);

/// p^T S p, with no 1/2 factor: e = x^2 + xi^2 has unit diagonal entries.
class QuadraticHamiltonian {
 public:
  /// Symmetrizes the input.
  explicit QuadraticHamiltonian(const Mat& s);

  const Mat& matrix() const { return s_; }
  int dim() const { return static_cast<int>(s_.rows()); }
  double value(const Vec& p) const { return p.dot(s_ * p); }
  Vec gradient(const Vec& p) const { return 2.0 * s_ * p; }
  Mat hessian() const { return 2.0 * s_; }

 private:
  Mat s_;
};

struct FiniteDifferenceSteps {
  double gradient = 1e-5;
  /// Hessian step is hessian_scale * (1 + |p|).
  double hessian_scale = 1e-3;
};

/// A function on R^{2n} with derivative oracles. Missing oracles fall back to
/// central differences.
class SmoothHamiltonian {
 public:
  using ValueFn = std::function<double(const Vec&)>;
  using GradientFn = std::function<Vec(const Vec&)>;
  using HessianFn = std::function<Mat(const Vec&)>;

  SmoothHamiltonian(int dim, ValueFn value, GradientFn gradient = {}, HessianFn hessian = {},
                    FiniteDifferenceSteps steps = {});

  static SmoothHamiltonian from_quadratic(const QuadraticHamiltonian& q);
  /// The linear function p -> p[index].
  static SmoothHamiltonian coordinate(int dim, int index);
  static SmoothHamiltonian constant(int dim, double c);

  int dim() const { return dim_; }
  double value(const Vec& p) const;
  Vec gradient(const Vec& p) const;
  Mat hessian(const Vec& p) const;
  bool has_analytic_gradient() const { return static_cast<bool>(gradient_); }
  bool has_analytic_hessian() const { return static_cast<bool>(hessian_); }

  /// Same function with the analytic oracles dropped (finite differences only).
  SmoothHamiltonian numeric_only() const;

 private:
  int dim_;
  ValueFn value_;
  GradientFn gradient_;
  HessianFn hessian_;
  FiniteDifferenceSteps steps_;
};

/// X_H(p) = -Omega grad H(p).
Vec hamiltonian_vector_field(const SmoothHamiltonian& h, const Vec& p);

/// {F,G}(p) = grad F^T Omega grad G = dG(X_F) = -dF(X_G).
double poisson_bracket(const SmoothHamiltonian& f, const SmoothHamiltonian& g, const Vec& p);

struct FlowOptions {
  /// Points outside the chart make the integration fail with IntegrationError.
  std::function<bool(const Vec&)> in_domain;
  double min_step = 1e-14;
  long max_steps = 2'000'000;
  /// Multiplies the vector field. -1 is a deliberately wrong orientation used
  /// as a negative control by the flow suite.
  double orientation = 1.0;
};

/// Adaptive Runge-Kutta integration of X_H from p for time t (t may be
/// negative). Relative tolerance tol, absolute tolerance tol * 1e-2.
PhasePoint flow(const SmoothHamiltonian& h, const PhasePoint& p, double t, double tol,
                const FlowOptions& options = {});

/// max |M^T Omega M - Omega|.
double symplectic_residual(const Mat& m, const SymplecticForm& form);

/// A random symplectic matrix exp(Omega S) with S symmetric Gaussian scaled by
/// `scale`; redrawn until its condition number is at most max_condition.
class CounterRng;
Mat random_symplectic_matrix(int n, CounterRng& rng, double scale = 0.5,
                             double max_condition = 1e3);

}  // namespace semitoric
