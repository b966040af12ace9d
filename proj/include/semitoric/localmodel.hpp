#pragma once

// Linear models Q_k, their flows, the symplectomorphisms zeta and eta that
// preserve them, and structure checks on Jacobians of transition maps.
//
// Phase layout of a model of type (k_e, k_f, k_h, k_x): coordinate pairs are
// assigned in the order elliptic, hyperbolic, focus-focus (two pairs per
// block), transverse. Transverse pairs carry theta = x and I = xi.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "semitoric/symplectic.hpp"
#include "semitoric/williamson.hpp"

namespace semitoric {

enum class Species { Elliptic, Hyperbolic, Focus1, Focus2, Transverse };

struct ModelComponent {
  Species species;
  /// First coordinate pair used by the component (a focus-focus block uses pair and pair + 1).
  int pair;
};

class ModelQ {
 public:
  explicit ModelQ(const WilliamsonType& w);

  const WilliamsonType& wtype() const { return w_; }
  int n() const { return w_.n(); }
  const std::vector<ModelComponent>& components() const { return components_; }

  /// Quadratic matrix of a non-transverse component; throws PreconditionError for transverse ones.
  QuadraticHamiltonian quadratic(int index) const;
  SmoothHamiltonian component(int index) const;

  Vec eval(const Vec& p) const;
  /// n x 2n.
  Mat jacobian(const Vec& p) const;

  /// First pair of the j-th elliptic, hyperbolic, focus-focus or transverse component.
  int elliptic_pair(int j) const { return j; }
  int hyperbolic_pair(int j) const { return w_.k_e() + j; }
  int focus_pair(int j) const { return w_.k_e() + w_.k_h() + 2 * j; }
  int transverse_pair(int j) const { return w_.m() + j; }

 private:
  WilliamsonType w_;
  std::vector<ModelComponent> components_;
};

ModelQ build_model(const WilliamsonType& w);

/// Components in the order (e..., h..., f1, f2, ..., xi...).
Vec eval_model(const ModelQ& m, const Vec& p);

/// Quadratic components of the fixed-point part of Q_w on R^{2m}, ambient n = w.n().
CartanCandidate model_candidate(const WilliamsonType& w);

/// A point of a model with k_f = 1 (or 0) and k_h = 0.
struct ModelPoint {
  Complex z1{0.0, 0.0};
  Complex z2{0.0, 0.0};
  std::vector<Complex> ze;
  Vec theta;
  Vec I;

  int k_e() const { return static_cast<int>(ze.size()); }
  int k_x() const { return static_cast<int>(theta.size()); }

  /// Throws PreconditionError unless w has k_f = 1, k_h = 0 and matching sizes.
  Vec to_phase(const WilliamsonType& w) const;
  static ModelPoint from_phase(const WilliamsonType& w, const Vec& p);
};

/// q1 + i q2 = conj(z1) z2.
inline Complex focus_value(const ModelPoint& p) { return std::conj(p.z1) * p.z2; }

enum class FlowSpecies { Elliptic, Q1, Q2, Transverse };

struct ComponentId {
  FlowSpecies species;
  int index = 0;
};

/// Exact flows of the model components.
ModelPoint flow_closed_form(const ComponentId& id, const ModelPoint& p, double t);

struct UpsilonResult {
  double s;
  double t;
  ModelPoint end;
};

/// Times (s, t) such that the q1-flow for s after the q2-flow for t takes
/// (c, conj(delta), theta, I) to (delta, conj(c), theta, I).
UpsilonResult upsilon(Complex c, Complex delta, const Vec& theta, const Vec& I);

/// Shifts the actions by q2 * Xf + Qe * Xe^T while rotating the focus-focus
/// and elliptic blocks against the angles. Xf is a k_x column, Xe is k_x x k_e.
ModelPoint zeta(const VecI& Xf, const MatI& Xe, const ModelPoint& p);

struct EpsilonSigns {
  int eps_f1 = 1;
  int eps_f2 = 1;
  std::vector<int> eps_e;

  /// Throws PreconditionError unless every entry is -1 or +1.
  void validate() const;
  bool operator==(const EpsilonSigns&) const = default;
};

/// 4x4 actions on (x1, xi1, x2, xi2).
Mat E1(int eps);
Mat E2(int eps);

/// Embeds a 4x4 action on the focus-focus block of w into the 2n x 2n phase layout.
Mat embed_focus_block(const Mat& block, const WilliamsonType& w);

/// Focus-focus block mapped by E1(eps_f1) E2(eps_f2); theta -> theta Xx^{-1}, I -> I Xx^T.
/// Throws DomainError unless det Xx = +-1.
ModelPoint eta(const EpsilonSigns& eps, const MatI& Xx, const ModelPoint& p);

/// Values in transition order (q1, q2, qe..., I...).
Vec transition_coordinates(const ModelPoint& p);

/// A point with the given transition coordinates: z1 = 1, z2 = q1 + i q2,
/// ze = sqrt(qe) (qe must be non-negative) and the given angles.
ModelPoint model_section(int k_e, const Vec& q, const Vec& theta);

/// Data of a model transition q -> (eps_f1 q1, eps_f2 q2, eps_e qe, Xx I + Xf q2 + Xe qe).
struct StarData {
  EpsilonSigns eps;
  VecI Xf;
  MatI Xe;
  MatI Xx;

  int k_e() const { return static_cast<int>(Xe.cols()); }
  int k_x() const { return static_cast<int>(Xx.rows()); }

  static StarData identity(int k_e, int k_x);
  /// Random signs and blocks with entries in [-bound, bound]; Xx unimodular.
  static StarData random(int k_e, int k_x, std::uint64_t seed, int bound = 3, bool elliptic_signs = false);

  Vec apply(const Vec& q) const;
  Mat jacobian() const;
  /// The symplectomorphism zeta(eps_f2 Xf, Xe) o eta(eps, Xx) realizing this
  /// transition. Requires all elliptic signs +1.
  ModelPoint realize(const ModelPoint& p) const;
};

/// Transition of a after b.
StarData compose(const StarData& a, const StarData& b);

/// Random integer unimodular matrix with entries bounded by `bound`.
MatI random_unimodular(int k, std::uint64_t seed, int bound = 3);
long long integer_det(const MatI& m);

/// Central-difference Jacobian of q -> transition_coordinates(psi(model_section(q))).
Mat transition_jacobian(int k_e, int k_x, const std::function<ModelPoint(const ModelPoint&)>& psi,
                        const Vec& q, const Vec& theta, double step = 1e-4);

struct TransitionBlocks {
  int k_e = 0;
  int k_x = 0;
  /// (n-1) x (n-1), rows and columns ordered (q2, qe..., I...).
  MatI A;
  Vec firstRow;

  int Ff() const { return A(0, 0); }
  MatI Fe() const { return A.block(0, 1, 1, k_e); }
  MatI Fx() const { return A.block(0, 1 + k_e, 1, k_x); }
  MatI Ef() const { return A.block(1, 0, k_e, 1); }
  MatI Ee() const { return A.block(1, 1, k_e, k_e); }
  MatI Ex() const { return A.block(1, 1 + k_e, k_e, k_x); }
  MatI Xf() const { return A.block(1 + k_e, 0, k_x, 1); }
  MatI Xe() const { return A.block(1 + k_e, 1, k_x, k_e); }
  MatI Xx() const { return A.block(1 + k_e, 1 + k_e, k_x, k_x); }
};

struct StructureCheck {
  std::string name;
  bool pass;
  double measured;
  double tolerance;
};

struct StructureReport {
  std::vector<StructureCheck> checks;
  std::optional<TransitionBlocks> blocks;
  std::optional<EpsilonSigns> eps;

  bool pass() const;
  const StructureCheck* find(const std::string& name) const;
};

/// Checks the first-column, integrality and unimodularity structure of the
/// Jacobian of a transition (columns in transition order). Requires k_f = 1, k_h = 0.
StructureReport verify_spade(const Mat& J, const WilliamsonType& w, double tol = 1e-6);

/// verify_spade plus the sign/zero-block structure; with critical_set the
/// first row must be (+-1, 0, ..., 0).
StructureReport verify_star(const Mat& J, const WilliamsonType& w, bool critical_set, double tol = 1e-6);

}  // namespace semitoric
