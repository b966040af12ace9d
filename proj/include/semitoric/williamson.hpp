#pragma once

// Williamson types, the order on them, and classification of a commuting
// family of quadratic Hamiltonians at a fixed point.

#include <compare>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "semitoric/symplectic.hpp"

namespace semitoric {

/// (k_e, k_f, k_h, k_x) with k_e + 2 k_f + k_h + k_x = n.
class WilliamsonType {
 public:
  /// Throws PreconditionError on negative entries or when the counts do not add up to n.
  WilliamsonType(int k_e, int k_f, int k_h, int k_x, int n);
  /// n is implied by the counts.
  static WilliamsonType of(int k_e, int k_f, int k_h, int k_x);
  static WilliamsonType regular(int n) { return WilliamsonType(0, 0, 0, n, n); }
  /// Parses "a,b,c,d"; the ambient n is implied.
  static WilliamsonType parse(const std::string& text);

  int k_e() const { return k_e_; }
  int k_f() const { return k_f_; }
  int k_h() const { return k_h_; }
  int k_x() const { return k_x_; }
  int n() const { return n_; }
  /// Dimension of the fixed-point model left after quotienting the transverse part.
  int m() const { return n_ - k_x_; }

  /// "(k_e,k_f,k_h,k_x)".
  std::string to_string() const;

  auto operator<=>(const WilliamsonType&) const = default;

 private:
  int k_e_, k_f_, k_h_, k_x_, n_;
};

/// a ⪯ b iff a has at least as many elliptic, focus-focus and hyperbolic
/// components as b.
bool type_leq(const WilliamsonType& a, const WilliamsonType& b);

/// Componentwise sum (type of a product point).
WilliamsonType type_of_product(const WilliamsonType& a, const WilliamsonType& b);

/// Holds types of one ambient n and exposes ⪯ on them.
class TypePoset {
 public:
  explicit TypePoset(int n) : n_(n) {}

  /// Throws DimensionError on a mismatched n.
  void insert(const WilliamsonType& w);
  const std::set<WilliamsonType>& members() const { return members_; }
  bool leq(const WilliamsonType& a, const WilliamsonType& b) const { return type_leq(a, b); }

  /// Number of violated instances of reflexivity, antisymmetry and
  /// transitivity over all members.
  long axiom_violations() const;

 private:
  int n_;
  std::set<WilliamsonType> members_;
};

struct CartanCandidate {
  /// Quadratic Hamiltonians on R^{2m}.
  std::vector<QuadraticHamiltonian> hessians;
  /// Relative tolerance for the commutation test.
  double tolerance = 1e-8;
  /// Ambient n of the system; k_x of the result is ambient_n - m. Defaults to m.
  int ambient_n = -1;

  int m() const;
  int ambient() const { return ambient_n < 0 ? m() : ambient_n; }
};

struct ClassifyOptions {
  /// Relative tolerance for eigenvalue species and separation.
  double tol = 1e-7;
  /// Eigenvalues below zero_tol * scale count as zero.
  double zero_tol = 1e-6;
  int draws = 5;
};

struct ClassificationReport {
  WilliamsonType wtype = WilliamsonType::regular(0);
  bool nondegenerate = false;
  std::vector<Complex> eigenvalues;
  Vec coefficients;
  std::string diagnostics;
};

/// True iff every pair satisfies S Omega T = T Omega S within tolerance.
bool is_commuting(const CartanCandidate& c);

/// max over pairs of |S Omega T - T Omega S| relative to |S||T|.
double commutator_residual(const CartanCandidate& c);

/// Classifies a commuting family at a fixed point. A degenerate family is a
/// verdict (nondegenerate = false, best-effort type), not an error.
ClassificationReport classify_fixed(const CartanCandidate& c, std::uint64_t seed,
                                    const ClassifyOptions& options = {});

}  // namespace semitoric
