#pragma once

// Focus-focus nodal loci: value clouds, the rational affine plane that holds
// them, integer directions, the graph h over the transverse parameters,
// isolation, and continuation of one-parameter nodal curves.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semitoric/critical.hpp"

namespace semitoric {

struct CriticalValueCloud {
  WilliamsonType wtype = WilliamsonType::regular(0);
  std::vector<Vec> values;
  /// witnesses[i] produced values[i].
  std::vector<CriticalPoint> witnesses;
};

/// Images of the points of type w, merged within `merge`.
CriticalValueCloud collect_values(const StratumMap& strata, const WilliamsonType& w, double merge = 1e-8);

struct AffineFit {
  Vec P;
  /// n x (k_x + 1), orthonormal columns, principal directions first.
  Mat basis;
  double planeResidual = 0.0;
  /// Dimension actually spanned by the cloud.
  int spanned = 0;
  bool degenerate = false;
};

/// Centroid plus principal directions. A cloud spanning fewer than k_x + 1
/// dimensions is reported as degenerate and its basis is completed with e1.
AffineFit fit_affine(const std::vector<Vec>& cloud, int k_x, double tol = 1e-9);

/// Best rational approximation p/q with q <= qmax.
std::pair<long, long> best_rational(double x, long qmax);

/// Integer direction of a single vector, first coordinate dropped.
VecI rationalize_direction(const Vec& d, int qmax = 64, double tol = 1e-6);

/// Integer directions of the fitted plane modulo e1. Throws NoIntegerDirection.
std::vector<VecI> rationalize_directions(const Mat& basis, int k_x, int qmax = 64, double tol = 1e-6);

struct GraphSamples {
  std::vector<Vec> t;
  std::vector<double> h;
  double graphResidual = 0.0;
  /// Largest distance of a value from the plane P + R e1 + sum R v_j.
  double planeDistance = 0.0;
};

/// Decomposes each value as P + h e1 + sum t_j v_j. Throws NotAGraph when two
/// values with t closer than delta_t disagree in h beyond tol after removing the local slope.
GraphSamples extract_graph(const std::vector<Vec>& cloud, const Vec& P, const Vec& e1, const std::vector<VecI>& v,
                           double tol = 1e-6, double delta_t = 1e-3);

struct NodalSurface {
  WilliamsonType wtype = WilliamsonType::regular(0);
  Vec P;
  Vec e1;
  std::vector<VecI> v;
  std::vector<Vec> t;
  std::vector<double> h;
  double planeResidual = 0.0;
  double graphResidual = 0.0;
  bool degenerateFit = false;
  int spanned = 0;
  /// Phase-space witnesses used to seed isolation sampling.
  std::vector<CriticalPoint> witnesses;

  /// Value of the surface over t (local quadratic interpolation for k_x = 1).
  double h_at(const Vec& t) const;
  /// Distance of a value to the sampled surface.
  double distance(const Vec& value) const;
  /// Like distance, but the surface is continued past its samples by the end
  /// interpolants instead of charging the overshoot.
  double gap(const Vec& value) const;
};

struct NodalOptions {
  int qmax = 64;
  double direction_tol = 1e-6;
  double graph_tol = 1e-6;
  double fit_tol = 1e-9;
};

/// fit_affine, rationalize_directions and extract_graph on one cloud. In the
/// degenerate case missing directions come from the witnesses' transverse values.
NodalSurface build_surface(const CriticalValueCloud& cloud, const NodalOptions& options = {});

struct IsolationResult {
  bool isolated = true;
  std::size_t examined = 0;
  std::size_t in_tube = 0;
  std::vector<Vec> witnesses;
};

/// Every value of `others` that lies within `radius` of the surface must lie
/// within planeResidual + tol of it.
IsolationResult isolation_check(const NodalSurface& surface, const std::vector<Vec>& others, double radius,
                                double tol = 1e-5);

struct SamplingSpec {
  int samples_per_witness = 12;
  double phase_radius = 0.3;
  std::size_t max_witnesses = 64;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Samples around the surface's preimages, refines and classifies the samples
/// and runs the value test on those of the surface's type.
IsolationResult isolation_check(const MomentMapSystem& sys, const NodalSurface& surface, double radius,
                                const SamplingSpec& sampling, const CriticalOptions& options = {}, double tol = 1e-5);

struct TraceOptions {
  /// Bounds on the transverse parameter; unbounded when empty.
  std::optional<std::pair<double, double>> bounds;
  int max_halvings = 4;
  CriticalOptions critical;
};

struct TraceResult {
  /// Ordered by parameter.
  std::vector<CriticalPoint> points;
  std::vector<double> params;
  /// Unit direction w in value space with s = <w, F>.
  Vec direction;
  bool truncated = false;
  std::string diagnostics;
};

/// Predictor-corrector continuation of a k_x = 1 nodal curve in the
/// transverse value <w, F>. Throws PreconditionError unless the seed has k_f = 1, k_x = 1.
TraceResult trace_curve(const MomentMapSystem& sys, const CriticalPoint& seed, double step, int max_steps,
                        const TraceOptions& options = {});

/// Single-linkage components; returns a component label per value.
std::vector<int> link_components(const std::vector<Vec>& values, double radius);

}  // namespace semitoric
