#pragma once

// Critical points of a moment map: rank, refinement, symplectic reduction of
// Hessians, Williamson classification and strata.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "semitoric/systems.hpp"
#include "semitoric/williamson.hpp"

namespace semitoric {

/// Singular values above tol * largest, with an absolute floor.
int numerical_rank(const Mat& J, double tol, double abs_floor = 1e-9);

struct GridSpec {
  /// Per phase axis step.
  std::vector<double> steps;

  static GridSpec uniform(int dim, double step) { return GridSpec{std::vector<double>(static_cast<std::size_t>(dim), step)}; }
};

struct CriticalOptions {
  /// Relative threshold of numerical_rank.
  double rank_tol = 1e-8;
  /// Accepted size of the vanishing singular values after refinement.
  double refine_tol = 1e-10;
  int max_iterations = 40;
  double dedup_radius = 1e-4;
  std::uint64_t seed = 0;
  int workers = 1;
  ClassifyOptions classify;
};

struct CriticalPoint {
  ChartId chart;
  Vec coords;
  /// Chart-independent embedding coordinates.
  Vec embedded;
  int rank = 0;
  WilliamsonType wtype = WilliamsonType::regular(0);
  Vec value;
  bool nondegenerate = false;
  /// Norm of the singular values of dF that vanish at this rank.
  double residual = 0.0;
  std::string diagnostics;
};

struct RefinedPoint {
  Vec coords;
  double residual;
  int iterations;
};

/// Gauss-Newton on C^T dF(p) = 0, with C spanning an (n-r)-dimensional left
/// null space of dF. Returns nothing if the iteration leaves the chart or does
/// not reach a point of rank exactly r.
std::optional<RefinedPoint> refine_critical(const MomentMapSystem& sys, const ChartId& chart, const Vec& start, int r,
                                            const CriticalOptions& options = {});

/// refine_critical with the extra equation <w, F(p)> = s.
std::optional<RefinedPoint> refine_critical_on_level(const MomentMapSystem& sys, const ChartId& chart,
                                                     const Vec& start, int r, const Vec& w, double s,
                                                     const CriticalOptions& options = {});

/// Reduced Hessians at a critical point of rank r, in a symplectic basis of
/// the quotient of ker dF by the orbit directions.
CartanCandidate reduce_hessians(const MomentMapSystem& sys, const ChartId& chart, const Vec& p, int r,
                                double rank_tol = 1e-8);

CriticalPoint classify_point(const MomentMapSystem& sys, const ChartId& chart, const Vec& p,
                             const CriticalOptions& options = {}, std::uint64_t seed = 0);

struct ScanDiagnostics {
  long nodes = 0;
  long candidates = 0;
  long refined = 0;
  long skipped = 0;
  std::vector<std::string> notes;
};

/// Grid scan of every chart of the region, refinement and classification.
/// Output order is deterministic and independent of the worker count.
std::vector<CriticalPoint> find_critical(const MomentMapSystem& sys, const Region& region, const GridSpec& grid,
                                         const CriticalOptions& options = {}, ScanDiagnostics* diagnostics = nullptr);

struct StratumMap {
  Region region;
  int n = 0;
  std::map<WilliamsonType, std::vector<CriticalPoint>> strata;
  /// Points whose classification was degenerate, kept with their best-effort type.
  std::vector<CriticalPoint> degenerate;
  /// Grid nodes found regular when the scan sampled them.
  long regular_nodes = 0;

  void insert(const CriticalPoint& p);
  std::size_t count(const WilliamsonType& w) const;
  std::size_t total() const;
};

StratumMap make_strata(const std::vector<CriticalPoint>& points, const Region& region, int n);

/// find_critical, plus (if include_regular) every regular grid node as a
/// point of type (0,0,0,n).
StratumMap stratum_scan(const MomentMapSystem& sys, const Region& region, const GridSpec& grid,
                        const CriticalOptions& options = {}, bool include_regular = false,
                        ScanDiagnostics* diagnostics = nullptr);

struct Adjacency {
  WilliamsonType lower;
  WilliamsonType upper;
  double distance;
  bool consistent;
};

struct AdjacencyReport {
  std::vector<Adjacency> pairs;
  int violations = 0;
  bool ok() const { return violations == 0; }
};

/// For every pair of strata closer than tol, the stratum of smaller k_x must
/// precede the other in the order; equal k_x counts as a violation.
AdjacencyReport closure_check(const StratumMap& strata, double tol);

std::string csv_header(int n);
std::string csv_row(const CriticalPoint& p);

}  // namespace semitoric
