#include "semitoric/critical.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "semitoric/parallel.hpp"
#include "semitoric/rng.hpp"

namespace semitoric {

namespace {

Vec singular_values(const Mat& j) {
  Eigen::JacobiSVD<Mat> svd(j);
  return svd.singularValues();
}

}  // namespace

int numerical_rank(const Mat& J, double tol, double abs_floor) {
  if (!(tol > 0.0)) throw PreconditionError("numerical_rank: tol must be positive");
  if (!J.allFinite()) throw NumericalError("numerical_rank: non-finite matrix");
  if (J.size() == 0) return 0;
  const Vec sv = singular_values(J);
  const double cut = std::max(tol * sv[0], abs_floor);
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > cut) ++r;
  }
  return r;
}

namespace {

// Bordered system for a rank-r hypothesis: C = P [I; K] with the permutation
// chosen from the starting null space, residual R = D_top + K^T D_bot where D
// holds the rows of dF in permuted order.
struct Bordered {
  int n = 0;
  int r = 0;
  std::vector<int> order;
  Mat K;

  Bordered(const Mat& jac, int rank) : n(static_cast<int>(jac.rows())), r(rank) {
    Eigen::JacobiSVD<Mat> svd(jac, Eigen::ComputeFullU);
    const Mat null = svd.matrixU().rightCols(n - r);
    Eigen::ColPivHouseholderQR<Mat> qr(null.transpose());
    const auto& perm = qr.colsPermutation().indices();
    order.assign(perm.data(), perm.data() + n);
    Mat top(n - r, n - r), bot(r, n - r);
    for (int i = 0; i < n - r; ++i) top.row(i) = null.row(order[i]);
    for (int i = 0; i < r; ++i) bot.row(i) = null.row(order[n - r + i]);
    K = r == 0 ? Mat(0, n - r) : Mat(bot * top.inverse());
  }

  Vec residual(const Mat& jac) const {
    const auto dim = jac.cols();
    Vec out((n - r) * dim);
    for (int a = 0; a < n - r; ++a) {
      Vec row = jac.row(order[a]).transpose();
      for (int b = 0; b < r; ++b) row += K(b, a) * jac.row(order[n - r + b]).transpose();
      out.segment(a * dim, dim) = row;
    }
    return out;
  }

  Mat system(const Mat& jac, const std::vector<Mat>& hess) const {
    const auto dim = jac.cols();
    Mat s = Mat::Zero((n - r) * dim, dim + r * (n - r));
    for (int a = 0; a < n - r; ++a) {
      Mat h = hess[static_cast<std::size_t>(order[a])];
      for (int b = 0; b < r; ++b) h += K(b, a) * hess[static_cast<std::size_t>(order[n - r + b])];
      s.block(a * dim, 0, dim, dim) = h;
      for (int b = 0; b < r; ++b) {
        s.block(a * dim, dim + b * (n - r) + a, dim, 1) = jac.row(order[n - r + b]).transpose();
      }
    }
    return s;
  }

  void update(const Vec& dk) {
    for (int b = 0; b < r; ++b) {
      for (int a = 0; a < n - r; ++a) K(b, a) += dk[b * (n - r) + a];
    }
  }
};

Vec gn_step(const Bordered& bs, const ChartEval& ev, Vec* dk) {
  const Vec res = bs.residual(ev.jacobian);
  const Mat sys = bs.system(ev.jacobian, ev.hessians);
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(sys);
  const Vec delta = cod.solve(-res);
  const auto dim = ev.jacobian.cols();
  if (dk) *dk = delta.tail(delta.size() - dim);
  return delta.head(dim);
}

double tail_norm(const Vec& sv, int r) { return r >= sv.size() ? 0.0 : sv.tail(sv.size() - r).norm(); }

}  // namespace

namespace {

std::optional<RefinedPoint> refine_impl(const MomentMapSystem& sys, const ChartId& chart, const Vec& start, int r,
                                        const Vec* w, double target, const CriticalOptions& options) {
  const int n = sys.n();
  if (r < 0 || r >= n) throw PreconditionError("refine_critical: rank hypothesis out of range");
  if (w && w->size() != n) throw DimensionError("refine_critical: constraint direction must have length n");
  if (!sys.contains(chart, start)) return std::nullopt;
  Vec p = start;
  ChartEval ev = sys.evaluate(chart, p, true);
  Bordered bs(ev.jacobian, r);
  const auto dim = ev.jacobian.cols();
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    Vec res = bs.residual(ev.jacobian);
    Mat jac = bs.system(ev.jacobian, ev.hessians);
    if (w) {
      res.conservativeResize(res.size() + 1);
      res[res.size() - 1] = w->dot(ev.values) - target;
      jac.conservativeResize(jac.rows() + 1, Eigen::NoChange);
      jac.row(jac.rows() - 1).setZero();
      jac.block(jac.rows() - 1, 0, 1, dim) = (ev.jacobian.transpose() * *w).transpose();
    }
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(jac);
    const Vec delta = cod.solve(-res);
    if (!delta.allFinite()) return std::nullopt;
    Vec dp = delta.head(dim);
    Vec dk = delta.tail(delta.size() - dim);
    const double limit = 0.5 * (1.0 + p.norm());
    const double len = delta.norm();
    if (len > limit) {
      dp *= limit / len;
      dk *= limit / len;
    }
    p += dp;
    bs.update(dk);
    if (!sys.contains(chart, p)) return std::nullopt;
    ev = sys.evaluate(chart, p, true);
    if (len <= 1e-15 * (1.0 + p.norm())) break;
    if (len <= 1e-12 && res.norm() <= 1e-13) break;
  }
  const Vec sv = singular_values(ev.jacobian);
  const double res = tail_norm(sv, r);
  if (!(res <= options.refine_tol)) return std::nullopt;
  if (numerical_rank(ev.jacobian, options.rank_tol) != r) return std::nullopt;
  if (w && !(std::abs(w->dot(ev.values) - target) <= 1e-9)) return std::nullopt;
  return RefinedPoint{p, res, it};
}

}  // namespace

std::optional<RefinedPoint> refine_critical(const MomentMapSystem& sys, const ChartId& chart, const Vec& start, int r,
                                            const CriticalOptions& options) {
  return refine_impl(sys, chart, start, r, nullptr, 0.0, options);
}

std::optional<RefinedPoint> refine_critical_on_level(const MomentMapSystem& sys, const ChartId& chart,
                                                     const Vec& start, int r, const Vec& w, double s,
                                                     const CriticalOptions& options) {
  return refine_impl(sys, chart, start, r, &w, s, options);
}

CartanCandidate reduce_hessians(const MomentMapSystem& sys, const ChartId& chart, const Vec& p, int r, double rank_tol) {
  const int n = sys.n();
  if (r < 0 || r >= n) throw PreconditionError("reduce_hessians: rank must be in [0, n)");
  const ChartEval ev = chart_eval(sys, chart, p, true);
  if (numerical_rank(ev.jacobian, rank_tol) > r) throw PreconditionError("reduce_hessians: rank of dF exceeds r");
  const SymplecticForm form(n);
  const Mat& omega = form.matrix();
  Eigen::JacobiSVD<Mat> svd(ev.jacobian, Eigen::ComputeFullU);
  const Mat& u = svd.matrixU();
  const int m = n - r;

  Mat basis;
  if (r == 0) {
    basis = Mat::Identity(2 * n, 2 * n);
  } else {
    // Orbit directions X_i = -Omega grad(u_i . F) and their Omega-images.
    const Mat chi = -omega * ev.jacobian.transpose() * u.leftCols(r);
    Mat span(2 * n, 2 * r);
    span << chi, omega * chi;
    Eigen::JacobiSVD<Mat> ssvd(span, Eigen::ComputeFullU);
    Mat w = ssvd.matrixU().rightCols(2 * m);

    std::vector<Vec> pool;
    for (int i = 0; i < 2 * m; ++i) pool.push_back(w.col(i));
    std::vector<Vec> es, fs;
    while (!pool.empty()) {
      std::size_t bi = 0, bj = 1;
      double best = -1.0;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        for (std::size_t j = i + 1; j < pool.size(); ++j) {
          const double v = std::abs(pool[i].dot(omega * pool[j]));
          if (v > best) {
            best = v;
            bi = i;
            bj = j;
          }
        }
      }
      if (pool.size() < 2 || best <= 1e-12) throw NumericalError("reduce_hessians: complement is not symplectic");
      Vec e = pool[bi];
      Vec f = pool[bj] / pool[bj].dot(omega * pool[bi]);
      const double alpha = std::sqrt(f.norm() / e.norm());
      e *= alpha;
      f /= alpha;
      std::vector<Vec> rest;
      for (std::size_t k = 0; k < pool.size(); ++k) {
        if (k == bi || k == bj) continue;
        const Vec& v = pool[k];
        rest.push_back(v + v.dot(omega * f) * e - v.dot(omega * e) * f);
      }
      es.push_back(e);
      fs.push_back(f);
      pool = std::move(rest);
    }
    basis.resize(2 * n, 2 * m);
    for (int i = 0; i < m; ++i) {
      basis.col(i) = es[static_cast<std::size_t>(i)];
      basis.col(m + i) = fs[static_cast<std::size_t>(i)];
    }
    const Vec bsv = singular_values(basis);
    if (bsv[bsv.size() - 1] <= 0.0 || bsv[0] / bsv[bsv.size() - 1] > 1e8) {
      throw NumericalError("reduce_hessians: ill-conditioned symplectic basis");
    }
  }

  CartanCandidate c;
  c.ambient_n = n;
  for (int j = 0; j < m; ++j) {
    Mat h = Mat::Zero(2 * n, 2 * n);
    for (int a = 0; a < n; ++a) h += u(a, r + j) * ev.hessians[static_cast<std::size_t>(a)];
    c.hessians.emplace_back(0.5 * basis.transpose() * h * basis);
  }
  return c;
}

CriticalPoint classify_point(const MomentMapSystem& sys, const ChartId& chart, const Vec& p,
                             const CriticalOptions& options, std::uint64_t seed) {
  const ChartEval ev = chart_eval(sys, chart, p, false);
  const int n = sys.n();
  CriticalPoint out;
  out.chart = chart;
  out.coords = p;
  out.embedded = sys.embed(chart, p);
  out.value = ev.values;
  out.rank = numerical_rank(ev.jacobian, options.rank_tol);
  out.residual = tail_norm(singular_values(ev.jacobian), out.rank);
  if (out.rank == n) {
    out.wtype = WilliamsonType::regular(n);
    out.nondegenerate = true;
    out.diagnostics = "regular";
    return out;
  }
  CartanCandidate cand = reduce_hessians(sys, chart, p, out.rank, options.rank_tol);
  cand.tolerance = 1e-7;
  if (!is_commuting(cand)) {
    out.wtype = WilliamsonType(0, 0, 0, n, n);
    out.nondegenerate = false;
    out.diagnostics = "reduced Hessians do not commute";
    return out;
  }
  const ClassificationReport rep = classify_fixed(cand, seed, options.classify);
  out.wtype = rep.wtype;
  out.nondegenerate = rep.nondegenerate;
  out.diagnostics = rep.diagnostics;
  return out;
}

namespace {

struct AxisGrid {
  std::vector<std::vector<double>> nodes;
  std::vector<double> steps;
  long total = 0;

  AxisGrid(const Region& region, const GridSpec& grid) {
    if (grid.steps.size() != region.axes.size()) throw ConfigError("grid and region have different axis counts");
    total = region.empty() ? 0 : 1;
    for (std::size_t i = 0; i < region.axes.size(); ++i) {
      const double step = grid.steps[i];
      if (!(step > 0.0)) throw ConfigError("grid steps must be positive");
      std::vector<double> axis;
      if (!region.empty()) {
        const auto [lo, hi] = region.axes[i];
        const long count = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
        for (long k = 0; k < count; ++k) axis.push_back(lo + static_cast<double>(k) * step);
        total *= count;
      }
      nodes.push_back(std::move(axis));
      steps.push_back(step);
    }
  }

  Vec node(long index) const {
    Vec p(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t i = nodes.size(); i-- > 0;) {
      const long count = static_cast<long>(nodes[i].size());
      p[static_cast<Eigen::Index>(i)] = nodes[i][static_cast<std::size_t>(index % count)];
      index /= count;
    }
    return p;
  }
};

double lipschitz_estimate(const MomentMapSystem& sys, const ChartId& chart, const AxisGrid& g) {
  double worst = 0.0;
  const long samples = std::min<long>(g.total, 257);
  for (long s = 0; s < samples; ++s) {
    const long idx = samples <= 1 ? 0 : s * (g.total - 1) / (samples - 1);
    const Vec p = g.node(idx);
    if (!sys.contains(chart, p)) continue;
    const ChartEval ev = sys.evaluate(chart, p, true);
    double sum = 0.0;
    for (const Mat& h : ev.hessians) sum += h.squaredNorm();
    worst = std::max(worst, std::sqrt(sum));
  }
  return 2.0 * worst + 1e-12;
}

struct BlockResult {
  std::vector<CriticalPoint> points;
  std::vector<CriticalPoint> regular;
  long nodes = 0;
  long candidates = 0;
  long refined = 0;
  long skipped = 0;
};

constexpr long kBlock = 2048;

struct ScanOutput {
  std::vector<CriticalPoint> points;
  std::vector<CriticalPoint> regular;
};

std::vector<CriticalPoint> dedup(std::vector<CriticalPoint> pts, double radius) {
  std::unordered_map<std::string, std::vector<std::size_t>> buckets;
  auto key_of = [&](const Vec& y, const std::vector<long>& shift) {
    std::string key;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      key += std::to_string(static_cast<long>(std::floor(y[i] / radius)) + shift[static_cast<std::size_t>(i)]);
      key += ',';
    }
    return key;
  };
  std::vector<CriticalPoint> kept;
  for (auto& p : pts) {
    const auto d = static_cast<std::size_t>(p.embedded.size());
    bool dup = false;
    std::vector<long> shift(d, -1);
    for (;;) {
      const auto it = buckets.find(key_of(p.embedded, shift));
      if (it != buckets.end()) {
        for (std::size_t k : it->second) {
          if ((kept[k].embedded - p.embedded).norm() <= radius) dup = true;
        }
      }
      if (dup) break;
      std::size_t i = 0;
      while (i < d && shift[i] == 1) shift[i++] = -1;
      if (i == d) break;
      ++shift[i];
    }
    if (dup) continue;
    buckets[key_of(p.embedded, std::vector<long>(d, 0))].push_back(kept.size());
    kept.push_back(std::move(p));
  }
  return kept;
}

ScanOutput scan(const MomentMapSystem& sys, const Region& region, const GridSpec& grid, const CriticalOptions& options,
                bool include_regular, ScanDiagnostics* diag) {
  ScanOutput out;
  const int n = sys.n();
  if (region.axes.size() != static_cast<std::size_t>(2 * n)) throw ConfigError("region must have 2n axes");
  const AxisGrid g(region, grid);
  if (g.total == 0) return out;
  double half_diag = 0.0;
  for (double s : g.steps) half_diag += 0.25 * s * s;
  half_diag = std::sqrt(half_diag);

  const std::vector<ChartId> charts = region.charts.empty() ? sys.chart_ids() : region.charts;
  const CounterRng root(options.seed);
  std::vector<CriticalPoint> all;
  for (std::size_t ci = 0; ci < charts.size(); ++ci) {
    const ChartId& chart = charts[ci];
    const double lip = lipschitz_estimate(sys, chart, g);
    const long blocks = (g.total + kBlock - 1) / kBlock;
    std::vector<BlockResult> results(static_cast<std::size_t>(blocks));
    parallel_for(static_cast<std::size_t>(blocks), options.workers, [&](std::size_t b) {
      BlockResult& br = results[b];
      const long first = static_cast<long>(b) * kBlock;
      const long last = std::min(g.total, first + kBlock);
      for (long idx = first; idx < last; ++idx) {
        const Vec p0 = g.node(idx);
        if (!sys.contains(chart, p0)) continue;
        ++br.nodes;
        const auto cell = static_cast<std::uint64_t>(ci) * static_cast<std::uint64_t>(g.total) +
                          static_cast<std::uint64_t>(idx);
        const ChartEval ev = sys.evaluate(chart, p0, false);
        const Vec sv = singular_values(ev.jacobian);
        bool found = false;
        for (int r = 0; r < n && !found; ++r) {
          if (sv[r] > lip * half_diag) continue;
          ++br.candidates;
          const ChartEval full = sys.evaluate(chart, p0, true);
          const Bordered bs(full.jacobian, r);
          const Vec dp = gn_step(bs, full, nullptr);
          bool inside = dp.allFinite();
          for (Eigen::Index k = 0; k < dp.size() && inside; ++k) {
            inside = std::abs(dp[k]) <= 0.55 * g.steps[static_cast<std::size_t>(k)];
          }
          if (!inside) continue;
          const auto ref = refine_critical(sys, chart, p0, r, options);
          if (!ref) {
            ++br.skipped;
            continue;
          }
          ++br.refined;
          if (!region.contains(ref->coords)) continue;
          CounterRng rng = root.split(cell);
          CriticalPoint cp = classify_point(sys, chart, ref->coords, options, rng.next_u64());
          if (cp.rank != r) {
            ++br.skipped;
            continue;
          }
          br.points.push_back(std::move(cp));
          found = true;
        }
        if (include_regular && !found && numerical_rank(ev.jacobian, options.rank_tol) == n) {
          CriticalPoint cp;
          cp.chart = chart;
          cp.coords = p0;
          cp.embedded = sys.embed(chart, p0);
          cp.rank = n;
          cp.wtype = WilliamsonType::regular(n);
          cp.value = ev.values;
          cp.nondegenerate = true;
          br.regular.push_back(std::move(cp));
        }
      }
    });
    for (auto& br : results) {
      if (diag) {
        diag->nodes += br.nodes;
        diag->candidates += br.candidates;
        diag->refined += br.refined;
        diag->skipped += br.skipped;
      }
      for (auto& p : br.points) all.push_back(std::move(p));
      for (auto& p : br.regular) out.regular.push_back(std::move(p));
    }
  }
  out.points = dedup(std::move(all), options.dedup_radius);
  return out;
}

}  // namespace

std::vector<CriticalPoint> find_critical(const MomentMapSystem& sys, const Region& region, const GridSpec& grid,
                                         const CriticalOptions& options, ScanDiagnostics* diagnostics) {
  return scan(sys, region, grid, options, false, diagnostics).points;
}

void StratumMap::insert(const CriticalPoint& p) {
  if (p.nondegenerate) {
    strata[p.wtype].push_back(p);
  } else {
    degenerate.push_back(p);
  }
}

std::size_t StratumMap::count(const WilliamsonType& w) const {
  const auto it = strata.find(w);
  return it == strata.end() ? 0 : it->second.size();
}

std::size_t StratumMap::total() const {
  std::size_t t = degenerate.size();
  for (const auto& [w, pts] : strata) t += pts.size();
  return t;
}

StratumMap make_strata(const std::vector<CriticalPoint>& points, const Region& region, int n) {
  StratumMap m;
  m.region = region;
  m.n = n;
  for (const auto& p : points) m.insert(p);
  return m;
}

StratumMap stratum_scan(const MomentMapSystem& sys, const Region& region, const GridSpec& grid,
                        const CriticalOptions& options, bool include_regular, ScanDiagnostics* diagnostics) {
  ScanOutput out = scan(sys, region, grid, options, include_regular, diagnostics);
  StratumMap m = make_strata(out.points, region, sys.n());
  m.regular_nodes = static_cast<long>(out.regular.size());
  for (auto& p : out.regular) m.insert(p);
  return m;
}

namespace {

double min_distance(const Vec& p, const std::vector<const CriticalPoint*>& set) {
  double best = 1e300;
  for (const CriticalPoint* q : set) {
    best = std::min(best, (p - q->embedded).norm());
    if (best == 0.0) break;
  }
  return best;
}

// Smallest witness distance from a point of `boundary` to `open`. A point only
// witnesses adjacency when it is clearly closer to `open` than to the strata of
// smaller k_x: two strata that merely meet at a deeper stratum are not adjacent.
double witness_distance(const std::vector<CriticalPoint>& boundary, const std::vector<const CriticalPoint*>& open,
                        const std::vector<const CriticalPoint*>& deeper, double tol) {
  double best = 1e300;
  for (const auto& p : boundary) {
    const double d = min_distance(p.embedded, open);
    if (d > tol || d >= best) continue;
    if (d <= 0.5 * min_distance(p.embedded, deeper)) best = d;
  }
  return best;
}

std::vector<const CriticalPoint*> pointers(const std::vector<CriticalPoint>& pts) {
  std::vector<const CriticalPoint*> out;
  for (const auto& p : pts) out.push_back(&p);
  return out;
}

}  // namespace

AdjacencyReport closure_check(const StratumMap& strata, double tol) {
  AdjacencyReport rep;
  auto deeper_than = [&](int k_x) {
    std::vector<const CriticalPoint*> out;
    for (const auto& [w, pts] : strata.strata) {
      if (w.k_x() < k_x) {
        for (const auto& p : pts) out.push_back(&p);
      }
    }
    return out;
  };
  for (auto a = strata.strata.begin(); a != strata.strata.end(); ++a) {
    for (auto b = std::next(a); b != strata.strata.end(); ++b) {
      const bool a_lower = a->first.k_x() <= b->first.k_x();
      const auto& lo = a_lower ? *a : *b;
      const auto& hi = a_lower ? *b : *a;
      const auto deeper = deeper_than(lo.first.k_x());
      double d = witness_distance(lo.second, pointers(hi.second), deeper, tol);
      if (lo.first.k_x() == hi.first.k_x()) {
        d = std::min(d, witness_distance(hi.second, pointers(lo.second), deeper, tol));
      }
      if (d > tol) continue;
      const bool ok = lo.first.k_x() != hi.first.k_x() && type_leq(lo.first, hi.first);
      rep.pairs.push_back({lo.first, hi.first, d, ok});
      if (!ok) ++rep.violations;
    }
  }
  return rep;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string csv_header(int n) {
  std::string h = "chart";
  for (int i = 0; i < n; ++i) h += ",x" + std::to_string(i + 1);
  for (int i = 0; i < n; ++i) h += ",xi" + std::to_string(i + 1);
  h += ",rank,k_e,k_f,k_h,k_x,nondegenerate";
  for (int i = 0; i < n; ++i) h += ",f" + std::to_string(i + 1);
  h += ",residual";
  return h;
}

std::string csv_row(const CriticalPoint& p) {
  std::string row = p.chart;
  for (Eigen::Index i = 0; i < p.coords.size(); ++i) row += "," + num(p.coords[i]);
  row += "," + std::to_string(p.rank) + "," + std::to_string(p.wtype.k_e()) + "," + std::to_string(p.wtype.k_f()) +
         "," + std::to_string(p.wtype.k_h()) + "," + std::to_string(p.wtype.k_x()) + "," +
         (p.nondegenerate ? "true" : "false");
  for (Eigen::Index i = 0; i < p.value.size(); ++i) row += "," + num(p.value[i]);
  row += "," + num(p.residual);
  return row;
}

}  // namespace semitoric
