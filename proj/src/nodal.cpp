#include "semitoric/nodal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semitoric/parallel.hpp"
#include "semitoric/rng.hpp"

namespace semitoric {

CriticalValueCloud collect_values(const StratumMap& strata, const WilliamsonType& w, double merge) {
  if (w.k_f() != 1) throw PreconditionError("collect_values: type must have k_f = 1");
  CriticalValueCloud cloud;
  cloud.wtype = w;
  const auto it = strata.strata.find(w);
  if (it == strata.strata.end()) return cloud;
  for (const auto& p : it->second) {
    const bool dup = std::any_of(cloud.values.begin(), cloud.values.end(),
                                 [&](const Vec& v) { return (v - p.value).norm() <= merge; });
    if (dup) continue;
    cloud.values.push_back(p.value);
    cloud.witnesses.push_back(p);
  }
  return cloud;
}

AffineFit fit_affine(const std::vector<Vec>& cloud, int k_x, double tol) {
  if (cloud.empty()) throw PreconditionError("fit_affine: empty cloud");
  if (k_x < 0) throw PreconditionError("fit_affine: k_x must be non-negative");
  const auto n = cloud.front().size();
  if (k_x + 1 > n) throw DimensionError("fit_affine: plane dimension exceeds the value space");
  AffineFit fit;
  fit.P = Vec::Zero(n);
  for (const Vec& v : cloud) {
    if (v.size() != n) throw DimensionError("fit_affine: values of different lengths");
    fit.P += v;
  }
  fit.P /= static_cast<double>(cloud.size());
  Mat x(static_cast<Eigen::Index>(cloud.size()), n);
  for (std::size_t i = 0; i < cloud.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = (cloud[i] - fit.P).transpose();
  Eigen::JacobiSVD<Mat> svd(x, Eigen::ComputeFullV);
  const Vec& sv = svd.singularValues();
  const double cut = tol * std::max(1.0, sv.size() > 0 ? sv[0] : 0.0);
  fit.spanned = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > cut) ++fit.spanned;
  }
  const int want = k_x + 1;
  fit.degenerate = fit.spanned < want;
  std::vector<Vec> cols;
  for (int i = 0; i < std::min(fit.spanned, want); ++i) cols.push_back(svd.matrixV().col(i));
  // Complete a degenerate basis with e1, then with coordinate axes.
  for (Eigen::Index axis = 0; static_cast<int>(cols.size()) < want && axis < n; ++axis) {
    Vec e = Vec::Unit(n, axis);
    for (const Vec& c : cols) e -= c.dot(e) * c;
    if (e.norm() > 1e-6) cols.push_back(e / e.norm());
  }
  fit.basis.resize(n, want);
  for (int i = 0; i < want; ++i) fit.basis.col(i) = cols[static_cast<std::size_t>(i)];
  for (const Vec& v : cloud) {
    const Vec d = v - fit.P;
    fit.planeResidual = std::max(fit.planeResidual, (d - fit.basis * (fit.basis.transpose() * d)).norm());
  }
  return fit;
}

std::pair<long, long> best_rational(double x, long qmax) {
  if (!std::isfinite(x)) throw NumericalError("best_rational: non-finite input");
  long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double r = x;
  for (int i = 0; i < 64; ++i) {
    const double a = std::floor(r);
    if (std::abs(a) > 1e15) break;
    const auto ai = static_cast<long>(a);
    const long p2 = ai * p1 + p0;
    const long q2 = ai * q1 + q0;
    if (q2 > qmax) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const double frac = r - a;
    if (std::abs(static_cast<double>(p1) / static_cast<double>(q1) - x) <= 1e-14 * (1.0 + std::abs(x)) || frac == 0.0) break;
    r = 1.0 / frac;
  }
  if (q1 == 0) return {static_cast<long>(std::llround(x)), 1};
  return {p1, q1};
}

namespace {

long gcd_l(long a, long b) { return std::gcd(std::labs(a), std::labs(b)); }

// Reduced row echelon form with partial pivoting on columns.
Mat rref(Mat m) {
  Eigen::Index row = 0;
  for (Eigen::Index col = 0; col < m.cols() && row < m.rows(); ++col) {
    Eigen::Index piv = row;
    for (Eigen::Index r = row; r < m.rows(); ++r) {
      if (std::abs(m(r, col)) > std::abs(m(piv, col))) piv = r;
    }
    if (std::abs(m(piv, col)) < 1e-9) continue;
    m.row(piv).swap(m.row(row));
    m.row(row) /= m(row, col);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (r != row) m.row(r) -= m(r, col) * m.row(row);
    }
    ++row;
  }
  return m;
}

VecI integer_row(const Vec& row, int qmax, double tol) {
  std::vector<std::pair<long, long>> fr;
  long lcm = 1;
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    fr.push_back(best_rational(row[i], qmax));
    const long q = fr.back().second;
    lcm = lcm / gcd_l(lcm, q) * q;
    if (lcm > 1'000'000'000L) throw NoIntegerDirection("rationalize: denominators grow without bound");
  }
  VecI out(row.size() + 1);
  out[0] = 0;
  long g = 0;
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    const long v = fr[static_cast<std::size_t>(i)].first * (lcm / fr[static_cast<std::size_t>(i)].second);
    out[i + 1] = static_cast<int>(v);
    g = gcd_l(g, v);
  }
  if (g == 0) throw NoIntegerDirection("rationalize: zero direction");
  out /= static_cast<int>(g);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (out[i] != 0) {
      if (out[i] < 0) out = -out;
      break;
    }
  }
  const Vec a = out.tail(out.size() - 1).cast<double>().normalized();
  const Vec b = row.normalized();
  const double sine = (a - a.dot(b) * b).norm();
  if (!(sine <= tol)) {
    throw NoIntegerDirection("rationalize: no integer vector with denominators <= " + std::to_string(qmax) +
                             " within angle " + std::to_string(tol) + " (best misses by " + std::to_string(sine) + ")");
  }
  return out;
}

}  // namespace

std::vector<VecI> rationalize_directions(const Mat& basis, int k_x, int qmax, double tol) {
  if (basis.rows() < 2) throw DimensionError("rationalize_directions: value space too small");
  if (k_x < 1) return {};
  const Mat dropped = basis.bottomRows(basis.rows() - 1);
  Eigen::JacobiSVD<Mat> svd(dropped, Eigen::ComputeFullU);
  if (svd.singularValues().size() < k_x || svd.singularValues()[k_x - 1] < 1e-9) {
    throw NoIntegerDirection("rationalize_directions: plane has fewer than k_x directions besides e1");
  }
  const Mat dirs = svd.matrixU().leftCols(k_x).transpose();
  const Mat reduced = rref(dirs);
  std::vector<VecI> out;
  for (Eigen::Index i = 0; i < reduced.rows(); ++i) out.push_back(integer_row(reduced.row(i).transpose(), qmax, tol));
  return out;
}

VecI rationalize_direction(const Vec& d, int qmax, double tol) {
  Mat b(d.size(), 1);
  b.col(0) = d;
  return rationalize_directions(b, 1, qmax, tol).front();
}

namespace {

Mat plane_matrix(const Vec& e1, const std::vector<VecI>& v) {
  Mat m(e1.size(), static_cast<Eigen::Index>(v.size() + 1));
  m.col(0) = e1;
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (v[j].size() != e1.size()) throw DimensionError("plane directions must have length n");
    m.col(static_cast<Eigen::Index>(j + 1)) = v[j].cast<double>();
  }
  return m;
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  const auto mid = xs.begin() + static_cast<long>(xs.size() / 2);
  std::nth_element(xs.begin(), mid, xs.end());
  return *mid;
}

}  // namespace

GraphSamples extract_graph(const std::vector<Vec>& cloud, const Vec& P, const Vec& e1, const std::vector<VecI>& v,
                           double tol, double delta_t) {
  const Mat m = plane_matrix(e1, v);
  const Eigen::ColPivHouseholderQR<Mat> qr(m);
  GraphSamples g;
  for (const Vec& x : cloud) {
    const Vec c = qr.solve(Vec(x - P));
    g.planeDistance = std::max(g.planeDistance, (x - P - m * c).norm());
    g.h.push_back(c[0]);
    g.t.push_back(c.tail(c.size() - 1));
  }
  std::vector<double> slopes;
  for (std::size_t i = 0; i < g.t.size(); ++i) {
    for (std::size_t j = i + 1; j < g.t.size(); ++j) {
      const double dt = (g.t[i] - g.t[j]).norm();
      if (dt > delta_t && dt <= 20.0 * delta_t) slopes.push_back(std::abs(g.h[i] - g.h[j]) / dt);
    }
  }
  const double lip = median(slopes);
  for (std::size_t i = 0; i < g.t.size(); ++i) {
    for (std::size_t j = i + 1; j < g.t.size(); ++j) {
      const double dt = (g.t[i] - g.t[j]).norm();
      if (dt > delta_t) continue;
      g.graphResidual = std::max(g.graphResidual, std::abs(g.h[i] - g.h[j]) - lip * dt);
    }
  }
  if (g.graphResidual > tol) {
    throw NotAGraph("extract_graph: values at nearly equal t differ by " + std::to_string(g.graphResidual));
  }
  return g;
}

double NodalSurface::h_at(const Vec& tq) const {
  if (t.empty()) throw PreconditionError("NodalSurface: no samples");
  std::vector<std::size_t> idx(t.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double da = (t[a] - tq).norm(), db = (t[b] - tq).norm();
    return da != db ? da < db : a < b;
  });
  if (tq.size() != 1 || t.size() < 3) return h[idx[0]];
  // Quadratic through the three nearest samples.
  double out = 0.0;
  for (int i = 0; i < 3; ++i) {
    double li = 1.0;
    const double ti = t[idx[static_cast<std::size_t>(i)]][0];
    for (int j = 0; j < 3; ++j) {
      if (j == i) continue;
      const double tj = t[idx[static_cast<std::size_t>(j)]][0];
      if (ti == tj) return h[idx[0]];
      li *= (tq[0] - tj) / (ti - tj);
    }
    out += li * h[idx[static_cast<std::size_t>(i)]];
  }
  return out;
}

namespace {

struct SurfaceOffset {
  double gap = 0.0;
  double overshoot = 0.0;
};

SurfaceOffset offset(const NodalSurface& s, const Vec& value) {
  const Mat m = plane_matrix(s.e1, s.v);
  const Vec c = m.colPivHouseholderQr().solve(Vec(value - s.P));
  const double off_plane = (value - s.P - m * c).norm();
  const Vec tq = c.tail(c.size() - 1);
  // Parameters outside the sampled domain count their overshoot as distance.
  double overshoot = 0.0;
  for (Eigen::Index j = 0; j < tq.size(); ++j) {
    double lo = 1e300, hi = -1e300;
    for (const Vec& ts : s.t) {
      lo = std::min(lo, ts[j]);
      hi = std::max(hi, ts[j]);
    }
    const double len = s.v[static_cast<std::size_t>(j)].cast<double>().norm();
    if (tq[j] < lo) overshoot += (lo - tq[j]) * len;
    if (tq[j] > hi) overshoot += (tq[j] - hi) * len;
  }
  const double dh = c[0] - s.h_at(tq);
  return {std::sqrt(off_plane * off_plane + dh * dh), overshoot};
}

}  // namespace

double NodalSurface::distance(const Vec& value) const {
  const SurfaceOffset o = offset(*this, value);
  return o.gap + o.overshoot;
}

double NodalSurface::gap(const Vec& value) const { return offset(*this, value).gap; }

NodalSurface build_surface(const CriticalValueCloud& cloud, const NodalOptions& options) {
  const WilliamsonType& w = cloud.wtype;
  if (w.k_f() != 1 || w.k_x() < 1) throw PreconditionError("build_surface: type must have k_f = 1 and k_x >= 1");
  if (cloud.values.empty()) throw PreconditionError("build_surface: empty cloud");
  const int k = w.k_x();
  const AffineFit fit = fit_affine(cloud.values, k, options.fit_tol);
  NodalSurface s;
  s.wtype = w;
  s.e1 = Vec::Unit(w.n(), 0);
  s.v = rationalize_directions(fit.basis, k, options.qmax, options.direction_tol);
  s.planeResidual = fit.planeResidual;
  s.degenerateFit = fit.degenerate;
  s.spanned = fit.spanned;
  // Base point: the point of the plane closest to the origin, so that h and t
  // read off the value coordinates directly.
  const Mat m = plane_matrix(s.e1, s.v);
  const Mat q = m.householderQr().householderQ() * Mat::Identity(m.rows(), m.cols());
  s.P = fit.P - q * (q.transpose() * fit.P);
  const GraphSamples g = extract_graph(cloud.values, s.P, s.e1, s.v, options.graph_tol);
  s.t = g.t;
  s.h = g.h;
  s.graphResidual = g.graphResidual;
  s.planeResidual = std::max(s.planeResidual, g.planeDistance);
  s.witnesses = cloud.witnesses;
  return s;
}

IsolationResult isolation_check(const NodalSurface& surface, const std::vector<Vec>& others, double radius,
                                double tol) {
  IsolationResult r;
  for (const Vec& value : others) {
    ++r.examined;
    const double d = surface.distance(value);
    if (d > radius) continue;
    ++r.in_tube;
    if (surface.gap(value) > surface.planeResidual + tol) r.witnesses.push_back(value);
  }
  r.isolated = r.witnesses.empty();
  return r;
}

IsolationResult isolation_check(const MomentMapSystem& sys, const NodalSurface& surface, double radius,
                                const SamplingSpec& sampling, const CriticalOptions& options, double tol) {
  std::vector<const CriticalPoint*> seeds;
  const std::size_t total = surface.witnesses.size();
  const std::size_t use = std::min(total, sampling.max_witnesses);
  for (std::size_t i = 0; i < use; ++i) {
    seeds.push_back(&surface.witnesses[use <= 1 ? 0 : i * (total - 1) / (use - 1)]);
  }
  const int n = sys.n();
  const std::size_t per = static_cast<std::size_t>(std::max(sampling.samples_per_witness, 0));
  std::vector<std::optional<Vec>> found(seeds.size() * per);
  const CounterRng root(sampling.seed);
  parallel_for(found.size(), sampling.workers, [&](std::size_t task) {
    const CriticalPoint& seed = *seeds[task / per];
    CounterRng rng = root.split(task);
    const Vec dir = rng.unit_vector(2 * n);
    const double rad = sampling.phase_radius * std::pow(rng.uniform(), 1.0 / (2.0 * n));
    const Vec p = seed.coords + rad * dir;
    if (!sys.contains(seed.chart, p)) return;
    for (int r = 0; r < n; ++r) {
      const auto ref = refine_critical(sys, seed.chart, p, r, options);
      // Newton may jump to a distant deeper stratum; keep only local solutions.
      if (!ref || (ref->coords - p).norm() > sampling.phase_radius) continue;
      const CriticalPoint cp = classify_point(sys, seed.chart, ref->coords, options, rng.next_u64());
      if (cp.nondegenerate && cp.wtype == surface.wtype) found[task] = cp.value;
      return;
    }
  });
  std::vector<Vec> values;
  for (auto& f : found) {
    if (f) values.push_back(*f);
  }
  return isolation_check(surface, values, radius, tol);
}

namespace {

Vec transverse_direction(const Mat& jac) {
  Eigen::JacobiSVD<Mat> svd(jac, Eigen::ComputeFullU);
  Vec w = svd.matrixU().col(0);
  w[0] = 0.0;
  if (w.norm() < 1e-8) throw PreconditionError("trace_curve: the nodal curve is tangent to e1");
  w.normalize();
  Eigen::Index big = 0;
  w.cwiseAbs().maxCoeff(&big);
  if (w[big] < 0.0) w = -w;
  return w;
}

struct Walker {
  ChartId chart;
  Vec p;
  double s;
  std::optional<Vec> prev;
  double prev_s = 0.0;
};

}  // namespace

TraceResult trace_curve(const MomentMapSystem& sys, const CriticalPoint& seed, double step, int max_steps,
                        const TraceOptions& options) {
  if (seed.wtype.k_f() != 1 || seed.wtype.k_x() != 1 || seed.wtype.n() != sys.n()) {
    throw PreconditionError("trace_curve: seed must have k_f = 1 and k_x = 1, got " + seed.wtype.to_string());
  }
  if (!(step > 0.0)) throw PreconditionError("trace_curve: step must be positive");
  TraceResult out;
  const ChartEval ev0 = chart_eval(sys, seed.chart, seed.coords, false);
  out.direction = transverse_direction(ev0.jacobian);
  const Vec& w = out.direction;
  const double s0 = w.dot(ev0.values);

  std::vector<CriticalPoint> side[2];
  std::vector<double> side_s[2];
  for (int d = 0; d < 2; ++d) {
    const double dir = d == 0 ? 1.0 : -1.0;
    Walker walk{seed.chart, seed.coords, s0, std::nullopt, 0.0};
    for (int k = 0; k < max_steps; ++k) {
      // Leave charts before their boundary gets close.
      const Vec y = sys.embed(walk.chart, walk.p);
      if (sys.margin(walk.chart, y) < 0.3) {
        const ChartId better = sys.preferred_chart(y);
        if (better != walk.chart) {
          if (walk.prev) {
            const auto prev_y = sys.embed(walk.chart, *walk.prev);
            walk.prev = sys.to_chart(better, prev_y);
          }
          walk.p = *sys.to_chart(better, y);
          walk.chart = better;
        }
      }
      double delta = step;
      bool advanced = false;
      bool finished = false;
      for (int half = 0; half <= options.max_halvings; ++half, delta *= 0.5) {
        const double target = walk.s + dir * delta;
        if (options.bounds && (target < options.bounds->first - 1e-12 || target > options.bounds->second + 1e-12)) {
          finished = true;
          break;
        }
        Vec tangent;
        if (walk.prev) {
          tangent = (walk.p - *walk.prev) / (walk.s - walk.prev_s);
        } else {
          const ChartEval ev = sys.evaluate(walk.chart, walk.p, false);
          const Vec g = ev.jacobian.transpose() * w;
          tangent = g / g.squaredNorm();
        }
        const Vec guess = walk.p + (target - walk.s) * tangent;
        if (!sys.contains(walk.chart, guess)) continue;
        const auto ref = refine_critical_on_level(sys, walk.chart, guess, 1, w, target, options.critical);
        if (!ref) continue;
        CriticalPoint cp = classify_point(sys, walk.chart, ref->coords, options.critical,
                                          static_cast<std::uint64_t>(k) * 2 + static_cast<std::uint64_t>(d));
        if (!cp.nondegenerate || cp.wtype != seed.wtype) {
          out.diagnostics += "type change to " + cp.wtype.to_string() + " near s=" + std::to_string(target) + "; ";
          finished = true;
          break;
        }
        walk.prev = walk.p;
        walk.prev_s = walk.s;
        walk.p = ref->coords;
        walk.s = target;
        side[d].push_back(std::move(cp));
        side_s[d].push_back(target);
        advanced = true;
        break;
      }
      if (finished) break;
      if (!advanced) {
        out.truncated = true;
        out.diagnostics += "corrector diverged near s=" + std::to_string(walk.s + dir * step) + "; ";
        break;
      }
    }
  }
  for (std::size_t i = side[1].size(); i-- > 0;) {
    out.points.push_back(side[1][i]);
    out.params.push_back(side_s[1][i]);
  }
  CriticalPoint first = seed;
  out.points.push_back(first);
  out.params.push_back(s0);
  for (std::size_t i = 0; i < side[0].size(); ++i) {
    out.points.push_back(side[0][i]);
    out.params.push_back(side_s[0][i]);
  }
  return out;
}

std::vector<int> link_components(const std::vector<Vec>& values, double radius) {
  std::vector<std::size_t> parent(values.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t j = i + 1; j < values.size(); ++j) {
      if ((values[i] - values[j]).norm() <= radius) {
        const auto a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<int> label(values.size(), -1);
  std::vector<int> root_label(values.size(), -1);
  int next = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto r = find(i);
    if (root_label[r] < 0) root_label[r] = next++;
    label[i] = root_label[r];
  }
  return label;
}

}  // namespace semitoric
