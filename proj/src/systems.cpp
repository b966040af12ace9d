#include "semitoric/systems.hpp"

#include "semitoric/localmodel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace semitoric {

namespace {

// A chart covers the sphere minus a cap around the far pole: r < 1.9 in the
// Lambert radius, i.e. height above -0.805 for the north chart.
constexpr double kSphereChartRadius = 1.9;

}  // namespace

Factor Factor::sphere() {
  Factor f;
  f.kind_ = Kind::Sphere;
  f.charts_ = {"N", "S"};
  f.range_ = {-1.5, 1.5};
  return f;
}

Factor Factor::plane(double half_width) {
  Factor f;
  f.kind_ = Kind::Plane;
  f.charts_ = {"P"};
  f.range_ = {-half_width, half_width};
  return f;
}

int Factor::chart_index(const std::string& name) const {
  for (std::size_t i = 0; i < charts_.size(); ++i) {
    if (charts_[i] == name) return static_cast<int>(i);
  }
  throw ChartError("unknown chart '" + name + "'");
}

bool Factor::contains(int chart, double a, double b) const {
  if (kind_ == Kind::Plane) return std::isfinite(a) && std::isfinite(b);
  (void)chart;
  return a * a + b * b < kSphereChartRadius * kSphereChartRadius;
}

double Factor::margin(int chart, const Vec& y) const {
  if (kind_ == Kind::Plane) return 1e300;
  // Height of the chart boundary is 1 - R^2/2 below the chart's pole.
  const double limit = kSphereChartRadius * kSphereChartRadius / 2.0 - 1.0;
  const double h = chart == 0 ? y[2] : -y[2];
  return h + limit;
}

Vec Factor::embed(int chart, double a, double b) const {
  if (kind_ == Kind::Plane) return Eigen::Vector2d(a, b);
  if (!contains(chart, a, b)) throw ChartError("point outside the sphere chart " + charts_[chart]);
  const double r2 = a * a + b * b;
  const double c = std::sqrt(1.0 - r2 / 4.0);
  const double sign = chart == 0 ? 1.0 : -1.0;
  return Eigen::Vector3d(b * c, sign * a * c, sign * (1.0 - r2 / 2.0));
}

Mat Factor::embed_jacobian(int chart, double a, double b) const {
  if (kind_ == Kind::Plane) return Mat::Identity(2, 2);
  if (!contains(chart, a, b)) throw ChartError("point outside the sphere chart " + charts_[chart]);
  const double c = std::sqrt(1.0 - (a * a + b * b) / 4.0);
  const double ca = -a / (4.0 * c);
  const double cb = -b / (4.0 * c);
  const double sign = chart == 0 ? 1.0 : -1.0;
  Mat j(3, 2);
  j << b * ca, c + b * cb, sign * (c + a * ca), sign * a * cb, -sign * a, -sign * b;
  return j;
}

std::vector<Mat> Factor::embed_hessians(int chart, double a, double b) const {
  if (kind_ == Kind::Plane) return {Mat::Zero(2, 2), Mat::Zero(2, 2)};
  if (!contains(chart, a, b)) throw ChartError("point outside the sphere chart " + charts_[chart]);
  const double c = std::sqrt(1.0 - (a * a + b * b) / 4.0);
  const double c3 = c * c * c;
  const double ca = -a / (4.0 * c);
  const double cb = -b / (4.0 * c);
  const double caa = -1.0 / (4.0 * c) - a * a / (16.0 * c3);
  const double cab = -a * b / (16.0 * c3);
  const double cbb = -1.0 / (4.0 * c) - b * b / (16.0 * c3);
  const double sign = chart == 0 ? 1.0 : -1.0;
  Mat hx(2, 2), hy(2, 2), hz(2, 2);
  hx << b * caa, ca + b * cab, ca + b * cab, 2.0 * cb + b * cbb;
  hy << 2.0 * ca + a * caa, cb + a * cab, cb + a * cab, a * cbb;
  hz << -1.0, 0.0, 0.0, -1.0;
  return {hx, sign * hy, sign * hz};
}

std::optional<std::pair<double, double>> Factor::to_chart(int chart, const Vec& y) const {
  if (kind_ == Kind::Plane) return std::make_pair(y[0], y[1]);
  const double sign = chart == 0 ? 1.0 : -1.0;
  const double h = sign * y[2];
  const double r2 = 2.0 * (1.0 - h);
  if (!(r2 < kSphereChartRadius * kSphereChartRadius)) return std::nullopt;
  const double c = std::sqrt((1.0 + h) / 2.0);
  return std::make_pair(sign * y[1] / c, y[0] / c);
}

Vec Factor::random_point(CounterRng& rng) const {
  if (kind_ == Kind::Sphere) return rng.unit_vector(3);
  return Eigen::Vector2d(rng.uniform(range_.first, range_.second), rng.uniform(range_.first, range_.second));
}

bool Region::contains(const Vec& p, double slack) const {
  if (static_cast<std::size_t>(p.size()) != axes.size()) return false;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (p[k] < axes[i].first - slack || p[k] > axes[i].second + slack) return false;
  }
  return true;
}

bool Region::empty() const {
  return axes.empty() || std::any_of(axes.begin(), axes.end(), [](const auto& a) { return !(a.first <= a.second); });
}

MomentMapSystem::MomentMapSystem(std::string name, std::vector<Factor> factors, std::vector<AmbientFunction> components)
    : name_(std::move(name)), factors_(std::move(factors)), components_(std::move(components)) {
  if (factors_.size() != components_.size()) {
    throw DimensionError("MomentMapSystem: need one component per factor");
  }
  for (const auto& f : factors_) ambient_dim_ += f.ambient_dim();
}

std::vector<ChartId> MomentMapSystem::chart_ids() const {
  std::vector<ChartId> out{""};
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    std::vector<ChartId> next;
    for (const auto& prefix : out) {
      for (const auto& c : factors_[k].chart_names()) next.push_back(k == 0 ? c : prefix + "." + c);
    }
    out = std::move(next);
  }
  return out;
}

std::vector<int> MomentMapSystem::parse_chart(const ChartId& chart) const {
  std::vector<int> idx;
  std::stringstream ss(chart);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (idx.size() >= factors_.size()) throw ChartError("chart '" + chart + "' has too many parts");
    idx.push_back(factors_[idx.size()].chart_index(part));
  }
  if (idx.size() != factors_.size()) throw ChartError("chart '" + chart + "' has too few parts");
  return idx;
}

bool MomentMapSystem::contains(const ChartId& chart, const Vec& p) const {
  const auto idx = parse_chart(chart);
  if (p.size() != 2 * n()) return false;
  for (int k = 0; k < n(); ++k) {
    if (!factors_[k].contains(idx[k], p[k], p[n() + k])) return false;
  }
  return true;
}

double MomentMapSystem::margin(const ChartId& chart, const Vec& y) const {
  const auto idx = parse_chart(chart);
  double m = 1e300;
  int offset = 0;
  for (int k = 0; k < n(); ++k) {
    const int d = factors_[k].ambient_dim();
    m = std::min(m, factors_[k].margin(idx[k], y.segment(offset, d)));
    offset += d;
  }
  return m;
}

ChartId MomentMapSystem::preferred_chart(const Vec& y) const {
  // Factor charts are independent, so pick the deepest chart per factor.
  ChartId out;
  int offset = 0;
  for (int k = 0; k < n(); ++k) {
    const auto& f = factors_[k];
    const int d = f.ambient_dim();
    int best = 0;
    for (int c = 1; c < static_cast<int>(f.chart_names().size()); ++c) {
      if (f.margin(c, y.segment(offset, d)) > f.margin(best, y.segment(offset, d))) best = c;
    }
    out += (k == 0 ? "" : ".") + f.chart_names()[best];
    offset += d;
  }
  return out;
}

Vec MomentMapSystem::embed(const ChartId& chart, const Vec& p) const {
  require_phase_dim(p, n(), "MomentMapSystem::embed");
  const auto idx = parse_chart(chart);
  Vec y(ambient_dim_);
  int offset = 0;
  for (int k = 0; k < n(); ++k) {
    const int d = factors_[k].ambient_dim();
    y.segment(offset, d) = factors_[k].embed(idx[k], p[k], p[n() + k]);
    offset += d;
  }
  return y;
}

std::optional<Vec> MomentMapSystem::to_chart(const ChartId& chart, const Vec& y) const {
  const auto idx = parse_chart(chart);
  Vec p(2 * n());
  int offset = 0;
  for (int k = 0; k < n(); ++k) {
    const int d = factors_[k].ambient_dim();
    const auto ab = factors_[k].to_chart(idx[k], y.segment(offset, d));
    if (!ab) return std::nullopt;
    p[k] = ab->first;
    p[n() + k] = ab->second;
    offset += d;
  }
  return p;
}

Vec MomentMapSystem::rechart(const ChartId& from, const ChartId& to, const Vec& p) const {
  if (from == to) return p;
  const auto q = to_chart(to, embed(from, p));
  if (!q) throw ChartError("point not covered by chart " + to);
  return *q;
}

Vec MomentMapSystem::values_ambient(const Vec& y) const {
  Vec v(n());
  for (int i = 0; i < n(); ++i) v[i] = components_[i].value(y);
  return v;
}

ChartEval MomentMapSystem::evaluate(const ChartId& chart, const Vec& p, bool with_hessians) const {
  require_phase_dim(p, n(), "MomentMapSystem::evaluate");
  const auto idx = parse_chart(chart);
  const int nn = n();
  Vec y(ambient_dim_);
  Mat dy = Mat::Zero(ambient_dim_, 2 * nn);
  std::vector<Mat> ddy;
  std::vector<int> owner;
  int offset = 0;
  for (int k = 0; k < nn; ++k) {
    const auto& f = factors_[k];
    const int d = f.ambient_dim();
    const double a = p[k];
    const double b = p[nn + k];
    y.segment(offset, d) = f.embed(idx[k], a, b);
    const Mat j = f.embed_jacobian(idx[k], a, b);
    dy.block(offset, k, d, 1) = j.col(0);
    dy.block(offset, nn + k, d, 1) = j.col(1);
    if (with_hessians) {
      for (const Mat& h : f.embed_hessians(idx[k], a, b)) {
        ddy.push_back(h);
        owner.push_back(k);
      }
    }
    offset += d;
  }
  ChartEval out;
  out.values.resize(nn);
  out.jacobian.resize(nn, 2 * nn);
  for (int i = 0; i < nn; ++i) {
    const auto& c = components_[i];
    out.values[i] = c.value(y);
    const Vec g = c.gradient(y);
    out.jacobian.row(i) = (dy.transpose() * g).transpose();
    if (with_hessians) {
      Mat h = dy.transpose() * c.hessian(y) * dy;
      for (int l = 0; l < ambient_dim_; ++l) {
        if (g[l] == 0.0) continue;
        const int k = owner[l];
        const int ia[2] = {k, nn + k};
        for (int r = 0; r < 2; ++r) {
          for (int s = 0; s < 2; ++s) h(ia[r], ia[s]) += g[l] * ddy[l](r, s);
        }
      }
      out.hessians.push_back(h);
    }
  }
  return out;
}

SmoothHamiltonian MomentMapSystem::component(const ChartId& chart, int index) const {
  if (index < 0 || index >= n()) throw DimensionError("component index out of range");
  const MomentMapSystem self = *this;
  return SmoothHamiltonian(
      2 * n(), [self, chart, index](const Vec& p) { return self.evaluate(chart, p, false).values[index]; },
      [self, chart, index](const Vec& p) {
        return Vec(self.evaluate(chart, p, false).jacobian.row(index).transpose());
      },
      [self, chart, index](const Vec& p) { return self.evaluate(chart, p, true).hessians[index]; });
}

FlowOptions MomentMapSystem::flow_options(const ChartId& chart) const {
  FlowOptions o;
  const MomentMapSystem self = *this;
  o.in_domain = [self, chart](const Vec& p) { return self.contains(chart, p); };
  return o;
}

Region MomentMapSystem::default_region() const {
  Region r;
  r.axes.resize(static_cast<std::size_t>(2 * n()));
  for (int k = 0; k < n(); ++k) {
    r.axes[static_cast<std::size_t>(k)] = factors_[k].default_range();
    r.axes[static_cast<std::size_t>(n() + k)] = factors_[k].default_range();
  }
  return r;
}

std::pair<ChartId, Vec> MomentMapSystem::random_point(CounterRng& rng) const {
  Vec y(ambient_dim_);
  int offset = 0;
  for (const auto& f : factors_) {
    y.segment(offset, f.ambient_dim()) = f.random_point(rng);
    offset += f.ambient_dim();
  }
  const ChartId chart = preferred_chart(y);
  return {chart, *to_chart(chart, y)};
}

namespace {

AmbientFunction shifted(const AmbientFunction& f, int offset, int own_dim, int total_dim) {
  return AmbientFunction{
      [f, offset, own_dim](const Vec& y) { return f.value(y.segment(offset, own_dim)); },
      [f, offset, own_dim, total_dim](const Vec& y) {
        Vec g = Vec::Zero(total_dim);
        g.segment(offset, own_dim) = f.gradient(y.segment(offset, own_dim));
        return g;
      },
      [f, offset, own_dim, total_dim](const Vec& y) {
        Mat h = Mat::Zero(total_dim, total_dim);
        h.block(offset, offset, own_dim, own_dim) = f.hessian(y.segment(offset, own_dim));
        return h;
      }};
}

AmbientFunction recombined(const std::vector<AmbientFunction>& comps, const Recombination& rho) {
  auto others = [comps](const Vec& y) {
    Vec v(static_cast<Eigen::Index>(comps.size() - 1));
    for (std::size_t i = 1; i < comps.size(); ++i) v[static_cast<Eigen::Index>(i - 1)] = comps[i].value(y);
    return v;
  };
  return AmbientFunction{
      [comps, rho, others](const Vec& y) { return comps[0].value(y) + rho.value(others(y)); },
      [comps, rho, others](const Vec& y) {
        const Vec dr = rho.gradient(others(y));
        Vec g = comps[0].gradient(y);
        for (std::size_t i = 1; i < comps.size(); ++i) g += dr[static_cast<Eigen::Index>(i - 1)] * comps[i].gradient(y);
        return g;
      },
      [comps, rho, others](const Vec& y) {
        const Vec o = others(y);
        const Vec dr = rho.gradient(o);
        const Mat hr = rho.hessian(o);
        Mat h = comps[0].hessian(y);
        std::vector<Vec> grads;
        for (std::size_t i = 1; i < comps.size(); ++i) {
          h += dr[static_cast<Eigen::Index>(i - 1)] * comps[i].hessian(y);
          grads.push_back(comps[i].gradient(y));
        }
        for (std::size_t i = 0; i < grads.size(); ++i) {
          for (std::size_t j = 0; j < grads.size(); ++j) {
            h += hr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * grads[i] * grads[j].transpose();
          }
        }
        return h;
      }};
}

}  // namespace

MomentMapSystem product(const MomentMapSystem& a, const MomentMapSystem& b, const std::optional<Recombination>& rho,
                        const std::string& name) {
  std::vector<Factor> factors = a.factors();
  factors.insert(factors.end(), b.factors().begin(), b.factors().end());
  const int total = a.ambient_dim() + b.ambient_dim();
  std::vector<AmbientFunction> comps;
  for (const auto& f : a.ambient_components()) comps.push_back(shifted(f, 0, a.ambient_dim(), total));
  for (const auto& f : b.ambient_components()) comps.push_back(shifted(f, a.ambient_dim(), b.ambient_dim(), total));
  if (rho) comps[0] = recombined(comps, *rho);
  return MomentMapSystem(name.empty() ? a.name() + "*" + b.name() : name, std::move(factors), std::move(comps));
}

MomentMapSystem plane_oscillator(double half_width) {
  AmbientFunction e{[](const Vec& y) { return y.squaredNorm(); }, [](const Vec& y) { return Vec(2.0 * y); },
                    [](const Vec&) { return Mat(2.0 * Mat::Identity(2, 2)); }};
  return MomentMapSystem("plane-oscillator", {Factor::plane(half_width)}, {e});
}

MomentMapSystem toric_oscillator(int m) {
  if (m < 1) throw PreconditionError("toric_oscillator: m must be positive");
  MomentMapSystem sys = plane_oscillator(2.0);
  for (int k = 1; k < m; ++k) sys = product(sys, plane_oscillator(2.0));
  return MomentMapSystem("toric-oscillator:" + std::to_string(m), sys.factors(), sys.ambient_components());
}

MomentMapSystem model_system(const WilliamsonType& w, double half_width) {
  const int n = w.n();
  if (n < 1) throw PreconditionError("model_system: type must have n >= 1");
  const ModelQ model(w);
  // Ambient coordinates are (x_1, xi_1, x_2, xi_2, ...); the phase layout is (x..., xi...).
  Eigen::PermutationMatrix<Eigen::Dynamic> to_phase(2 * n);
  for (int k = 0; k < n; ++k) {
    to_phase.indices()[2 * k] = k;
    to_phase.indices()[2 * k + 1] = n + k;
  }
  std::vector<AmbientFunction> components;
  for (int i = 0; i < n; ++i) {
    const SmoothHamiltonian h = model.component(i);
    const Mat hess = h.hessian(Vec::Zero(2 * n));
    components.push_back({[h, to_phase](const Vec& y) { return h.value(to_phase * y); },
                          [h, to_phase](const Vec& y) { return Vec(to_phase.transpose() * h.gradient(to_phase * y)); },
                          [hess, to_phase](const Vec&) { return Mat(to_phase.transpose() * hess * to_phase); }});
  }
  const std::string t = w.to_string();
  return MomentMapSystem("model:" + t.substr(1, t.size() - 2), std::vector<Factor>(static_cast<std::size_t>(n), Factor::plane(half_width)),
                         components);
}

MomentMapSystem spin_oscillator() {
  // y = (x, y, z, u, v)
  AmbientFunction h{[](const Vec& y) { return 0.5 * (y[0] * y[3] + y[1] * y[4]); },
                    [](const Vec& y) {
                      Vec g = Vec::Zero(5);
                      g << 0.5 * y[3], 0.5 * y[4], 0.0, 0.5 * y[0], 0.5 * y[1];
                      return g;
                    },
                    [](const Vec&) {
                      Mat m = Mat::Zero(5, 5);
                      m(0, 3) = m(3, 0) = 0.5;
                      m(1, 4) = m(4, 1) = 0.5;
                      return m;
                    }};
  AmbientFunction j{[](const Vec& y) { return y[2] + 0.5 * (y[3] * y[3] + y[4] * y[4]); },
                    [](const Vec& y) {
                      Vec g = Vec::Zero(5);
                      g << 0.0, 0.0, 1.0, y[3], y[4];
                      return g;
                    },
                    [](const Vec&) {
                      Mat m = Mat::Zero(5, 5);
                      m(3, 3) = m(4, 4) = 1.0;
                      return m;
                    }};
  return MomentMapSystem("spin-oscillator", {Factor::sphere(), Factor::plane(3.0)}, {h, j});
}

MomentMapSystem height_sphere() {
  AmbientFunction z{[](const Vec& y) { return y[2]; }, [](const Vec&) { return Vec(Eigen::Vector3d(0.0, 0.0, 1.0)); },
                    [](const Vec&) { return Mat(Mat::Zero(3, 3)); }};
  return MomentMapSystem("height-sphere", {Factor::sphere()}, {z});
}

MomentMapSystem ff_x_family(double lambda) {
  Recombination rho{[lambda](const Vec& o) { return lambda * o[1] * o[1]; },
                    [lambda](const Vec& o) { return Vec(Eigen::Vector2d(0.0, 2.0 * lambda * o[1])); },
                    [lambda](const Vec&) {
                      Mat m = Mat::Zero(2, 2);
                      m(1, 1) = 2.0 * lambda;
                      return m;
                    }};
  std::ostringstream name;
  name.precision(17);
  name << "ff-x-family:" << lambda;
  return product(spin_oscillator(), height_sphere(), rho, name.str());
}

MomentMapSystem make_system(const std::string& name) {
  const auto colon = name.find(':');
  const std::string head = name.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : name.substr(colon + 1);
  try {
    if (head == "spin-oscillator" && arg.empty()) return spin_oscillator();
    if (head == "toric-oscillator" && !arg.empty()) {
      std::size_t used = 0;
      const int m = std::stoi(arg, &used);
      if (used == arg.size() && m >= 1) return toric_oscillator(m);
    }
    if (head == "model" && !arg.empty()) return model_system(WilliamsonType::parse(arg));
    if (head == "ff-x-family" && !arg.empty()) {
      std::size_t used = 0;
      const double lambda = std::stod(arg, &used);
      if (used == arg.size() && std::isfinite(lambda)) return ff_x_family(lambda);
    }
  } catch (const std::logic_error&) {
  } catch (const PreconditionError&) {
  }
  throw ConfigError("unknown system '" + name + "'");
}

ChartEval chart_eval(const MomentMapSystem& sys, const ChartId& chart, const Vec& p, bool with_hessians) {
  if (!sys.contains(chart, p)) throw ChartError("point outside chart " + chart);
  return sys.evaluate(chart, p, with_hessians);
}

}  // namespace semitoric
