#pragma once

// Concrete integrable systems with chart atlases.
//
// Every factor is two-dimensional and contributes one Darboux pair to the
// phase layout: factor k uses (x_k, xi_k). The sphere of area 4π is covered by
// two Lambert equal-area charts (north "N", south "S"), which are Darboux
// charts for the area form; the plane has a single chart "P". A chart of a
// product is the '.'-joined list of factor charts, e.g. "N.P.N".

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semitoric/rng.hpp"
#include "semitoric/symplectic.hpp"
#include "semitoric/williamson.hpp"

namespace semitoric {

using ChartId = std::string;

class Factor {
 public:
  enum class Kind { Sphere, Plane };

  static Factor sphere();
  static Factor plane(double half_width = 3.0);

  Kind kind() const { return kind_; }
  /// Number of embedding coordinates (3 for the sphere, 2 for the plane).
  int ambient_dim() const { return kind_ == Kind::Sphere ? 3 : 2; }
  const std::vector<std::string>& chart_names() const { return charts_; }
  int chart_index(const std::string& name) const;
  /// Default scan range for both chart coordinates.
  std::pair<double, double> default_range() const { return range_; }

  bool contains(int chart, double a, double b) const;
  /// Margin > 0 inside the chart; larger is deeper inside.
  double margin(int chart, const Vec& y) const;
  Vec embed(int chart, double a, double b) const;
  /// ambient_dim x 2.
  Mat embed_jacobian(int chart, double a, double b) const;
  /// One 2x2 Hessian per embedding coordinate.
  std::vector<Mat> embed_hessians(int chart, double a, double b) const;
  /// Chart coordinates of an embedded point, or nothing if outside the chart.
  std::optional<std::pair<double, double>> to_chart(int chart, const Vec& y) const;
  /// A random point of the factor (uniform on the sphere, uniform in the default box on the plane).
  Vec random_point(CounterRng& rng) const;

 private:
  Kind kind_ = Kind::Plane;
  std::vector<std::string> charts_;
  std::pair<double, double> range_;
};

/// A function of the embedding coordinates with derivatives.
struct AmbientFunction {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;
};

/// f1 -> f1 + rho(f2, ..., fn) in a product.
struct Recombination {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;
};

struct ChartEval {
  Vec values;
  /// n x 2n.
  Mat jacobian;
  /// n Hessians (2n x 2n); empty unless requested.
  std::vector<Mat> hessians;
};

struct Region {
  /// Per phase axis (x_1..x_n, xi_1..xi_n) ranges, shared by every chart.
  std::vector<std::pair<double, double>> axes;
  /// Charts to scan; empty means all.
  std::vector<ChartId> charts;

  bool contains(const Vec& p, double slack = 0.0) const;
  bool empty() const;
};

class MomentMapSystem {
 public:
  MomentMapSystem(std::string name, std::vector<Factor> factors, std::vector<AmbientFunction> components);

  const std::string& name() const { return name_; }
  int n() const { return static_cast<int>(factors_.size()); }
  int ambient_dim() const { return ambient_dim_; }
  const std::vector<Factor>& factors() const { return factors_; }
  const std::vector<AmbientFunction>& ambient_components() const { return components_; }

  std::vector<ChartId> chart_ids() const;
  bool contains(const ChartId& chart, const Vec& p) const;
  /// Smallest factor margin of an embedded point in a chart.
  double margin(const ChartId& chart, const Vec& y) const;
  /// Chart with the largest margin at an embedded point.
  ChartId preferred_chart(const Vec& y) const;

  /// Embedding coordinates; throws ChartError outside the chart.
  Vec embed(const ChartId& chart, const Vec& p) const;
  std::optional<Vec> to_chart(const ChartId& chart, const Vec& y) const;
  /// Same point in another chart; throws ChartError if it is not covered.
  Vec rechart(const ChartId& from, const ChartId& to, const Vec& p) const;

  ChartEval evaluate(const ChartId& chart, const Vec& p, bool with_hessians) const;
  Vec values(const ChartId& chart, const Vec& p) const { return evaluate(chart, p, false).values; }
  Vec values_ambient(const Vec& y) const;

  SmoothHamiltonian component(const ChartId& chart, int index) const;
  /// Flow options that fail the integration when the trajectory leaves the chart.
  FlowOptions flow_options(const ChartId& chart) const;

  Region default_region() const;
  /// Random point as (chart, coordinates) in its preferred chart.
  std::pair<ChartId, Vec> random_point(CounterRng& rng) const;

 private:
  std::vector<int> parse_chart(const ChartId& chart) const;

  std::string name_;
  std::vector<Factor> factors_;
  std::vector<AmbientFunction> components_;
  int ambient_dim_ = 0;
};

/// Factors and components of a then b, with an optional f1 -> f1 + rho(f2..fn).
MomentMapSystem product(const MomentMapSystem& a, const MomentMapSystem& b,
                        const std::optional<Recombination>& rho = std::nullopt,
                        const std::string& name = "");

/// F = x^2 + xi^2 on the plane.
MomentMapSystem plane_oscillator(double half_width = 3.0);
MomentMapSystem toric_oscillator(int m);
/// The linear model Q_w on a product of planes.
MomentMapSystem model_system(const WilliamsonType& w, double half_width = 2.0);
/// S^2 x R^2 with F = (H, J), H = (xu + yv)/2, J = z + (u^2 + v^2)/2.
MomentMapSystem spin_oscillator();
/// The height z on the sphere.
MomentMapSystem height_sphere();
/// S^2 x R^2 x S^2 with F = (H + lambda z3^2, J, z3).
MomentMapSystem ff_x_family(double lambda);

/// "toric-oscillator:m", "spin-oscillator", "ff-x-family:lambda", "model:a,b,c,d".
MomentMapSystem make_system(const std::string& name);

ChartEval chart_eval(const MomentMapSystem& sys, const ChartId& chart, const Vec& p, bool with_hessians = false);

}  // namespace semitoric
