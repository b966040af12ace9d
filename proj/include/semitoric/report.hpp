#pragma once

// JSON and SVG emission for reports, strata and nodal surfaces.

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "semitoric/localmodel.hpp"
#include "semitoric/nodal.hpp"

namespace semitoric {

using Json = nlohmann::ordered_json;

Json to_json(const Vec& v);
Json to_json(const VecI& v);
Json to_json(const StructureCheck& c);
Json to_json(const StructureReport& r);

/// Counts per type, degenerate points and the closure report.
Json strata_summary(const StratumMap& strata, const AdjacencyReport& closure);

/// {type, P, e1, v, samples: [{t, h}], residuals: {plane, graph}, ...}.
Json to_json(const NodalSurface& s);
Json to_json(const IsolationResult& r, double radius);

struct SvgSeries {
  std::vector<std::pair<double, double>> points;
  std::string color = "black";
  /// Polyline instead of dots.
  bool line = false;
  std::string label;
};

/// Plot in value-space coordinates, viewBox fitted to the data, numbers
/// printed with 9 significant digits.
std::string render_svg(const std::vector<SvgSeries>& series, const std::string& x_label, const std::string& y_label);

/// "%.9g".
std::string format_g9(double x);

}  // namespace semitoric
