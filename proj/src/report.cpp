#include "semitoric/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace semitoric {

Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json to_json(const VecI& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json to_json(const StructureCheck& c) {
  return Json{{"name", c.name}, {"pass", c.pass}, {"measured", c.measured}, {"tolerance", c.tolerance}};
}

namespace {

Json matrix_json(const MatI& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

Json to_json(const StructureReport& r) {
  Json out;
  out["pass"] = r.pass();
  Json checks = Json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  out["checks"] = checks;
  if (r.blocks) {
    out["blocks"] = Json{{"A", matrix_json(r.blocks->A)}, {"firstRow", to_json(r.blocks->firstRow)}};
  }
  if (r.eps) {
    out["eps"] = Json{{"f1", r.eps->eps_f1}, {"f2", r.eps->eps_f2}, {"e", r.eps->eps_e}};
  }
  return out;
}

Json strata_summary(const StratumMap& strata, const AdjacencyReport& closure) {
  Json counts = Json::object();
  for (const auto& [w, pts] : strata.strata) counts[w.to_string()] = pts.size();
  Json pairs = Json::array();
  for (const auto& a : closure.pairs) {
    pairs.push_back(Json{{"lower", a.lower.to_string()},
                         {"upper", a.upper.to_string()},
                         {"distance", a.distance},
                         {"consistent", a.consistent}});
  }
  return Json{{"n", strata.n},
              {"counts", counts},
              {"total", strata.total()},
              {"degenerate", strata.degenerate.size()},
              {"regular_nodes", strata.regular_nodes},
              {"closure", Json{{"pairs", pairs}, {"violations", closure.violations}}}};
}

Json to_json(const NodalSurface& s) {
  Json v = Json::array();
  for (const auto& d : s.v) v.push_back(to_json(d));
  Json samples = Json::array();
  for (std::size_t i = 0; i < s.t.size(); ++i) samples.push_back(Json{{"t", to_json(s.t[i])}, {"h", s.h[i]}});
  return Json{{"type", s.wtype.to_string()},
              {"P", to_json(s.P)},
              {"e1", to_json(s.e1)},
              {"v", v},
              {"samples", samples},
              {"residuals", Json{{"plane", s.planeResidual}, {"graph", s.graphResidual}}},
              {"degenerateFit", s.degenerateFit},
              {"spanned", s.spanned}};
}

Json to_json(const IsolationResult& r, double radius) {
  Json w = Json::array();
  for (const auto& x : r.witnesses) w.push_back(to_json(x));
  return Json{{"radius", radius},
              {"isolated", r.isolated},
              {"examined", r.examined},
              {"in_tube", r.in_tube},
              {"witnesses", w}};
}

std::string format_g9(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

std::string render_svg(const std::vector<SvgSeries>& series, const std::string& x_label, const std::string& y_label) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (x0 > x1) {
    x0 = y0 = -1.0;
    x1 = y1 = 1.0;
  }
  const double pad = 0.05 * std::max({x1 - x0, y1 - y0, 1e-6});
  x0 -= pad;
  x1 += pad;
  y0 -= pad;
  y1 += pad;
  const double w = x1 - x0, h = y1 - y0;
  const double dot = 0.004 * std::max(w, h);
  // SVG y grows downwards; plot (x, -y).
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << format_g9(x0) << ' ' << format_g9(-y1) << ' '
      << format_g9(w) << ' ' << format_g9(h) << "\" width=\"640\" height=\"" << format_g9(640.0 * h / w) << "\">\n";
  out << "<title>" << x_label << " vs " << y_label << "</title>\n";
  for (const auto& s : series) {
    out << "<g fill=\"" << s.color << "\" stroke=\"" << s.color << "\"";
    if (!s.label.empty()) out << " data-label=\"" << s.label << "\"";
    out << ">\n";
    if (s.line && s.points.size() > 1) {
      out << "<polyline fill=\"none\" stroke-width=\"" << format_g9(dot / 2) << "\" points=\"";
      for (std::size_t i = 0; i < s.points.size(); ++i) {
        if (i) out << ' ';
        out << format_g9(s.points[i].first) << ',' << format_g9(-s.points[i].second);
      }
      out << "\"/>\n";
    } else {
      for (const auto& [x, y] : s.points) {
        out << "<circle cx=\"" << format_g9(x) << "\" cy=\"" << format_g9(-y) << "\" r=\"" << format_g9(dot)
            << "\" stroke=\"none\"/>\n";
      }
    }
    out << "</g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace semitoric
