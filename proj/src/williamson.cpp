#include "semitoric/williamson.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "semitoric/rng.hpp"

namespace semitoric {

WilliamsonType::WilliamsonType(int k_e, int k_f, int k_h, int k_x, int n)
    : k_e_(k_e), k_f_(k_f), k_h_(k_h), k_x_(k_x), n_(n) {
  if (k_e < 0 || k_f < 0 || k_h < 0 || k_x < 0 || n < 0) {
    throw PreconditionError("WilliamsonType: negative entry");
  }
  if (k_e + 2 * k_f + k_h + k_x != n) {
    throw PreconditionError("WilliamsonType: k_e + 2k_f + k_h + k_x must equal n, got " + to_string() +
                            " with n=" + std::to_string(n));
  }
}

WilliamsonType WilliamsonType::of(int k_e, int k_f, int k_h, int k_x) {
  return WilliamsonType(k_e, k_f, k_h, k_x, k_e + 2 * k_f + k_h + k_x);
}

WilliamsonType WilliamsonType::parse(const std::string& text) {
  std::vector<int> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      throw PreconditionError("WilliamsonType::parse: bad entry '" + item + "'");
    }
    if (used != item.size()) throw PreconditionError("WilliamsonType::parse: bad entry '" + item + "'");
    parts.push_back(v);
  }
  if (parts.size() != 4) throw PreconditionError("WilliamsonType::parse: expected four entries");
  return of(parts[0], parts[1], parts[2], parts[3]);
}

std::string WilliamsonType::to_string() const {
  return "(" + std::to_string(k_e_) + "," + std::to_string(k_f_) + "," + std::to_string(k_h_) + "," +
         std::to_string(k_x_) + ")";
}

bool type_leq(const WilliamsonType& a, const WilliamsonType& b) {
  if (a.n() != b.n()) throw DimensionError("type_leq: types live in different dimensions");
  return a.k_e() >= b.k_e() && a.k_f() >= b.k_f() && a.k_h() >= b.k_h();
}

WilliamsonType type_of_product(const WilliamsonType& a, const WilliamsonType& b) {
  return WilliamsonType(a.k_e() + b.k_e(), a.k_f() + b.k_f(), a.k_h() + b.k_h(), a.k_x() + b.k_x(),
                        a.n() + b.n());
}

void TypePoset::insert(const WilliamsonType& w) {
  if (w.n() != n_) throw DimensionError("TypePoset::insert: mismatched n");
  members_.insert(w);
}

long TypePoset::axiom_violations() const {
  long bad = 0;
  for (const auto& a : members_) {
    if (!leq(a, a)) ++bad;
    for (const auto& b : members_) {
      if (leq(a, b) && leq(b, a) && !(a == b)) ++bad;
      for (const auto& c : members_) {
        if (leq(a, b) && leq(b, c) && !leq(a, c)) ++bad;
      }
    }
  }
  return bad;
}

int CartanCandidate::m() const {
  if (hessians.empty()) throw PreconditionError("CartanCandidate: empty Hessian list");
  return hessians.front().dim() / 2;
}

namespace {

void check_dims(const CartanCandidate& c) {
  const int dim = 2 * c.m();
  for (const auto& h : c.hessians) {
    if (h.dim() != dim) throw DimensionError("CartanCandidate: Hessians of different sizes");
  }
  if (c.ambient() < c.m()) throw DimensionError("CartanCandidate: ambient n smaller than m");
}

}  // namespace

double commutator_residual(const CartanCandidate& c) {
  check_dims(c);
  const SymplecticForm form(c.m());
  const Mat& omega = form.matrix();
  double worst = 0.0;
  for (std::size_t i = 0; i < c.hessians.size(); ++i) {
    for (std::size_t j = i + 1; j < c.hessians.size(); ++j) {
      const Mat& s = c.hessians[i].matrix();
      const Mat& t = c.hessians[j].matrix();
      const double scale = std::max(max_abs(s) * max_abs(t), 1e-300);
      worst = std::max(worst, max_abs(s * omega * t - t * omega * s) / scale);
    }
  }
  return worst;
}

bool is_commuting(const CartanCandidate& c) { return commutator_residual(c) <= c.tolerance; }

namespace {

struct SpeciesCount {
  int elliptic = 0;
  int focus = 0;
  int hyperbolic = 0;
  int zero = 0;
  bool separable = true;
  std::string why;
};

bool has_near(const std::vector<Complex>& values, Complex target, double tol) {
  return std::any_of(values.begin(), values.end(), [&](Complex v) { return std::abs(v - target) <= tol; });
}

SpeciesCount count_species(const std::vector<Complex>& ev, const ClassifyOptions& opt) {
  SpeciesCount out;
  double scale = 0.0;
  for (auto v : ev) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) {
    out.zero = static_cast<int>(ev.size()) / 2;
    out.separable = false;
    out.why = "all eigenvalues vanish";
    return out;
  }
  int imag = 0, real = 0, cplx = 0, zero = 0;
  for (auto v : ev) {
    const double a = std::abs(v);
    if (a <= opt.zero_tol * scale) {
      ++zero;
    } else if (std::abs(v.real()) <= opt.tol * a) {
      ++imag;
    } else if (std::abs(v.imag()) <= opt.tol * a) {
      ++real;
    } else {
      ++cplx;
      const double t = 10.0 * opt.tol * scale;
      if (!has_near(ev, -v, t) || !has_near(ev, std::conj(v), t) || !has_near(ev, -std::conj(v), t)) {
        out.separable = false;
        out.why = "complex eigenvalue without its quadruple";
      }
    }
  }
  for (std::size_t i = 0; i < ev.size(); ++i) {
    for (std::size_t j = i + 1; j < ev.size(); ++j) {
      if (std::abs(ev[i] - ev[j]) <= opt.tol * scale) {
        out.separable = false;
        if (out.why.empty()) out.why = "eigenvalue collision";
      }
    }
  }
  out.elliptic = imag / 2;
  out.hyperbolic = real / 2;
  out.focus = cplx / 4;
  out.zero = zero / 2;
  if (zero > 0) {
    out.separable = false;
    if (out.why.empty()) out.why = "zero eigenvalue";
  }
  if (imag % 2 != 0 || real % 2 != 0 || cplx % 4 != 0 || zero % 2 != 0) {
    out.separable = false;
    if (out.why.empty()) out.why = "eigenvalues do not pair up";
  }
  return out;
}

int span_dimension(const std::vector<QuadraticHamiltonian>& list, double tol) {
  const auto size = list.front().matrix().size();
  Mat cols(size, static_cast<Eigen::Index>(list.size()));
  for (std::size_t i = 0; i < list.size(); ++i) {
    cols.col(static_cast<Eigen::Index>(i)) = list[i].matrix().reshaped();
  }
  Eigen::JacobiSVD<Mat> svd(cols);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol * sv(0)) ++r;
  }
  return r;
}

WilliamsonType best_effort(const SpeciesCount& s, int m, int ambient) {
  int k_e = s.elliptic, k_f = s.focus, k_h = s.hyperbolic;
  while (k_e + 2 * k_f + k_h > m) {
    if (k_h > 0) --k_h;
    else if (k_e > 0) --k_e;
    else --k_f;
  }
  return WilliamsonType(k_e, k_f, k_h, ambient - (k_e + 2 * k_f + k_h), ambient);
}

}  // namespace

ClassificationReport classify_fixed(const CartanCandidate& c, std::uint64_t seed, const ClassifyOptions& options) {
  check_dims(c);
  if (!is_commuting(c)) throw PreconditionError("classify_fixed: Hessians do not commute");
  const int m = c.m();
  const int ambient = c.ambient();
  const SymplecticForm form(m);
  const int count = static_cast<int>(c.hessians.size());

  ClassificationReport report;
  report.wtype = WilliamsonType::regular(ambient);
  const int span = span_dimension(c.hessians, options.tol);
  std::ostringstream diag;
  if (span < m) diag << "Hessians span " << span << " < m=" << m << "; ";

  const CounterRng root(seed);
  SpeciesCount best;
  bool have_best = false;
  for (int draw = 0; draw < options.draws; ++draw) {
    CounterRng rng = root.split(static_cast<std::uint64_t>(draw));
    const Vec coeff = rng.unit_vector(count);
    Mat s = Mat::Zero(2 * m, 2 * m);
    for (int i = 0; i < count; ++i) s += coeff[i] * c.hessians[i].matrix();
    Eigen::EigenSolver<Mat> solver(form.matrix() * s, false);
    if (solver.info() != Eigen::Success) throw NumericalError("classify_fixed: eigenvalue solver failed");
    std::vector<Complex> ev(solver.eigenvalues().begin(), solver.eigenvalues().end());
    std::sort(ev.begin(), ev.end(), [](Complex a, Complex b) {
      return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    const SpeciesCount sc = count_species(ev, options);
    const bool better = !have_best || sc.zero < best.zero;
    if (better) {
      best = sc;
      have_best = true;
      report.eigenvalues = ev;
      report.coefficients = coeff;
    }
    if (sc.separable && sc.elliptic + 2 * sc.focus + sc.hyperbolic == m) {
      report.eigenvalues = ev;
      report.coefficients = coeff;
      if (span >= m) {
        report.nondegenerate = true;
        report.wtype = WilliamsonType(sc.elliptic, sc.focus, sc.hyperbolic, ambient - m, ambient);
        diag << "draw " << draw << " generic";
        report.diagnostics = diag.str();
        return report;
      }
      best = sc;
      break;
    }
    diag << "draw " << draw << ": " << sc.why << "; ";
  }
  report.nondegenerate = false;
  report.wtype = best_effort(best, m, ambient);
  diag << "degenerate";
  report.diagnostics = diag.str();
  return report;
}

}  // namespace semitoric
