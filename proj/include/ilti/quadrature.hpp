#ifndef ILTI_QUADRATURE_HPP
#define ILTI_QUADRATURE_HPP

// Composite, adaptive Gauss-Legendre quadrature for vector-valued integrands.
//
// Intervals are cut at user breakpoints (atoms, kinks) and at singular points.
// Segments touching a singular point are graded geometrically toward it and the
// innermost panel uses the substitution x = c + h*y^2, which absorbs
// |x - c|^{-1/2}-type singularities. Every panel is refined by bisection until
// the 20-point rule agrees with the sum over the two halves.

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <complex>
#include <span>
#include <vector>

namespace ilti::quad {

struct Options {
  int panels = 64;             // uniform panels over the full interval
  double rel_tol = 1e-14;      // per component, relative to the L1 scale
  double abs_tol = 1e-300;
  int max_depth = 40;
  int singular_levels = 52;    // geometric grading levels toward singular points
};

struct Rule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

inline const Rule& gauss_legendre_20() {
  static const Rule rule = [] {
    using G = boost::math::quadrature::gauss<double, 20>;
    Rule r;
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] == 0.0) {
        r.nodes.push_back(0.0);
        r.weights.push_back(w[i]);
        continue;
      }
      r.nodes.push_back(-x[i]);
      r.weights.push_back(w[i]);
      r.nodes.push_back(x[i]);
      r.weights.push_back(w[i]);
    }
    return r;
  }();
  return rule;
}

namespace detail {

// Maps y in [0,1] to x on a panel; identity-affine or quadratic toward `anchor`.
struct PanelMap {
  double a = 0.0, b = 1.0;
  bool quadratic = false;   // x = anchor + (end - anchor) * y^2
  double anchor = 0.0, end = 1.0;

  double x(double y) const {
    if (!quadratic) return a + (b - a) * y;
    return anchor + (end - anchor) * y * y;
  }
  double jacobian(double y) const {
    if (!quadratic) return b - a;
    return 2.0 * (end - anchor) * y;
  }
};

template <class F>
class Integrator {
public:
  Integrator(F& f, Eigen::Index size, const Options& opts) : f_(f), size_(size), opts_(opts) {}

  struct PanelResult {
    Eigen::VectorXcd value;
    Eigen::VectorXd l1;
  };

  // Gauss rule on the y-interval [y0, y1] of the map.
  PanelResult rule(const PanelMap& m, double y0, double y1) {
    const Rule& g = gauss_legendre_20();
    PanelResult r{Eigen::VectorXcd::Zero(size_), Eigen::VectorXd::Zero(size_)};
    const double half = 0.5 * (y1 - y0);
    const double mid = 0.5 * (y1 + y0);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      const double y = mid + half * g.nodes[i];
      const double w = g.weights[i] * half * m.jacobian(y);
      const Eigen::VectorXcd v = f_(m.x(y));
      r.value += w * v;
      r.l1 += std::abs(w) * v.cwiseAbs();
    }
    return r;
  }

  void refine(const PanelMap& m, double y0, double y1, const Eigen::VectorXcd& whole, int depth,
              double share, Eigen::VectorXcd& acc) {
    const double ym = 0.5 * (y0 + y1);
    PanelResult left = rule(m, y0, ym);
    PanelResult right = rule(m, ym, y1);
    Eigen::VectorXcd both = left.value + right.value;
    bool ok = depth >= opts_.max_depth;
    if (!ok) {
      ok = true;
      for (Eigen::Index i = 0; i < size_ && ok; ++i) {
        // The budget halves with depth; the evaluation noise of the panel does not
        // (cos(w t) at large w t carries the roundoff of its argument).
        const double floor = 1e3 * std::numeric_limits<double>::epsilon() * (left.l1[i] + right.l1[i]);
        const double tol = std::max({opts_.abs_tol, opts_.rel_tol * scale_[i] * share, floor});
        if (std::abs(both[i] - whole[i]) > tol) ok = false;
      }
    }
    if (ok) {
      acc += both;
      return;
    }
    refine(m, y0, ym, left.value, depth + 1, 0.5 * share, acc);
    refine(m, ym, y1, right.value, depth + 1, 0.5 * share, acc);
  }

  Eigen::VectorXcd run(const std::vector<PanelMap>& panels) {
    std::vector<PanelResult> coarse;
    coarse.reserve(panels.size());
    scale_ = Eigen::VectorXd::Zero(size_);
    for (const auto& p : panels) {
      coarse.push_back(rule(p, 0.0, 1.0));
      scale_ += coarse.back().l1;
    }
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(size_);
    // Every panel gets an equal share of the tolerance budget.
    const double share = panels.empty() ? 1.0 : 1.0 / static_cast<double>(panels.size());
    for (std::size_t i = 0; i < panels.size(); ++i)
      refine(panels[i], 0.0, 1.0, coarse[i].value, 0, share, acc);
    return acc;
  }

private:
  F& f_;
  Eigen::Index size_;
  Options opts_;
  Eigen::VectorXd scale_;
};

inline void graded_panels(double c, double d, bool toward_left, const Options& opts,
                          std::vector<PanelMap>& out) {
  const double len = d - c;
  const double anchor = toward_left ? c : d;
  const double floor = 1e-15 * std::max(1.0, std::abs(anchor));
  int levels = 0;
  double width = len;
  while (levels < opts.singular_levels && width * 0.5 > floor) {
    width *= 0.5;
    ++levels;
  }
  // Outer panels [anchor + w, anchor + 2w] in the direction away from the anchor.
  double outer = len;
  for (int l = 0; l < levels; ++l) {
    const double inner = outer * 0.5;
    PanelMap m;
    if (toward_left) {
      m.a = c + inner;
      m.b = c + outer;
    } else {
      m.a = d - outer;
      m.b = d - inner;
    }
    out.push_back(m);
    outer = inner;
  }
  PanelMap last;
  last.quadratic = true;
  last.anchor = anchor;
  last.end = toward_left ? c + outer : d - outer;
  out.push_back(last);
}

}  // namespace detail

/// Integrates a vector-valued function f: double -> Eigen::VectorXcd of length `size`
/// over [a, b]. `breakpoints` are regular cuts; `singular` points additionally get
/// geometric grading.
template <class F>
Eigen::VectorXcd integrate(F&& f, Eigen::Index size, double a, double b,
                           std::span<const double> breakpoints = {},
                           std::span<const double> singular = {}, const Options& opts = {}) {
  if (!(b > a) || size == 0) return Eigen::VectorXcd::Zero(size);
  struct Cut {
    double x;
    bool singular;
  };
  std::vector<Cut> cuts{{a, false}, {b, false}};
  for (double p : breakpoints)
    if (p > a && p < b) cuts.push_back({p, false});
  for (double p : singular) {
    if (p >= a && p <= b) cuts.push_back({p, true});
  }
  std::sort(cuts.begin(), cuts.end(), [](const Cut& l, const Cut& r) { return l.x < r.x; });
  std::vector<Cut> merged;
  for (const auto& c : cuts) {
    if (!merged.empty() && merged.back().x == c.x) {
      merged.back().singular = merged.back().singular || c.singular;
    } else {
      merged.push_back(c);
    }
  }

  std::vector<detail::PanelMap> panels;
  const double total = b - a;
  for (std::size_t s = 0; s + 1 < merged.size(); ++s) {
    const double c = merged[s].x, d = merged[s + 1].x;
    const bool sl = merged[s].singular, sr = merged[s + 1].singular;
    if (sl && sr) {
      const double m = 0.5 * (c + d);
      detail::graded_panels(c, m, true, opts, panels);
      detail::graded_panels(m, d, false, opts, panels);
    } else if (sl || sr) {
      detail::graded_panels(c, d, sl, opts, panels);
    } else {
      const int n = std::max(1, static_cast<int>(std::ceil(opts.panels * (d - c) / total)));
      for (int i = 0; i < n; ++i) {
        detail::PanelMap m;
        m.a = c + (d - c) * i / n;
        m.b = (i + 1 == n) ? d : c + (d - c) * (i + 1) / n;
        panels.push_back(m);
      }
    }
  }
  auto& fn = f;
  detail::Integrator<std::remove_reference_t<F>> integ(fn, size, opts);
  return integ.run(panels);
}

/// Scalar convenience wrapper.
template <class F>
std::complex<double> integrate_scalar(F&& f, double a, double b,
                                      std::span<const double> breakpoints = {},
                                      std::span<const double> singular = {},
                                      const Options& opts = {}) {
  auto vf = [&](double x) {
    Eigen::VectorXcd v(1);
    v[0] = std::complex<double>(f(x));
    return v;
  };
  return integrate(vf, 1, a, b, breakpoints, singular, opts)[0];
}

/// Composite Gauss rule over geometric panels [r_i, r_{i+1}] with r growing by `ratio`.
/// Used for truncated integrals near a singularity: integral over [lo, hi].
template <class F>
double integrate_geometric(F&& f, double lo, double hi, double ratio = 2.0) {
  const Rule& g = gauss_legendre_20();
  double total = 0.0;
  double a = lo;
  while (a < hi) {
    const double b = std::min(hi, a * ratio);
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) total += g.weights[i] * half * f(mid + half * g.nodes[i]);
    a = b;
  }
  return total;
}

}  // namespace ilti::quad

#endif  // ILTI_QUADRATURE_HPP
