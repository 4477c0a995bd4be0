#ifndef ILTI_MODEL_ZOO_HEATWAVE_HPP
#define ILTI_MODEL_ZOO_HEATWAVE_HPP

// Heat equation on (0, 1) coupled at x = 0 to a wave equation on (-1, 0),
// controlled through the heat flux at x = 1.
//
// Adjoint eigenvectors (f, g, mu g) solve f'' = mu f, g'' = mu^2 g with
// f(1) = 0, g(-1) = 0, f(0) = g(0), f'(0) = g'(0). With f(0) = 1:
//   f = sinh(r (1 - x)) / sinh r,  g = sinh(mu (x + 1)) / sinh mu,  r = sqrt(mu),
// and the flux matching leaves the characteristic function
//   R(mu) = r tanh(r) cosh(mu) + sinh(mu).

#include "ilti/errors.hpp"
#include "ilti/quadrature.hpp"
#include "ilti/spectral_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace ilti::zoo {

inline cplx heatwave_residual(cplx mu) {
  const cplx r = std::sqrt(mu);
  return r * std::tanh(r) * std::cosh(mu) + std::sinh(mu);
}

/// Asymptotic location of the k-th hyperbolic eigenvalue (|k| >= 5).
inline cplx heatwave_seed(int k) {
  const double s = 1.0 / std::sqrt(std::abs(1.0 + 2.0 * k) * std::numbers::pi);
  const double sg = k > 0 ? 1.0 : (k < 0 ? -1.0 : 0.0);
  return cplx(-s, (k + 0.5) * std::numbers::pi + sg * s);
}

struct RootOptions {
  int max_iterations = 100;
  double tolerance = 1e-10;
  double initial_offset = 1e-3;
};

/// Complex secant with step halving when the residual grows.
inline cplx heatwave_root(cplx seed, const RootOptions& opts = {}) {
  cplx x0 = seed, x1 = seed + cplx(opts.initial_offset, opts.initial_offset);
  cplx f0 = heatwave_residual(x0), f1 = heatwave_residual(x1);
  if (std::abs(f0) < std::abs(f1)) {
    std::swap(x0, x1);
    std::swap(f0, f1);
  }
  for (int it = 0; it < opts.max_iterations; ++it) {
    if (std::abs(f1) <= opts.tolerance) return x1;
    const cplx df = f1 - f0;
    if (df == cplx(0.0)) break;
    cplx step = -f1 * (x1 - x0) / df;
    cplx x2 = x1 + step;
    cplx f2 = heatwave_residual(x2);
    for (int h = 0; h < 20 && !(std::abs(f2) < std::abs(f1)) && std::abs(f2) > opts.tolerance; ++h) {
      step *= 0.5;
      x2 = x1 + step;
      f2 = heatwave_residual(x2);
    }
    x0 = x1;
    f0 = f1;
    x1 = x2;
    f1 = f2;
  }
  if (std::abs(f1) <= opts.tolerance) return x1;
  throw RootNotConverged(seed, x1, std::abs(f1));
}

struct HeatWaveEigen {
  int k = 0;
  cplx seed;
  cplx root;
  double residual = 0.0;
};

inline HeatWaveEigen heatwave_eigen(int k, const RootOptions& opts = {}) {
  if (std::abs(k) < 5) throw InvalidArgument("heatwave eigenvalues are seeded only for |k| >= 5");
  HeatWaveEigen e;
  e.k = k;
  e.seed = heatwave_seed(k);
  e.root = heatwave_root(e.seed, opts);
  e.residual = std::abs(heatwave_residual(e.root));
  return e;
}

/// Hyperbolic eigenvalues for every k in [k_min, k_max] with |k| >= 5.
inline std::vector<HeatWaveEigen> heatwave_eigenvalues(int k_min, int k_max, const RootOptions& opts = {}) {
  if (k_min > k_max) throw InvalidArgument("heatwave_eigenvalues: empty range");
  std::vector<HeatWaveEigen> out;
  for (int k = k_min; k <= k_max; ++k)
    if (std::abs(k) >= 5) out.push_back(heatwave_eigen(k, opts));
  if (out.empty()) throw InvalidArgument("heatwave_eigenvalues: range has no |k| >= 5");
  return out;
}

struct HeatWaveMode {
  cplx eigenvalue;
  double norm = 0.0;               // X-norm of the f(0) = 1 representative
  std::vector<double> x_heat;      // grid on [0, 1]
  std::vector<double> x_wave;      // grid on [-1, 0]
  std::vector<cplx> f, g, h_comp;  // normalized samples
  cplx control_trace;              // f'(1) of the normalized mode
  double residual = 0.0;           // ODE residual at interior collocation points, relative
  double matching = 0.0;           // max violation of the four boundary/matching conditions
};

namespace detail {

inline cplx hw_f(cplx mu, double x) {
  const cplx r = std::sqrt(mu);
  return std::sinh(r * (1.0 - x)) / std::sinh(r);
}
inline cplx hw_fx(cplx mu, double x) {
  const cplx r = std::sqrt(mu);
  return -r * std::cosh(r * (1.0 - x)) / std::sinh(r);
}
inline cplx hw_g(cplx mu, double x) { return std::sinh(mu * (x + 1.0)) / std::sinh(mu); }
inline cplx hw_gx(cplx mu, double x) { return mu * std::cosh(mu * (x + 1.0)) / std::sinh(mu); }

/// Five-point second difference; the step balances truncation against the
/// roundoff of evaluating sinh at arguments of size `scale`.
template <class F>
cplx second_difference(F&& f, double x, double scale) {
  const double h = 0.015 / std::max(scale, 1.0);
  return (-f(x + 2 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2 * h)) / (12.0 * h * h);
}

}  // namespace detail

/// Squared X-norm, H^1(0,1) x H^1(-1,0) x L^2(-1,0), of (f, g, mu g) with f(0) = 1.
inline double heatwave_norm_squared(cplx mu) {
  quad::Options o;
  o.panels = 128;
  auto heat = [&](double x) { return std::norm(detail::hw_f(mu, x)) + std::norm(detail::hw_fx(mu, x)); };
  auto wave = [&](double x) {
    const double g2 = std::norm(detail::hw_g(mu, x));
    return g2 + std::norm(detail::hw_gx(mu, x)) + std::norm(mu) * g2;
  };
  return quad::integrate_scalar(heat, 0.0, 1.0, {}, {}, o).real() +
         quad::integrate_scalar(wave, -1.0, 0.0, {}, {}, o).real();
}

inline HeatWaveMode heatwave_mode(cplx mu, int n_samples = 201) {
  if (n_samples < 3) throw InvalidArgument("heatwave_mode: need at least three samples");
  HeatWaveMode m;
  m.eigenvalue = mu;
  const double n2 = heatwave_norm_squared(mu);
  if (!(n2 > 0.0) || !std::isfinite(n2)) throw DegenerateOutput("heatwave_mode: mode is numerically null");
  m.norm = std::sqrt(n2);
  const double inv = 1.0 / m.norm;
  for (int i = 0; i < n_samples; ++i) {
    const double s = double(i) / (n_samples - 1);
    m.x_heat.push_back(s);
    m.x_wave.push_back(s - 1.0);
    m.f.push_back(inv * detail::hw_f(mu, s));
    const cplx g = inv * detail::hw_g(mu, s - 1.0);
    m.g.push_back(g);
    m.h_comp.push_back(mu * g);
  }
  m.control_trace = inv * detail::hw_fx(mu, 1.0);

  // residuals relative to the sup norms of mu f and mu^2 g over the grid
  const double scale = std::abs(mu);
  double fsup = 0.0, gsup = 0.0, fres = 0.0, gres = 0.0;
  for (int i = 1; i + 1 < n_samples; ++i) {
    const double xh = m.x_heat[static_cast<std::size_t>(i)], xw = m.x_wave[static_cast<std::size_t>(i)];
    const cplx fpp = detail::second_difference([&](double x) { return detail::hw_f(mu, x); }, xh, std::sqrt(scale));
    const cplx gpp = detail::second_difference([&](double x) { return detail::hw_g(mu, x); }, xw, scale);
    const cplx fv = mu * detail::hw_f(mu, xh), gv = mu * mu * detail::hw_g(mu, xw);
    fsup = std::max(fsup, std::abs(fv));
    gsup = std::max(gsup, std::abs(gv));
    fres = std::max(fres, std::abs(fpp - fv));
    gres = std::max(gres, std::abs(gpp - gv));
  }
  m.residual = std::max(fsup > 0 ? fres / fsup : 0.0, gsup > 0 ? gres / gsup : 0.0);
  m.matching = std::max({std::abs(detail::hw_f(mu, 1.0)), std::abs(detail::hw_g(mu, -1.0)),
                         std::abs(detail::hw_f(mu, 0.0) - detail::hw_g(mu, 0.0)),
                         std::abs(detail::hw_fx(mu, 0.0) - detail::hw_gx(mu, 0.0)) / std::max(1.0, scale)});
  return m;
}

/// Hyperbolic modes for k in [k_min, k_max], |k| >= 5, plus optional parabolic
/// placeholders (eigenvalue -(j pi)^2, zero control trace, indices -1000 - j).
inline SpectralSystem make_heatwave(int k_min, int k_max, double T = 1.0, int parabolic_placeholders = 0) {
  std::vector<Eigenmode> modes;
  for (const auto& e : heatwave_eigenvalues(k_min, k_max)) {
    const HeatWaveMode hm = heatwave_mode(e.root, 3);
    Eigenmode m;
    m.index = e.k;
    m.eigenvalue = e.root;
    m.control_trace = VecC::Constant(1, hm.control_trace);
    m.branch = Branch::hyperbolic;
    modes.push_back(m);
  }
  for (int j = 1; j <= parabolic_placeholders; ++j) {
    Eigenmode m;
    m.index = -1000 - j;
    m.eigenvalue = -std::pow(j * std::numbers::pi, 2);
    m.control_trace = VecC::Zero(1);
    m.branch = Branch::parabolic;
    modes.push_back(m);
  }
  return SpectralSystem(std::move(modes), 0.0, 1, T);
}

}  // namespace ilti::zoo

#endif  // ILTI_MODEL_ZOO_HEATWAVE_HPP
