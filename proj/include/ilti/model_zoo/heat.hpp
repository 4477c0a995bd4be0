#ifndef ILTI_MODEL_ZOO_HEAT_HPP
#define ILTI_MODEL_ZOO_HEAT_HPP

// The scalar integrator x' = f and the Neumann heat equation on (0, pi) with
// boundary control at x = 0, whose observation is minus the trace at 0.

#include "ilti/quadrature.hpp"
#include "ilti/spectral_core.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace ilti::zoo {

inline SpectralSystem make_toy(double T = 1.0) {
  Eigenmode m;
  m.index = 0;
  m.eigenvalue = 0.0;
  m.control_trace = VecC::Ones(1);
  return SpectralSystem({m}, 0.0, 1, T);
}

/// Orthonormal cosine eigenfunction c_n on (0, pi).
inline double heat_eigenfunction(int n, double x) {
  return n == 0 ? 1.0 / std::sqrt(std::numbers::pi) : std::sqrt(2.0 / std::numbers::pi) * std::cos(n * x);
}

/// Modes n = 0..n_max with mu_n = -n^2 and b_n = -c_n(0).
inline SpectralSystem make_neumann_heat(int n_max, double T = 1.0) {
  if (n_max < 1) throw InvalidArgument("make_neumann_heat: n_max must be at least 1");
  std::vector<Eigenmode> modes;
  for (int n = 0; n <= n_max; ++n) {
    Eigenmode m;
    m.index = n;
    m.eigenvalue = -double(n) * n;
    m.control_trace = VecC::Constant(1, -heat_eigenfunction(n, 0.0));
    modes.push_back(m);
  }
  return SpectralSystem(std::move(modes), 0.0, 1, T);
}

struct HeatPsi {
  std::vector<double> x;
  std::vector<double> values;
  double tail_bound = 0.0;   // sup-norm bound of the omitted terms
};

/// sum_{n > n_max} (2/pi) e^{-n^2 T}, summed until the terms vanish.
inline double heat_tail_bound(double T, int n_max) {
  double s = 0.0;
  for (int n = n_max + 1;; ++n) {
    const double t = (2.0 / std::numbers::pi) * std::exp(-double(n) * n * T);
    s += t;
    if (t < 1e-300 || t < 1e-18 * s) break;
  }
  return s;
}

/// psi(x) = -sum_n e^{-n^2 T} c_n(0) c_n(x), truncated at n_max.
inline double heat_psi_value(double T, int n_max, double x) {
  double s = 0.0;
  for (int n = 0; n <= n_max; ++n) s -= std::exp(-double(n) * n * T) * heat_eigenfunction(n, 0.0) * heat_eigenfunction(n, x);
  return s;
}

inline HeatPsi heat_psi(double T, int n_max, const std::vector<double>& x_grid) {
  if (!(T > 0.0)) throw InvalidArgument("heat_psi: T must be positive");
  HeatPsi out;
  out.x = x_grid;
  for (double x : x_grid) out.values.push_back(heat_psi_value(T, n_max, x));
  out.tail_bound = heat_tail_bound(T, n_max);
  return out;
}

/// Coefficients of psi against the adjoint modes: e^{mu_n T} b_n.
inline TowerVector heat_psi_coefficients(double T, int n_max) {
  TowerVector v{{}, 0, Side::adjoint};
  for (int n = 0; n <= n_max; ++n) v.coefficients[n] = -std::exp(-double(n) * n * T) * heat_eigenfunction(n, 0.0);
  return v;
}

/// ||psi||_{L^2(0, pi)} from the coefficient identity.
inline double obstruction_check(double T, int n_max) {
  double s = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    const double c = std::exp(-double(n) * n * T) * heat_eigenfunction(n, 0.0);
    s += c * c;
  }
  return std::sqrt(s);
}

/// ||psi||_{L^2(0, pi)} by composite Gauss-Legendre quadrature of the samples' function.
inline double obstruction_check_quadrature(double T, int n_max) {
  quad::Options o;
  o.panels = std::max(64, 4 * n_max);
  const auto r = quad::integrate_scalar(
      [&](double x) {
        const double v = heat_psi_value(T, n_max, x);
        return v * v;
      },
      0.0, std::numbers::pi, {}, {}, o);
  return std::sqrt(r.real());
}

}  // namespace ilti::zoo

#endif  // ILTI_MODEL_ZOO_HEAT_HPP
