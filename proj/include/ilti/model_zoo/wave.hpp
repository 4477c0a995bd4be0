#ifndef ILTI_MODEL_ZOO_WAVE_HPP
#define ILTI_MODEL_ZOO_WAVE_HPP

// Wave equation on (0, pi): Neumann control at x = 0, Dirichlet at x = pi,
// state (phi, psi) in H^1_(pi) x L^2 with the energy norm int |phi_x|^2 + |psi|^2.
//
// B* S*_t (phi, psi) = w_t(t, 0) where w_tt = w_xx, w_x(t,0) = 0, w(t,pi) = 0,
// w(0) = phi, w_t(0) = -psi. The solver transports the Riemann invariants
// xi = w_t - w_x (rightward) and eta = w_t + w_x (leftward) cell by cell with
// xi = eta at x = 0 and eta = -xi at x = pi.

#include "ilti/errors.hpp"
#include "ilti/spectral_core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

namespace ilti::zoo {

/// Signed labels: k >= 0 carries mu = +i(k + 1/2), k < 0 carries mu = -i(-k - 1/2).
inline double wave_frequency(int k) { return k >= 0 ? k + 0.5 : -k - 0.5; }
inline cplx wave_eigenvalue(int k) { return cplx(0.0, k >= 0 ? wave_frequency(k) : -wave_frequency(k)); }

/// Normalized adjoint eigenvector (cos(w x), -mu cos(w x)) / (w sqrt(pi)).
inline double wave_mode_phi(int k, double x) {
  const double w = wave_frequency(k);
  return std::cos(w * x) / (w * std::sqrt(std::numbers::pi));
}
inline double wave_mode_phi_x(int k, double x) {
  return -std::sin(wave_frequency(k) * x) / std::sqrt(std::numbers::pi);
}
inline cplx wave_mode_psi(int k, double x) {
  const double w = wave_frequency(k);
  return -wave_eigenvalue(k) * std::cos(w * x) / (w * std::sqrt(std::numbers::pi));
}

inline SpectralSystem make_neumann_wave(int n_max, double T = std::numbers::pi) {
  if (n_max < 1) throw InvalidArgument("make_neumann_wave: n_max must be at least 1");
  std::vector<Eigenmode> modes;
  for (int n = 0; n <= n_max; ++n)
    for (int k : {n, -n - 1}) {
      Eigenmode m;
      m.index = k;
      m.eigenvalue = wave_eigenvalue(k);
      m.branch = Branch::hyperbolic;
      // B*(phi, psi) = -psi(0)
      m.control_trace = VecC::Constant(1, -wave_mode_psi(k, 0.0));
      modes.push_back(m);
    }
  return SpectralSystem(std::move(modes), 0.0, 1, T);
}

struct WaveState {
  std::vector<double> phi;  // nodes x_i = i h, i = 0..n; phi(pi) = 0
  std::vector<double> psi;  // cell centers (i + 1/2) h, i = 0..n-1
  double h = 0.0;

  int cells() const { return static_cast<int>(psi.size()); }

  template <class F, class G>
  static WaveState sample(int n_cells, F&& phi_fn, G&& psi_fn) {
    if (n_cells < 2) throw InvalidArgument("WaveState: need at least two cells");
    WaveState s;
    s.h = std::numbers::pi / n_cells;
    for (int i = 0; i <= n_cells; ++i) s.phi.push_back(i == n_cells ? 0.0 : double(phi_fn(i * s.h)));
    for (int i = 0; i < n_cells; ++i) s.psi.push_back(double(psi_fn((i + 0.5) * s.h)));
    return s;
  }

  double phi_x(int i) const { return (phi[static_cast<std::size_t>(i) + 1] - phi[static_cast<std::size_t>(i)]) / h; }

  bool boundary_compatible(double tol = 1e-12) const { return !phi.empty() && std::abs(phi.back()) <= tol; }

  double energy() const {
    double e = 0.0;
    for (int i = 0; i < cells(); ++i) e += phi_x(i) * phi_x(i) + psi[static_cast<std::size_t>(i)] * psi[static_cast<std::size_t>(i)];
    return e * h;
  }
};

/// Discrete energy-norm distance between two states on the same grid.
inline double wave_distance(const WaveState& a, const WaveState& b) {
  if (a.cells() != b.cells()) throw InvalidArgument("wave_distance: grids differ");
  double e = 0.0;
  for (int i = 0; i < a.cells(); ++i) {
    const double dx = a.phi_x(i) - b.phi_x(i);
    const double dp = a.psi[static_cast<std::size_t>(i)] - b.psi[static_cast<std::size_t>(i)];
    e += dx * dx + dp * dp;
  }
  return std::sqrt(e * a.h);
}

/// Samples the state sum_k a_k (phi_k, psi_k).
inline WaveState wave_state_from_modes(const std::map<int, cplx>& coeffs, int n_cells) {
  return WaveState::sample(
      n_cells,
      [&](double x) {
        cplx s = 0.0;
        for (const auto& [k, a] : coeffs) s += a * wave_mode_phi(k, x);
        return s.real();
      },
      [&](double x) {
        cplx s = 0.0;
        for (const auto& [k, a] : coeffs) s += a * wave_mode_psi(k, x);
        return s.real();
      });
}

struct WaveSolveResult {
  WaveState state;
  std::vector<double> times;
  std::vector<double> trace;   // w_t(t, 0) at the step times
  bool grid_aligned = true;
  std::string warning;
};

inline WaveSolveResult wave_characteristics_solve(const WaveState& s0, double T) {
  if (!s0.boundary_compatible(1e-10)) throw InvalidArgument("wave solve: initial data violates phi(pi) = 0");
  const int n = s0.cells();
  const double h = s0.h;
  std::vector<double> xi(static_cast<std::size_t>(n)), eta(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto I = static_cast<std::size_t>(i);
    xi[I] = -s0.psi[I] - s0.phi_x(i);
    eta[I] = -s0.psi[I] + s0.phi_x(i);
  }
  WaveSolveResult r;
  const double dir = T >= 0.0 ? 1.0 : -1.0;
  const double steps_real = std::abs(T) / h;
  long steps = static_cast<long>(std::floor(steps_real + 1e-9));
  double frac = steps_real - double(steps);
  if (frac < 1e-9) frac = 0.0;
  auto record = [&](double t) {
    r.times.push_back(t);
    r.trace.push_back(0.5 * (xi[0] + eta[0]));
  };
  record(0.0);
  std::vector<double> nx(static_cast<std::size_t>(n)), ne(static_cast<std::size_t>(n));
  for (long j = 0; j < steps; ++j) {
    if (dir > 0) {
      nx[0] = eta[0];
      for (int i = 1; i < n; ++i) nx[static_cast<std::size_t>(i)] = xi[static_cast<std::size_t>(i) - 1];
      for (int i = 0; i + 1 < n; ++i) ne[static_cast<std::size_t>(i)] = eta[static_cast<std::size_t>(i) + 1];
      ne[static_cast<std::size_t>(n) - 1] = -xi[static_cast<std::size_t>(n) - 1];
    } else {
      for (int i = 0; i + 1 < n; ++i) nx[static_cast<std::size_t>(i)] = xi[static_cast<std::size_t>(i) + 1];
      nx[static_cast<std::size_t>(n) - 1] = -eta[static_cast<std::size_t>(n) - 1];
      ne[0] = xi[0];
      for (int i = 1; i < n; ++i) ne[static_cast<std::size_t>(i)] = eta[static_cast<std::size_t>(i) - 1];
    }
    xi.swap(nx);
    eta.swap(ne);
    record(dir * (j + 1) * h);
  }
  if (frac > 0.0) {
    r.grid_aligned = false;
    r.warning = "T is not an integer multiple of the cell width; last step interpolates linearly";
    const double a = frac;
    if (dir > 0) {
      nx[0] = (1 - a) * xi[0] + a * eta[0];
      for (int i = 1; i < n; ++i) nx[static_cast<std::size_t>(i)] = (1 - a) * xi[static_cast<std::size_t>(i)] + a * xi[static_cast<std::size_t>(i) - 1];
      for (int i = 0; i + 1 < n; ++i) ne[static_cast<std::size_t>(i)] = (1 - a) * eta[static_cast<std::size_t>(i)] + a * eta[static_cast<std::size_t>(i) + 1];
      ne[static_cast<std::size_t>(n) - 1] = (1 - a) * eta[static_cast<std::size_t>(n) - 1] - a * xi[static_cast<std::size_t>(n) - 1];
    } else {
      for (int i = 0; i + 1 < n; ++i) nx[static_cast<std::size_t>(i)] = (1 - a) * xi[static_cast<std::size_t>(i)] + a * xi[static_cast<std::size_t>(i) + 1];
      nx[static_cast<std::size_t>(n) - 1] = (1 - a) * xi[static_cast<std::size_t>(n) - 1] - a * eta[static_cast<std::size_t>(n) - 1];
      ne[0] = (1 - a) * eta[0] + a * xi[0];
      for (int i = 1; i < n; ++i) ne[static_cast<std::size_t>(i)] = (1 - a) * eta[static_cast<std::size_t>(i)] + a * eta[static_cast<std::size_t>(i) - 1];
    }
    xi.swap(nx);
    eta.swap(ne);
    record(T);
  }
  WaveState out;
  out.h = h;
  out.psi.resize(static_cast<std::size_t>(n));
  out.phi.assign(static_cast<std::size_t>(n) + 1, 0.0);
  for (int i = n - 1; i >= 0; --i) {
    const auto I = static_cast<std::size_t>(i);
    out.psi[I] = -0.5 * (xi[I] + eta[I]);
    out.phi[I] = out.phi[I + 1] - h * 0.5 * (eta[I] - xi[I]);
  }
  r.state = std::move(out);
  return r;
}

/// Exact flow of the modal data: a_k -> e^{mu_k T} a_k.
inline std::map<int, cplx> wave_spectral_flow(const std::map<int, cplx>& coeffs, double T) {
  std::map<int, cplx> out;
  for (const auto& [k, a] : coeffs) out[k] = std::exp(wave_eigenvalue(k) * T) * a;
  return out;
}

/// Energy-norm projection of a grid state onto the modes |k| <= n_max, with the
/// state taken piecewise constant in phi_x and psi on each cell.
inline std::map<int, cplx> wave_spectral_coefficients(const WaveState& s, int n_max) {
  std::map<int, cplx> out;
  const double rp = std::sqrt(std::numbers::pi);
  for (int n = 0; n <= n_max; ++n)
    for (int k : {n, -n - 1}) {
      const double w = wave_frequency(k);
      const cplx mu = wave_eigenvalue(k);
      cplx a = 0.0;
      for (int i = 0; i < s.cells(); ++i) {
        const double x0 = i * s.h, x1 = (i + 1) * s.h;
        const double int_sin = (std::cos(w * x0) - std::cos(w * x1)) / w;
        const double int_cos = (std::sin(w * x1) - std::sin(w * x0)) / w;
        a += s.phi_x(i) * (-int_sin / rp);
        a += s.psi[static_cast<std::size_t>(i)] * std::conj(-mu) * int_cos / (w * rp);
      }
      out[k] = a;
    }
  return out;
}

enum class RiemannBranch { xi, eta };

struct RayLanding {
  double alpha = 0.0;      // landing point at t = 0
  RiemannBranch branch = RiemannBranch::eta;
  double sign = 1.0;       // w_t(T, 0) = sign * (branch form at alpha)
  int reflections = 0;
};

/// Follows the characteristic through (T, 0) back to t = 0.
inline RayLanding wave_trace_ray(double T) {
  if (T < 0.0) throw InvalidArgument("wave_trace_ray: negative horizon");
  RayLanding r;
  double x = 0.0, tau = T;
  const double L = std::numbers::pi;
  while (true) {
    if (r.branch == RiemannBranch::eta) {
      if (tau <= L - x) {
        r.alpha = x + tau;
        return r;
      }
      tau -= L - x;
      x = L;
      r.branch = RiemannBranch::xi;
      r.sign = -r.sign;
    } else {
      if (tau <= x) {
        r.alpha = x - tau;
        return r;
      }
      tau -= x;
      x = 0.0;
      r.branch = RiemannBranch::eta;
    }
    ++r.reflections;
  }
}

struct WConditionResidual {
  double psi0 = 0.0;         // |psi(0)|
  double traced = 0.0;       // |branch form at alpha|
  double predicted_trace = 0.0;
  RayLanding landing;
};

namespace detail {

/// Linear interpolation of cell-centered values, linear extrapolation past the end centers.
inline double cell_interp(const std::vector<double>& v, double h, double x) {
  const int n = static_cast<int>(v.size());
  double s = x / h - 0.5;
  int i = static_cast<int>(std::floor(s));
  i = std::clamp(i, 0, n - 2);
  const double a = s - i;
  return (1 - a) * v[static_cast<std::size_t>(i)] + a * v[static_cast<std::size_t>(i) + 1];
}

}  // namespace detail

/// Residuals of the W-conditions: psi(0) = 0 and the ray-traced invariant at t = 0.
inline WConditionResidual wave_W_condition(const WaveState& s, double T) {
  WConditionResidual r;
  r.landing = wave_trace_ray(T);
  std::vector<double> px(static_cast<std::size_t>(s.cells()));
  for (int i = 0; i < s.cells(); ++i) px[static_cast<std::size_t>(i)] = s.phi_x(i);
  const double psi0 = detail::cell_interp(s.psi, s.h, 0.0);
  const double psi_a = detail::cell_interp(s.psi, s.h, r.landing.alpha);
  const double phix_a = detail::cell_interp(px, s.h, r.landing.alpha);
  const double form = r.landing.branch == RiemannBranch::xi ? -psi_a - phix_a : -psi_a + phix_a;
  r.psi0 = std::abs(psi0);
  r.traced = std::abs(form);
  r.predicted_trace = r.landing.sign * form;
  return r;
}

}  // namespace ilti::zoo

#endif  // ILTI_MODEL_ZOO_WAVE_HPP
