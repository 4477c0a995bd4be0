#ifndef ILTI_TIME_FUNCTION_SPACES_HPP
#define ILTI_TIME_FUNCTION_SPACES_HPP

// Control laws on (0, T) with distributional parts, Sobolev and dual norms in
// the cosine realization, and the anti-dual pairing <u, phi>.
//
// A GeneralizedInput is  density + sum_a delta_{t_a} (x) u_a + sum_p (-g_p') (x) u_p
// and pairs against a test function phi as
//   int (density, phi) + sum_a (u_a, phi(t_a)) + sum_p int g_p (u_p, phi').

#include "ilti/errors.hpp"
#include "ilti/quadrature.hpp"
#include "ilti/spectral_core.hpp"
#include "ilti/time_signal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

namespace ilti {

struct Atom {
  double t0 = 0.0;
  VecC u0;
};

/// Encodes -g' (x) u0 for a scalar signal g.
struct DerivativePart {
  TimeSignal g;
  VecC u0;
};

enum class DualKind { full_dual, zero_trace_dual };

struct DualSpaceTag {
  DualKind kind = DualKind::full_dual;
  static DualSpaceTag full() { return {DualKind::full_dual}; }
  static DualSpaceTag zero_trace() { return {DualKind::zero_trace_dual}; }
};

inline const char* to_string(DualKind k) {
  return k == DualKind::full_dual ? "full_dual" : "zero_trace_dual";
}

class GeneralizedInput {
public:
  GeneralizedInput(double horizon, Eigen::Index dim) : horizon_(horizon), dim_(dim) {
    if (!(horizon > 0.0)) throw InvalidArgument("GeneralizedInput: horizon must be positive");
    if (dim <= 0) throw InvalidArgument("GeneralizedInput: dimension must be positive");
  }

  static GeneralizedInput zero(double T, Eigen::Index dim) { return GeneralizedInput(T, dim); }

  static GeneralizedInput from_density(TimeSignal d) {
    GeneralizedInput u(d.horizon(), d.dim());
    u.add_density(std::move(d));
    return u;
  }

  static GeneralizedInput dirac(double T, double t0, VecC u0) {
    GeneralizedInput u(T, u0.size());
    u.add_atom(t0, std::move(u0));
    return u;
  }

  /// -g' (x) u0.
  static GeneralizedInput derivative(TimeSignal g, VecC u0) {
    GeneralizedInput u(g.horizon(), u0.size());
    u.add_derivative_part(std::move(g), std::move(u0));
    return u;
  }

  GeneralizedInput& add_density(TimeSignal d) {
    check_horizon(d.horizon());
    if (d.dim() != dim_) throw InvalidArgument("density has wrong dimension");
    if (density_) {
      TimeSignal a = *density_, b = d;
      const int smooth = std::min(a.smoothness_index(), b.smoothness_index());
      const int maxd = std::min(a.max_derivative(), b.max_derivative());
      TimeSignal sum(horizon_, dim_, [a, b](int k, double t) -> Eigen::VectorXcd { return a.derivative(k, t) + b.derivative(k, t); },
                     maxd, smooth);
      std::vector<double> bp = a.breakpoints(), sp = a.singular_points();
      bp.insert(bp.end(), b.breakpoints().begin(), b.breakpoints().end());
      sp.insert(sp.end(), b.singular_points().begin(), b.singular_points().end());
      sum.with_breakpoints(bp).with_singular_points(sp);
      if (a.cosine_coefficients() && b.cosine_coefficients()) {
        const auto& ca = *a.cosine_coefficients();
        const auto& cb = *b.cosine_coefficients();
        Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(std::max(ca.rows(), cb.rows()), dim_);
        c.topRows(ca.rows()) += ca;
        c.topRows(cb.rows()) += cb;
        sum.with_cosine(c);
      }
      density_ = std::move(sum);
    } else {
      density_ = std::move(d);
    }
    return *this;
  }

  GeneralizedInput& add_atom(double t0, VecC u0) {
    if (t0 < 0.0 || t0 > horizon_) throw InvalidArgument("atom location outside [0, T]");
    if (u0.size() != dim_) throw InvalidArgument("atom vector has wrong dimension");
    atoms_.push_back({t0, std::move(u0)});
    return *this;
  }

  GeneralizedInput& add_derivative_part(TimeSignal g, VecC u0) {
    check_horizon(g.horizon());
    if (g.dim() != 1) throw InvalidArgument("derivative part profile must be scalar");
    if (u0.size() != dim_) throw InvalidArgument("derivative part vector has wrong dimension");
    derivs_.push_back({std::move(g), std::move(u0)});
    return *this;
  }

  /// Re-declares the tower index of the input. Distributional inputs accept any
  /// M <= -1; pure densities accept any M up to their smoothness.
  GeneralizedInput with_dual_index(int M) const {
    GeneralizedInput out = *this;
    const int ceiling = (atoms_.empty() && derivs_.empty())
                            ? (density_ ? density_->smoothness_index() : TimeSignal::kSmooth)
                            : -1;
    if (M > ceiling) throw InvalidArgument("declared dual index exceeds the regularity of the input");
    out.declared_ = M;
    return out;
  }

  double horizon() const { return horizon_; }
  Eigen::Index dim() const { return dim_; }
  const std::optional<TimeSignal>& density() const { return density_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<DerivativePart>& derivative_parts() const { return derivs_; }
  bool is_density_only() const { return atoms_.empty() && derivs_.empty(); }

  int natural_index() const { return is_density_only() ? 0 : -1; }
  int dual_index() const { return declared_ ? *declared_ : natural_index(); }

  /// C with |<u, phi>| <= C ||phi||_{H^1} for every H^1 test function. Uses the
  /// sharp point-evaluation constant sqrt(coth T) of H^1(0, T).
  double pairing_bound(const quad::Options& opts = {}) const;

private:
  void check_horizon(double T) const {
    if (std::abs(T - horizon_) > 1e-14 * std::max(1.0, horizon_))
      throw InvalidArgument("component horizon differs from the input horizon");
  }

  double horizon_;
  Eigen::Index dim_;
  std::optional<TimeSignal> density_;
  std::vector<Atom> atoms_;
  std::vector<DerivativePart> derivs_;
  std::optional<int> declared_;
};

/// K test functions at once: eval(d, t) is the dim x K matrix of d-th derivatives.
struct TestFamily {
  double horizon = 1.0;
  Eigen::Index dim = 1;
  Eigen::Index count = 1;
  std::function<MatC(int, double)> eval;
  int max_derivative = 0;
  int smoothness = 0;
  std::vector<double> breakpoints;
  std::vector<double> singular;
};

inline TestFamily family_of(const TimeSignal& phi) {
  TestFamily f;
  f.horizon = phi.horizon();
  f.dim = phi.dim();
  f.count = 1;
  f.max_derivative = phi.max_derivative();
  f.smoothness = phi.smoothness_index();
  f.eval = [phi](int d, double t) -> MatC { return phi.derivative(d, t); };
  f.breakpoints = phi.breakpoints();
  f.singular = phi.singular_points();
  return f;
}

/// Columns (m, i) -> cos(m pi t / T) e_i, m = 0..n_basis-1, ordered m-major.
inline TestFamily cosine_family(double T, Eigen::Index dim, int n_basis) {
  TestFamily f;
  f.horizon = T;
  f.dim = dim;
  f.count = n_basis * dim;
  f.max_derivative = 8;
  f.smoothness = TimeSignal::kSmooth;
  f.eval = [T, dim, n_basis](int d, double t) -> MatC {
    MatC out = MatC::Zero(dim, n_basis * dim);
    for (int m = 0; m < n_basis; ++m) {
      const double w = m * std::numbers::pi / T;
      const double v = (d == 0 ? 1.0 : std::pow(w, d)) * std::cos(w * t + d * std::numbers::pi / 2);
      for (Eigen::Index i = 0; i < dim; ++i) out(i, m * dim + i) = v;
    }
    return out;
  };
  return f;
}

/// Columns (m, i) -> sin(m pi t / T) e_i, m = 1..n_basis.
inline TestFamily sine_family(double T, Eigen::Index dim, int n_basis) {
  TestFamily f;
  f.horizon = T;
  f.dim = dim;
  f.count = n_basis * dim;
  f.max_derivative = 8;
  f.smoothness = TimeSignal::kSmooth;
  f.eval = [T, dim, n_basis](int d, double t) -> MatC {
    MatC out = MatC::Zero(dim, n_basis * dim);
    for (int m = 1; m <= n_basis; ++m) {
      const double w = m * std::numbers::pi / T;
      const double v = std::pow(w, d) * std::sin(w * t + d * std::numbers::pi / 2);
      for (Eigen::Index i = 0; i < dim; ++i) out(i, (m - 1) * dim + i) = v;
    }
    return out;
  };
  return f;
}

namespace detail {

inline constexpr double kTraceTolerance = 1e-10;

inline void check_zero_trace(const GeneralizedInput& u, const TestFamily& fam) {
  for (const Atom& a : u.atoms())
    if (a.t0 <= 0.0 || a.t0 >= u.horizon())
      throw EndpointObstruction("atom on an endpoint cannot be paired in the zero-trace dual", a.t0, 0.0);
  for (double e : {0.0, fam.horizon}) {
    const MatC v = fam.eval(0, e);
    for (Eigen::Index k = 0; k < v.cols(); ++k) {
      const double tr = v.col(k).norm();
      if (tr > kTraceTolerance)
        throw EndpointObstruction("test function has a nonzero endpoint trace", e, tr);
    }
  }
}

/// Pairing of u against fam on [0, upto]. With `restricted`, u is cut by the
/// indicator of [0, upto]: atoms count for t0 <= upto and derivative parts pick
/// up the boundary term -g(upto) (u0, phi(upto)).
inline VecC pair_core(const GeneralizedInput& u, const TestFamily& fam, double upto, bool restricted,
                      const quad::Options& opts) {
  const Eigen::Index K = fam.count;
  VecC out = VecC::Zero(K);
  const bool need_deriv = !u.derivative_parts().empty();
  if ((need_deriv || !u.atoms().empty()) && fam.smoothness < 1)
    throw InvalidArgument("pairing a distributional input needs an H^1 test function");
  if (need_deriv && fam.max_derivative < 1)
    throw InvalidArgument("test function derivative unavailable");

  if (u.density() || need_deriv) {
    std::vector<double> bp = fam.breakpoints, sp = fam.singular;
    if (u.density()) {
      bp.insert(bp.end(), u.density()->breakpoints().begin(), u.density()->breakpoints().end());
      sp.insert(sp.end(), u.density()->singular_points().begin(), u.density()->singular_points().end());
    }
    for (const auto& p : u.derivative_parts()) {
      bp.insert(bp.end(), p.g.breakpoints().begin(), p.g.breakpoints().end());
      sp.insert(sp.end(), p.g.singular_points().begin(), p.g.singular_points().end());
    }
    for (const Atom& a : u.atoms()) bp.push_back(a.t0);
    auto integrand = [&](double t) -> VecC {
      VecC acc = VecC::Zero(K);
      if (u.density()) acc.noalias() += fam.eval(0, t).adjoint() * (*u.density())(t);
      if (need_deriv) {
        const MatC dphi = fam.eval(1, t);
        for (const auto& p : u.derivative_parts()) acc.noalias() += p.g(t)[0] * (dphi.adjoint() * p.u0);
      }
      return acc;
    };
    out += quad::integrate(integrand, K, 0.0, upto, bp, sp, opts);
  }
  for (const Atom& a : u.atoms()) {
    if (a.t0 > upto) continue;
    out.noalias() += fam.eval(0, a.t0).adjoint() * a.u0;
  }
  if (restricted && need_deriv) {
    const MatC v = fam.eval(0, upto);
    for (const auto& p : u.derivative_parts()) out.noalias() -= p.g(upto)[0] * (v.adjoint() * p.u0);
  }
  return out;
}

}  // namespace detail

inline VecC pair_family(const GeneralizedInput& u, const TestFamily& fam, DualSpaceTag tag = {},
                        const quad::Options& opts = {}) {
  if (fam.dim != u.dim()) throw InvalidArgument("pairing: dimension mismatch");
  if (std::abs(fam.horizon - u.horizon()) > 1e-14 * std::max(1.0, u.horizon()))
    throw InvalidArgument("pairing: horizon mismatch");
  if (tag.kind == DualKind::zero_trace_dual) detail::check_zero_trace(u, fam);
  return detail::pair_core(u, fam, u.horizon(), false, opts);
}

inline cplx pair(const GeneralizedInput& u, const TimeSignal& phi, DualSpaceTag tag = {},
                 const quad::Options& opts = {}) {
  return pair_family(u, family_of(phi), tag, opts)[0];
}

/// Pairing of 1_{[0, t]} u against a family living on [0, t].
inline VecC pair_family_restricted(const GeneralizedInput& u, const TestFamily& fam, double t,
                                   const quad::Options& opts = {}) {
  if (fam.dim != u.dim()) throw InvalidArgument("pairing: dimension mismatch");
  if (t < 0.0 || t > u.horizon() * (1 + 1e-14)) throw InvalidArgument("restriction time outside [0, T]");
  return detail::pair_core(u, fam, std::min(t, u.horizon()), true, opts);
}

/// rho_m(s) = sum_{j=0}^{s} (m pi / T)^{2j}; reciprocal for negative s.
inline double cosine_weight(int m, double T, int s) {
  return tower_weight(m * std::numbers::pi / T, s);
}

inline double cosine_length(int m, double T) { return m == 0 ? T : 0.5 * T; }

/// H^M norm from cosine coefficients (rows m, columns components).
inline double sobolev_norm_cosine(const Eigen::MatrixXcd& c, double T, int M) {
  double s = 0.0;
  for (Eigen::Index m = 0; m < c.rows(); ++m)
    s += c.row(m).squaredNorm() * cosine_length(static_cast<int>(m), T) * cosine_weight(static_cast<int>(m), T, M);
  return std::sqrt(s);
}

/// H^M norm by quadrature of sum_{j<=M} |phi^{(j)}|^2.
inline double sobolev_norm_quadrature(const TimeSignal& phi, int M, const quad::Options& opts = {}) {
  if (M < 0) throw InvalidArgument("sobolev_norm: negative order");
  if (phi.max_derivative() < M || phi.smoothness_index() < M)
    throw InvalidArgument("sobolev_norm: signal lacks the requested derivatives");
  auto f = [&](double t) -> VecC {
    VecC v(1);
    double s = 0.0;
    for (int j = 0; j <= M; ++j) s += phi.derivative(j, t).squaredNorm();
    v[0] = s;
    return v;
  };
  const VecC r = quad::integrate(f, 1, 0.0, phi.horizon(), phi.breakpoints(), phi.singular_points(), opts);
  return std::sqrt(std::max(0.0, r[0].real()));
}

inline double sobolev_norm(const TimeSignal& phi, int M, const quad::Options& opts = {}) {
  if (phi.cosine_coefficients()) return sobolev_norm_cosine(*phi.cosine_coefficients(), phi.horizon(), M);
  return sobolev_norm_quadrature(phi, M, opts);
}

/// Cosine (or sine) coefficients of the pairing functional: p_{m,i} = <u, e_m (x) e_i>.
inline VecC basis_pairings(const GeneralizedInput& u, DualSpaceTag tag, int n_basis,
                           const quad::Options& opts = {}) {
  const TestFamily fam = tag.kind == DualKind::full_dual ? cosine_family(u.horizon(), u.dim(), n_basis)
                                                         : sine_family(u.horizon(), u.dim(), n_basis);
  return pair_family(u, fam, tag, opts);
}

/// Truncated dual norm of u in (H^M)* (full_dual) or in the dual of H^M_0-type
/// sine subspaces (zero_trace_dual), maximized over the first n_basis basis functions.
inline double dual_norm(const GeneralizedInput& u, int M, DualSpaceTag tag, int n_basis,
                        const quad::Options& opts = {}) {
  if (M < 0) throw InvalidArgument("dual_norm: negative order");
  if (M == 0) {
    if (!u.is_density_only()) throw InvalidArgument("dual_norm: distributional input is not in L^2");
    if (!u.density()) return 0.0;
    return sobolev_norm_quadrature(*u.density(), 0, opts);
  }
  if (n_basis < 1) throw InvalidArgument("dual_norm: n_basis must be positive");
  const VecC p = basis_pairings(u, tag, n_basis, opts);
  const double T = u.horizon();
  const Eigen::Index dim = u.dim();
  double s = 0.0;
  for (int j = 0; j < n_basis; ++j) {
    const int m = tag.kind == DualKind::full_dual ? j : j + 1;
    const double w = cosine_length(m, T) * cosine_weight(m, T, M);
    for (Eigen::Index i = 0; i < dim; ++i) s += std::norm(p[j * dim + i]) / w;
  }
  return std::sqrt(s);
}

/// Norm of u in U_s: H^s norm of the density for s >= 0, truncated dual norm for s < 0.
inline double input_norm(const GeneralizedInput& u, int s, int n_basis, const quad::Options& opts = {}) {
  if (s >= 0) {
    if (!u.is_density_only()) throw InvalidArgument("input_norm: distributional input has no positive norm");
    if (!u.density()) return 0.0;
    return sobolev_norm(*u.density(), s, opts);
  }
  return dual_norm(u, -s, DualSpaceTag::full(), n_basis, opts);
}

inline double GeneralizedInput::pairing_bound(const quad::Options& opts) const {
  const double point = std::sqrt(1.0 / std::tanh(horizon_));
  double c = density_ ? sobolev_norm_quadrature(*density_, 0, opts) : 0.0;
  for (const Atom& a : atoms_) c += a.u0.norm() * point;
  for (const auto& p : derivs_) c += p.u0.norm() * sobolev_norm_quadrature(p.g, 0, opts);
  return c;
}

/// Base-2 radical inverse.
inline double van_der_corput(unsigned n) {
  double q = 0.0, bk = 0.5;
  while (n) {
    if (n & 1u) q += bk;
    n >>= 1u;
    bk *= 0.5;
  }
  return q;
}

/// alpha(t) = sum_{j=1}^{J} 2^{-j} |t - q_j|^{-1/2} (1 + |log |t - q_j||)^{-1},
/// q_j = T * vdc(seed + j). Square integrable, not locally in L^p for p > 2.
class PathologicalAlpha {
public:
  static constexpr int kMaxPoints = 32;
  static constexpr double kCap = 1e300;

  struct Value {
    double value;
    bool capped;
  };

  PathologicalAlpha(double T, unsigned seed, int J) : T_(T) {
    if (!(T > 0.0)) throw InvalidArgument("PathologicalAlpha: horizon must be positive");
    if (J < 0 || J > kMaxPoints) throw InvalidArgument("PathologicalAlpha: J must lie in [0, 32]");
    for (int j = 1; j <= J; ++j) {
      points_.push_back(T * van_der_corput(seed + static_cast<unsigned>(j)));
      weights_.push_back(std::ldexp(1.0, -j));
    }
  }

  double horizon() const { return T_; }
  const std::vector<double>& singular_points() const { return points_; }

  Value evaluate(double t) const {
    double s = 0.0;
    for (std::size_t j = 0; j < points_.size(); ++j) {
      const double r = std::abs(t - points_[j]);
      if (r == 0.0) return {kCap, true};
      s += weights_[j] / (std::sqrt(r) * (1.0 + std::abs(std::log(r))));
    }
    return {s, false};
  }

  double operator()(double t) const { return evaluate(t).value; }

  TimeSignal as_signal() const {
    PathologicalAlpha self = *this;
    TimeSignal s(T_, 1,
                 [self](int, double t) -> Eigen::VectorXcd {
                   Eigen::VectorXcd v(1);
                   v[0] = self(t);
                   return v;
                 },
                 0, 0);
    s.with_singular_points(points_);
    return s;
  }

private:
  double T_;
  std::vector<double> points_;
  std::vector<double> weights_;
};

inline PathologicalAlpha sample_alpha_pathological(double T, unsigned seed, int J = 8) {
  return PathologicalAlpha(T, seed, J);
}

}  // namespace ilti

#endif  // ILTI_TIME_FUNCTION_SPACES_HPP
