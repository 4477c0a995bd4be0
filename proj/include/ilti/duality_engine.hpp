#ifndef ILTI_DUALITY_ENGINE_HPP
#define ILTI_DUALITY_ENGINE_HPP

// Final-state map, its adjoint, the state curve and its split, W_k probes and
// the truncated operator constants. Every extension to distributional inputs
// goes through the pairing <u, kernel>; nothing here mollifies.

#include "ilti/errors.hpp"
#include "ilti/quadrature.hpp"
#include "ilti/spectral_core.hpp"
#include "ilti/time_function_spaces.hpp"
#include "ilti/time_signal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace ilti {

struct FinalStateResult {
  TowerVector state;        // primal side
  int result_index = 0;     // min(0, N, M)
  double norm_bound_used = std::numeric_limits<double>::quiet_NaN();
};

struct CurveSample {
  std::vector<double> times;
  std::vector<std::string> labels;
  std::vector<std::vector<cplx>> pairings;  // [probe][time]
  std::optional<std::vector<std::vector<cplx>>> f1;
  std::optional<std::vector<std::vector<cplx>>> f2;
};

struct EngineOptions {
  quad::Options quadrature{};
  int n_basis = 256;            // cosine modes for negative-index Gram matrices
  bool compute_bound = true;    // fill FinalStateResult::norm_bound_used
};

/// Kernels s -> B* S*_{T-s} e_k for every mode, as a dim x n family on [0, T].
inline TestFamily mode_kernel_family(const SpectralSystem& sys, double T) {
  auto held = std::make_shared<const SpectralSystem>(sys);
  TestFamily f;
  f.horizon = T;
  f.dim = sys.input_dim();
  f.count = static_cast<Eigen::Index>(sys.size());
  f.max_derivative = kTrajectoryDerivatives;
  f.smoothness = TimeSignal::kSmooth;
  f.eval = [held, T](int d, double s) -> MatC {
    MatC m = held->output_matrix(T - s, d);
    return (d % 2 == 0) ? m : MatC(-m);
  };
  return f;
}

/// Kernels s -> B* S*_{t-s} phi_j for the columns phi_j of `coeffs` (n x P), on [0, t].
inline TestFamily probe_kernel_family(const SpectralSystem& sys, const MatC& coeffs, double t) {
  auto held = std::make_shared<const SpectralSystem>(sys);
  TestFamily f;
  f.horizon = t;
  f.dim = sys.input_dim();
  f.count = coeffs.cols();
  f.max_derivative = kTrajectoryDerivatives;
  f.smoothness = TimeSignal::kSmooth;
  f.eval = [held, coeffs, t](int d, double s) -> MatC {
    MatC m = held->output_matrix(t - s, d) * coeffs;
    return (d % 2 == 0) ? m : MatC(-m);
  };
  return f;
}

/// s -> B* S*_{T-s} phi on [0, T].
inline TimeSignal adjoint_final_map(const SpectralSystem& sys, const TowerVector& phi, double T) {
  if (phi.side != Side::adjoint) throw InvalidArgument("adjoint_final_map: expects an adjoint-side vector");
  if (phi.tower_index < 1) throw InvalidArgument("adjoint_final_map: needs tower index >= 1");
  const TimeSignal forward = output_trajectory(sys, phi, T);
  return TimeSignal(T, sys.input_dim(),
                    [forward, T](int d, double s) -> Eigen::VectorXcd {
                      Eigen::VectorXcd v = forward.derivative(d, T - s);
                      return (d % 2 == 0) ? v : Eigen::VectorXcd(-v);
                    },
                    forward.max_derivative(), TimeSignal::kSmooth);
}

inline std::vector<VecC> adjoint_final_map(const SpectralSystem& sys, const TowerVector& phi,
                                           const std::vector<double>& grid) {
  const double T = grid.empty() ? sys.time_horizon_default() : grid.back();
  const TimeSignal s = adjoint_final_map(sys, phi, T);
  std::vector<VecC> out;
  for (double t : grid) out.push_back(s(t));
  return out;
}

namespace detail {

/// sup over a of (a^H A a) / (a^H B a) for Hermitian PSD A, B.
/// Returns +inf when B is singular on a direction where A is not negligible.
inline double max_generalized_ratio(const MatC& A, const MatC& B) {
  const Eigen::Index n = A.rows();
  if (n == 0) return 0.0;
  Eigen::VectorXd scale(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = std::max(std::abs(A(i, i)), std::abs(B(i, i)));
    scale[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 1.0;
  }
  const MatC As = scale.asDiagonal() * A * scale.asDiagonal();
  const MatC Bs = scale.asDiagonal() * B * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatC> eb(0.5 * (Bs + Bs.adjoint()));
  const Eigen::VectorXd lam = eb.eigenvalues();
  const double lmax = lam.maxCoeff();
  if (!(lmax > 0.0)) throw DegenerateOutput("output Gram matrix vanishes on the truncation");
  const double cut = 1e-14 * lmax;
  std::vector<Eigen::Index> range, null;
  for (Eigen::Index i = 0; i < n; ++i) (lam[i] > cut ? range : null).push_back(i);
  const double amax = std::max(1e-300, Eigen::SelfAdjointEigenSolver<MatC>(0.5 * (As + As.adjoint()), Eigen::EigenvaluesOnly)
                                            .eigenvalues()
                                            .cwiseAbs()
                                            .maxCoeff());
  if (!null.empty()) {
    MatC V(n, static_cast<Eigen::Index>(null.size()));
    for (std::size_t j = 0; j < null.size(); ++j) V.col(static_cast<Eigen::Index>(j)) = eb.eigenvectors().col(null[j]);
    const MatC An = V.adjoint() * As * V;
    const double anull = Eigen::SelfAdjointEigenSolver<MatC>(0.5 * (An + An.adjoint()), Eigen::EigenvaluesOnly)
                             .eigenvalues()
                             .maxCoeff();
    if (anull > 1e-10 * amax) return std::numeric_limits<double>::infinity();
  }
  MatC V(n, static_cast<Eigen::Index>(range.size()));
  Eigen::VectorXd inv(static_cast<Eigen::Index>(range.size()));
  for (std::size_t j = 0; j < range.size(); ++j) {
    V.col(static_cast<Eigen::Index>(j)) = eb.eigenvectors().col(range[j]);
    inv[static_cast<Eigen::Index>(j)] = 1.0 / std::sqrt(lam[range[j]]);
  }
  const MatC C = inv.asDiagonal() * (V.adjoint() * As * V) * inv.asDiagonal();
  return std::max(0.0, Eigen::SelfAdjointEigenSolver<MatC>(0.5 * (C + C.adjoint()), Eigen::EigenvaluesOnly)
                           .eigenvalues()
                           .maxCoeff());
}

/// integral_0^T e^{mu (T - t)} cos(w t) dt.
inline cplx exp_cosine_moment(cplx mu, int m, double T) {
  if (m == 0) return exp_integral(mu, T);
  const double w = m * std::numbers::pi / T;
  const cplx den = mu * mu + w * w;
  if (std::abs(den) > 1e-6 * (std::norm(mu) + w * w)) {
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    return mu * (std::exp(mu * T) - sign) / den;
  }
  return quad::integrate_scalar([&](double t) { return std::exp(mu * (T - t)) * std::cos(w * t); }, 0.0, T);
}

}  // namespace detail

/// Matrix G with ||F_T* a||^2_{U_s} = a^H G a (cosine realization for s < 0).
inline MatC output_gram(const SpectralSystem& sys, double T, int s, const EngineOptions& opts = {}) {
  const auto n = static_cast<Eigen::Index>(sys.size());
  const Eigen::Index dim = sys.input_dim();
  const MatC& B = sys.trace_matrix();
  if (s >= 0 && !sys.has_chains()) {
    MatC G(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const cplx mj = sys.modes()[static_cast<std::size_t>(j)].eigenvalue;
      for (Eigen::Index k = 0; k < n; ++k) {
        const cplx mk = sys.modes()[static_cast<std::size_t>(k)].eigenvalue;
        const cplx r = mk * std::conj(mj);
        cplx poly = 1.0, p = 1.0;
        for (int d = 1; d <= s; ++d) {
          p *= r;
          poly += p;
        }
        G(j, k) = B.col(j).dot(B.col(k)) * exp_integral(mk + std::conj(mj), T) * poly;
      }
    }
    return G;
  }
  if (s >= 0) {
    auto f = [&](double t) -> VecC {
      MatC acc = MatC::Zero(n, n);
      for (int d = 0; d <= s; ++d) {
        const MatC M = sys.output_matrix(T - t, d);
        acc.noalias() += M.adjoint() * M;
      }
      return Eigen::Map<VecC>(acc.data(), n * n);
    };
    const VecC v = quad::integrate(f, n * n, 0.0, T, {}, {}, opts.quadrature);
    return Eigen::Map<const MatC>(v.data(), n, n);
  }
  // Cosine projections P_{(m,i),k} = (f_k, cos_m e_i)_{L^2}.
  const int nb = opts.n_basis;
  MatC P(nb * dim, n);
  if (!sys.has_chains()) {
    for (int m = 0; m < nb; ++m)
      for (Eigen::Index k = 0; k < n; ++k) {
        const cplx mom = detail::exp_cosine_moment(sys.modes()[static_cast<std::size_t>(k)].eigenvalue, m, T);
        for (Eigen::Index i = 0; i < dim; ++i) P(m * dim + i, k) = B(i, k) * mom;
      }
  } else {
    const TestFamily cf = cosine_family(T, dim, nb);
    auto f = [&](double t) -> VecC {
      const MatC M = cf.eval(0, t).adjoint() * sys.output_matrix(T - t, 0);
      return Eigen::Map<const VecC>(M.data(), M.size());
    };
    const VecC v = quad::integrate(f, nb * dim * n, 0.0, T, {}, {}, opts.quadrature);
    P = Eigen::Map<const MatC>(v.data(), nb * dim, n);
  }
  Eigen::VectorXd D(nb * dim);
  for (int m = 0; m < nb; ++m)
    for (Eigen::Index i = 0; i < dim; ++i) D[m * dim + i] = cosine_weight(m, T, s) / cosine_length(m, T);
  return P.adjoint() * D.asDiagonal() * P;
}

/// Matrix S of a -> S*_T a in mode coordinates.
inline MatC adjoint_flow_matrix(const SpectralSystem& sys, double T) {
  const auto n = static_cast<Eigen::Index>(sys.size());
  MatC S(n, n);
  for (Eigen::Index k = 0; k < n; ++k) S.col(k) = sys.adjoint_flow(T, VecC::Unit(n, k));
  return S;
}

/// sup ||F_T* phi||_{U_N} / ||phi||_{X_N} on the truncation.
inline double adjoint_operator_norm(const SpectralSystem& sys, double T, int N, const EngineOptions& opts = {}) {
  if (sys.size() == 0) return 0.0;
  const MatC G = output_gram(sys, T, N, opts);
  const Eigen::VectorXd w = sys.weights(N);
  const Eigen::VectorXd inv = w.cwiseSqrt().cwiseInverse();
  const MatC C = inv.asDiagonal() * G * inv.asDiagonal();
  const double l = Eigen::SelfAdjointEigenSolver<MatC>(0.5 * (C + C.adjoint()), Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  return std::sqrt(std::max(0.0, l));
}

/// Optimal truncated admissibility constant sup ||S*_T phi||_X / ||F_T* phi||_{L^2}.
/// `trial_count` random directions are evaluated as a lower-bound cross-check.
inline double admissibility_constant(const SpectralSystem& sys, double T, int trial_count = 0,
                                     const EngineOptions& opts = {}) {
  const MatC G = output_gram(sys, T, 0, opts);
  const MatC S = adjoint_flow_matrix(sys, T);
  const MatC A = S.adjoint() * S;
  double best = detail::max_generalized_ratio(A, G);
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> nd;
  for (int i = 0; i < trial_count && std::isfinite(best); ++i) {
    VecC a(static_cast<Eigen::Index>(sys.size()));
    for (auto& x : a) x = cplx(nd(rng), nd(rng));
    const double num = (a.adjoint() * A * a)(0, 0).real();
    const double den = (a.adjoint() * G * a)(0, 0).real();
    if (den > 0.0) best = std::max(best, num / den);
  }
  return std::sqrt(best);
}

inline FinalStateResult final_state(const SpectralSystem& sys, const TowerVector& z0, const GeneralizedInput& u,
                                    double T, DualSpaceTag tag = {}, const EngineOptions& opts = {}) {
  if (z0.side != Side::primal) throw InvalidArgument("final_state: initial state must be primal-side");
  if (u.dim() != sys.input_dim()) throw InvalidArgument("final_state: input dimension mismatch");
  if (std::abs(u.horizon() - T) > 1e-14 * std::max(1.0, T)) throw InvalidArgument("final_state: horizon mismatch");
  VecC a = sys.primal_flow(T, sys.to_dense(z0));
  a += pair_family(u, mode_kernel_family(sys, T), tag, opts.quadrature);
  FinalStateResult r;
  r.result_index = std::min({0, z0.tower_index, u.dual_index()});
  r.state = sys.from_dense(a, r.result_index, Side::primal);
  if (opts.compute_bound) r.norm_bound_used = adjoint_operator_norm(sys, T, -r.result_index, opts);
  return r;
}

namespace detail {

/// I_j(z) = int_0^1 e^{z (1 - x)} x^j dx for j = 0..J.
inline std::vector<cplx> exp_moments(cplx z, int J) {
  std::vector<cplx> I(static_cast<std::size_t>(J + 1));
  const double az = std::abs(z);
  auto series = [&](int j) {
    // sum_m z^m j! / (m + j + 1)!
    cplx term = 1.0 / double(j + 1), sum = term;
    for (int m = 0; m < 400; ++m) {
      term *= z / double(m + j + 2);
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  };
  for (int j = 0; j <= J; ++j) {
    if (double(j + 1) > az) {
      I[static_cast<std::size_t>(j)] = series(j);
    } else if (j == 0) {
      I[0] = (std::exp(z) - 1.0) / z;
    } else {
      I[static_cast<std::size_t>(j)] = (double(j) * I[static_cast<std::size_t>(j - 1)] - 1.0) / z;
    }
  }
  return I;
}

}  // namespace detail

/// Reference solution of the primal ODE  c' = A c + B u  (mode coordinates) by an
/// exponential integrator: on each grid step the forcing is interpolated at
/// Chebyshev nodes by a polynomial of the given degree and integrated exactly.
inline TowerVector duhamel_oracle(const SpectralSystem& sys, const TowerVector& z0, const GeneralizedInput& u,
                                  const std::vector<double>& grid, int degree = 7) {
  if (!u.is_density_only()) throw InvalidArgument("duhamel_oracle: input must be an L^2 density");
  if (z0.side != Side::primal) throw InvalidArgument("duhamel_oracle: initial state must be primal-side");
  if (grid.size() < 2) throw InvalidArgument("duhamel_oracle: grid needs at least two points");
  const auto n = static_cast<Eigen::Index>(sys.size());
  const int p = degree;
  // Chebyshev nodes on [0, 1] and the inverse Vandermonde matrix for monomials in x.
  Eigen::VectorXd x(p + 1);
  for (int i = 0; i <= p; ++i) x[i] = 0.5 * (1.0 - std::cos((2.0 * i + 1.0) * std::numbers::pi / (2.0 * (p + 1))));
  Eigen::MatrixXd V(p + 1, p + 1);
  for (int i = 0; i <= p; ++i)
    for (int j = 0; j <= p; ++j) V(i, j) = std::pow(x[i], j);
  const Eigen::MatrixXd Vinv = V.inverse();

  // Chain bookkeeping: position of the previous chain member (or -1).
  std::vector<Eigen::Index> prev(static_cast<std::size_t>(n), -1);
  for (const Eigenmode& m : sys.modes()) {
    if (m.branch != Branch::jordan || m.chain.size() < 2) continue;
    for (std::size_t i = 1; i < m.chain.size(); ++i)
      if (m.chain[i] == m.index) prev[sys.position(m.index)] = static_cast<Eigen::Index>(sys.position(m.chain[i - 1]));
  }

  const MatC& B = sys.trace_matrix();
  const TimeSignal& dens = *u.density();
  VecC c = sys.to_dense(z0);
  const int maxr = 3;
  for (std::size_t s = 0; s + 1 < grid.size(); ++s) {
    const double t0 = grid[s], h = grid[s + 1] - grid[s];
    // Forcing samples f_k(x_i) = (u, b_k)_U, then monomial coefficients F (p+1 x n).
    MatC samples(p + 1, n);
    for (int i = 0; i <= p; ++i) samples.row(i) = (B.adjoint() * dens(t0 + h * x[i])).transpose();
    const MatC F = Vinv.cast<cplx>() * samples;
    VecC next(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const cplx lam = std::conj(sys.modes()[static_cast<std::size_t>(k)].eigenvalue);
      const cplx z = lam * h;
      const auto I = detail::exp_moments(z, p + maxr);
      // Diagonal part.
      cplx val = std::exp(z) * c[k];
      for (int j = 0; j <= p; ++j) val += h * F(j, k) * I[static_cast<std::size_t>(j)];
      // Chain coupling c_k' = lam c_k + c_prev + f_k: expand e^{J h} with J = lam + nilpotent.
      // The member r steps back contributes
      //   e^{lam h} h^r/r! c_r(0) + h int_0^1 e^{lam h (1-x)} (h(1-x))^r/r! f_r(x) dx.
      if (prev[static_cast<std::size_t>(k)] >= 0) {
        Eigen::Index q = prev[static_cast<std::size_t>(k)];
        double fact = 1.0;
        for (int r = 1; q >= 0; ++r, q = prev[static_cast<std::size_t>(q)]) {
          fact *= r;
          const double hr = std::pow(h, r) / fact;
          val += std::exp(z) * hr * c[q];
          // int_0^1 e^{z(1-x)} (1-x)^r x^j dx = sum_i C(r,i) (-1)^i I_{j+i}
          for (int j = 0; j <= p; ++j) {
            cplx K = 0.0;
            double binom = 1.0;
            for (int i = 0; i <= r; ++i) {
              if (i > 0) binom = binom * (r - i + 1) / i;
              K += ((i % 2) ? -binom : binom) * I[static_cast<std::size_t>(j + i)];
            }
            val += h * hr * F(j, q) * K;
          }
        }
      }
      next[k] = val;
    }
    c = next;
  }
  return sys.from_dense(c, std::min(0, z0.tower_index), Side::primal);
}

inline std::vector<double> uniform_grid(double T, int n_grid) {
  if (n_grid < 2) throw InvalidArgument("grid needs at least two points");
  std::vector<double> g(static_cast<std::size_t>(n_grid));
  for (int i = 0; i < n_grid; ++i) g[static_cast<std::size_t>(i)] = T * i / (n_grid - 1);
  g.back() = T;
  return g;
}

namespace detail {

inline MatC probe_matrix(const SpectralSystem& sys, const std::vector<TowerVector>& probes) {
  MatC P(static_cast<Eigen::Index>(sys.size()), static_cast<Eigen::Index>(probes.size()));
  for (std::size_t j = 0; j < probes.size(); ++j) {
    if (probes[j].side != Side::adjoint) throw InvalidArgument("probes must be adjoint-side vectors");
    P.col(static_cast<Eigen::Index>(j)) = sys.to_dense(probes[j]);
  }
  return P;
}

/// <1_{[0,t]} u, B* S*_{t-.} phi_j> for the columns of P.
inline VecC curve_at(const SpectralSystem& sys, const GeneralizedInput& u, const MatC& P, double t,
                     const quad::Options& opts) {
  return pair_family_restricted(u, probe_kernel_family(sys, P, t), t, opts);
}

/// Constant kernel s -> B* phi_j on [0, t].
inline TestFamily constant_kernel_family(const SpectralSystem& sys, const MatC& P, double t) {
  const MatC K = sys.trace_matrix() * P;
  TestFamily f;
  f.horizon = t;
  f.dim = sys.input_dim();
  f.count = P.cols();
  f.max_derivative = kTrajectoryDerivatives;
  f.smoothness = TimeSignal::kSmooth;
  f.eval = [K](int d, double) -> MatC { return d == 0 ? K : MatC::Zero(K.rows(), K.cols()); };
  return f;
}

/// Kernel s -> B* (S*_{t-s} - 1) phi_j on [0, t].
inline TestFamily deviation_kernel_family(const SpectralSystem& sys, const MatC& P, double t) {
  const TestFamily full = probe_kernel_family(sys, P, t);
  const MatC K = sys.trace_matrix() * P;
  TestFamily f = full;
  f.eval = [full, K](int d, double s) -> MatC {
    MatC m = full.eval(d, s);
    if (d == 0) m -= K;
    return m;
  };
  return f;
}

inline void check_probe_index(const GeneralizedInput& u, const std::vector<TowerVector>& probes) {
  if (u.is_density_only()) return;
  for (const auto& p : probes)
    if (p.tower_index < 2) throw InvalidArgument("state curve of a distributional input needs probes in X_2");
}

}  // namespace detail

inline CurveSample state_curve(const SpectralSystem& sys, const GeneralizedInput& u, const std::vector<double>& grid,
                               const std::vector<TowerVector>& probes, const quad::Options& opts = {}) {
  detail::check_probe_index(u, probes);
  const MatC P = detail::probe_matrix(sys, probes);
  CurveSample out;
  out.times = grid;
  for (std::size_t j = 0; j < probes.size(); ++j) out.labels.push_back("probe" + std::to_string(j));
  out.pairings.assign(probes.size(), std::vector<cplx>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const VecC v = detail::curve_at(sys, u, P, grid[i], opts);
    for (std::size_t j = 0; j < probes.size(); ++j) out.pairings[j][i] = v[static_cast<Eigen::Index>(j)];
  }
  return out;
}

struct CurveSplit {
  std::vector<cplx> f1;
  std::vector<cplx> f2;
};

/// F^2 uses the frozen kernel B* phi, F^1 the kernel B* (S*_{t-s} - 1) phi.
inline CurveSplit curve_split(const SpectralSystem& sys, const GeneralizedInput& u, const std::vector<double>& grid,
                              const TowerVector& probe, const quad::Options& opts = {}, bool with_f1 = true) {
  detail::check_probe_index(u, {probe});
  const MatC P = detail::probe_matrix(sys, {probe});
  CurveSplit out;
  out.f2.resize(grid.size());
  if (with_f1) out.f1.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    out.f2[i] = pair_family_restricted(u, detail::constant_kernel_family(sys, P, t), t, opts)[0];
    if (with_f1) out.f1[i] = pair_family_restricted(u, detail::deviation_kernel_family(sys, P, t), t, opts)[0];
  }
  return out;
}

/// Nonzero adjoint vector on `support` with B* A*^i phi = 0 for i < k, unit X-norm.
inline TowerVector construct_Wk_vector(const SpectralSystem& sys, int k, const std::vector<int>& support) {
  if (k < 1) throw InvalidArgument("construct_Wk_vector: k must be at least 1");
  if (support.empty()) throw InsufficientSupport("construct_Wk_vector: empty support");
  const Eigen::Index dim = sys.input_dim();
  const auto s = static_cast<Eigen::Index>(support.size());
  const auto n = static_cast<Eigen::Index>(sys.size());
  MatC C(k * dim, s);
  for (Eigen::Index j = 0; j < s; ++j) {
    VecC e = VecC::Unit(n, static_cast<Eigen::Index>(sys.position(support[static_cast<std::size_t>(j)])));
    for (int i = 0; i < k; ++i) {
      C.block(i * dim, j, dim, 1) = sys.trace(e);
      e = sys.adjoint_generator(e);
    }
  }
  VecC a;
  const double cmax = C.cwiseAbs().maxCoeff();
  if (cmax == 0.0) {
    a = VecC::Unit(s, 0);
  } else {
    Eigen::JacobiSVD<MatC> svd(C, Eigen::ComputeFullV);
    const Eigen::VectorXd sv = svd.singularValues();
    const double tol = 1e-12 * sv[0];
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] > tol) ++rank;
    if (rank >= s) throw InsufficientSupport("construct_Wk_vector: constraints leave only the zero vector");
    a = svd.matrixV().col(s - 1);
  }
  // Fix the phase: first nonnegligible entry real positive.
  for (Eigen::Index j = 0; j < s; ++j)
    if (std::abs(a[j]) > 1e-12) {
      a *= std::abs(a[j]) / a[j];
      break;
    }
  a /= a.norm();
  TowerVector v{{}, std::max(2, k), Side::adjoint};
  for (Eigen::Index j = 0; j < s; ++j) v.coefficients[support[static_cast<std::size_t>(j)]] = a[j];
  return v;
}

struct DerivativeProbe {
  int order = 0;                  // derivative order d
  std::vector<double> steps;      // h per refinement level
  std::vector<cplx> jumps;        // D^d(t*+2h) - D^d(t*-2h)
  std::vector<double> orders;     // log2 |jump(h) / jump(h/2)|
  cplx extrapolated_jump{};       // 2 jump(h_min) - jump(2 h_min)
  bool continuous = false;
};

struct RegularityReport {
  double t_star = 0.0;
  std::vector<DerivativeProbe> derivatives;
};

struct RegularityOptions {
  double h0 = 1e-5;
  int levels = 4;
  double nominal_order = 1.0;
  double order_slack = 0.3;
  double jump_tolerance = 1e-8;
  quad::Options quadrature{};
};

/// Finite-difference probe of t -> <F u (t), phi> around t_star for derivative
/// orders 0..N, using 3-point centered stencils at t* +- 2h and halving h.
inline RegularityReport regularity_probe(const SpectralSystem& sys, const GeneralizedInput& u, const TowerVector& phi,
                                         double t_star, int N, const RegularityOptions& opts = {}) {
  if (N < 0) throw InvalidArgument("regularity_probe: negative order");
  const MatC P = detail::probe_matrix(sys, {phi});
  auto C = [&](double t) { return detail::curve_at(sys, u, P, t, opts.quadrature)[0]; };
  auto D = [&](int d, double t, double h) -> cplx {
    switch (d) {
      case 0: return C(t);
      case 1: return (C(t + h) - C(t - h)) / (2.0 * h);
      case 2: return (C(t + h) - 2.0 * C(t) + C(t - h)) / (h * h);
      default: {
        // Nested centered differences for higher orders.
        std::function<cplx(int, double)> rec = [&](int k, double s) -> cplx {
          if (k == 0) return C(s);
          return (rec(k - 1, s + h) - rec(k - 1, s - h)) / (2.0 * h);
        };
        return rec(d, t);
      }
    }
  };
  RegularityReport rep;
  rep.t_star = t_star;
  for (int d = 0; d <= N; ++d) {
    DerivativeProbe p;
    p.order = d;
    double h = opts.h0;
    for (int l = 0; l < opts.levels; ++l, h *= 0.5) {
      p.steps.push_back(h);
      p.jumps.push_back(D(d, t_star + 2 * h, h) - D(d, t_star - 2 * h, h));
    }
    for (std::size_t l = 0; l + 1 < p.jumps.size(); ++l) {
      const double a = std::abs(p.jumps[l]), b = std::abs(p.jumps[l + 1]);
      p.orders.push_back((a > 0.0 && b > 0.0) ? std::log2(a / b) : std::numeric_limits<double>::infinity());
    }
    const std::size_t L = p.jumps.size();
    p.extrapolated_jump = L >= 2 ? 2.0 * p.jumps[L - 1] - p.jumps[L - 2] : p.jumps.back();
    const bool converging = !p.orders.empty() && p.orders.back() >= opts.nominal_order - opts.order_slack;
    p.continuous = converging || std::abs(p.extrapolated_jump) <= opts.jump_tolerance;
    rep.derivatives.push_back(std::move(p));
  }
  return rep;
}

}  // namespace ilti

#endif  // ILTI_DUALITY_ENGINE_HPP
