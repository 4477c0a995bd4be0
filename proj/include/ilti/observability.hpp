#ifndef ILTI_OBSERVABILITY_HPP
#define ILTI_OBSERVABILITY_HPP

// Observability and controllability on finite truncations: range inclusion
// checks, observability constants, the heat-wave defect scan and Gramian-based
// null controls.

#include "ilti/duality_engine.hpp"
#include "ilti/model_zoo/heatwave.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace ilti {

struct DouglasResult {
  bool inclusion = false;
  double best_constant = 0.0;  // +inf when range(L) is not contained in range(R)
};

/// Decides range(L) in range(R) and the least c with ||L* y|| <= c ||R* y||.
inline DouglasResult douglas_check(const MatC& L, const MatC& R) {
  if (L.rows() != R.rows()) throw InvalidArgument("douglas_check: L and R must share the codomain");
  const Eigen::Index m = L.rows();
  MatC RL(m, R.cols() + L.cols());
  RL << R, L;
  DouglasResult out;
  if (RL.size() == 0) {
    out.inclusion = true;
    return out;
  }
  const Eigen::JacobiSVD<MatC> s_all(RL);
  const double smax = s_all.singularValues().size() ? s_all.singularValues()[0] : 0.0;
  if (smax == 0.0) {
    out.inclusion = true;
    return out;
  }
  const double tol = 1e-10 * smax;
  auto rank = [tol](const MatC& M) {
    if (M.size() == 0) return Eigen::Index(0);
    const Eigen::VectorXd sv = Eigen::JacobiSVD<MatC>(M).singularValues();
    return static_cast<Eigen::Index>((sv.array() > tol).count());
  };
  const Eigen::Index rR = rank(R);
  out.inclusion = rank(RL) == rR;
  if (rR == 0) {
    out.best_constant = out.inclusion ? 0.0 : std::numeric_limits<double>::infinity();
    return out;
  }
  if (!out.inclusion) {
    out.best_constant = std::numeric_limits<double>::infinity();
    return out;
  }
  // Restrict to range(R), where R R* is invertible, and take the largest
  // generalized eigenvalue of (L L*, R R*) there.
  const Eigen::JacobiSVD<MatC> sr(R, Eigen::ComputeThinU);
  const MatC U = sr.matrixU().leftCols(rR);
  const Eigen::VectorXd sig = sr.singularValues().head(rR);
  const MatC Lr = sig.cwiseInverse().asDiagonal() * (U.adjoint() * L);
  const Eigen::VectorXd sl = Eigen::JacobiSVD<MatC>(Lr).singularValues();
  out.best_constant = sl.size() ? sl[0] : 0.0;
  return out;
}

struct ObservabilitySetup {
  SpectralSystem system;
  int N = 0;                        // state tower index
  int M = 0;                        // input tower index
  double T = 1.0;
  std::vector<int> output_modes;    // directions y: adjoint modes in the output range (empty = all)
  std::vector<int> initial_modes;   // modes kept by the initial projection (empty = all)
  int input_n_basis = 256;          // cosine subspace realizing the input restriction when M > 0
  bool single_mode_directions = false;
  quad::Options quadrature{};

  int nu() const { return -std::min({0, N, M}); }
};

struct ModeRatio {
  int k = 0;
  double numerator = 0.0;
  double denominator = 0.0;
  double ratio = 0.0;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

struct ObservabilityReport {
  int N = 0;
  double T = 1.0;
  std::vector<ModeRatio> per_mode;
  LineFit fit;       // log ratio minus log w_N(|mu_k|), against sqrt|k|
  LineFit raw_fit;   // log ratio against sqrt|k|
  bool verdict = false;
  std::vector<std::string> warnings;
};

struct ObservabilityResult {
  double constant = 0.0;
  ObservabilityReport report;
};

namespace detail {

inline LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw InvalidArgument("line fit: abscissae are degenerate");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

/// Subsystem on the listed modes (all when empty).
inline SpectralSystem restrict_modes(const SpectralSystem& sys, const std::vector<int>& keep) {
  if (keep.empty()) return sys;
  std::vector<Eigenmode> modes;
  for (int k : keep) modes.push_back(sys.mode(k));
  return SpectralSystem(std::move(modes), sys.growth_bound(), sys.input_dim(), sys.time_horizon_default());
}

}  // namespace detail

/// Extremal ratio ||P* S*_T y||_{X_{-N}} / ||B* S*_t y||_{U_{-M}} on the truncation.
/// `sample_count` random directions give a lower-bound cross-check.
inline ObservabilityResult observability_test(const ObservabilitySetup& setup, int sample_count = 0) {
  const SpectralSystem sys = detail::restrict_modes(setup.system, setup.output_modes);
  const auto n = static_cast<Eigen::Index>(sys.size());
  if (n == 0) throw InvalidArgument("observability_test: empty truncation");
  EngineOptions eo;
  eo.quadrature = setup.quadrature;
  eo.n_basis = setup.input_n_basis;
  const MatC G = output_gram(sys, setup.T, -setup.M, eo);

  // Left side: keep the initial-projection modes, then weight by X_{-N}.
  MatC S = adjoint_flow_matrix(sys, setup.T);
  if (!setup.initial_modes.empty()) {
    for (Eigen::Index p = 0; p < n; ++p) {
      const int k = sys.modes()[static_cast<std::size_t>(p)].index;
      if (std::find(setup.initial_modes.begin(), setup.initial_modes.end(), k) == setup.initial_modes.end())
        S.row(p).setZero();
    }
  }
  const Eigen::VectorXd w = sys.weights(-setup.N);
  const MatC A = S.adjoint() * w.asDiagonal() * S;

  ObservabilityResult r;
  r.report.N = setup.N;
  r.report.T = setup.T;
  double best = 0.0;
  for (Eigen::Index p = 0; p < n; ++p) {
    ModeRatio m;
    m.k = sys.modes()[static_cast<std::size_t>(p)].index;
    m.numerator = std::sqrt(std::max(0.0, G(p, p).real()));
    m.denominator = std::sqrt(std::max(0.0, A(p, p).real()));
    m.ratio = m.denominator > 0.0 ? m.numerator / m.denominator : std::numeric_limits<double>::infinity();
    r.report.per_mode.push_back(m);
    if (setup.single_mode_directions && m.denominator > 0.0)
      best = std::max(best, m.numerator > 0.0 ? 1.0 / m.ratio : std::numeric_limits<double>::infinity());
  }
  if (!setup.single_mode_directions) {
    best = detail::max_generalized_ratio(A, G);
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> nd;
    for (int i = 0; i < sample_count && std::isfinite(best); ++i) {
      VecC a(n);
      for (auto& x : a) x = cplx(nd(rng), nd(rng));
      const double num = (a.adjoint() * A * a)(0, 0).real();
      const double den = (a.adjoint() * G * a)(0, 0).real();
      if (den > 0.0) best = std::max(best, num / den);
    }
    best = std::sqrt(best);
  } else if (G.diagonal().real().maxCoeff() <= 0.0) {
    throw DegenerateOutput("observability_test: output vanishes on every direction");
  }
  r.constant = best;
  return r;
}

/// Per-mode ratios ||B* S*_t phi_k||_{H^N} / ||S*_T phi_k||_{X_{-N}} for the
/// hyperbolic modes of `sys` with k in [k_min, k_max], and the fit in sqrt|k|.
inline ObservabilityReport defect_scan(const SpectralSystem& sys, int N, int k_min, int k_max, double T) {
  if (N < 0) throw InvalidArgument("defect_scan: N must be nonnegative");
  if (!(T > 0.0)) throw InvalidArgument("defect_scan: T must be positive");
  ObservabilityReport rep;
  rep.N = N;
  rep.T = T;
  std::vector<double> x, y, yc;
  for (const Eigenmode& m : sys.modes()) {
    if (m.index < k_min || m.index > k_max || m.branch != Branch::hyperbolic) continue;
    const cplx mu = m.eigenvalue;
    ModeRatio r;
    r.k = m.index;
    r.numerator = m.control_trace.norm() * exp_sobolev_norm(mu, T, N);
    r.denominator = std::exp(T * mu.real()) * std::sqrt(tower_weight(std::abs(mu), -N));
    if (!(r.numerator > 0.0)) {
      rep.warnings.push_back("mode " + std::to_string(m.index) + " has a vanishing output; skipped");
      continue;
    }
    r.ratio = r.numerator / r.denominator;
    rep.per_mode.push_back(r);
    x.push_back(std::sqrt(std::abs(double(m.index))));
    y.push_back(std::log(r.ratio));
    yc.push_back(std::log(r.ratio) - std::log(tower_weight(std::abs(mu), N)));
  }
  if (rep.per_mode.size() < 10) throw InvalidArgument("defect_scan: the fit needs at least 10 modes");
  rep.raw_fit = detail::least_squares_line(x, y);
  rep.fit = detail::least_squares_line(x, yc);
  rep.verdict = rep.fit.slope <= -0.5;
  return rep;
}

/// Builds the hyperbolic heat-wave modes for [k_min, k_max] and scans them;
/// modes whose root search fails are skipped with a warning.
inline ObservabilityReport defect_scan_heatwave(int N, int k_min, int k_max, double T) {
  std::vector<Eigenmode> modes;
  std::vector<std::string> warnings;
  for (int k = k_min; k <= k_max; ++k) {
    if (std::abs(k) < 5) continue;
    try {
      const auto e = zoo::heatwave_eigen(k);
      Eigenmode m;
      m.index = k;
      m.eigenvalue = e.root;
      m.branch = Branch::hyperbolic;
      m.control_trace = VecC::Constant(1, zoo::heatwave_mode(e.root, 3).control_trace);
      modes.push_back(m);
    } catch (const RootNotConverged& err) {
      warnings.push_back(std::string("k = ") + std::to_string(k) + ": " + err.what());
    }
  }
  const SpectralSystem sys(std::move(modes), 0.0, 1, T);
  ObservabilityReport rep = defect_scan(sys, N, k_min, k_max, T);
  rep.warnings.insert(rep.warnings.begin(), warnings.begin(), warnings.end());
  return rep;
}

struct NullControlOptions {
  std::optional<double> cg_tolerance;  // iterative Gram solve when set, direct otherwise
  double singular_threshold = 1e14;    // condition number above which the Gram matrix is rejected
  quad::Options quadrature{};
};

struct NullControl {
  TimeSignal control;
  VecC coefficients;          // u(s) = sum_j c_j B* S*_{T-s} e_j
  MatC gram;
  double condition = 0.0;
  double residual = 0.0;      // ||z(T)||_X with this control
  double control_norm = 0.0;  // ||u||_{L^2}
};

/// Minimum L^2-norm control steering z0 to 0 at time T on the truncation.
inline NullControl gramian_null_control(const SpectralSystem& sys, const TowerVector& z0, double T,
                                        const NullControlOptions& opts = {}) {
  if (z0.side != Side::primal) throw InvalidArgument("gramian_null_control: initial state must be primal-side");
  if (!(T > 0.0)) throw InvalidArgument("gramian_null_control: T must be positive");
  EngineOptions eo;
  eo.quadrature = opts.quadrature;
  NullControl out;
  out.gram = output_gram(sys, T, 0, eo);
  const MatC H = 0.5 * (out.gram + out.gram.adjoint());
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<MatC>(H, Eigen::EigenvaluesOnly).eigenvalues();
  const double lmax = ev.maxCoeff(), lmin = ev.minCoeff();
  out.condition = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  if (!(lmax > 0.0) || !(out.condition < opts.singular_threshold))
    throw SingularGramian("gramian_null_control: truncated Gramian is singular", out.condition);

  const VecC rhs = -sys.primal_flow(T, sys.to_dense(z0));
  if (opts.cg_tolerance) {
    Eigen::ConjugateGradient<MatC, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(*opts.cg_tolerance);
    cg.setMaxIterations(static_cast<Eigen::Index>(10 * H.rows() + 100));
    cg.compute(H);
    out.coefficients = cg.solve(rhs);
  } else {
    out.coefficients = H.ldlt().solve(rhs);
  }

  auto held = std::make_shared<const SpectralSystem>(sys);
  const VecC c = out.coefficients;
  out.control = TimeSignal(T, sys.input_dim(),
                           [held, c, T](int d, double s) -> Eigen::VectorXcd {
                             // d/ds of B* S*_{T-s} = -B* S*_{T-s} A*
                             const double sign = (d % 2 == 0) ? 1.0 : -1.0;
                             return sign * (held->output_matrix(T - s, d) * c);
                           },
                           kTrajectoryDerivatives, TimeSignal::kSmooth);
  out.control_norm = std::sqrt(std::max(0.0, (c.adjoint() * H * c)(0, 0).real()));

  EngineOptions fo = eo;
  fo.compute_bound = false;
  const auto fs = final_state(sys, z0, GeneralizedInput::from_density(out.control), T, DualSpaceTag::full(), fo);
  out.residual = tower_norm(sys, fs.state, 0);
  return out;
}

}  // namespace ilti

#endif  // ILTI_OBSERVABILITY_HPP
