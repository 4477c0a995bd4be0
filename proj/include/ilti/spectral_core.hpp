#ifndef ILTI_SPECTRAL_CORE_HPP
#define ILTI_SPECTRAL_CORE_HPP

// Spectral representation of a control system: eigenvalues of the adjoint
// generator, control traces of the adjoint modes, and coefficient-weighted
// tower norms.
//
// Conventions (fixed here and used everywhere):
//   * (x, y) is linear in x and anti-linear in y.
//   * adjoint mode phi_k:  A* phi_k = mu_k phi_k
//   * primal mode z_k:     A z_k = conj(mu_k) z_k,   (z_j, phi_k) = delta_jk
//   * b_k = B* phi_k is a vector in U (size input_dim).
// Jordan chains list their members in chain order; member 0 is the eigenvector
// and A* phi_{c_{i+1}} = mu phi_{c_{i+1}} + phi_{c_i}.

#include "ilti/errors.hpp"
#include "ilti/time_signal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace ilti {

using cplx = std::complex<double>;
using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;

enum class Branch { parabolic, hyperbolic, jordan };
enum class Side { primal, adjoint };

inline const char* to_string(Branch b) {
  switch (b) {
    case Branch::parabolic: return "parabolic";
    case Branch::hyperbolic: return "hyperbolic";
    case Branch::jordan: return "jordan";
  }
  return "parabolic";
}

inline Branch branch_from_string(const std::string& s) {
  if (s == "parabolic") return Branch::parabolic;
  if (s == "hyperbolic") return Branch::hyperbolic;
  if (s == "jordan") return Branch::jordan;
  throw InvalidArgument("unknown branch tag '" + s + "'");
}

struct Eigenmode {
  int index = 0;
  cplx eigenvalue{};       // mu_k, eigenvalue of A*
  VecC control_trace;      // b_k = B* phi_k
  Branch branch = Branch::parabolic;
  std::vector<int> chain;  // Jordan chain labels, eigenvector first
};

struct DualityConvention {
  bool linear_in_first_slot = true;
  bool primal_eigenvalue_is_conjugate = true;
  const char* statement =
      "pairing linear in the first slot, anti-linear in the second; "
      "primal mode z_k satisfies A z_k = conj(mu_k) z_k and (z_j, phi_k) = delta_jk";
};

/// Tower weight w(N) for a mode with eigenvalue modulus |mu|:
/// sum_{j=0}^{N} |mu|^{2j} for N >= 0 and its reciprocal at |N| for N < 0.
inline double tower_weight(double abs_mu, int N) {
  const int n = std::abs(N);
  const double r = abs_mu * abs_mu;
  double s = 1.0, p = 1.0;
  for (int j = 1; j <= n; ++j) {
    p *= r;
    s += p;
  }
  return N >= 0 ? s : 1.0 / s;
}

inline cplx ipow(cplx z, int d) {
  cplx r = 1.0;
  for (int i = 0; i < d; ++i) r *= z;
  return r;
}

/// E(a, T) = integral_0^T e^{a t} dt.
inline cplx exp_integral(cplx a, double T) {
  const cplx z = a * T;
  if (std::abs(z) < 1e-4) {
    // Taylor series of (e^z - 1)/z.
    cplx term = 1.0, sum = 1.0;
    for (int m = 1; m < 8; ++m) {
      term *= z / double(m + 1);
      sum += term;
    }
    return T * sum;
  }
  return (std::exp(z) - 1.0) / a;
}

/// Closed-form H^N(0,T) norm of t -> e^{mu t}.
inline double exp_sobolev_norm(cplx mu, double T, int N) {
  const double e = exp_integral(cplx(2.0 * mu.real(), 0.0), T).real();
  return std::sqrt(tower_weight(std::abs(mu), N) * e);
}

struct TowerVector {
  std::map<int, cplx> coefficients;
  int tower_index = 0;
  Side side = Side::adjoint;

  static TowerVector adjoint(std::map<int, cplx> c, int N = 0) { return {std::move(c), N, Side::adjoint}; }
  static TowerVector primal(std::map<int, cplx> c, int N = 0) { return {std::move(c), N, Side::primal}; }
  cplx at(int k) const {
    auto it = coefficients.find(k);
    return it == coefficients.end() ? cplx{} : it->second;
  }
};

class SpectralSystem {
public:
  SpectralSystem() = default;
  SpectralSystem(std::vector<Eigenmode> modes, double growth_bound, int input_dim,
                 double time_horizon_default = 1.0)
      : modes_(std::move(modes)), growth_bound_(growth_bound), input_dim_(input_dim),
        horizon_(time_horizon_default) {
    validate();
  }

  const std::vector<Eigenmode>& modes() const { return modes_; }
  std::size_t size() const { return modes_.size(); }
  double growth_bound() const { return growth_bound_; }
  int input_dim() const { return input_dim_; }
  double time_horizon_default() const { return horizon_; }
  const DualityConvention& duality_convention() const { return convention_; }
  bool has_chains() const { return has_chains_; }

  bool contains(int index) const { return position_.count(index) > 0; }
  std::size_t position(int index) const {
    auto it = position_.find(index);
    if (it == position_.end()) throw InvalidArgument("mode index " + std::to_string(index) + " not in system");
    return it->second;
  }
  const Eigenmode& mode(int index) const { return modes_[position(index)]; }

  /// Control traces as a matrix, column k = b_k.
  const MatC& trace_matrix() const { return bmat_; }

  VecC to_dense(const TowerVector& v) const {
    VecC a = VecC::Zero(static_cast<Eigen::Index>(size()));
    for (const auto& [k, c] : v.coefficients) a[static_cast<Eigen::Index>(position(k))] = c;
    return a;
  }

  TowerVector from_dense(const VecC& a, int N, Side side) const {
    TowerVector v{{}, N, side};
    for (std::size_t p = 0; p < size(); ++p)
      if (a[static_cast<Eigen::Index>(p)] != cplx{}) v.coefficients[modes_[p].index] = a[static_cast<Eigen::Index>(p)];
    return v;
  }

  /// Coefficients of S*_t phi given those of phi.
  VecC adjoint_flow(double t, const VecC& a) const {
    VecC out(a.size());
    for (std::size_t p = 0; p < size(); ++p) {
      const auto P = static_cast<Eigen::Index>(p);
      const Link& l = links_[p];
      if (l.chain_len <= 1) {
        out[P] = std::exp(modes_[p].eigenvalue * t) * a[P];
        continue;
      }
      // new a_i = e^{mu t} sum_{j >= i} t^{j-i}/(j-i)! a_j
      cplx s = 0.0;
      double f = 1.0;
      for (int j = l.chain_pos, r = 0; j < l.chain_len; ++j, ++r) {
        if (r > 0) f *= t / r;
        s += f * a[static_cast<Eigen::Index>(chain_positions_[l.chain_id][j])];
      }
      out[P] = std::exp(modes_[p].eigenvalue * t) * s;
    }
    return out;
  }

  /// Coefficients of S_t z given those of z (primal side).
  VecC primal_flow(double t, const VecC& b) const {
    VecC out(b.size());
    for (std::size_t p = 0; p < size(); ++p) {
      const auto P = static_cast<Eigen::Index>(p);
      const Link& l = links_[p];
      const cplx lam = std::conj(modes_[p].eigenvalue);
      if (l.chain_len <= 1) {
        out[P] = std::exp(lam * t) * b[P];
        continue;
      }
      // new b_j = e^{conj(mu) t} sum_{i <= j} t^{j-i}/(j-i)! b_i
      cplx s = 0.0;
      double f = 1.0;
      for (int i = l.chain_pos, r = 0; i >= 0; --i, ++r) {
        if (r > 0) f *= t / r;
        s += f * b[static_cast<Eigen::Index>(chain_positions_[l.chain_id][i])];
      }
      out[P] = std::exp(lam * t) * s;
    }
    return out;
  }

  /// Coefficients of A* phi.
  VecC adjoint_generator(const VecC& a) const {
    VecC out(a.size());
    for (std::size_t p = 0; p < size(); ++p) {
      const auto P = static_cast<Eigen::Index>(p);
      const Link& l = links_[p];
      out[P] = modes_[p].eigenvalue * a[P];
      if (l.chain_len > 1 && l.chain_pos + 1 < l.chain_len)
        out[P] += a[static_cast<Eigen::Index>(chain_positions_[l.chain_id][l.chain_pos + 1])];
    }
    return out;
  }

  /// Coefficients of A z (primal side).
  VecC primal_generator(const VecC& b) const {
    VecC out(b.size());
    for (std::size_t p = 0; p < size(); ++p) {
      const auto P = static_cast<Eigen::Index>(p);
      const Link& l = links_[p];
      out[P] = std::conj(modes_[p].eigenvalue) * b[P];
      if (l.chain_len > 1 && l.chain_pos > 0)
        out[P] += b[static_cast<Eigen::Index>(chain_positions_[l.chain_id][l.chain_pos - 1])];
    }
    return out;
  }

  /// B* applied to an adjoint coefficient vector.
  VecC trace(const VecC& a) const { return bmat_ * a; }

  /// Matrix of the map a -> B* S*_tau A*^d a  (input_dim x size).
  MatC output_matrix(double tau, int d = 0) const {
    MatC out(input_dim_, static_cast<Eigen::Index>(size()));
    for (std::size_t p = 0; p < size(); ++p) {
      const auto P = static_cast<Eigen::Index>(p);
      const Link& l = links_[p];
      const cplx mu = modes_[p].eigenvalue;
      if (l.chain_len <= 1) {
        out.col(P) = (ipow(mu, d) * std::exp(mu * tau)) * bmat_.col(P);
        continue;
      }
      // Unit vector at chain position i: apply A* d times, then S*_tau, then B*.
      const int m = l.chain_len;
      std::vector<cplx> v(m, 0.0);
      v[l.chain_pos] = 1.0;
      for (int r = 0; r < d; ++r) {
        std::vector<cplx> w(m);
        for (int i = 0; i < m; ++i) w[i] = mu * v[i] + (i + 1 < m ? v[i + 1] : 0.0);
        v = w;
      }
      std::vector<cplx> w(m, 0.0);
      for (int i = 0; i < m; ++i) {
        double f = 1.0;
        for (int j = i, r = 0; j < m; ++j, ++r) {
          if (r > 0) f *= tau / r;
          w[i] += f * v[j];
        }
        w[i] *= std::exp(mu * tau);
      }
      VecC col = VecC::Zero(input_dim_);
      for (int i = 0; i < m; ++i) col += w[i] * bmat_.col(static_cast<Eigen::Index>(chain_positions_[l.chain_id][i]));
      out.col(P) = col;
    }
    return out;
  }

  /// Per-mode tower weights w_k(N) in position order.
  Eigen::VectorXd weights(int N) const {
    Eigen::VectorXd w(static_cast<Eigen::Index>(size()));
    for (std::size_t p = 0; p < size(); ++p)
      w[static_cast<Eigen::Index>(p)] = tower_weight(std::abs(modes_[p].eigenvalue), N);
    return w;
  }

private:
  struct Link {
    int chain_id = -1;
    int chain_pos = 0;
    int chain_len = 1;
  };

  void validate() {
    if (input_dim_ <= 0) throw InvalidArgument("input_dim must be positive");
    if (!(horizon_ > 0.0)) throw InvalidArgument("time horizon must be positive");
    bmat_ = MatC::Zero(input_dim_, static_cast<Eigen::Index>(modes_.size()));
    for (std::size_t p = 0; p < modes_.size(); ++p) {
      const Eigenmode& m = modes_[p];
      if (!position_.emplace(m.index, p).second)
        throw InvalidArgument("duplicate mode index " + std::to_string(m.index));
      if (m.control_trace.size() != input_dim_)
        throw InvalidArgument("control trace of mode " + std::to_string(m.index) + " has wrong size");
      if (!m.control_trace.allFinite() || !std::isfinite(m.eigenvalue.real()) || !std::isfinite(m.eigenvalue.imag()))
        throw InvalidArgument("mode " + std::to_string(m.index) + " is not finite");
      if (m.eigenvalue.real() > growth_bound_ + 1e-12 * std::max(1.0, std::abs(growth_bound_)))
        throw InvalidArgument("mode " + std::to_string(m.index) + " exceeds the growth bound");
      bmat_.col(static_cast<Eigen::Index>(p)) = m.control_trace;
    }
    links_.assign(modes_.size(), Link{});
    std::map<std::vector<int>, int> chain_ids;
    for (std::size_t p = 0; p < modes_.size(); ++p) {
      const Eigenmode& m = modes_[p];
      if (m.branch != Branch::jordan) continue;
      if (m.chain.empty()) throw InvalidArgument("jordan mode " + std::to_string(m.index) + " has an empty chain");
      if (m.chain.size() > 4) throw InvalidArgument("jordan chains longer than 4 are not supported");
      auto pos = std::find(m.chain.begin(), m.chain.end(), m.index);
      if (pos == m.chain.end()) throw InvalidArgument("jordan mode " + std::to_string(m.index) + " not in its chain");
      auto [it, fresh] = chain_ids.emplace(m.chain, static_cast<int>(chain_positions_.size()));
      if (fresh) {
        std::vector<std::size_t> members;
        for (int label : m.chain) {
          const std::size_t q = position(label);
          const Eigenmode& other = modes_[q];
          if (other.branch != Branch::jordan || other.chain != m.chain || other.eigenvalue != m.eigenvalue)
            throw InvalidArgument("inconsistent jordan chain at mode " + std::to_string(label));
          members.push_back(q);
        }
        chain_positions_.push_back(members);
      }
      links_[p] = Link{it->second, static_cast<int>(pos - m.chain.begin()), static_cast<int>(m.chain.size())};
      if (m.chain.size() > 1) has_chains_ = true;
    }
  }

  std::vector<Eigenmode> modes_;
  double growth_bound_ = 0.0;
  int input_dim_ = 1;
  double horizon_ = 1.0;
  DualityConvention convention_{};
  std::unordered_map<int, std::size_t> position_;
  std::vector<Link> links_;
  std::vector<std::vector<std::size_t>> chain_positions_;
  MatC bmat_;
  bool has_chains_ = false;
};

/// Pivot pairing of a primal vector against an adjoint vector: sum_k z_k conj(a_k).
inline cplx pivot_pairing(const TowerVector& primal, const TowerVector& adjoint) {
  cplx s = 0.0;
  for (const auto& [k, z] : primal.coefficients) s += z * std::conj(adjoint.at(k));
  return s;
}

inline TowerVector semigroup_apply(const SpectralSystem& sys, double t, const TowerVector& v) {
  if (t < 0.0) throw InvalidArgument("semigroup_apply: negative time");
  const VecC a = sys.to_dense(v);
  const VecC out = v.side == Side::adjoint ? sys.adjoint_flow(t, a) : sys.primal_flow(t, a);
  return sys.from_dense(out, v.tower_index, v.side);
}

inline TowerVector generator_apply(const SpectralSystem& sys, const TowerVector& v) {
  const VecC a = sys.to_dense(v);
  const VecC out = v.side == Side::adjoint ? sys.adjoint_generator(a) : sys.primal_generator(a);
  return sys.from_dense(out, v.tower_index - 1, v.side);
}

inline double tower_norm(const SpectralSystem& sys, const TowerVector& v, int N) {
  double s = 0.0;
  for (const auto& [k, c] : v.coefficients)
    s += std::norm(c) * tower_weight(std::abs(sys.mode(k).eigenvalue), N);
  return std::sqrt(s);
}

inline double tower_norm(const SpectralSystem& sys, const TowerVector& v) {
  return tower_norm(sys, v, v.tower_index);
}

inline TowerVector project_hyperbolic(const SpectralSystem& sys, const TowerVector& v) {
  TowerVector out{{}, v.tower_index, v.side};
  for (const auto& [k, c] : v.coefficients)
    if (sys.mode(k).branch == Branch::hyperbolic) out.coefficients[k] = c;
  return out;
}

/// Unit adjoint vector on mode k.
inline TowerVector unit_mode(int k, int N = 0, Side side = Side::adjoint) {
  return TowerVector{{{k, cplx(1.0)}}, N, side};
}

/// Highest derivative order precomputed by output_trajectory.
inline constexpr int kTrajectoryDerivatives = 6;

/// t -> B* S*_t phi on [0, T]; derivative d is B* S*_t A*^d phi.
inline TimeSignal output_trajectory(const SpectralSystem& sys, const TowerVector& phi, double T) {
  if (phi.side != Side::adjoint) throw InvalidArgument("output_trajectory: expects an adjoint-side vector");
  if (phi.tower_index < 1) throw InvalidArgument("output_trajectory: needs tower index >= 1");
  std::vector<VecC> powers{sys.to_dense(phi)};
  for (int d = 1; d <= kTrajectoryDerivatives; ++d) powers.push_back(sys.adjoint_generator(powers.back()));
  auto held = std::make_shared<const SpectralSystem>(sys);
  return TimeSignal(T, sys.input_dim(),
                    [held, powers](int d, double t) -> Eigen::VectorXcd {
                      return held->trace(held->adjoint_flow(t, powers[static_cast<std::size_t>(d)]));
                    },
                    kTrajectoryDerivatives, TimeSignal::kSmooth);
}

inline std::vector<VecC> output_trajectory(const SpectralSystem& sys, const TowerVector& phi,
                                           const std::vector<double>& grid) {
  const double T = grid.empty() ? sys.time_horizon_default() : std::max(grid.back(), 1e-300);
  const TimeSignal s = output_trajectory(sys, phi, T);
  std::vector<VecC> out;
  out.reserve(grid.size());
  for (double t : grid) out.push_back(s(t));
  return out;
}

}  // namespace ilti

#endif  // ILTI_SPECTRAL_CORE_HPP
