#ifndef ILTI_TIME_SIGNAL_HPP
#define ILTI_TIME_SIGNAL_HPP

// U-valued functions on (0, T). A signal is an evaluator (d, t) -> d-th derivative
// plus metadata: smoothness index, optional cosine coefficients, and the points
// where quadrature must cut (kinks) or grade (integrable singularities).

#include "ilti/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

namespace ilti {

class TimeSignal {
public:
  using Eval = std::function<Eigen::VectorXcd(int, double)>;

  static constexpr int kSmooth = 1 << 20;

  TimeSignal() = default;
  TimeSignal(double horizon, Eigen::Index dim, Eval eval, int max_derivative, int smoothness)
      : horizon_(horizon), dim_(dim), eval_(std::move(eval)), max_derivative_(max_derivative),
        smoothness_(smoothness) {
    if (!(horizon > 0.0)) throw InvalidArgument("TimeSignal: horizon must be positive");
    if (dim <= 0) throw InvalidArgument("TimeSignal: dimension must be positive");
  }

  double horizon() const { return horizon_; }
  Eigen::Index dim() const { return dim_; }
  int smoothness_index() const { return smoothness_; }
  int max_derivative() const { return max_derivative_; }

  Eigen::VectorXcd operator()(double t) const { return eval_(0, t); }
  Eigen::VectorXcd derivative(int d, double t) const {
    if (d < 0 || d > max_derivative_) throw InvalidArgument("TimeSignal: derivative order not available");
    return eval_(d, t);
  }

  /// Uniform grid t_i = i T / (n - 1).
  std::vector<double> grid(int n_grid) const {
    if (n_grid < 2) throw InvalidArgument("TimeSignal: grid needs at least two points");
    std::vector<double> g(static_cast<std::size_t>(n_grid));
    for (int i = 0; i < n_grid; ++i) g[static_cast<std::size_t>(i)] = horizon_ * i / (n_grid - 1);
    g.back() = horizon_;
    return g;
  }

  std::vector<Eigen::VectorXcd> samples(int n_grid) const {
    std::vector<Eigen::VectorXcd> out;
    for (double t : grid(n_grid)) out.push_back((*this)(t));
    return out;
  }

  /// Rows m = 0..n_basis, columns = components; f(t) = sum_m c_m cos(m pi t / T).
  const std::optional<Eigen::MatrixXcd>& cosine_coefficients() const { return cosine_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& singular_points() const { return singular_; }

  TimeSignal& with_breakpoints(std::vector<double> b) {
    breakpoints_ = std::move(b);
    return *this;
  }
  TimeSignal& with_singular_points(std::vector<double> s) {
    singular_ = std::move(s);
    return *this;
  }
  TimeSignal& with_cosine(Eigen::MatrixXcd c) {
    cosine_ = std::move(c);
    return *this;
  }

  TimeSignal scaled(std::complex<double> a) const {
    TimeSignal out = *this;
    Eval e = eval_;
    out.eval_ = [e, a](int d, double t) -> Eigen::VectorXcd { return a * e(d, t); };
    if (cosine_) out.cosine_ = a * (*cosine_);
    return out;
  }

  static TimeSignal zero(double T, Eigen::Index dim) {
    TimeSignal s(T, dim, [dim](int, double) { return Eigen::VectorXcd::Zero(dim).eval(); }, kSmooth, kSmooth);
    s.cosine_ = Eigen::MatrixXcd::Zero(1, dim);
    return s;
  }

  static TimeSignal constant(double T, const Eigen::VectorXcd& c) {
    const Eigen::Index dim = c.size();
    TimeSignal s(T, dim,
                 [c, dim](int d, double) -> Eigen::VectorXcd {
                   return d == 0 ? c : Eigen::VectorXcd::Zero(dim).eval();
                 },
                 kSmooth, kSmooth);
    s.cosine_ = c.transpose();
    return s;
  }

  static TimeSignal constant(double T, std::complex<double> c) {
    Eigen::VectorXcd v(1);
    v[0] = c;
    return constant(T, v);
  }

  static TimeSignal from_cosine(double T, const Eigen::MatrixXcd& coeffs) {
    const Eigen::Index dim = coeffs.cols();
    TimeSignal s(T, dim,
                 [coeffs, T, dim](int d, double t) -> Eigen::VectorXcd {
                   Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
                   for (Eigen::Index m = 0; m < coeffs.rows(); ++m) {
                     const double w = double(m) * std::numbers::pi / T;
                     // d-th derivative of cos(w t) = w^d cos(w t + d pi / 2)
                     if (m == 0 && d > 0) continue;
                     const double f = (d == 0 ? 1.0 : std::pow(w, d)) * std::cos(w * t + d * std::numbers::pi / 2);
                     v += f * coeffs.row(m).transpose();
                   }
                   return v;
                 },
                 kSmooth, kSmooth);
    s.cosine_ = coeffs;
    return s;
  }

  /// Piecewise-linear interpolant of samples on the uniform grid; lies in H^1.
  static TimeSignal from_samples(double T, const std::vector<Eigen::VectorXcd>& values) {
    if (values.size() < 2) throw InvalidArgument("from_samples: need at least two samples");
    const Eigen::Index dim = values.front().size();
    const int n = static_cast<int>(values.size());
    const double h = T / (n - 1);
    TimeSignal s(T, dim,
                 [values, h, n, dim](int d, double t) -> Eigen::VectorXcd {
                   int i = static_cast<int>(std::floor(t / h));
                   i = std::clamp(i, 0, n - 2);
                   const double x = t / h - i;
                   if (d == 0) return (1.0 - x) * values[static_cast<std::size_t>(i)] + x * values[static_cast<std::size_t>(i) + 1];
                   if (d == 1) return (values[static_cast<std::size_t>(i) + 1] - values[static_cast<std::size_t>(i)]) / h;
                   return Eigen::VectorXcd::Zero(dim).eval();
                 },
                 1, 1);
    std::vector<double> knots;
    for (int i = 1; i + 1 < n; ++i) knots.push_back(i * h);
    s.breakpoints_ = std::move(knots);
    return s;
  }

  /// Scalar signal from a value function and optional derivative functions.
  static TimeSignal scalar(double T, std::vector<std::function<std::complex<double>(double)>> fns,
                           int smoothness) {
    if (fns.empty()) throw InvalidArgument("scalar signal needs a value function");
    const int maxd = static_cast<int>(fns.size()) - 1;
    return TimeSignal(T, 1,
                      [fns](int d, double t) -> Eigen::VectorXcd {
                        Eigen::VectorXcd v(1);
                        v[0] = fns[static_cast<std::size_t>(d)](t);
                        return v;
                      },
                      maxd, smoothness);
  }

private:
  double horizon_ = 1.0;
  Eigen::Index dim_ = 1;
  Eval eval_;
  int max_derivative_ = 0;
  int smoothness_ = 0;
  std::optional<Eigen::MatrixXcd> cosine_;
  std::vector<double> breakpoints_;
  std::vector<double> singular_;
};

}  // namespace ilti

#endif  // ILTI_TIME_SIGNAL_HPP
