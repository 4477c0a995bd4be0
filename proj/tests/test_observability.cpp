#include "ilti/observability.hpp"
#include "ilti/model_zoo.hpp"

#include "test_helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace ilti;

namespace {

MatC random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  MatC m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = test::random_cplx(rng);
  return m;
}

MatC random_rank(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, Eigen::Index rank) {
  return random_matrix(rng, r, rank) * random_matrix(rng, rank, c);
}

bool least_squares_inclusion(const MatC& L, const MatC& R) {
  if (L.norm() == 0.0) return true;
  const MatC X = R.completeOrthogonalDecomposition().solve(L);
  return (R * X - L).norm() <= 1e-8 * L.norm();
}

ObservabilitySetup setup_for(SpectralSystem sys, int N = 0, int M = 0, double T = 1.0) {
  ObservabilitySetup s{std::move(sys)};
  s.N = N;
  s.M = M;
  s.T = T;
  return s;
}

}  // namespace

TEST(Douglas, IdenticalOperators) {
  std::mt19937_64 rng(1);
  const MatC R = random_matrix(rng, 6, 4);
  const auto d = douglas_check(R, R);
  EXPECT_TRUE(d.inclusion);
  EXPECT_NEAR(d.best_constant, 1.0, 1e-12);
}

TEST(Douglas, ZeroRightSide) {
  std::mt19937_64 rng(2);
  const auto d = douglas_check(random_matrix(rng, 6, 4), MatC::Zero(6, 4));
  EXPECT_FALSE(d.inclusion);
  EXPECT_TRUE(std::isinf(d.best_constant));
  const auto z = douglas_check(MatC::Zero(6, 4), MatC::Zero(6, 4));
  EXPECT_TRUE(z.inclusion);
}

TEST(Douglas, VerdictMatchesLeastSquaresOracle) {
  std::mt19937_64 rng(3);
  int agree = 0, included = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::Index rank = 1 + trial % 4;
    const MatC R = random_rank(rng, 6, 4, rank);
    MatC L;
    switch (trial % 3) {
      case 0: L = R * random_matrix(rng, 4, 4); break;              // included
      case 1: L = random_matrix(rng, 6, 4); break;                  // generic, excluded when rank(R) < 6
      default: L = R * random_matrix(rng, 4, 4) + 1e-3 * random_rank(rng, 6, 4, 1); break;
    }
    const auto d = douglas_check(L, R);
    const bool oracle = least_squares_inclusion(L, R);
    agree += d.inclusion == oracle;
    included += oracle;
    EXPECT_EQ(d.inclusion, std::isfinite(d.best_constant));
  }
  EXPECT_EQ(agree, 500);
  EXPECT_GT(included, 100);
  EXPECT_LT(included, 400);
}

TEST(Douglas, ConstantDominatesSampledRatios) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const MatC R = random_rank(rng, 6, 4, 3);
    const MatC L = R * random_matrix(rng, 4, 4);
    const auto d = douglas_check(L, R);
    ASSERT_TRUE(d.inclusion);
    for (int s = 0; s < 50; ++s) {
      const VecC y = random_matrix(rng, 6, 1);
      const double den = (R.adjoint() * y).norm();
      if (den > 1e-12) EXPECT_LE((L.adjoint() * y).norm() / den, d.best_constant * (1 + 1e-9));
    }
  }
}

TEST(Observability, ToyConstantIsOne) {
  const auto r = observability_test(setup_for(test::scalar_system(0.0, 1.0)));
  EXPECT_NEAR(r.constant, 1.0, 1e-14);
}

TEST(Observability, SingleStableModeClosedForm) {
  const double expect = std::exp(-1.0) / std::sqrt((1.0 - std::exp(-2.0)) / 2.0);
  EXPECT_NEAR(expect, 0.559496, 1e-6);
  const auto r = observability_test(setup_for(test::scalar_system(-1.0, 1.0)), 16);
  EXPECT_NEAR(r.constant, expect, 1e-10);
  auto s = setup_for(test::scalar_system(-1.0, 1.0));
  s.single_mode_directions = true;
  EXPECT_NEAR(observability_test(s).constant, expect, 1e-10);
}

TEST(Observability, MonotoneInTruncation) {
  double prev = 0.0;
  for (int n = 1; n <= 8; ++n) {
    const double c = observability_test(setup_for(zoo::make_neumann_heat(n))).constant;
    EXPECT_GE(c, prev * (1 - 1e-9));
    prev = c;
  }
}

TEST(Observability, NegativeInputIndexUsesDualNorm) {
  // Scalar mode, M = 1: the right side is the (H^1)* norm of b e^{mu (T - s)}.
  const auto sys = test::scalar_system(-1.0, 1.0);
  const auto r0 = observability_test(setup_for(sys, 0, 0));
  const auto r1 = observability_test(setup_for(sys, 0, 1));
  EXPECT_GT(r1.constant, r0.constant);
}

TEST(Observability, ZeroOutputIsDegenerate) {
  auto s = setup_for(test::scalar_system(-1.0, 0.0));
  EXPECT_THROW(observability_test(s), DegenerateOutput);
  s.single_mode_directions = true;
  EXPECT_THROW(observability_test(s), DegenerateOutput);
}

TEST(Observability, HeatWaveConstantGrows) {
  double prev = 0.0;
  for (int k_max : {10, 15, 20, 25}) {
    auto s = setup_for(zoo::make_heatwave(5, k_max));
    s.single_mode_directions = true;
    const double c = observability_test(s).constant;
    EXPECT_GT(c, prev);
    prev = c;
  }
}

TEST(DefectScan, RatiosDecayForEveryIndex) {
  for (int N = 0; N <= 2; ++N) {
    const auto rep = defect_scan_heatwave(N, 5, 40, 1.0);
    EXPECT_EQ(rep.per_mode.size(), 36u);
    EXPECT_TRUE(rep.verdict);
    EXPECT_LE(rep.fit.slope, -0.5);
    for (const auto& m : rep.per_mode) EXPECT_GT(m.ratio, 0.0);
    EXPECT_TRUE(rep.warnings.empty());
  }
}

TEST(DefectScan, RealPartsInAsymptoticBand) {
  for (const auto& e : zoo::heatwave_eigenvalues(5, 40)) {
    EXPECT_GT(e.root.real(), -0.3);
    EXPECT_LT(e.root.real(), 0.0);
  }
}

TEST(DefectScan, HigherIndexKeepsSlope) {
  const auto r0 = defect_scan_heatwave(0, 5, 40, 1.0);
  const auto r2 = defect_scan_heatwave(2, 5, 40, 1.0);
  EXPECT_NEAR(r2.fit.slope, r0.fit.slope, 0.2);
  for (std::size_t i = 0; i < r0.per_mode.size(); ++i) EXPECT_GT(r2.per_mode[i].ratio, r0.per_mode[i].ratio);
}

TEST(DefectScan, TwoPathsAgree) {
  const double T = 1.0;
  const auto sys = zoo::make_heatwave(5, 20, T);
  for (int N = 0; N <= 2; ++N) {
    const auto rep = defect_scan(sys, N, 5, 20, T);
    for (const auto& r : rep.per_mode) {
      const auto& m = sys.mode(r.k);
      // Numerator by quadrature of the output trajectory's derivatives.
      const auto traj = output_trajectory(sys, unit_mode(r.k, N + 1), T);
      EXPECT_NEAR(sobolev_norm_quadrature(traj, N), r.numerator, 1e-9 * r.numerator);
      // Denominator from the tower norm of the flowed mode.
      const auto flowed = semigroup_apply(sys, T, unit_mode(r.k, -N));
      EXPECT_NEAR(tower_norm(sys, flowed, -N), r.denominator, 1e-9 * r.denominator);
      (void)m;
    }
  }
}

TEST(DefectScan, NeedsEnoughModes) {
  EXPECT_THROW(defect_scan_heatwave(0, 5, 10, 1.0), InvalidArgument);
}

TEST(NullControl, SingleModeGramian) {
  const auto sys = test::scalar_system(-1.0, 1.0);
  const TowerVector z0{{{0, cplx(1.0)}}, 0, Side::primal};
  const auto nc = gramian_null_control(sys, z0, 1.0);
  EXPECT_NEAR(nc.gram(0, 0).real(), (1.0 - std::exp(-2.0)) / 2.0, 1e-12);
  EXPECT_NEAR(nc.gram(0, 0).real(), 0.432332, 1e-6);
  EXPECT_LE(nc.residual, 1e-10);
}

TEST(NullControl, ZeroStateNeedsNoControl) {
  const auto sys = zoo::make_neumann_heat(3);
  const auto nc = gramian_null_control(sys, TowerVector{{}, 0, Side::primal}, 1.0);
  EXPECT_EQ(nc.control_norm, 0.0);
  for (double s : {0.0, 0.5, 1.0}) EXPECT_EQ(std::abs(nc.control(s)[0]), 0.0);
}

TEST(NullControl, HeatControlBeatsFeasibleCompetitors) {
  const double T = 1.0;
  const auto sys = zoo::make_neumann_heat(3, T);
  std::mt19937_64 rng(5);
  TowerVector z0{{}, 0, Side::primal};
  for (const auto& m : sys.modes()) z0.coefficients[m.index] = test::random_cplx(rng);
  const auto nc = gramian_null_control(sys, z0, T);
  EXPECT_LE(nc.residual, 1e-8);
  EXPECT_NEAR(nc.control_norm, sobolev_norm_quadrature(nc.control, 0), 1e-9 * nc.control_norm);

  const MatC H = 0.5 * (nc.gram + nc.gram.adjoint());
  const TowerVector zero{{}, 0, Side::primal};
  EngineOptions eo;
  eo.compute_bound = false;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXcd c(6, 1);
    for (int m = 0; m < 6; ++m) c(m, 0) = test::random_cplx(rng);
    const TimeSignal v = TimeSignal::from_cosine(T, c);
    // Remove the part of v the final-state map sees.
    const VecC fv = sys.to_dense(final_state(sys, zero, GeneralizedInput::from_density(v), T, {}, eo).state);
    const VecC corr = H.ldlt().solve(fv);
    const TimeSignal u = nc.control;
    TimeSignal competitor(T, 1,
                          [u, v, corr, sys, T](int, double s) -> Eigen::VectorXcd {
                            return u(s) + v(s) - sys.output_matrix(T - s, 0) * corr;
                          },
                          0, 0);
    const auto fs = final_state(sys, z0, GeneralizedInput::from_density(competitor), T, {}, eo);
    ASSERT_LE(tower_norm(sys, fs.state, 0), 1e-6);
    EXPECT_GT(sobolev_norm_quadrature(competitor, 0), nc.control_norm);
  }
}

TEST(NullControl, ResidualLinearInSolveTolerance) {
  const double T = 1.0;
  const auto sys = zoo::make_neumann_heat(4, T);
  std::mt19937_64 rng(6);
  TowerVector z0{{}, 0, Side::primal};
  for (const auto& m : sys.modes()) z0.coefficients[m.index] = test::random_cplx(rng);
  const double rhs = sys.primal_flow(T, sys.to_dense(z0)).norm();
  double prev = std::numeric_limits<double>::infinity();
  for (double tol : {1e-2, 1e-4, 1e-6, 1e-8}) {
    NullControlOptions o;
    o.cg_tolerance = tol;
    const auto nc = gramian_null_control(sys, z0, T, o);
    EXPECT_LE(nc.residual, tol * rhs * (1 + 1e-6) + 1e-12);
    EXPECT_LE(nc.residual, prev);
    prev = nc.residual;
  }
}

TEST(NullControl, SingularGramianReported) {
  const auto sys = SpectralSystem({test::mode(0, -1.0, 1.0), test::mode(1, -2.0, 0.0)}, 0.0, 1, 1.0);
  const TowerVector z0{{{0, cplx(1.0)}}, 0, Side::primal};
  try {
    gramian_null_control(sys, z0, 1.0);
    FAIL() << "expected SingularGramian";
  } catch (const SingularGramian& e) {
    EXPECT_TRUE(std::isinf(e.condition_estimate()) || e.condition_estimate() >= 1e14);
  }
}
