#include "ilti/duality_engine.hpp"
#include "ilti/model_zoo.hpp"

#include "test_helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace ilti;

namespace {

TimeSignal random_density(std::mt19937_64& rng, double T, int terms) {
  Eigen::MatrixXcd c(terms, 1);
  for (int m = 0; m < terms; ++m) c(m, 0) = test::random_cplx(rng) / double(1 + m);
  return TimeSignal::from_cosine(T, c);
}

TowerVector random_adjoint(std::mt19937_64& rng, const SpectralSystem& sys, int N) {
  TowerVector v{{}, N, Side::adjoint};
  for (const auto& m : sys.modes()) v.coefficients[m.index] = test::random_cplx(rng);
  return v;
}

TowerVector zero_primal(int N = 0) { return TowerVector{{}, N, Side::primal}; }

double max_rel(const SpectralSystem& sys, const TowerVector& a, const TowerVector& b) {
  const VecC x = sys.to_dense(a), y = sys.to_dense(b);
  return (x - y).norm() / std::max(1e-300, std::max(x.norm(), y.norm()));
}

TimeSignal linear_signal(double T) {
  return TimeSignal::scalar(T, {[](double t) { return cplx(t); }, [](double) { return cplx(1.0); }}, 1);
}

}  // namespace

TEST(AdjointFinalMap, ToyIsConstant) {
  const auto sys = zoo::make_toy();
  const auto k = adjoint_final_map(sys, unit_mode(0, 1), 1.0);
  for (double s : {0.0, 0.3, 1.0}) EXPECT_NEAR(std::abs(k(s)[0] - cplx(1.0)), 0.0, 1e-15);
}

TEST(AdjointFinalMap, HeatFirstModeClosedForm) {
  const auto sys = zoo::make_neumann_heat(5);
  const auto k = adjoint_final_map(sys, unit_mode(1, 1), 1.0);
  for (double s : {0.0, 0.25, 0.5, 1.0}) {
    const double expect = -std::sqrt(2.0 / std::numbers::pi) * std::exp(-(1.0 - s));
    EXPECT_NEAR(std::abs(k(s)[0] - cplx(expect)), 0.0, 1e-15);
  }
  // Derivative of the map against a central difference.
  const double h = 1e-5;
  const cplx fd = (k(0.5 + h)[0] - k(0.5 - h)[0]) / (2 * h);
  EXPECT_NEAR(std::abs(k.derivative(1, 0.5)[0] - fd), 0.0, 1e-9);
}

TEST(AdjointFinalMap, HeatConstantModeAtHorizon) {
  const auto sys = zoo::make_neumann_heat(5);
  const auto k = adjoint_final_map(sys, unit_mode(0, 1), 1.0);
  EXPECT_NEAR(k(1.0)[0].real(), -1.0 / std::sqrt(std::numbers::pi), 1e-15);
}

TEST(AdjointFinalMap, RejectsLowIndexAndPrimal) {
  const auto sys = zoo::make_toy();
  EXPECT_THROW(adjoint_final_map(sys, unit_mode(0, 0), 1.0), InvalidArgument);
  EXPECT_THROW(adjoint_final_map(sys, unit_mode(0, 1, Side::primal), 1.0), InvalidArgument);
}

TEST(FinalState, ToyDiracAtHorizon) {
  const auto sys = zoo::make_toy();
  const auto r = final_state(sys, zero_primal(), GeneralizedInput::dirac(1.0, 1.0, VecC::Ones(1)), 1.0);
  EXPECT_NEAR(std::abs(r.state.at(0) - cplx(1.0)), 0.0, 1e-14);
  EXPECT_EQ(r.result_index, -1);
}

TEST(FinalState, ZeroInputIsSemigroupFlow) {
  std::mt19937_64 rng(3);
  const auto sys = zoo::make_neumann_heat(8);
  TowerVector z0{{}, 0, Side::primal};
  for (const auto& m : sys.modes()) z0.coefficients[m.index] = test::random_cplx(rng);
  const auto r = final_state(sys, z0, GeneralizedInput::zero(0.7, 1), 0.7);
  for (const auto& m : sys.modes()) {
    const cplx expect = std::exp(std::conj(m.eigenvalue) * 0.7) * z0.at(m.index);
    EXPECT_NEAR(std::abs(r.state.at(m.index) - expect), 0.0, 1e-15);
  }
}

TEST(FinalState, MatchesDuhamelOracle) {
  std::mt19937_64 rng(17);
  const auto sys = zoo::make_neumann_heat(50);
  EngineOptions eo;
  eo.compute_bound = false;
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = GeneralizedInput::from_density(random_density(rng, 1.0, 6));
    const auto a = final_state(sys, zero_primal(), u, 1.0, {}, eo).state;
    const auto b = duhamel_oracle(sys, zero_primal(), u, uniform_grid(1.0, 101));
    EXPECT_LE(max_rel(sys, a, b), 1e-10);
  }
}

TEST(FinalState, DualityIdentity) {
  std::mt19937_64 rng(19);
  const auto sys = zoo::make_neumann_heat(20);
  EngineOptions eo;
  eo.compute_bound = false;
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = GeneralizedInput::from_density(random_density(rng, 1.0, 5));
    const auto phi = random_adjoint(rng, sys, 1);
    const cplx lhs = pivot_pairing(final_state(sys, zero_primal(), u, 1.0, {}, eo).state, phi);
    const cplx rhs = pair(u, adjoint_final_map(sys, phi, 1.0));
    EXPECT_LE(test::rel_err(lhs, rhs), 1e-11);
  }
}

TEST(FinalState, Superposition) {
  std::mt19937_64 rng(23);
  const auto sys = zoo::make_neumann_heat(10);
  TowerVector z0{{}, 0, Side::primal};
  for (const auto& m : sys.modes()) z0.coefficients[m.index] = test::random_cplx(rng);
  GeneralizedInput u = GeneralizedInput::from_density(random_density(rng, 1.0, 4));
  u.add_atom(0.3, VecC::Constant(1, test::random_cplx(rng)));
  const auto both = final_state(sys, z0, u, 1.0).state;
  const auto flow = final_state(sys, z0, GeneralizedInput::zero(1.0, 1), 1.0).state;
  const auto drive = final_state(sys, zero_primal(), u, 1.0).state;
  for (const auto& m : sys.modes())
    EXPECT_NEAR(std::abs(both.at(m.index) - flow.at(m.index) - drive.at(m.index)), 0.0,
                1e-14 * std::max(1.0, std::abs(both.at(m.index))));
}

TEST(FinalState, IndexArithmetic) {
  std::mt19937_64 rng(29);
  const auto sys = zoo::make_neumann_heat(6);
  const auto density = random_density(rng, 1.0, 4);
  for (int N = -3; N <= 3; ++N)
    for (int M = -3; M <= 3; ++M) {
      const auto u = GeneralizedInput::from_density(density).with_dual_index(M);
      const auto r = final_state(sys, zero_primal(N), u, 1.0);
      EXPECT_EQ(r.result_index, std::min({0, N, M}));
      EXPECT_EQ(r.state.tower_index, r.result_index);
      EXPECT_TRUE(std::isfinite(r.norm_bound_used));
    }
}

TEST(FinalState, ExtensionBound) {
  std::mt19937_64 rng(31);
  const auto sys = zoo::make_neumann_heat(10);
  for (int trial = 0; trial < 10; ++trial) {
    GeneralizedInput u = GeneralizedInput::from_density(random_density(rng, 1.0, 5));
    u.add_atom(std::uniform_real_distribution<double>(0, 1)(rng), VecC::Constant(1, test::random_cplx(rng)));
    for (int K = 1; K <= 3; ++K) {
      const auto r = final_state(sys, zero_primal(), u.with_dual_index(-K), 1.0);
      ASSERT_EQ(r.result_index, -K);
      const double lhs = tower_norm(sys, r.state, -K);
      const double rhs = r.norm_bound_used * input_norm(u, -K, 256);
      EXPECT_LE(lhs, rhs);
    }
  }
}

TEST(FinalState, ZeroTraceObstructionOnHeat) {
  const auto sys = zoo::make_neumann_heat(4);
  const auto u = GeneralizedInput::from_density(TimeSignal::constant(1.0, 1.0));
  EXPECT_THROW(final_state(sys, zero_primal(), u, 1.0, DualSpaceTag::zero_trace()), EndpointObstruction);
}

TEST(FinalState, MollifiedDiracConverges) {
  // Narrow normalized hats around t0 approach the atom answer at rate O(width).
  const auto sys = zoo::make_neumann_heat(10);
  const double t0 = 0.5;
  const auto atom = final_state(sys, zero_primal(), GeneralizedInput::dirac(1.0, t0, VecC::Ones(1)), 1.0).state;
  double prev = std::numeric_limits<double>::infinity();
  for (double w : {0.1, 0.05, 0.025, 0.0125}) {
    TimeSignal hat(1.0, 1,
                   [t0, w](int, double t) {
                     return VecC::Constant(1, std::max(0.0, 1.0 - std::abs(t - t0) / w) / w).eval();
                   },
                   0, 0);
    hat.with_breakpoints({t0 - w, t0, t0 + w});
    const auto s = final_state(sys, zero_primal(), GeneralizedInput::from_density(hat), 1.0).state;
    const double err = max_rel(sys, s, atom);
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 1e-2);
}

TEST(DuhamelOracle, ScalarExamples) {
  const auto grid = uniform_grid(1.0, 11);
  const auto u = GeneralizedInput::from_density(TimeSignal::constant(1.0, 1.0));
  const auto a = duhamel_oracle(test::scalar_system(0.0, 1.0), zero_primal(), u, grid);
  // The oracle's interpolation solve costs a few hundred ulps.
  EXPECT_NEAR(std::abs(a.at(0) - cplx(1.0)), 0.0, 1e-12);
  const auto b = duhamel_oracle(test::scalar_system(-1.0, 1.0), zero_primal(), u, grid);
  EXPECT_NEAR(std::abs(b.at(0) - cplx(1.0 - std::exp(-1.0))), 0.0, 1e-12);
  EXPECT_THROW(duhamel_oracle(test::scalar_system(0.0, 1.0), zero_primal(), GeneralizedInput::dirac(1.0, 0.5, VecC::Ones(1)), grid),
               InvalidArgument);
}

TEST(StateCurve, ToyDiracVanishesBeforeHorizon) {
  const auto sys = zoo::make_toy();
  const auto grid = uniform_grid(1.0, 21);
  const auto c = state_curve(sys, GeneralizedInput::dirac(1.0, 1.0, VecC::Ones(1)), grid, {unit_mode(0, 2)});
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) EXPECT_EQ(std::abs(c.pairings[0][i]), 0.0);
  EXPECT_NEAR(std::abs(c.pairings[0].back() - cplx(1.0)), 0.0, 1e-14);
}

TEST(StateCurve, ToyUnitDensityIsLinear) {
  const auto sys = zoo::make_toy();
  const auto grid = uniform_grid(1.0, 11);
  const auto c = state_curve(sys, GeneralizedInput::from_density(TimeSignal::constant(1.0, 1.0)), grid, {unit_mode(0, 1)});
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(std::abs(c.pairings[0][i] - cplx(grid[i])), 0.0, 1e-14);
}

TEST(StateCurve, HeatCurveAtHorizonMatchesFinalState) {
  std::mt19937_64 rng(37);
  const auto sys = zoo::make_neumann_heat(12);
  const auto u = GeneralizedInput::from_density(random_density(rng, 1.0, 5));
  const auto phi = random_adjoint(rng, sys, 1);
  const auto c = state_curve(sys, u, uniform_grid(1.0, 5), {phi});
  const cplx fs = pivot_pairing(final_state(sys, zero_primal(), u, 1.0).state, phi);
  EXPECT_LE(test::rel_err(c.pairings[0].back(), fs), 1e-11);
}

TEST(StateCurve, DistributionNeedsProbeInX2) {
  const auto sys = zoo::make_toy();
  EXPECT_THROW(state_curve(sys, GeneralizedInput::dirac(1.0, 0.5, VecC::Ones(1)), uniform_grid(1.0, 3), {unit_mode(0, 1)}),
               InvalidArgument);
}

TEST(CurveSplit, PartsSumToCurve) {
  std::mt19937_64 rng(41);
  const auto sys = zoo::make_neumann_heat(8);
  const auto u = GeneralizedInput::from_density(random_density(rng, 1.0, 5));
  const auto phi = random_adjoint(rng, sys, 2);
  const auto grid = uniform_grid(1.0, 9);
  const auto c = state_curve(sys, u, grid, {phi});
  const auto s = curve_split(sys, u, grid, phi);
  for (std::size_t i = 0; i < grid.size(); ++i)
    EXPECT_NEAR(std::abs(s.f1[i] + s.f2[i] - c.pairings[0][i]), 0.0, 1e-10 * std::max(1.0, std::abs(c.pairings[0][i])));
}

TEST(CurveSplit, SmoothProfileF2IsLinear) {
  const auto sys = zoo::make_neumann_heat(6);
  const auto phi = unit_mode(2, 2);
  const cplx u0(0.7, -0.2);
  const auto u = GeneralizedInput::derivative(linear_signal(1.0), VecC::Constant(1, u0));
  const cplx bu0_phi = u0 * std::conj(sys.trace(sys.to_dense(phi))[0]);
  const auto grid = uniform_grid(1.0, 11);
  const auto s = curve_split(sys, u, grid, phi);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(std::abs(s.f2[i] + grid[i] * bu0_phi), 0.0, 1e-14);
}

TEST(CurveSplit, PathologicalProfileReproduced) {
  const auto sys = zoo::make_neumann_heat(6);
  const auto phi = unit_mode(1, 2);
  const auto alpha = sample_alpha_pathological(1.0, 0, 8);
  const auto u = GeneralizedInput::derivative(alpha.as_signal(), VecC::Ones(1));
  const cplx bu0_phi = std::conj(sys.trace(sys.to_dense(phi))[0]);
  std::vector<double> grid;
  for (int i = 0; i < 40; ++i) grid.push_back((i + 0.37) / 40.0);
  const auto s = curve_split(sys, u, grid, phi, {}, false);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const cplx rec = s.f2[i] / (-bu0_phi);
    EXPECT_LE(std::abs(rec - alpha(grid[i])), 1e-8 * alpha(grid[i]));
  }
}

TEST(ConstructWk, TwoHeatModes) {
  const auto sys = zoo::make_neumann_heat(3);
  const auto v = construct_Wk_vector(sys, 1, {0, 1});
  const double b0 = sys.mode(0).control_trace[0].real(), b1 = sys.mode(1).control_trace[0].real();
  EXPECT_NEAR(std::abs(v.at(0) * b0 + v.at(1) * b1), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(v.at(0)) / std::abs(v.at(1)), std::abs(b1 / b0), 1e-14);
  EXPECT_NEAR(tower_norm(sys, v, 0), 1.0, 1e-14);
  EXPECT_EQ(v.tower_index, 2);
}

TEST(ConstructWk, SecondOrderResiduals) {
  const auto sys = zoo::make_neumann_heat(5);
  const auto v = construct_Wk_vector(sys, 2, {1, 2, 3, 4});
  VecC a = sys.to_dense(v);
  for (int i = 0; i < 2; ++i) {
    EXPECT_LE(std::abs(sys.trace(a)[0]), 1e-12);
    a = sys.adjoint_generator(a);
  }
  EXPECT_NEAR(sys.to_dense(v).norm(), 1.0, 1e-14);
}

TEST(ConstructWk, ZeroControlGivesFirstBasisVector) {
  const auto sys = SpectralSystem({test::mode(0, -1.0, 0.0), test::mode(1, -4.0, 0.0)}, 0.0, 1, 1.0);
  const auto v = construct_Wk_vector(sys, 1, {0, 1});
  EXPECT_EQ(v.at(0), cplx(1.0));
  EXPECT_EQ(v.at(1), cplx(0.0));
}

TEST(ConstructWk, InsufficientSupport) {
  const auto sys = zoo::make_neumann_heat(5);
  EXPECT_THROW(construct_Wk_vector(sys, 2, {1, 2}), InsufficientSupport);
  EXPECT_THROW(construct_Wk_vector(sys, 1, {}), InsufficientSupport);
}

TEST(Regularity, DensityCurveIsContinuous) {
  const auto sys = zoo::make_neumann_heat(4);
  const auto u = GeneralizedInput::from_density(TimeSignal::constant(1.0, 1.0));
  const auto rep = regularity_probe(sys, u, unit_mode(1, 1), 0.5, 0);
  EXPECT_TRUE(rep.derivatives[0].continuous);
  EXPECT_LE(std::abs(rep.derivatives[0].extrapolated_jump), 1e-8);
}

TEST(Regularity, DiracJumpsUnlessProbeInW1) {
  const auto sys = zoo::make_neumann_heat(4);
  const cplx u0(1.0, 0.5);
  const auto u = GeneralizedInput::dirac(1.0, 0.5, VecC::Constant(1, u0));
  const auto w1 = construct_Wk_vector(sys, 1, {0, 1, 2});
  const auto in = regularity_probe(sys, u, w1, 0.5, 0);
  EXPECT_LE(std::abs(in.derivatives[0].extrapolated_jump), 1e-8);
  EXPECT_TRUE(in.derivatives[0].continuous);

  const auto phi = unit_mode(1, 2);
  const auto out = regularity_probe(sys, u, phi, 0.5, 0);
  const cplx predicted = u0 * std::conj(sys.trace(sys.to_dense(phi))[0]);
  EXPECT_LE(std::abs(out.derivatives[0].extrapolated_jump - predicted), 1e-8);
  EXPECT_FALSE(out.derivatives[0].continuous);
}

TEST(Regularity, SecondOrderProbeHasContinuousDerivative) {
  const auto sys = zoo::make_neumann_heat(3);
  const auto u = GeneralizedInput::dirac(1.0, 0.5, VecC::Ones(1));
  const auto w2 = construct_Wk_vector(sys, 2, {0, 1, 2, 3});
  const auto rep = regularity_probe(sys, u, w2, 0.5, 1);
  ASSERT_EQ(rep.derivatives.size(), 2u);
  EXPECT_TRUE(rep.derivatives[0].continuous);
  EXPECT_TRUE(rep.derivatives[1].continuous);
  EXPECT_GE(rep.derivatives[1].orders.back(), 0.7);
}

TEST(Admissibility, ToyIsOne) {
  EXPECT_NEAR(admissibility_constant(zoo::make_toy(), 1.0), 1.0, 1e-14);
}

TEST(Admissibility, ScalarClosedForm) {
  for (cplx mu : {cplx(-1.0, 0.0), cplx(-0.5, 3.0), cplx(0.2, -1.0)}) {
    const cplx b(0.8, 0.3);
    const double T = 1.3;
    const double expect = std::exp(mu.real() * T) / (std::abs(b) * exp_sobolev_norm(mu, T, 0));
    EXPECT_NEAR(admissibility_constant(test::scalar_system(mu, b, T), T, 10), expect, 1e-12 * expect);
  }
}

TEST(Admissibility, NondecreasingInTruncation) {
  double prev = 0.0;
  for (int n = 1; n <= 8; ++n) {
    const double c = admissibility_constant(zoo::make_neumann_heat(n), 1.0);
    EXPECT_GE(c, prev * (1 - 1e-10));
    prev = c;
  }
}

TEST(Admissibility, ZeroControlIsDegenerate) {
  const auto sys = SpectralSystem({test::mode(0, -1.0, 0.0)}, 0.0, 1, 1.0);
  EXPECT_THROW(admissibility_constant(sys, 1.0), DegenerateOutput);
}
