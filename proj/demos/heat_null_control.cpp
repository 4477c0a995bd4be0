// Steers a few Neumann heat modes to rest with the minimum-norm control and
// prints the control on a coarse grid together with the final residual.

#include "ilti/ilti.hpp"

#include <cstdio>

int main() {
  using namespace ilti;
  const double T = 1.0;
  const SpectralSystem sys = zoo::make_neumann_heat(4, T);
  TowerVector z0 = TowerVector::primal({});
  for (const Eigenmode& m : sys.modes()) z0.coefficients[m.index] = 1.0 / (1.0 + m.index);

  const NullControl nc = gramian_null_control(sys, z0, T);
  std::printf("gramian condition %.3e, control L2 norm %.6f\n", nc.condition, nc.control_norm);
  for (double s : uniform_grid(T, 11)) std::printf("  u(%.1f) = % .6f\n", s, nc.control(s)[0].real());

  const auto fs = final_state(sys, z0, GeneralizedInput::from_density(nc.control), T);
  std::printf("final state norm %.3e\n", tower_norm(sys, fs.state, 0));
}
