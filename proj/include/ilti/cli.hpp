#ifndef ILTI_CLI_HPP
#define ILTI_CLI_HPP

// Command-line front end. Every subcommand builds one or more tables, writes
// them as CSV or JSON into the output directory together with a run manifest,
// and prints a JSON summary on stdout. Failures print a JSON error record on
// stderr and return a nonzero exit code.

#include "ilti/duality_engine.hpp"
#include "ilti/io.hpp"
#include "ilti/model_zoo.hpp"
#include "ilti/observability.hpp"

#include <CLI11.hpp>
#include <boost/version.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace ilti::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { ok = 0, validation_error = 2, module_error = 3, internal_error = 4 };

struct ExperimentConfig {
  std::string command;
  std::optional<double> T;
  int N = 0;
  int M = 0;
  int n_max = 50;
  int k_min = 5;
  int k_max = 40;
  std::optional<int> n_grid;
  int n_basis = 256;
  std::uint64_t seed = 1;
  int modes = 4;
  int k = 1;
  int order = 1;
  double eps = 1e-3;
  std::string out_dir;   // falls back to ILTI_OUTPUT_DIR, then "."
  std::string format = "csv";
};

/// Raised for configurations rejected before dispatch.
class ConfigError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "ConfigError"; }
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"toy-demo",     "heat-psi",    "h1dual-norm",  "wave-w",
                                          "heatwave-eigs", "defect-scan", "null-control", "regularity-probe"};
  return c;
}

inline io::json config_json(const ExperimentConfig& c) {
  io::json j{{"command", c.command}, {"N", c.N},         {"M", c.M},         {"nmax", c.n_max},
             {"kmin", c.k_min},      {"kmax", c.k_max},   {"n_basis", c.n_basis}, {"seed", c.seed},
             {"modes", c.modes},     {"k", c.k},          {"order", c.order}, {"eps", c.eps},
             {"format", c.format}};
  j["T"] = c.T ? io::json(*c.T) : io::json(nullptr);
  j["n_grid"] = c.n_grid ? io::json(*c.n_grid) : io::json(nullptr);
  return j;
}

inline void validate(const ExperimentConfig& c) {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(std::find(commands().begin(), commands().end(), c.command) != commands().end(),
       "unknown command '" + c.command + "'");
  need(!c.T || (*c.T > 0.0 && std::isfinite(*c.T)), "T must be positive");
  need(c.n_max >= 1, "nmax must be at least 1");
  need(c.k_min <= c.k_max, "kmin must not exceed kmax");
  need(!c.n_grid || *c.n_grid >= 2, "n_grid must be at least 2");
  need(c.n_basis >= 1, "n_basis must be positive");
  need(c.modes >= 2, "modes must be at least 2");
  need(c.k >= 1, "k must be at least 1");
  need(c.order >= 0, "order must be nonnegative");
  need(std::isfinite(c.eps), "eps must be finite");
  need(c.format == "csv" || c.format == "json", "format must be csv or json");
  if (c.command == "defect-scan") need(c.N >= 0, "N must be nonnegative for defect-scan");
  if (c.command == "heatwave-eigs" || c.command == "defect-scan")
    need(c.k_min <= -5 || c.k_max >= 5, "kmin..kmax must contain an index with |k| >= 5");
}

struct CommandOutput {
  std::vector<std::pair<std::string, io::Table>> tables;  // first is the main artifact
  io::json summary = io::json::object();
};

namespace detail {

inline CommandOutput toy_demo(const ExperimentConfig& c) {
  const double T = c.T.value_or(1.0);
  const int n = c.n_grid.value_or(101);
  const SpectralSystem sys = zoo::make_toy(T);
  const TowerVector z0 = TowerVector::primal({});
  const std::vector<double> grid = uniform_grid(T, n);
  CommandOutput out;
  io::Table summary{{"input", "final_state_re", "final_state_im", "curve_sup", "curve_at_T"}, {}};
  io::Table curves{{"time", "probe_label", "re", "im"}, {}};
  io::Table states{{"mode_index", "re", "im", "result_index"}, {}};
  const std::vector<std::pair<std::string, GeneralizedInput>> inputs{
      {"dirac_T", GeneralizedInput::dirac(T, T, VecC::Ones(1))},
      {"density_one", GeneralizedInput::from_density(TimeSignal::constant(T, cplx(1.0)))}};
  for (const auto& [name, u] : inputs) {
    EngineOptions eo;
    eo.compute_bound = false;
    const FinalStateResult fs = final_state(sys, z0, u, T, DualSpaceTag::full(), eo);
    const CurveSample cs = state_curve(sys, u, grid, {unit_mode(0, 2)});
    double sup = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i] < T) sup = std::max(sup, std::abs(cs.pairings[0][i]));
      curves.add({grid[i], name, cs.pairings[0][i].real(), cs.pairings[0][i].imag()});
    }
    const cplx v = fs.state.at(0);
    summary.add({name, v.real(), v.imag(), sup, cs.pairings[0].back().real()});
    for (const auto& row : io::state_table(fs).rows) {
      states.add(row);
    }
    out.summary[name] = {{"final_state", io::to_json(v)}, {"curve_sup", sup}};
  }
  out.tables = {{"toy_demo", summary}, {"toy_demo_curve", curves}, {"toy_demo_state", states}};
  return out;
}

inline CommandOutput heat_psi(const ExperimentConfig& c) {
  const double T = c.T.value_or(1.0);
  const int n = c.n_grid.value_or(201);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = std::numbers::pi * i / (n - 1);
  const zoo::HeatPsi psi = zoo::heat_psi(T, c.n_max, x);
  io::Table t{{"x", "psi"}, {}};
  for (std::size_t i = 0; i < x.size(); ++i) t.add({x[i], psi.values[i]});
  CommandOutput out;
  out.tables = {{"heat_psi", t}};
  out.summary = {{"norm_series", zoo::obstruction_check(T, c.n_max)},
                 {"norm_quadrature", zoo::obstruction_check_quadrature(T, c.n_max)},
                 {"tail_bound", psi.tail_bound}};
  return out;
}

inline CommandOutput h1dual_norm(const ExperimentConfig& c) {
  const double T = c.T.value_or(1.0);
  const VecC one = VecC::Ones(1);
  struct Case {
    std::string name;
    GeneralizedInput u;
    DualSpaceTag tag;
    double exact;
  };
  const std::vector<Case> cases{
      {"dirac_0", GeneralizedInput::dirac(T, 0.0, one), DualSpaceTag::full(), std::sqrt(1.0 / std::tanh(T))},
      {"dirac_mid", GeneralizedInput::dirac(T, 0.5 * T, one), DualSpaceTag::full(),
       std::cosh(0.5 * T) / std::sqrt(std::sinh(T))},
      {"density_one", GeneralizedInput::from_density(TimeSignal::constant(T, cplx(1.0))).with_dual_index(-1),
       DualSpaceTag::full(), std::sqrt(T)},
      {"dirac_mid_zero_trace", GeneralizedInput::dirac(T, 0.5 * T, one), DualSpaceTag::zero_trace(),
       std::sinh(0.5 * T) / std::sqrt(std::sinh(T))},
  };
  io::Table t{{"case", "dual", "M", "n_basis", "dual_norm", "closed_form", "abs_diff"}, {}};
  for (const Case& k : cases) {
    const double v = dual_norm(k.u, 1, k.tag, c.n_basis);
    t.add({k.name, to_string(k.tag.kind), 1, c.n_basis, v, k.exact, std::abs(v - k.exact)});
  }
  CommandOutput out;
  out.tables = {{"h1dual_norm", t}};
  out.summary = {{"coth_case", {{"dual_norm", t.rows[0][4]}, {"closed_form", t.rows[0][5]}}}};
  return out;
}

inline CommandOutput wave_w(const ExperimentConfig& c) {
  const double T = c.T.value_or(0.5 * std::numbers::pi);
  const int n = c.n_grid.value_or(4096);
  const zoo::RayLanding land = zoo::wave_trace_ray(T);
  const double a = land.alpha;
  // phi = cos(x/2); psi = (c0 + eps) p(x) with c0 chosen so the traced condition holds.
  const bool use_sin = std::sin(a) > 0.1;
  auto p = [use_sin](double x) { return use_sin ? std::sin(x) : std::sin(0.5 * x); };
  const double phix_a = -0.5 * std::sin(0.5 * a);
  const double pa = p(a);
  const double c0 = pa == 0.0 ? 0.0 : (land.branch == zoo::RiemannBranch::eta ? phix_a : -phix_a) / pa;
  io::Table t{{"epsilon", "psi0_residual", "traced_residual", "alpha", "branch", "predicted_trace", "solver_trace",
               "grid_aligned"},
              {}};
  for (double e : {0.0, c.eps}) {
    const zoo::WaveState s = zoo::WaveState::sample(
        n, [](double x) { return std::cos(0.5 * x); }, [&](double x) { return (c0 + e) * p(x); });
    const zoo::WConditionResidual w = zoo::wave_W_condition(s, T);
    const zoo::WaveSolveResult sol = zoo::wave_characteristics_solve(s, T);
    t.add({e, w.psi0, w.traced, a, land.branch == zoo::RiemannBranch::xi ? "xi" : "eta", w.predicted_trace,
           sol.trace.back(), sol.grid_aligned});
  }
  CommandOutput out;
  out.tables = {{"wave_w", t}};
  out.summary = {{"T", T}, {"alpha", a}, {"reflections", land.reflections}};
  return out;
}

inline CommandOutput heatwave_eigs(const ExperimentConfig& c) {
  const auto eigs = zoo::heatwave_eigenvalues(c.k_min, c.k_max);
  CommandOutput out;
  out.tables = {{"heatwave_eigs", io::eigen_table(eigs)}};
  double worst = 0.0;
  for (const auto& e : eigs) worst = std::max(worst, e.residual);
  out.summary = {{"count", eigs.size()}, {"max_residual", worst}};
  return out;
}

inline CommandOutput defect_scan(const ExperimentConfig& c) {
  const double T = c.T.value_or(1.0);
  const ObservabilityReport rep = defect_scan_heatwave(c.N, c.k_min, c.k_max, T);
  CommandOutput out;
  out.tables = {{"defect_scan", io::report_table(rep)}};
  out.summary = io::to_json(rep);
  out.summary.erase("per_mode");
  return out;
}

inline CommandOutput null_control(const ExperimentConfig& c) {
  const double T = c.T.value_or(1.0);
  const int n = c.n_grid.value_or(101);
  const SpectralSystem sys = zoo::make_neumann_heat(c.modes - 1, T);
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> nd;
  TowerVector z0 = TowerVector::primal({});
  for (const Eigenmode& m : sys.modes()) z0.coefficients[m.index] = nd(rng);
  const NullControl nc = gramian_null_control(sys, z0, T);
  io::Table t{{"time", "component", "re", "im"}, {}};
  for (double s : uniform_grid(T, n)) {
    const VecC v = nc.control(s);
    for (Eigen::Index i = 0; i < v.size(); ++i) t.add({s, static_cast<int>(i), v[i].real(), v[i].imag()});
  }
  CommandOutput out;
  out.tables = {{"null_control", t}};
  io::json z = io::json::array();
  for (const auto& [k, v] : z0.coefficients) z.push_back(v.real());
  out.summary = {{"residual", nc.residual}, {"control_norm", nc.control_norm}, {"condition", nc.condition},
                 {"initial_state", z}};
  return out;
}

inline CommandOutput regularity_probe(const ExperimentConfig& c) {
  const double T = c.T.value_or(1.0);
  const SpectralSystem sys = zoo::make_neumann_heat(c.k + 1, T);
  std::vector<int> support;
  for (const Eigenmode& m : sys.modes()) support.push_back(m.index);
  const TowerVector phi = construct_Wk_vector(sys, c.k, support);
  const GeneralizedInput u = GeneralizedInput::dirac(T, 0.5 * T, VecC::Ones(1));
  const RegularityReport rep = ilti::regularity_probe(sys, u, phi, 0.5 * T, c.order);
  io::Table t{{"derivative", "level", "step", "jump_abs", "order_estimate", "continuous"}, {}};
  io::json flags = io::json::array();
  for (const auto& d : rep.derivatives) {
    for (std::size_t l = 0; l < d.steps.size(); ++l)
      t.add({d.order, static_cast<int>(l), d.steps[l], std::abs(d.jumps[l]),
             l == 0 ? io::json(nullptr) : io::json(d.orders[l - 1]), d.continuous});
    flags.push_back({{"derivative", d.order}, {"continuous", d.continuous},
                     {"extrapolated_jump_abs", std::abs(d.extrapolated_jump)}});
  }
  CommandOutput out;
  out.tables = {{"regularity_probe", t}};
  out.summary = {{"t_star", rep.t_star}, {"k", c.k}, {"derivatives", flags}};
  return out;
}

inline CommandOutput dispatch(const ExperimentConfig& c) {
  if (c.command == "toy-demo") return toy_demo(c);
  if (c.command == "heat-psi") return heat_psi(c);
  if (c.command == "h1dual-norm") return h1dual_norm(c);
  if (c.command == "wave-w") return wave_w(c);
  if (c.command == "heatwave-eigs") return heatwave_eigs(c);
  if (c.command == "defect-scan") return defect_scan(c);
  if (c.command == "null-control") return null_control(c);
  return regularity_probe(c);
}

inline std::filesystem::path output_dir(const ExperimentConfig& c) {
  if (!c.out_dir.empty()) return c.out_dir;
  if (const char* e = std::getenv("ILTI_OUTPUT_DIR"); e && *e) return e;
  return ".";
}

inline io::json versions() {
  return {{"ilti", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", BOOST_LIB_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cli11", CLI11_VERSION},
          {"compiler", __VERSION__}};
}

inline void write_error(std::ostream& err, const std::string& command, const char* kind, const std::string& msg) {
  err << io::json{{"error", {{"command", command}, {"kind", kind}, {"message", msg}}}}.dump() << '\n';
}

}  // namespace detail

/// Runs one validated experiment; returns the process exit code.
inline int run(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  try {
    validate(c);
    const CommandOutput res = detail::dispatch(c);
    const std::filesystem::path dir = detail::output_dir(c);
    std::filesystem::create_directories(dir);
    io::json artifacts = io::json::array();
    for (const auto& [name, table] : res.tables) {
      const std::filesystem::path file = dir / (name + "." + c.format);
      std::ofstream os(file);
      if (!os) throw ConfigError("cannot write " + file.string());
      if (c.format == "csv") {
        io::write_csv(os, table);
      } else {
        os << io::json{{"columns", table.columns}, {"rows", io::table_json(table)}, {"summary", res.summary}}.dump(2)
           << '\n';
      }
      artifacts.push_back(file.filename().string());
    }
    const io::json manifest{{"command", c.command},
                            {"config", config_json(c)},
                            {"versions", detail::versions()},
                            {"artifacts", artifacts},
                            {"summary", res.summary}};
    std::ofstream(dir / (res.tables.front().first + ".manifest.json")) << manifest.dump(2) << '\n';
    out << io::json{{"command", c.command}, {"artifacts", artifacts}, {"summary", res.summary}}.dump() << '\n';
    return ok;
  } catch (const ConfigError& e) {
    detail::write_error(err, c.command, e.kind(), e.what());
    return validation_error;
  } catch (const Error& e) {
    detail::write_error(err, c.command, e.kind(), e.what());
    return module_error;
  } catch (const std::exception& e) {
    detail::write_error(err, c.command, "InternalError", e.what());
    return internal_error;
  }
}

/// Parses argv (options may also come from a `key = value` file given by --config;
/// flags on the command line win) and runs the selected subcommand.
inline int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  ExperimentConfig c;
  CLI::App app{"Spectral-truncation experiments for LTI systems with irregular inputs", "ilti"};
  app.set_config("--config", "", "key = value configuration file");
  app.add_option("--T", c.T, "time horizon");
  app.add_option("--N", c.N, "state tower index");
  app.add_option("--M", c.M, "input tower index");
  app.add_option("--nmax", c.n_max, "truncation size");
  app.add_option("--kmin", c.k_min, "first heat-wave index");
  app.add_option("--kmax", c.k_max, "last heat-wave index");
  app.add_option("--n-grid,--n_grid", c.n_grid, "grid size");
  app.add_option("--n-basis,--n_basis", c.n_basis, "cosine basis size for dual norms");
  app.add_option("--seed", c.seed, "random seed");
  app.add_option("--modes", c.modes, "number of heat modes for null-control");
  app.add_option("--k", c.k, "W_k order for regularity-probe");
  app.add_option("--order", c.order, "highest derivative probed");
  app.add_option("--eps", c.eps, "perturbation size for wave-w");
  app.add_option("--out", c.out_dir, "output directory (default: $ILTI_OUTPUT_DIR or .)");
  app.add_option("--format", c.format, "csv or json");
  app.require_subcommand(1);
  for (const std::string& name : commands()) app.add_subcommand(name)->fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return ok;
  } catch (const CLI::ParseError& e) {
    detail::write_error(err, "", "ParseError", e.what());
    return validation_error;
  }
  c.command = app.get_subcommands().front()->get_name();
  return run(c, out, err);
}

}  // namespace ilti::cli

#endif  // ILTI_CLI_HPP
