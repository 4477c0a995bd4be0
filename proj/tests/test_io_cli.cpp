#include "ilti/cli.hpp"
#include "ilti/io.hpp"
#include "ilti/model_zoo.hpp"

#include "test_helpers.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace ilti;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("ilti_test_io_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct RunResult {
  int code;
  std::string out, err;
};

RunResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ilti");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

int run_binary(const std::string& args) {
  const int status = std::system((std::string(ILTI_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

// ---- JSON round trips ----

TEST(JsonRoundTrip, SystemIsExact) {
  const auto hw = zoo::make_heatwave(5, 12);
  const auto back = io::system_from_json(io::to_json(hw));
  ASSERT_EQ(back.size(), hw.size());
  EXPECT_EQ(back.growth_bound(), hw.growth_bound());
  EXPECT_EQ(back.input_dim(), hw.input_dim());
  for (std::size_t i = 0; i < hw.size(); ++i) {
    const auto &a = hw.modes()[i], &b = back.modes()[i];
    EXPECT_EQ(a.index, b.index);
    EXPECT_EQ(a.eigenvalue, b.eigenvalue);
    EXPECT_EQ(a.control_trace, b.control_trace);
    EXPECT_EQ(a.branch, b.branch);
    EXPECT_EQ(a.chain, b.chain);
  }
  // Text round trip keeps every bit too.
  const auto text = io::system_from_json(io::json::parse(io::to_json(hw).dump()));
  EXPECT_EQ(text.modes()[3].eigenvalue, hw.modes()[3].eigenvalue);
}

TEST(JsonRoundTrip, MismatchedTraceLengthsRejected) {
  auto j = io::to_json(zoo::make_neumann_heat(3));
  j["modes"][1]["b_im"].push_back(0.0);
  EXPECT_THROW(io::system_from_json(j), InvalidArgument);
}

TEST(JsonRoundTrip, CosineSignalIsExact) {
  std::mt19937_64 rng(5);
  MatC c(7, 2);
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j) c(i, j) = test::random_cplx(rng);
  const auto s = TimeSignal::from_cosine(1.7, c);
  const auto back = io::signal_from_json(io::json::parse(io::to_json(s).dump()));
  for (double t : {0.0, 0.3, 1.1, 1.7}) EXPECT_LE((back(t) - s(t)).norm(), 1e-15);
}

TEST(JsonRoundTrip, SampledSignalIsInterpolant) {
  const auto s = TimeSignal::scalar(1.0, {[](double t) { return cplx(t * t, -t); }}, 0);
  const auto back = io::signal_from_json(io::to_json(s, 1025));
  for (double t : {0.0, 0.25, 0.5004, 1.0}) EXPECT_LE((back(t) - s(t)).norm(), 1e-6);
}

TEST(JsonRoundTrip, UnknownSignalKindRejected) {
  EXPECT_THROW(io::signal_from_json({{"kind", "spline"}, {"horizon", 1.0}}), InvalidArgument);
}

TEST(JsonRoundTrip, GeneralizedInputGivesSameFinalState) {
  const double T = 1.0;
  const auto sys = zoo::make_neumann_heat(8, T);
  GeneralizedInput u = GeneralizedInput::from_density(TimeSignal::constant(T, cplx(0.5, -0.25)));
  u.add_atom(0.4, VecC::Constant(1, cplx(1.0, 2.0)));
  u.add_derivative_part(TimeSignal::constant(T, cplx(1.0)), VecC::Constant(1, cplx(-0.5)));
  const auto back = io::input_from_json(io::json::parse(io::to_json(u).dump()));
  EXPECT_EQ(back.dual_index(), u.dual_index());
  EXPECT_EQ(back.atoms().size(), 1u);
  const TowerVector z0{{}, 0, Side::primal};
  const auto a = final_state(sys, z0, u, T), b = final_state(sys, z0, back, T);
  for (const auto& [k, z] : a.state.coefficients) EXPECT_LE(std::abs(z - b.state.at(k)), 1e-13);
}

TEST(JsonRoundTrip, TowerVector) {
  TowerVector v{{{-2, cplx(1, 2)}, {0, cplx(0.5)}, {7, cplx(0, -3)}}, -1, Side::adjoint};
  const auto back = io::tower_from_json(io::json::parse(io::to_json(v).dump()));
  EXPECT_EQ(back.tower_index, -1);
  EXPECT_EQ(back.side, Side::adjoint);
  EXPECT_EQ(back.coefficients, v.coefficients);
}

// ---- tables ----

TEST(Csv, HeaderAndFullPrecision) {
  io::Table t{{"a", "b", "c"}, {}};
  t.add({1, 0.1, "x"});
  std::ostringstream os;
  io::write_csv(os, t);
  EXPECT_EQ(os.str(), "a,b,c\n1,0.10000000000000001,x\n");
  EXPECT_THROW(t.add({1, 2}), InvalidArgument);
}

TEST(Csv, StateTableColumns) {
  const auto sys = zoo::make_toy();
  const auto r = final_state(sys, TowerVector{{}, 0, Side::primal},
                             GeneralizedInput::dirac(1.0, 1.0, VecC::Ones(1)), 1.0);
  const auto t = io::state_table(r);
  EXPECT_EQ(t.columns, (std::vector<std::string>{"mode_index", "re", "im", "result_index"}));
  ASSERT_EQ(t.rows.size(), 1u);
}

// ---- CLI ----

TEST(Cli, ToyDemoWritesArtifactsAndManifest) {
  const auto d = fresh_dir("toy");
  const auto r = run_cli({"toy-demo", "--out", d.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = io::json::parse(r.out);
  EXPECT_NEAR(summary["summary"]["dirac_T"]["final_state"][0].get<double>(), 1.0, 1e-14);
  EXPECT_NEAR(summary["summary"]["density_one"]["final_state"][0].get<double>(), 1.0, 1e-14);
  EXPECT_NEAR(summary["summary"]["dirac_T"]["curve_sup"].get<double>(), 0.0, 1e-14);
  for (const char* f : {"toy_demo.csv", "toy_demo_curve.csv", "toy_demo_state.csv", "toy_demo.manifest.json"})
    EXPECT_TRUE(fs::exists(d / f)) << f;
  EXPECT_EQ(slurp(d / "toy_demo.csv").substr(0, 57), "input,final_state_re,final_state_im,curve_sup,curve_at_T\n");
  const auto m = io::json::parse(slurp(d / "toy_demo.manifest.json"));
  EXPECT_EQ(m["command"], "toy-demo");
  EXPECT_EQ(m["artifacts"].size(), 3u);
  for (const char* key : {"ilti", "eigen", "boost", "nlohmann_json", "cli11", "compiler"})
    EXPECT_TRUE(m["versions"].contains(key)) << key;
  EXPECT_TRUE(m["config"]["T"].is_null());
}

TEST(Cli, JsonFormat) {
  const auto d = fresh_dir("json");
  ASSERT_EQ(run_cli({"heat-psi", "--out", d.string(), "--format", "json", "--n-grid", "11"}).code, 0);
  const auto j = io::json::parse(slurp(d / "heat_psi.json"));
  EXPECT_EQ(j["columns"], (io::json{"x", "psi"}));
  EXPECT_EQ(j["rows"].size(), 11u);
  EXPECT_NEAR(j["summary"]["norm_series"].get<double>(), j["summary"]["norm_quadrature"].get<double>(), 1e-9);
}

TEST(Cli, ValidationErrorsExitTwo) {
  const auto d = fresh_dir("bad");
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"toy-demo", "--T", "-1"},
           {"toy-demo", "--format", "xml"},
           {"defect-scan", "--N", "-1"},
           {"heat-psi", "--nmax", "0"},
           {"toy-demo", "--bogus", "1"},
           {}}) {
    auto a = args;
    a.push_back("--out");
    a.push_back(d.string());
    const auto r = run_cli(a);
    EXPECT_EQ(r.code, 2) << (args.empty() ? "" : args[0]);
    EXPECT_TRUE(io::json::parse(r.err).contains("error"));
  }
}

TEST(Cli, ModuleErrorsExitThree) {
  const auto d = fresh_dir("module");
  const auto r = run_cli({"defect-scan", "--kmin", "5", "--kmax", "8", "--out", d.string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(io::json::parse(r.err)["error"]["kind"], "InvalidArgument");
}

TEST(Cli, SameSeedSameBytes) {
  const auto a = fresh_dir("seed_a"), b = fresh_dir("seed_b"), c = fresh_dir("seed_c");
  ASSERT_EQ(run_cli({"null-control", "--seed", "7", "--out", a.string()}).code, 0);
  ASSERT_EQ(run_cli({"null-control", "--seed", "7", "--out", b.string()}).code, 0);
  ASSERT_EQ(run_cli({"null-control", "--seed", "8", "--out", c.string()}).code, 0);
  EXPECT_EQ(slurp(a / "null_control.csv"), slurp(b / "null_control.csv"));
  EXPECT_NE(slurp(a / "null_control.csv"), slurp(c / "null_control.csv"));
}

TEST(Cli, ConfigFileLosesToFlags) {
  const auto d = fresh_dir("config");
  const fs::path cfg = d / "run.ini";
  std::ofstream(cfg) << "T = 2.0\nnmax = 7\n";
  ASSERT_EQ(run_cli({"heat-psi", "--config", cfg.string(), "--T", "3.0", "--out", d.string()}).code, 0);
  const auto m = io::json::parse(slurp(d / "heat_psi.manifest.json"));
  EXPECT_EQ(m["config"]["T"].get<double>(), 3.0);
  EXPECT_EQ(m["config"]["nmax"].get<int>(), 7);
}

TEST(Cli, OutputDirFromEnvironment) {
  const auto d = fresh_dir("env");
  ::setenv("ILTI_OUTPUT_DIR", d.c_str(), 1);
  const auto r = run_cli({"heatwave-eigs", "--kmin", "5", "--kmax", "7"});
  ::unsetenv("ILTI_OUTPUT_DIR");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(d / "heatwave_eigs.csv"));
}

TEST(Cli, BinaryExitCodes) {
  const auto d = fresh_dir("binary");
  EXPECT_EQ(run_binary("toy-demo --out " + d.string()), 0);
  EXPECT_EQ(run_binary("toy-demo --T -1 --out " + d.string()), 2);
  EXPECT_EQ(run_binary("defect-scan --kmin 5 --kmax 8 --out " + d.string()), 3);
  EXPECT_EQ(run_binary("--help"), 0);
}
