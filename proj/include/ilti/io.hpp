#ifndef ILTI_IO_HPP
#define ILTI_IO_HPP

// JSON and CSV serialization of systems, inputs and result tables.
// Complex numbers are [re, im] pairs; doubles print with 17 significant digits.

#include "ilti/duality_engine.hpp"
#include "ilti/model_zoo/heatwave.hpp"
#include "ilti/observability.hpp"

#include <json.hpp>

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace ilti::io {

using json = nlohmann::json;

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }
inline cplx cplx_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2) throw InvalidArgument("expected a [re, im] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json to_json(const VecC& v) {
  json a = json::array();
  for (const cplx& z : v) a.push_back(to_json(z));
  return a;
}
inline VecC vec_from_json(const json& j) {
  VecC v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = cplx_from_json(j[i]);
  return v;
}

// ---- SpectralSystem ------------------------------------------------------

inline json to_json(const SpectralSystem& sys) {
  json modes = json::array();
  for (const Eigenmode& m : sys.modes()) {
    json b_re = json::array(), b_im = json::array();
    for (const cplx& z : m.control_trace) {
      b_re.push_back(z.real());
      b_im.push_back(z.imag());
    }
    modes.push_back({{"index", m.index},
                     {"re", m.eigenvalue.real()},
                     {"im", m.eigenvalue.imag()},
                     {"b_re", b_re},
                     {"b_im", b_im},
                     {"branch", to_string(m.branch)},
                     {"chain", m.chain}});
  }
  return {{"growth_bound", sys.growth_bound()},
          {"input_dim", sys.input_dim()},
          {"time_horizon_default", sys.time_horizon_default()},
          {"modes", modes}};
}

inline SpectralSystem system_from_json(const json& j) {
  std::vector<Eigenmode> modes;
  for (const json& m : j.at("modes")) {
    Eigenmode e;
    e.index = m.at("index").get<int>();
    e.eigenvalue = {m.at("re").get<double>(), m.at("im").get<double>()};
    const json& br = m.at("b_re");
    const json& bi = m.at("b_im");
    if (br.size() != bi.size()) throw InvalidArgument("mode " + std::to_string(e.index) + ": b_re and b_im differ in length");
    e.control_trace.resize(static_cast<Eigen::Index>(br.size()));
    for (std::size_t i = 0; i < br.size(); ++i)
      e.control_trace[static_cast<Eigen::Index>(i)] = {br[i].get<double>(), bi[i].get<double>()};
    e.branch = branch_from_string(m.value("branch", std::string("parabolic")));
    e.chain = m.value("chain", std::vector<int>{});
    modes.push_back(std::move(e));
  }
  return SpectralSystem(std::move(modes), j.at("growth_bound").get<double>(), j.at("input_dim").get<int>(),
                        j.value("time_horizon_default", 1.0));
}

// ---- signals and inputs --------------------------------------------------

/// Signals with cosine coefficients serialize exactly; others as samples on a
/// uniform grid of `n_samples` points (read back as the piecewise-linear interpolant).
inline json to_json(const TimeSignal& s, int n_samples = 257) {
  if (s.cosine_coefficients()) {
    const auto& c = *s.cosine_coefficients();
    json rows = json::array();
    for (Eigen::Index m = 0; m < c.rows(); ++m) rows.push_back(to_json(VecC(c.row(m).transpose())));
    return {{"kind", "cosine"}, {"horizon", s.horizon()}, {"coefficients", rows}};
  }
  json rows = json::array();
  for (const VecC& v : s.samples(n_samples)) rows.push_back(to_json(v));
  return {{"kind", "samples"}, {"horizon", s.horizon()}, {"values", rows}};
}

inline TimeSignal signal_from_json(const json& j) {
  const double T = j.at("horizon").get<double>();
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "cosine") {
    const json& rows = j.at("coefficients");
    if (rows.empty()) throw InvalidArgument("cosine signal without coefficients");
    MatC c(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t m = 0; m < rows.size(); ++m) c.row(static_cast<Eigen::Index>(m)) = vec_from_json(rows[m]).transpose();
    return TimeSignal::from_cosine(T, c);
  }
  if (kind == "samples") {
    std::vector<VecC> values;
    for (const json& v : j.at("values")) values.push_back(vec_from_json(v));
    return TimeSignal::from_samples(T, values);
  }
  throw InvalidArgument("unknown signal kind '" + kind + "'");
}

inline json to_json(const GeneralizedInput& u, int n_samples = 257) {
  json atoms = json::array(), parts = json::array();
  for (const Atom& a : u.atoms()) atoms.push_back({{"t0", a.t0}, {"u0", to_json(a.u0)}});
  for (const DerivativePart& p : u.derivative_parts()) parts.push_back({{"g", to_json(p.g, n_samples)}, {"u0", to_json(p.u0)}});
  return {{"horizon", u.horizon()},
          {"dim", u.dim()},
          {"density", u.density() ? to_json(*u.density(), n_samples) : json(nullptr)},
          {"atoms", atoms},
          {"derivative_parts", parts},
          {"dual_index", u.dual_index()}};
}

inline GeneralizedInput input_from_json(const json& j) {
  GeneralizedInput u(j.at("horizon").get<double>(), j.at("dim").get<Eigen::Index>());
  if (j.contains("density") && !j.at("density").is_null()) u.add_density(signal_from_json(j.at("density")));
  for (const json& a : j.value("atoms", json::array())) u.add_atom(a.at("t0").get<double>(), vec_from_json(a.at("u0")));
  for (const json& p : j.value("derivative_parts", json::array()))
    u.add_derivative_part(signal_from_json(p.at("g")), vec_from_json(p.at("u0")));
  const int M = j.value("dual_index", u.natural_index());
  return M == u.natural_index() ? u : u.with_dual_index(M);
}

inline json to_json(const TowerVector& v) {
  json c = json::array();
  for (const auto& [k, z] : v.coefficients) c.push_back({{"k", k}, {"value", to_json(z)}});
  return {{"tower_index", v.tower_index}, {"side", v.side == Side::primal ? "primal" : "adjoint"}, {"coefficients", c}};
}

inline TowerVector tower_from_json(const json& j) {
  TowerVector v;
  v.tower_index = j.at("tower_index").get<int>();
  v.side = j.at("side").get<std::string>() == "primal" ? Side::primal : Side::adjoint;
  for (const json& c : j.at("coefficients")) v.coefficients[c.at("k").get<int>()] = cplx_from_json(c.at("value"));
  return v;
}

// ---- tables --------------------------------------------------------------

/// Rows of scalar cells; every cell is a number or a string.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;

  void add(std::vector<json> row) {
    if (row.size() != columns.size()) throw InvalidArgument("table row has the wrong number of cells");
    rows.push_back(std::move(row));
  }
};

inline std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string format_cell(const json& c) {
  if (c.is_string()) return c.get<std::string>();
  if (c.is_boolean()) return c.get<bool>() ? "true" : "false";
  if (c.is_number_integer()) return std::to_string(c.get<long long>());
  if (c.is_number()) return format_number(c.get<double>());
  return c.dump();
}

inline void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_cell(r[i]);
    os << '\n';
  }
}

inline json table_json(const Table& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json o = json::object();
    for (std::size_t i = 0; i < r.size(); ++i) o[t.columns[i]] = r[i];
    rows.push_back(o);
  }
  return rows;
}

inline Table state_table(const FinalStateResult& r) {
  Table t{{"mode_index", "re", "im", "result_index"}, {}};
  for (const auto& [k, z] : r.state.coefficients) t.add({k, z.real(), z.imag(), r.result_index});
  return t;
}

inline Table curve_table(const CurveSample& c) {
  Table t{{"time", "probe_label", "re", "im"}, {}};
  for (std::size_t i = 0; i < c.times.size(); ++i)
    for (std::size_t p = 0; p < c.labels.size(); ++p)
      t.add({c.times[i], c.labels[p], c.pairings[p][i].real(), c.pairings[p][i].imag()});
  return t;
}

inline Table eigen_table(const std::vector<zoo::HeatWaveEigen>& eigs) {
  Table t{{"k", "re_seed", "im_seed", "re_root", "im_root", "residual", "control_trace_abs"}, {}};
  for (const auto& e : eigs)
    t.add({e.k, e.seed.real(), e.seed.imag(), e.root.real(), e.root.imag(), e.residual,
           std::abs(zoo::heatwave_mode(e.root, 3).control_trace)});
  return t;
}

inline Table report_table(const ObservabilityReport& rep) {
  Table t{{"k", "numerator", "denominator", "ratio", "log_ratio", "sqrt_k"}, {}};
  for (const auto& m : rep.per_mode)
    t.add({m.k, m.numerator, m.denominator, m.ratio, std::log(m.ratio), std::sqrt(std::abs(double(m.k)))});
  return t;
}

inline json to_json(const ObservabilityReport& rep) {
  return {{"N", rep.N},
          {"T", rep.T},
          {"per_mode", table_json(report_table(rep))},
          {"fit", {{"slope", rep.fit.slope}, {"intercept", rep.fit.intercept}}},
          {"raw_fit", {{"slope", rep.raw_fit.slope}, {"intercept", rep.raw_fit.intercept}}},
          {"verdict", rep.verdict},
          {"warnings", rep.warnings}};
}

}  // namespace ilti::io

#endif  // ILTI_IO_HPP
