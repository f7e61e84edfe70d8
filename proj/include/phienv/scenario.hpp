#ifndef PHIENV_SCENARIO_HPP_
#define PHIENV_SCENARIO_HPP_

// Scenario configuration files and the scan / suite runners behind the CLI.
//
// File format: `[section]` headers and `key = value` lines; `#` and `;`
// start comments. Recognised sections:
//   [run]             seed, output
//   [suite]           criteria (comma list), tol.<name> overrides
//   [scenario.NAME]   family, gamma, kernel, kernel_params, function, dim,
//                     y_lo, y_hi, y_points, checks, expect, radius,
//                     xbar_lo, xbar_hi, xbar_points

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "phienv/acceptance.hpp"
#include "phienv/coupling.hpp"
#include "phienv/derivatives.hpp"
#include "phienv/kernels.hpp"
#include "phienv/prox_solver.hpp"
#include "phienv/regularity.hpp"
#include "phienv/sampling.hpp"
#include "phienv/subdiff.hpp"
#include "phienv/testfns.hpp"
#include "phienv/types.hpp"

namespace phienv {

class ConfigError : public Error {
 public:
  ConfigError(std::size_t line, const std::string& field, const std::string& why)
      : Error(ErrorKind::kConfig, "line " + std::to_string(line) + (field.empty() ? "" : ", field '" + field + "'") +
                                      ": " + why),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// ---- INI ---------------------------------------------------------------------

struct IniEntry {
  std::string key, value;
  std::size_t line = 0;
};

struct IniSection {
  std::string name;
  std::size_t line = 0;
  std::vector<IniEntry> entries;

  const IniEntry* find(const std::string& key) const {
    for (const auto& e : entries)
      if (e.key == key) return &e;
    return nullptr;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

}  // namespace detail

inline std::vector<IniSection> parse_ini(std::istream& in) {
  std::vector<IniSection> out;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto cut = raw.find_first_of("#;");
    const std::string line = detail::trim(cut == std::string::npos ? raw : raw.substr(0, cut));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(lineno, "", "unterminated section header");
      const std::string name = detail::trim(line.substr(1, line.size() - 2));
      if (name.empty()) throw ConfigError(lineno, "", "empty section name");
      for (const auto& s : out)
        if (s.name == name) throw ConfigError(lineno, "", "duplicate section [" + name + "]");
      out.push_back({name, lineno, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(lineno, "", "expected 'key = value'");
    if (out.empty()) throw ConfigError(lineno, "", "entry before any section");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(lineno, "", "empty key");
    if (out.back().find(key)) throw ConfigError(lineno, key, "duplicate key");
    out.back().entries.push_back({key, value, lineno});
  }
  return out;
}

// ---- configuration -------------------------------------------------------------

inline const std::vector<std::string>& scan_check_names() {
  static const std::vector<std::string> names = {"subgradient",        "fenchel_young", "prox_single_valued",
                                                 "gradient",           "hessian",       "jacobian",
                                                 "regularity",         "twist"};
  return names;
}

struct ScenarioConfig {
  std::string name;
  std::size_t line = 0;
  CouplingFamily family = CouplingFamily::kEuclidean;
  double gamma = 1.0;
  std::optional<std::string> kernel;
  std::vector<double> kernel_params;
  std::string function;
  std::size_t dim = 1;
  Vector y_lo, y_hi;
  std::size_t y_points = 11;
  std::vector<std::string> checks;
  bool expect_pass = true;
  double radius = 0.1;
  // x̄ grid for the subgradient / Fenchel-Young checks; P(y) when absent.
  std::optional<Vector> xbar_lo, xbar_hi;
  std::size_t xbar_points = 1;

  Coupling coupling() const {
    std::optional<Kernel> k;
    if (kernel) k = make_kernel(*kernel, kernel_params);
    return make_coupling(family, dim, gamma, k);
  }
  TestFunction test_function() const { return make_function(function, dim); }
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string output = "out";
  std::vector<std::string> criteria;  // empty = all
  AcceptanceTolerances tolerances;
  std::vector<ScenarioConfig> scenarios;
};

namespace detail {

inline double parse_double(const IniEntry& e) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(e.value, &pos);
    if (pos != e.value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(e.line, e.key, "expected a number, got '" + e.value + "'");
  }
}

inline std::uint64_t parse_uint(const IniEntry& e) {
  const double v = parse_double(e);
  if (!(v >= 0.0) || v != std::floor(v) || v > 9.0e15)
    throw ConfigError(e.line, e.key, "expected a non-negative integer, got '" + e.value + "'");
  return static_cast<std::uint64_t>(v);
}

inline std::vector<double> parse_doubles(const IniEntry& e) {
  std::vector<double> out;
  for (const auto& tok : split_list(e.value)) out.push_back(parse_double({e.key, tok, e.line}));
  return out;
}

// Scalar or per-coordinate vector of length m.
inline Vector parse_bound(const IniEntry& e, std::size_t m) {
  const std::vector<double> v = parse_doubles(e);
  if (v.size() == 1) return Vector::Constant(static_cast<Eigen::Index>(m), v[0]);
  if (v.size() != m)
    throw ConfigError(e.line, e.key, "expected 1 or " + std::to_string(m) + " values, got " + std::to_string(v.size()));
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(m));
}

inline void reject_unknown(const IniSection& s, const std::set<std::string>& allowed) {
  for (const auto& e : s.entries)
    if (!allowed.count(e.key) && !(s.name == "suite" && e.key.rfind("tol.", 0) == 0))
      throw ConfigError(e.line, e.key, "unknown key in [" + s.name + "]");
}

inline ScenarioConfig parse_scenario(const IniSection& s) {
  reject_unknown(s, {"family", "gamma", "kernel", "kernel_params", "function", "dim", "y_lo", "y_hi", "y_points",
                     "checks", "expect", "radius", "xbar_lo", "xbar_hi", "xbar_points"});
  ScenarioConfig sc;
  sc.name = s.name.substr(std::string("scenario.").size());
  sc.line = s.line;
  if (sc.name.empty() || sc.name.find_first_of("/\\ ") != std::string::npos)
    throw ConfigError(s.line, "", "scenario names must be non-empty without spaces or slashes");
  auto require = [&](const char* key) -> const IniEntry& {
    const IniEntry* e = s.find(key);
    if (!e) throw ConfigError(s.line, key, "missing in [" + s.name + "]");
    return *e;
  };
  auto rethrow = [](const IniEntry& e, auto&& f) {
    try {
      return f();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& err) {
      throw ConfigError(e.line, e.key, err.what());
    }
  };

  const IniEntry& fam = require("family");
  sc.family = rethrow(fam, [&] { return parse_coupling_family(fam.value); });
  if (const IniEntry* e = s.find("gamma")) {
    sc.gamma = parse_double(*e);
    if (!(sc.gamma > 0.0) || !std::isfinite(sc.gamma)) throw ConfigError(e->line, e->key, "gamma must be positive");
  }
  if (const IniEntry* e = s.find("kernel")) {
    rethrow(*e, [&] { return parse_kernel_id(e->value); });
    sc.kernel = e->value;
  }
  if (const IniEntry* e = s.find("kernel_params")) sc.kernel_params = parse_doubles(*e);
  const IniEntry& fn = require("function");
  const auto& ids = catalog_ids();
  if (std::find(ids.begin(), ids.end(), fn.value) == ids.end())
    throw ConfigError(fn.line, fn.key, "unknown test function '" + fn.value + "'");
  sc.function = fn.value;
  if (const IniEntry* e = s.find("dim")) {
    sc.dim = parse_uint(*e);
    if (sc.dim == 0 || sc.dim > 3) throw ConfigError(e->line, e->key, "dim must be 1, 2 or 3");
  }
  const Coupling c = rethrow(fam, [&] { return sc.coupling(); });
  const std::size_t m = c.dim_y();

  const IniEntry& lo = require("y_lo");
  const IniEntry& hi = require("y_hi");
  sc.y_lo = parse_bound(lo, m);
  sc.y_hi = parse_bound(hi, m);
  if ((sc.y_lo.array() > sc.y_hi.array()).any()) throw ConfigError(hi.line, hi.key, "y_hi below y_lo");
  if (!c.y_domain().contains(sc.y_lo)) throw ConfigError(lo.line, lo.key, "y grid leaves the domain Y of the coupling");
  if (!c.y_domain().contains(sc.y_hi)) throw ConfigError(hi.line, hi.key, "y grid leaves the domain Y of the coupling");
  if (const IniEntry* e = s.find("y_points")) {
    sc.y_points = parse_uint(*e);
    if (sc.y_points == 0 || std::pow(static_cast<double>(sc.y_points), static_cast<double>(m)) > 1e5)
      throw ConfigError(e->line, e->key, "y_points must be positive with at most 1e5 grid nodes");
  }
  if (const IniEntry* e = s.find("checks")) {
    sc.checks = split_list(e->value);
    const auto& known = scan_check_names();
    for (const auto& ch : sc.checks)
      if (std::find(known.begin(), known.end(), ch) == known.end())
        throw ConfigError(e->line, e->key, "unknown check '" + ch + "'");
  }
  if (const IniEntry* e = s.find("expect")) {
    if (e->value != "pass" && e->value != "fail") throw ConfigError(e->line, e->key, "expect must be pass or fail");
    sc.expect_pass = e->value == "pass";
  }
  if (const IniEntry* e = s.find("radius")) {
    sc.radius = parse_double(*e);
    if (!(sc.radius > 0.0)) throw ConfigError(e->line, e->key, "radius must be positive");
  }
  const IniEntry* xl = s.find("xbar_lo");
  const IniEntry* xh = s.find("xbar_hi");
  if (static_cast<bool>(xl) != static_cast<bool>(xh))
    throw ConfigError(s.line, xl ? "xbar_hi" : "xbar_lo", "xbar_lo and xbar_hi go together");
  if (xl) {
    sc.xbar_lo = parse_bound(*xl, c.dim_x());
    sc.xbar_hi = parse_bound(*xh, c.dim_x());
    if ((sc.xbar_lo->array() > sc.xbar_hi->array()).any()) throw ConfigError(xh->line, xh->key, "xbar_hi below xbar_lo");
    if (!c.x_domain().contains(*sc.xbar_lo) || !c.x_domain().contains(*sc.xbar_hi))
      throw ConfigError(xl->line, xl->key, "x̄ grid leaves the domain X of the coupling");
  }
  if (const IniEntry* e = s.find("xbar_points")) {
    sc.xbar_points = parse_uint(*e);
    if (sc.xbar_points == 0) throw ConfigError(e->line, e->key, "xbar_points must be positive");
  }
  return sc;
}

}  // namespace detail

inline RunConfig parse_run_config(std::istream& in) {
  RunConfig rc;
  for (const IniSection& s : parse_ini(in)) {
    if (s.name == "run") {
      detail::reject_unknown(s, {"seed", "output"});
      if (const IniEntry* e = s.find("seed")) rc.seed = detail::parse_uint(*e);
      if (const IniEntry* e = s.find("output")) rc.output = e->value;
    } else if (s.name == "suite") {
      detail::reject_unknown(s, {"criteria"});
      for (const auto& e : s.entries) {
        if (e.key == "criteria") {
          rc.criteria = detail::split_list(e.value);
          const auto& names = criterion_names();
          for (const auto& c : rc.criteria)
            if (std::find(names.begin(), names.end(), c) == names.end())
              throw ConfigError(e.line, e.key, "unknown criterion '" + c + "'");
        } else {
          try {
            rc.tolerances.set(e.key.substr(4), detail::parse_double(e));
          } catch (const ConfigError&) {
            throw;
          } catch (const Error& err) {
            throw ConfigError(e.line, e.key, err.what());
          }
        }
      }
    } else if (s.name.rfind("scenario.", 0) == 0) {
      rc.scenarios.push_back(detail::parse_scenario(s));
    } else {
      throw ConfigError(s.line, "", "unknown section [" + s.name + "]");
    }
  }
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open config file '" + path + "'");
  return parse_run_config(in);
}

// ---- CSV -----------------------------------------------------------------------

namespace detail {

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string csv_line(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += csv_field(cells[i]);
  }
  return out + "\n";
}

}  // namespace detail

// ---- scan ------------------------------------------------------------------------

struct CheckTally {
  std::size_t passed = 0, failed = 0, skipped = 0, errors = 0;
};

struct ScenarioReport {
  std::string name;
  std::string csv;  // full file contents
  std::vector<std::pair<std::string, CheckTally>> tallies;  // per check, config order
  bool expect_pass = true;

  // A check meets expectation when every evaluated row agrees with it and at
  // least one row was evaluated.
  bool check_ok(const CheckTally& t) const {
    if (t.errors > 0 || t.passed + t.failed == 0) return false;
    return expect_pass ? t.failed == 0 : t.passed == 0;
  }
  bool ok() const {
    for (const auto& [name, t] : tallies)
      if (!check_ok(t)) return false;
    return true;
  }
};

namespace detail {

// Tensor grid with `points` nodes along each coordinate where lo < hi and a
// single node where lo == hi (or points == 1, which takes lo).
inline std::vector<Vector> grid(const Vector& lo, const Vector& hi, std::size_t points) {
  std::vector<Vector> out = {lo};
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (points < 2 || lo[i] == hi[i]) continue;
    std::vector<Vector> next;
    for (const Vector& p : out)
      for (std::size_t k = 0; k < points; ++k) {
        Vector q = p;
        q[i] = k + 1 == points ? hi[i] : lo[i] + (hi[i] - lo[i]) * static_cast<double>(k) / static_cast<double>(points - 1);
        next.push_back(q);
      }
    out = std::move(next);
  }
  return out;
}

inline std::vector<Vector> y_grid(const ScenarioConfig& sc) { return grid(sc.y_lo, sc.y_hi, sc.y_points); }

inline std::vector<Vector> xbar_grid(const ScenarioConfig& sc, const Vector& fallback) {
  if (!sc.xbar_lo) return {fallback};
  return grid(*sc.xbar_lo, *sc.xbar_hi, sc.xbar_points);
}

inline bool has_table_row(CouplingFamily f) {
  return f == CouplingFamily::kEuclidean || f == CouplingFamily::kLeftBregman || f == CouplingFamily::kRightBregman ||
         f == CouplingFamily::kAnisotropic || f == CouplingFamily::kEntropic;
}

// Second-order formulas need a finite prox-regularity constant, the eigen
// condition at (P(y), y) and an interior prox point.
inline bool second_order_ok(const TestFunction& g, const Coupling& c, const ProxResult& pr, const Vector& y) {
  if (!pr.single_valued() || pr.boundary_hit || !g.meta.prox_regular_r || !g.meta.c2 || !g.has_hess()) return false;
  if (!c.x_domain().interior_contains(pr.point())) return false;
  return check_eigen_condition(*g.meta.prox_regular_r, c, pr.point(), y).holds();
}

}  // namespace detail

inline ScenarioReport run_scenario(const ScenarioConfig& sc, std::uint64_t seed) {
  const Coupling c = sc.coupling();
  const TestFunction g = sc.test_function();
  const auto n = static_cast<Eigen::Index>(c.dim_x());
  const auto m = static_cast<Eigen::Index>(c.dim_y());
  auto has = [&](const char* ch) { return std::find(sc.checks.begin(), sc.checks.end(), ch) != sc.checks.end(); };

  std::vector<std::string> header;
  for (Eigen::Index i = 0; i < m; ++i) header.push_back("y_" + std::to_string(i + 1));
  header.insert(header.end(), {"status", "envelope", "n_minimizers", "boundary_hit"});
  for (Eigen::Index i = 0; i < n; ++i) header.push_back("prox_" + std::to_string(i + 1));
  if (has("gradient")) {
    for (const char* k : {"grad_", "grad_table_", "grad_fd_"})
      for (Eigen::Index i = 0; i < m; ++i) header.push_back(k + std::to_string(i + 1));
    header.push_back("grad_err");
  }
  if (has("hessian")) {
    for (const char* k : {"hess_", "hess_fd_"})
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) header.push_back(k + std::to_string(i + 1) + "_" + std::to_string(j + 1));
    header.push_back("hess_err");
  }
  if (has("jacobian")) header.push_back("jac_err");
  if (has("subgradient")) header.push_back("subgradient_violation");
  if (has("fenchel_young")) header.push_back("fy_gap");
  for (const auto& ch : sc.checks) header.push_back("check_" + ch);

  ScenarioReport rep;
  rep.name = sc.name;
  rep.expect_pass = sc.expect_pass;
  rep.csv = detail::csv_line(header);
  std::map<std::string, CheckTally> tally;
  CheckTally envelope_tally;

  SampleConfig sample;
  sample.seed = seed;
  RegularityConfig reg;
  reg.seed = seed + 2;
  const std::string nan = "nan";

  for (const Vector& y : detail::y_grid(sc)) {
    std::vector<std::string> row;
    for (Eigen::Index i = 0; i < m; ++i) row.push_back(detail::num(y[i]));
    std::map<std::string, std::string> verdict;
    std::vector<std::string> values;
    try {
      const ProxResult pr = prox(g, c, y);
      if (pr.status == ProxStatus::kInfeasible) throw Error(ErrorKind::kSolverFailure, "infeasible");
      const bool single = pr.single_valued();
      row.push_back(single ? to_string(pr.status) : "multi_valued");
      row.push_back(detail::num(pr.envelope));
      row.push_back(std::to_string(pr.minimizers.size()));
      row.push_back(pr.boundary_hit ? "1" : "0");
      for (Eigen::Index i = 0; i < n; ++i) row.push_back(detail::num(pr.minimizers.front()[i]));
      ++envelope_tally.passed;
      const Vector& x0 = pr.minimizers.front();

      if (has("gradient")) {
        if (single) {
          const Vector a = envelope_gradient(g, c, y);
          const Vector fd = envelope_gradient_fd(g, c, y);
          Vector tab = Vector::Constant(m, std::nan(""));
          double tab_err = 0.0;
          if (detail::has_table_row(c.family())) {
            tab = envelope_gradient_table(g, c, y);
            tab_err = compare(tab, a, 1e-8, 0.0, ErrorScale::kMixed).rel_err;
          }
          const DiffReport d = compare(a, fd, 1e-5, 0.0, ErrorScale::kMixed);
          for (const Vector* v : std::initializer_list<const Vector*>{&a, &tab, &fd})
            for (Eigen::Index i = 0; i < m; ++i) values.push_back(detail::num((*v)[i]));
          values.push_back(detail::num(d.rel_err));
          verdict["gradient"] = d.rel_err <= 1e-5 && tab_err <= 1e-8 ? "pass" : "fail";
        } else {
          values.insert(values.end(), static_cast<std::size_t>(3 * m + 1), nan);
          verdict["gradient"] = "skip";
        }
      }
      const bool second = (has("hessian") || has("jacobian")) && detail::second_order_ok(g, c, pr, y);
      if (has("hessian")) {
        if (second) {
          const Matrix H = envelope_hessian(g, c, y);
          const Matrix F = envelope_hessian_fd(g, c, y);
          for (const Matrix* M : std::initializer_list<const Matrix*>{&H, &F})
            for (Eigen::Index i = 0; i < m; ++i)
              for (Eigen::Index j = 0; j < m; ++j) values.push_back(detail::num((*M)(i, j)));
          const double e = compare(H, F, 1e-3, 0.0).rel_err;
          values.push_back(detail::num(e));
          verdict["hessian"] = e <= 1e-3 ? "pass" : "fail";
        } else {
          values.insert(values.end(), static_cast<std::size_t>(2 * m * m + 1), nan);
          verdict["hessian"] = "skip";
        }
      }
      if (has("jacobian")) {
        if (second) {
          const double e = compare(prox_jacobian_formula(g, c, y), prox_jacobian_fd(g, c, y), 1e-4, 0.0).rel_err;
          values.push_back(detail::num(e));
          verdict["jacobian"] = e <= 1e-4 ? "pass" : "fail";
        } else {
          values.push_back(nan);
          verdict["jacobian"] = "skip";
        }
      }
      const std::vector<Vector> xbars = detail::xbar_grid(sc, x0);
      if (has("subgradient")) {
        double best = -kInf;
        bool any = false;
        for (const Vector& xb : xbars) {
          const SubgradientCertificate cert = is_phi_subgradient(g, c, xb, y, 0.0, sample);
          best = std::max(best, cert.worst_violation);
          any = any || cert.holds;
        }
        values.push_back(detail::num(best));
        verdict["subgradient"] = any ? "pass" : "fail";
      }
      if (has("fenchel_young")) {
        double worst = kInf;
        for (const Vector& xb : xbars) worst = std::min(worst, g.value(xb) + pr.envelope - c.eval(xb, y));
        values.push_back(detail::num(worst));
        verdict["fenchel_young"] = worst >= -1e-8 ? "pass" : "fail";
      }
      if (has("prox_single_valued"))
        verdict["prox_single_valued"] =
            check_prox_single_valued(g, c, y, sc.radius, 8, {}, seed + 4).holds() ? "pass" : "fail";
      if (has("regularity")) {
        const acceptance::CoherenceOutcome o = acceptance::coherence_outcome({sc.name, g, c, x0, y, true});
        verdict["regularity"] = !o.coherent() ? "incoherent" : (o.regularity ? "pass" : "fail");
      }
      if (has("twist")) {
        if (c.has_twist_inverse()) {
          const double e = (c.twist_inverse(x0, c.grad_x(x0, y)) - y).lpNorm<Eigen::Infinity>();
          verdict["twist"] = e <= 1e-8 ? "pass" : "fail";
        } else {
          verdict["twist"] = "skip";
        }
      }
    } catch (const Error& e) {
      row.resize(static_cast<std::size_t>(m));
      row.push_back(std::string("error:") + to_string(e.kind()));
      row.insert(row.end(), static_cast<std::size_t>(header.size()) - row.size(), nan);
      for (const auto& ch : sc.checks) ++tally[ch].errors;
      ++envelope_tally.errors;
      for (std::size_t k = header.size() - sc.checks.size(); k < header.size(); ++k) row[k] = "error";
      rep.csv += detail::csv_line(row);
      continue;
    }
    row.insert(row.end(), values.begin(), values.end());
    for (const auto& ch : sc.checks) {
      const std::string& v = verdict[ch];
      row.push_back(v);
      CheckTally& t = tally[ch];
      if (v == "pass") ++t.passed;
      else if (v == "skip") ++t.skipped;
      else ++t.failed;  // fail, incoherent
    }
    rep.csv += detail::csv_line(row);
  }
  if (sc.checks.empty()) {
    // Envelope-only scan: the row count is what is checked.
    rep.tallies.push_back({"envelope", envelope_tally});
    if (!sc.expect_pass) rep.expect_pass = true;
  }
  for (const auto& ch : sc.checks) rep.tallies.push_back({ch, tally[ch]});
  return rep;
}

struct ScanResult {
  std::vector<ScenarioReport> scenarios;
  std::string summary_csv;
  bool ok() const {
    return std::all_of(scenarios.begin(), scenarios.end(), [](const ScenarioReport& r) { return r.ok(); });
  }
};

inline std::string scan_summary_csv(const std::vector<ScenarioReport>& reps) {
  std::string out = detail::csv_line({"scenario", "check", "expect", "passed", "failed", "skipped", "errors", "outcome"});
  for (const auto& r : reps)
    for (const auto& [name, t] : r.tallies)
      out += detail::csv_line({r.name, name, r.expect_pass ? "pass" : "fail", std::to_string(t.passed),
                               std::to_string(t.failed), std::to_string(t.skipped), std::to_string(t.errors),
                               r.check_ok(t) ? "ok" : "mismatch"});
  return out;
}

// Scenarios run concurrently; results are collected in config order.
inline ScanResult run_scan(const RunConfig& rc) {
  std::vector<std::future<ScenarioReport>> jobs;
  for (const auto& sc : rc.scenarios)
    jobs.push_back(std::async(std::launch::async, [&sc, seed = rc.seed] { return run_scenario(sc, seed); }));
  ScanResult res;
  for (auto& j : jobs) res.scenarios.push_back(j.get());
  res.summary_csv = scan_summary_csv(res.scenarios);
  return res;
}

inline void write_file(const std::filesystem::path& p, const std::string& contents) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorKind::kInvalidArgument, "cannot write '" + p.string() + "'");
  out << contents;
}

inline void write_scan(const ScanResult& res, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& r : res.scenarios) write_file(dir / (r.name + ".csv"), r.csv);
  write_file(dir / "summary.csv", res.summary_csv);
}

inline std::string suite_summary_csv(const std::vector<CriterionResult>& results) {
  std::string out = detail::csv_line({"id", "criterion", "passed", "metric", "tolerance", "instances", "detail"});
  for (const auto& r : results)
    out += detail::csv_line({std::to_string(r.id), r.name, r.passed ? "1" : "0", detail::num(r.metric),
                             detail::num(r.tolerance), std::to_string(r.instances), r.detail});
  return out;
}

}  // namespace phienv

#endif  // PHIENV_SCENARIO_HPP_
