#ifndef PHIENV_ACCEPTANCE_HPP_
#define PHIENV_ACCEPTANCE_HPP_

// The ten acceptance criteria. Each returns one CriterionResult; tolerances
// are pinned in AcceptanceTolerances and can be overridden by key (used for
// fault injection by the CLI).

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

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

struct AcceptanceTolerances {
  double fenchel_young = 1e-8;        // gap >= -tol
  double fenchel_young_seconds = 120.0;
  double biconj_bound = 1e-6;         // g^PhiPhi <= g + tol
  double biconj_equality = 1e-4;
  double twist = 1e-8;
  double gradient_fd = 1e-5;
  double gradient_table = 1e-8;
  double hessian_fd = 1e-3;
  double hessian_identity = 1e-8;
  double jacobian = 1e-4;
  double counterexample_violation = -0.01;  // violation <= this
  double desk = 1e-6;
  double suite_seconds = 600.0;

  std::map<std::string, double*> fields() {
    return {{"fenchel_young", &fenchel_young},
            {"fenchel_young_seconds", &fenchel_young_seconds},
            {"biconj_bound", &biconj_bound},
            {"biconj_equality", &biconj_equality},
            {"twist", &twist},
            {"gradient_fd", &gradient_fd},
            {"gradient_table", &gradient_table},
            {"hessian_fd", &hessian_fd},
            {"hessian_identity", &hessian_identity},
            {"jacobian", &jacobian},
            {"counterexample_violation", &counterexample_violation},
            {"desk", &desk},
            {"suite_seconds", &suite_seconds}};
  }

  void set(const std::string& key, double value) {
    auto f = fields();
    const auto it = f.find(key);
    if (it == f.end()) throw Error(ErrorKind::kUnknownId, "unknown tolerance '" + key + "'");
    if (!std::isfinite(value)) throw Error(ErrorKind::kInvalidArgument, "tolerance '" + key + "' must be finite");
    *it->second = value;
  }
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  double metric = 0.0;     // worst observed value of the primary quantity
  double tolerance = 0.0;  // the bound it is compared with
  std::size_t instances = 0;
  std::string detail;
  double seconds = 0.0;
};

inline const std::vector<std::string>& criterion_names() {
  static const std::vector<std::string> names = {
      "fenchel_young",   "biconjugate",     "twist_round_trip", "gradient_formula",     "hessian_formula",
      "prox_jacobian",   "counterexamples", "equivalence",      "regularity_coherence", "desk_values"};
  return names;
}

inline CriterionResult start(int id, std::string name) {
  CriterionResult r;
  r.id = id;
  r.name = std::move(name);
  return r;
}

namespace acceptance {

struct FamilyCase {
  Coupling c;
  Box ybox;  // sampling box for y, inside Y
};

// The five twisted families used across the suites.
inline std::vector<FamilyCase> five_families(std::size_t n, double gamma) {
  const Box sym = Box::closed_cube(n, -2.0, 2.0);
  const Box pos = Box::closed_cube(n, 0.3, 3.0);
  return {{make_euclidean(n, gamma), sym},
          {make_left_bregman(n, gamma, make_kernel("boltzmann_shannon")), pos},
          {make_right_bregman(n, gamma, make_kernel("cosh")), sym},
          {make_anisotropic(n, gamma, make_kernel("cosh")), sym},
          {make_entropic(n, gamma, make_kernel("kl_generator")), pos}};
}

inline Box x_box(const TestFunction& g, const Coupling& c) {
  return c.x_domain().intersect(g.dom).intersect(g.search_box);
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

// P single-valued at y and at the corners of a small cube around it.
inline bool locally_single_valued(const TestFunction& g, const Coupling& c, const Vector& y, double radius) {
  if (!prox(g, c, y).single_valued()) return false;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    for (double s : {-radius, radius}) {
      Vector p = y;
      p[i] += s;
      if (!c.y_domain().contains(p)) return false;
      const ProxResult r = prox(g, c, p);
      if (!r.single_valued() || r.boundary_hit) return false;
    }
  return true;
}

// 1. Fenchel-Young inequality over 5 families x all catalog functions x 50 pairs.
inline CriterionResult fenchel_young(const AcceptanceTolerances& tol) {
  CriterionResult res = start(1, "fenchel_young");
  const auto t0 = std::chrono::steady_clock::now();
  double worst = kInf;
  std::string where;
  std::uint64_t seed = 11;
  for (const auto& fc : five_families(1, 0.8))
    for (const auto& id : catalog_ids()) {
      const TestFunction g = make_function(id, 1);
      const Box xb = x_box(g, fc.c);
      const auto xs = sample_box(xb, 50, seed++);
      const auto ys = sample_box(fc.ybox, 50, seed++);
      for (std::size_t k = 0; k < xs.size(); ++k) {
        const double gap = fenchel_young_gap(g, fc.c, xs[k], ys[k]);
        ++res.instances;
        if (gap < worst) {
          worst = gap;
          where = id + "/" + fc.c.name();
        }
      }
    }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  res.metric = worst;
  res.tolerance = -tol.fenchel_young;
  res.passed = worst >= -tol.fenchel_young && res.seconds < tol.fenchel_young_seconds;
  res.detail = "min gap " + fmt(worst) + " at " + where +
               (res.seconds < tol.fenchel_young_seconds ? "" : ", over its time budget");
  return res;
}

// 2. Biconjugate bound everywhere sampled, equality for Phi-convex instances.
inline CriterionResult biconjugate_suite(const AcceptanceTolerances& tol) {
  CriterionResult res = start(2, "biconjugate");
  double worst_bound = -kInf, worst_eq = 0.0;
  std::string where;
  auto bound_check = [&](const TestFunction& g, const Coupling& c, const SolverConfig& cfg, const Vector& x,
                         bool equality) {
    const double gx = g.value(x);
    const double b = biconjugate(g, c, x, cfg).value;
    ++res.instances;
    if (b - gx > worst_bound) worst_bound = b - gx;
    if (equality && std::abs(b - gx) > worst_eq) {
      worst_eq = std::abs(b - gx);
      where = g.id + "/" + c.name();
    }
  };

  SolverConfig euc;
  euc.outer_box = Box::closed_cube(1, -8.0, 8.0);
  const Coupling e = make_euclidean(1, 1.0);
  for (const char* id : {"quad", "shifted_quad", "abs", "huber", "linear", "zero"})
    for (double x : {-1.2, -0.3, 0.4, 1.1}) bound_check(make_function(id, 1), e, euc, vec({x}), true);
  for (const char* id : {"double_well", "neg_abs", "neg_quad", "const_rho"})
    for (double x : {-1.0, 0.0, 0.7}) bound_check(make_function(id, 1), e, euc, vec({x}), false);

  for (const auto& fc : five_families(1, 0.8)) {
    SolverConfig cfg;
    cfg.outer_box = fc.ybox;
    cfg.outer_grid_points = 15;
    for (const char* id : {"double_well", "quad"}) {
      const TestFunction g = make_function(id, 1);
      for (const auto& x : sample_box(x_box(g, fc.c).intersect(Box::closed_cube(1, -2.0, 2.0)), 3, 5))
        bound_check(g, fc.c, cfg, x, false);
    }
  }

  const TestFunction na = make_neg_abs(1);
  const Coupling qt = make_quadratic_transform(1);
  SolverConfig q0;
  q0.outer_box = Box::closed(vec({-2.0, 0.5}), vec({2.0, 1e5}));
  q0.outer_grid_points = 11;
  bound_check(na, qt, q0, vec({0.0}), true);
  SolverConfig q1;
  q1.outer_box = Box::closed(vec({-8.0, 0.5}), vec({8.0, 40.0}));
  for (double x : {-0.5, 0.5}) bound_check(na, qt, q1, vec({x}), true);

  res.metric = std::max(worst_bound, worst_eq);
  res.tolerance = tol.biconj_equality;
  res.passed = worst_bound <= tol.biconj_bound && worst_eq <= tol.biconj_equality;
  res.detail = "max(g** - g) " + fmt(worst_bound) + ", max equality error " + fmt(worst_eq) + " (" + where + ")";
  return res;
}

// 3. twist_inverse(x, grad_x(x, y)) = y.
inline CriterionResult twist_round_trip(const AcceptanceTolerances& tol) {
  CriterionResult res = start(3, "twist_round_trip");
  double worst = 0.0;
  std::string where;
  std::vector<FamilyCase> cases;
  for (auto& fc : five_families(2, 0.7)) cases.push_back(fc);
  cases.push_back({make_left_bregman(2, 1.3, make_kernel("quadratic", {2.0})), Box::closed_cube(2, -2.0, 2.0)});
  cases.push_back({make_anisotropic(2, 0.5, make_kernel("quartic_quadratic", {1.0, 0.5})),
                   Box::closed_cube(2, -2.0, 2.0)});
  cases.push_back({make_exp_coupling(), Box::closed_cube(1, -1.5, 1.5)});
  std::uint64_t seed = 21;
  for (const auto& fc : cases) {
    const double lo = fc.c.x_domain()[0].lo >= 0.0 ? 0.1 : -2.0;
    const Box X = fc.c.x_domain().intersect(Box::closed_cube(fc.c.dim_x(), lo, 2.0));
    const auto xs = sample_box(X, 100, seed++);
    const auto ys = sample_box(fc.ybox, 100, seed++);
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const Vector back = fc.c.twist_inverse(xs[k], fc.c.grad_x(xs[k], ys[k]));
      const double err = (back - ys[k]).lpNorm<Eigen::Infinity>();
      ++res.instances;
      if (err > worst) {
        worst = err;
        where = fc.c.name();
      }
    }
  }
  res.metric = worst;
  res.tolerance = tol.twist;
  res.passed = worst <= tol.twist;
  res.detail = "sup error " + fmt(worst) + (where.empty() ? "" : " (" + where + ")") + " over " +
               std::to_string(cases.size()) + " couplings";
  return res;
}

struct SmoothInstance {
  TestFunction g;
  Coupling c;
  Vector y;
};

// Instances for the gradient suite: every family with the smooth and kinked
// convex functions plus the double well at a small step parameter.
inline std::vector<SmoothInstance> gradient_instances() {
  std::vector<SmoothInstance> out;
  std::uint64_t seed = 31;
  for (std::size_t n : {1u, 2u})
    for (const auto& fc : five_families(n, 0.1))
      for (const char* id : {"quad", "shifted_quad", "huber", "linear", "abs", "double_well"}) {
        const TestFunction g = make_function(id, n);
        for (const auto& y : sample_box(fc.ybox, n == 1 ? 6 : 3, seed++)) out.push_back({g, fc.c, y});
      }
  return out;
}

// 4. Envelope gradient against finite differences and against table rows.
inline CriterionResult gradient_formula(const AcceptanceTolerances& tol) {
  CriterionResult res = start(4, "gradient_formula");
  double worst_fd = 0.0, worst_table = 0.0;
  std::size_t skipped = 0;
  std::string where;
  for (const auto& inst : gradient_instances()) {
    if (!locally_single_valued(inst.g, inst.c, inst.y, 1e-3)) {
      ++skipped;
      continue;
    }
    const Vector a = envelope_gradient(inst.g, inst.c, inst.y);
    const DiffReport d = compare(a, envelope_gradient_fd(inst.g, inst.c, inst.y), tol.gradient_fd, 0.0,
                                 ErrorScale::kMixed);
    const DiffReport t = compare(envelope_gradient_table(inst.g, inst.c, inst.y), a, tol.gradient_table, 0.0,
                                 ErrorScale::kMixed);
    ++res.instances;
    if (d.rel_err > worst_fd) {
      worst_fd = d.rel_err;
      where = inst.g.id + "/" + inst.c.name();
    }
    worst_table = std::max(worst_table, t.rel_err);
  }
  res.metric = worst_fd;
  res.tolerance = tol.gradient_fd;
  res.passed = res.instances >= 200 && worst_fd <= tol.gradient_fd && worst_table <= tol.gradient_table;
  res.detail = "FD err " + fmt(worst_fd) + " (" + where + "), table err " + fmt(worst_table) + ", " +
               std::to_string(skipped) + " multi-valued skipped";
  return res;
}

// Instances for the second-order suites: C2 functions with a finite
// prox-regularity constant, kept when the eigenvalue condition holds.
inline std::vector<SmoothInstance> hessian_instances(std::size_t* rejected = nullptr) {
  std::vector<SmoothInstance> out;
  std::size_t rej = 0;
  std::uint64_t seed = 41;
  auto consider = [&](const TestFunction& g, const Coupling& c, const Vector& y) {
    const ProxResult r = prox(g, c, y);
    if (!r.single_valued() || r.boundary_hit || !c.x_domain().interior_contains(r.point()) ||
        !check_eigen_condition(*g.meta.prox_regular_r, c, r.point(), y).holds() ||
        !locally_single_valued(g, c, y, 3e-3 * (1.0 + y.norm()))) {
      ++rej;
      return;
    }
    out.push_back({g, c, y});
  };
  for (std::size_t n : {1u, 2u})
    for (double gamma : {0.1, 0.8})
      for (const auto& fc : five_families(n, gamma))
        for (const char* id : {"quad", "shifted_quad", "double_well", "neg_quad", "linear"}) {
          const TestFunction g = make_function(id, n);
          for (const auto& y : sample_box(fc.ybox, n == 1 ? 2 : 1, seed++)) consider(g, fc.c, y);
        }
  // quadratic transform has dim_y = dim_x + 1
  const Coupling qt = make_quadratic_transform(1);
  for (const auto& y : sample_box(Box::closed(vec({-1.5, 0.5}), vec({1.5, 3.0})), 4, 47))
    consider(make_quad(1), qt, y);
  if (rejected) *rejected = rej;
  return out;
}

// 5. Envelope Hessian against second differences; euclidean identity.
inline CriterionResult hessian_formula(const AcceptanceTolerances& tol) {
  CriterionResult res = start(5, "hessian_formula");
  double worst = 0.0, worst_id = 0.0;
  std::size_t rejected = 0;
  std::string where;
  for (const auto& inst : hessian_instances(&rejected)) {
    const Matrix H = envelope_hessian(inst.g, inst.c, inst.y);
    const DiffReport d = compare(H, envelope_hessian_fd(inst.g, inst.c, inst.y), tol.hessian_fd, 0.0);
    ++res.instances;
    if (d.rel_err > worst) {
      worst = d.rel_err;
      where = inst.g.id + "/" + inst.c.name();
    }
    if (inst.c.family() == CouplingFamily::kEuclidean) {
      const Matrix J = prox_jacobian_formula(inst.g, inst.c, inst.y);
      const auto n = J.rows();
      const Matrix rhs = (J - Matrix::Identity(n, n)) / inst.c.gamma();
      worst_id = std::max(worst_id, compare(H, rhs, tol.hessian_identity, 0.0).rel_err);
    }
  }
  res.metric = worst;
  res.tolerance = tol.hessian_fd;
  res.passed = res.instances >= 50 && worst <= tol.hessian_fd && worst_id <= tol.hessian_identity;
  res.detail = "FD err " + fmt(worst) + " (" + where + "), euclidean identity err " + fmt(worst_id) + ", " +
               std::to_string(rejected) + " candidates outside the eigen condition";
  return res;
}

// 6. Prox Jacobian formula against finite differences of P.
inline CriterionResult prox_jacobian(const AcceptanceTolerances& tol) {
  CriterionResult res = start(6, "prox_jacobian");
  double worst = 0.0;
  std::string where;
  for (const auto& inst : hessian_instances()) {
    const DiffReport d = compare(prox_jacobian_formula(inst.g, inst.c, inst.y),
                                 prox_jacobian_fd(inst.g, inst.c, inst.y), tol.jacobian, 0.0);
    ++res.instances;
    if (d.rel_err > worst) {
      worst = d.rel_err;
      where = inst.g.id + "/" + inst.c.name();
    }
  }
  res.metric = worst;
  res.tolerance = tol.jacobian;
  res.passed = res.instances >= 50 && worst <= tol.jacobian;
  res.detail = "Frobenius rel err " + fmt(worst) + " (" + where + ")";
  return res;
}

// 7. Expected negatives: membership fails everywhere on the grids.
inline CriterionResult counterexamples(const AcceptanceTolerances& tol) {
  CriterionResult res = start(7, "counterexamples");
  double worst_exp = -kInf, worst_qt = -kInf;
  std::size_t held = 0;
  const TestFunction cr = make_const(1);
  const Coupling ex = make_exp_coupling();
  for (double xb : linspace(-2.0, 2.0, 9))
    for (double y : linspace(-3.0, 3.0, 25)) {
      const SubgradientCertificate cert = is_phi_subgradient(cr, ex, vec({xb}), vec({y}), 0.0);
      ++res.instances;
      if (cert.holds) ++held;
      worst_exp = std::max(worst_exp, cert.worst_violation);
    }
  const TestFunction na = make_neg_abs(1);
  const Coupling qt = make_quadratic_transform(1);
  for (double v : linspace(-3.0, 3.0, 25))
    for (double r : {-2.0, -0.5, 0.0, 0.5, 1.0, 4.0, 20.0, 1e3, 1e5}) {
      const SubgradientCertificate cert = is_phi_subgradient(na, qt, vec({0.0}), vec({v, r}), 0.0);
      ++res.instances;
      if (cert.holds) ++held;
      worst_qt = std::max(worst_qt, cert.worst_violation);
    }
  res.metric = worst_exp;
  res.tolerance = tol.counterexample_violation;
  res.passed = held == 0 && worst_exp <= tol.counterexample_violation && worst_qt < 0.0;
  res.detail = "const_rho/exp_coupling max violation " + fmt(worst_exp) + ", neg_abs/quadratic_transform max " +
               fmt(worst_qt) + ", " + std::to_string(held) + " unexpected memberships";
  return res;
}

struct EquivalenceInstance {
  TestFunction g;
  Coupling c;
  Vector xbar;
  Vector ybar;
  bool positive;
};

// 100 positives from the smooth subgradient formula on couplings whose
// -Phi(., y) is convex, and 100 negatives obtained by shifting y.
inline std::vector<EquivalenceInstance> equivalence_instances() {
  std::vector<EquivalenceInstance> pos;
  struct C {
    Coupling c;
    std::vector<double> xs;
  };
  const std::vector<C> cs = {{make_euclidean(1, 1.0), {-1.3, -0.6, 0.45, 0.8, 1.7}},
                             {make_euclidean(1, 0.5), {-1.1, 0.3, 1.4}},
                             {make_left_bregman(1, 1.0, make_kernel("boltzmann_shannon")), {0.3, 0.8, 1.5}},
                             {make_anisotropic(1, 0.7, make_kernel("cosh")), {-0.9, 0.2, 0.6, 1.2}},
                             {make_entropic(1, 1.0, make_kernel("kl_generator")), {0.4, 0.9, 1.6}}};
  for (const auto& cc : cs)
    for (const char* id : {"quad", "shifted_quad", "huber", "linear", "zero", "abs"}) {
      const TestFunction g = make_function(id, 1);
      for (double x : cc.xs) {
        const Vector xb = vec({x});
        if (!cc.c.x_domain().interior_contains(xb)) continue;
        const Vector y = smooth_phi_gradient(g, cc.c, xb);
        if (!cc.c.y_domain().interior_contains(y)) continue;
        pos.push_back({g, cc.c, xb, y, true});
      }
    }
  const TestFunction dw = make_double_well(1);
  const Coupling e = make_euclidean(1, 0.05);
  for (double x : {-1.4, -1.0, -0.4, 0.3, 0.9, 1.2}) {
    const Vector xb = vec({x});
    pos.push_back({dw, e, xb, smooth_phi_gradient(dw, e, xb), true});
  }
  const Coupling qt = make_quadratic_transform(1);
  for (const char* id : {"quad", "abs", "huber"})
    for (double x : {-0.7, 0.6, 1.3})
      for (double r : {0.5, 2.0}) {
        const TestFunction g = make_function(id, 1);
        pos.push_back({g, qt, vec({x}), vec({g.grad(vec({x}))[0] + r * x, r}), true});
      }
  if (pos.size() > 100) pos.erase(pos.begin() + 100, pos.end());
  std::vector<EquivalenceInstance> out = pos;
  for (const auto& p : pos) {
    EquivalenceInstance n = p;
    n.positive = false;
    n.ybar[0] += 0.5;
    if (!n.c.y_domain().interior_contains(n.ybar)) n.ybar[0] -= 1.0;
    out.push_back(n);
  }
  return out;
}

// 8. The three characterizations agree on every engineered instance.
inline CriterionResult equivalence(const AcceptanceTolerances&) {
  CriterionResult res = start(8, "equivalence");
  std::size_t disagreements = 0, wrong_label = 0, npos = 0;
  std::string where;
  for (const auto& inst : equivalence_instances()) {
    const EquivalenceReport r = equivalence_check(inst.g, inst.c, inst.xbar, inst.ybar);
    ++res.instances;
    npos += inst.positive;
    if (!r.agree()) {
      ++disagreements;
      where = inst.g.id + "/" + inst.c.name();
    }
    if (r.subgradient != inst.positive) ++wrong_label;
  }
  res.metric = static_cast<double>(disagreements);
  res.tolerance = 0.0;
  res.passed = disagreements == 0 && wrong_label == 0 && npos == 100 && res.instances == 200;
  res.detail = std::to_string(disagreements) + " disagreements" + (where.empty() ? "" : " (last " + where + ")") +
               ", " + std::to_string(wrong_label) + " instances off their engineered label";
  return res;
}

struct RegularityInstance {
  std::string label;
  TestFunction g;
  Coupling c;
  Vector xbar;
  Vector ybar;
  bool expected;
};

inline std::vector<RegularityInstance> regularity_instances() {
  std::vector<RegularityInstance> out;
  auto pos = [&](const std::string& label, const TestFunction& g, const Coupling& c, const Vector& x) {
    out.push_back({label, g, c, x, smooth_phi_gradient(g, c, x), true});
  };
  auto neg = [&](const std::string& label, const TestFunction& g, const Coupling& c) {
    const Vector z = Vector::Zero(static_cast<Eigen::Index>(g.dim));
    out.push_back({label, g, c, z, z, false});
  };
  const Kernel cosh_k = make_kernel("cosh");
  pos("quad/euclidean g=1", make_quad(1), make_euclidean(1, 1.0), vec({0.5}));
  pos("quad/euclidean g=0.5", make_quad(1), make_euclidean(1, 0.5), vec({-1.0}));
  pos("shifted_quad2/euclidean", make_shifted_quad(2), make_euclidean(2, 0.5), vec({0.3, -0.4}));
  pos("double_well/euclidean g=0.05 x=1", make_double_well(1), make_euclidean(1, 0.05), vec({1.0}));
  pos("double_well/euclidean g=0.05 x=-1.2", make_double_well(1), make_euclidean(1, 0.05), vec({-1.2}));
  pos("double_well/euclidean g=0.1 x=0.9", make_double_well(1), make_euclidean(1, 0.1), vec({0.9}));
  pos("huber/anisotropic", make_huber(1), make_anisotropic(1, 0.7, cosh_k), vec({0.5}));
  pos("quad/left_bregman", make_quad(1), make_left_bregman(1, 1.0, make_kernel("boltzmann_shannon")), vec({1.0}));
  pos("linear/entropic", make_linear(1), make_entropic(1, 1.0, make_kernel("kl_generator")), vec({1.0}));
  pos("neg_quad/euclidean g=0.5", make_neg_quad(1), make_euclidean(1, 0.5), vec({0.4}));
  pos("double_well/anisotropic g=0.05", make_double_well(1), make_anisotropic(1, 0.05, cosh_k), vec({1.0}));
  pos("abs/euclidean x=0.7", make_abs(1), make_euclidean(1, 1.0), vec({0.7}));
  neg("double_well/euclidean g=1", make_double_well(1), make_euclidean(1, 1.0));
  neg("double_well/euclidean g=0.5", make_double_well(1), make_euclidean(1, 0.5));
  neg("neg_quad/euclidean g=2", make_neg_quad(1), make_euclidean(1, 2.0));
  neg("double_well/anisotropic g=1", make_double_well(1), make_anisotropic(1, 1.0, cosh_k));
  neg("double_well/euclidean g=2", make_double_well(1), make_euclidean(1, 2.0));
  neg("double_well2/euclidean g=1", make_double_well(2), make_euclidean(2, 1.0));
  neg("double_well/right_bregman g=1", make_double_well(1), make_right_bregman(1, 1.0, cosh_k));
  neg("neg_quad/anisotropic g=2", make_neg_quad(1), make_anisotropic(1, 2.0, cosh_k));
  return out;
}

// Outcome of the three local conditions, each taken over the epsilon sweep.
struct CoherenceOutcome {
  bool regularity = false, monotonicity = false, single_valued = false;
  bool coherent() const { return regularity == monotonicity && monotonicity == single_valued; }
};

inline CoherenceOutcome coherence_outcome(const RegularityInstance& inst) {
  CoherenceOutcome o;
  o.regularity = sweep_epsilon([&](double e) {
                   return check_phi_prox_regularity(inst.g, inst.c, inst.xbar, inst.ybar, e);
                 }).has_value();
  o.monotonicity = sweep_epsilon([&](double e) {
                     return check_strict_monotonicity(inst.g, inst.c, inst.xbar, inst.ybar, e);
                   }).has_value();
  o.single_valued = sweep_epsilon([&](double e) {
                      return check_prox_single_valued(inst.g, inst.c, inst.ybar, e, 10);
                    }).has_value();
  return o;
}

// 9. The three local conditions agree on the curated instances.
inline CriterionResult regularity_coherence(const AcceptanceTolerances&) {
  CriterionResult res = start(9, "regularity_coherence");
  std::size_t incoherent = 0, wrong = 0;
  bool canonical_fails = false;
  std::string where;
  for (const auto& inst : regularity_instances()) {
    const CoherenceOutcome o = coherence_outcome(inst);
    ++res.instances;
    if (!o.coherent()) {
      ++incoherent;
      where += (where.empty() ? "" : "; ") + inst.label;
    } else if (o.regularity != inst.expected) {
      ++wrong;
      where += (where.empty() ? "" : "; ") + inst.label + " (unexpected)";
    }
    if (inst.label == "double_well/euclidean g=1")
      canonical_fails = !o.regularity && !o.monotonicity && !o.single_valued;
  }
  res.metric = static_cast<double>(incoherent);
  res.tolerance = 0.0;
  res.passed = incoherent == 0 && wrong == 0 && canonical_fails && res.instances == 20;
  res.detail = std::to_string(incoherent) + " incoherent, " + std::to_string(wrong) + " off expectation" +
               (canonical_fails ? "" : ", canonical witness not all-fail") + (where.empty() ? "" : " [" + where + "]");
  return res;
}

// 10. Closed-form desk values and the overall runtime budget.
inline CriterionResult desk_values(const AcceptanceTolerances& tol, double suite_seconds) {
  CriterionResult res = start(10, "desk_values");
  double worst = 0.0;
  const TestFunction g = make_quad(1);
  const Coupling c = make_euclidean(1, 1.0);
  for (double y : {-2.0, -1.0, 0.5, 2.0}) {
    const Vector yv = vec({y});
    const ProxResult p = prox(g, c, yv);
    worst = std::max({worst, std::abs(p.envelope + y * y / 4.0), std::abs(p.point()[0] - y / 2.0),
                      std::abs(envelope_gradient(g, c, yv)[0] + y / 2.0),
                      std::abs(envelope_hessian(g, c, yv)(0, 0) + 0.5)});
    res.instances += 4;
  }
  const double ent = conjugate(make_linear(1), make_entropic(1, 1.0, make_kernel("kl_generator")), vec({1.0}));
  worst = std::max(worst, std::abs(ent + (1.0 - std::exp(-1.0))));
  ++res.instances;
  res.metric = worst;
  res.tolerance = tol.desk;
  res.passed = worst <= tol.desk && suite_seconds < tol.suite_seconds;
  res.detail = "max desk error " + fmt(worst) +
               (suite_seconds < tol.suite_seconds ? "" : ", suite over its time budget");
  return res;
}

}  // namespace acceptance

// Runs the criteria in order (all of them when only is empty). Exceptions
// inside a criterion mark it failed with the message as detail.
inline std::vector<CriterionResult> run_acceptance(const AcceptanceTolerances& tol,
                                                   const std::vector<std::string>& only = {},
                                                   const std::function<void(const CriterionResult&)>& on_done = {}) {
  using namespace acceptance;
  const std::vector<std::function<CriterionResult()>> runners = {
      [&] { return fenchel_young(tol); },      [&] { return biconjugate_suite(tol); },
      [&] { return twist_round_trip(tol); },   [&] { return gradient_formula(tol); },
      [&] { return hessian_formula(tol); },    [&] { return prox_jacobian(tol); },
      [&] { return counterexamples(tol); },    [&] { return equivalence(tol); },
      [&] { return regularity_coherence(tol); }};
  const auto& names = criterion_names();
  for (const auto& o : only)
    if (std::find(names.begin(), names.end(), o) == names.end())
      throw Error(ErrorKind::kUnknownId, "unknown criterion '" + o + "'");
  auto wanted = [&](std::size_t i) { return only.empty() || std::find(only.begin(), only.end(), names[i]) != only.end(); };

  std::vector<CriterionResult> out;
  const auto t0 = std::chrono::steady_clock::now();
  auto guarded = [&](std::size_t i, const std::function<CriterionResult()>& f) {
    const auto s = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = f();
    } catch (const std::exception& e) {
      r = start(static_cast<int>(i + 1), names[i]);
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - s).count();
    if (on_done) on_done(r);
    out.push_back(std::move(r));
  };
  for (std::size_t i = 0; i < runners.size(); ++i)
    if (wanted(i)) guarded(i, runners[i]);
  if (wanted(9))
    guarded(9, [&] {
      return desk_values(tol, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    });
  return out;
}

}  // namespace phienv

#endif  // PHIENV_ACCEPTANCE_HPP_
