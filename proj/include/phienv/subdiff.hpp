#ifndef PHIENV_SUBDIFF_HPP_
#define PHIENV_SUBDIFF_HPP_

// Phi-subdifferential calculus: sampled membership certificates, the smooth
// formula grad_Phi g(x) = G(x, grad g(x)), Fenchel-Young gaps and the
// three-way subgradient equivalence.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "phienv/coupling.hpp"
#include "phienv/prox_solver.hpp"
#include "phienv/sampling.hpp"
#include "phienv/testfns.hpp"
#include "phienv/types.hpp"

namespace phienv {

struct SampleConfig {
  // Tensor grid over X ∩ dom g ∩ search_box while points^n stays below
  // max_points; Halton sample of max_points otherwise.
  std::size_t points_per_dim = 801;
  std::size_t max_points = 20000;
  // Probes x̄ ± 10^-k e_i for k = 1..probe_levels.
  int probe_levels = 12;
  std::uint64_t seed = 1;
  double tol = 1e-9;
};

struct SubgradientCertificate {
  bool holds = false;
  double epsilon = 0.0;
  double worst_violation = kInf;  // min over samples of the slack
  Vector witness;
  std::size_t samples = 0;
};

// Candidate points for sampled inequalities over X ∩ dom g ∩ search_box:
// grid or Halton sample, declared kinks and geometric probes around center.
inline std::vector<Vector> feasible_samples(const TestFunction& g, const Box& X, const Vector& center,
                                            const SampleConfig& cfg) {
  const Box box = X.intersect(g.dom).intersect(g.search_box);
  std::vector<Vector> pts;
  if (box.empty() || !box.bounded()) return pts;
  const std::size_t n = box.dim();
  double total = 1.0;
  for (std::size_t i = 0; i < n; ++i) total *= static_cast<double>(cfg.points_per_dim);
  if (total <= static_cast<double>(cfg.max_points)) pts = tensor_grid(box, cfg.points_per_dim);
  else pts = sample_box(box, cfg.max_points, cfg.seed);
  for (double k : g.meta.kinks) {
    pts.push_back(box.clamp(Vector::Constant(static_cast<Eigen::Index>(n), k)));
    for (std::size_t i = 0; i < n; ++i) {
      Vector p = center;
      p[static_cast<Eigen::Index>(i)] = k;
      pts.push_back(box.clamp(p));
    }
  }
  for (int lvl = 1; lvl <= cfg.probe_levels; ++lvl) {
    const double h = std::pow(10.0, -lvl);
    for (std::size_t i = 0; i < n; ++i)
      for (double s : {-1.0, 1.0}) {
        Vector p = center;
        p[static_cast<Eigen::Index>(i)] += s * h;
        if (box.contains(p)) pts.push_back(p);
      }
  }
  std::vector<Vector> out;
  out.reserve(pts.size());
  for (auto& p : pts)
    if (box.contains(p) && X.contains(p)) out.push_back(std::move(p));
  return out;
}

// Sampled check of g(x) >= g(x̄) + Phi(x, y) - Phi(x̄, y) - eps.
inline SubgradientCertificate is_phi_subgradient(const TestFunction& g, const Coupling& c, const Vector& xbar,
                                                 const Vector& y, double eps, const SampleConfig& cfg = {}) {
  SubgradientCertificate cert;
  cert.epsilon = eps;
  if (!c.x_domain().contains(xbar) || !c.y_domain().contains(y))
    throw Error(ErrorKind::kDomainViolation, "is_phi_subgradient: point outside X x Y");
  const double gbar = g.value(xbar);
  if (!std::isfinite(gbar)) {
    cert.worst_violation = -kInf;
    cert.witness = xbar;
    return cert;
  }
  const double phibar = c.eval(xbar, y);
  cert.witness = xbar;
  for (const Vector& x : feasible_samples(g, c.x_domain(), xbar, cfg)) {
    const double gx = g.value(x);
    if (!std::isfinite(gx)) continue;
    const double slack = gx - gbar - c.eval(x, y) + phibar + eps;
    ++cert.samples;
    if (slack < cert.worst_violation) {
      cert.worst_violation = slack;
      cert.witness = x;
    }
  }
  cert.holds = cert.worst_violation >= -cfg.tol;
  return cert;
}

// grad_Phi g(x) = G(x, grad g(x)).
inline Vector smooth_phi_gradient(const TestFunction& g, const Coupling& c, const Vector& x) {
  if (!g.has_grad()) throw Error(ErrorKind::kMissingCapability, g.id + " has no gradient");
  if (!c.has_twist_inverse()) throw Error(ErrorKind::kMissingCapability, c.name() + " has no twist inverse");
  return c.twist_inverse(x, g.grad(x));
}

// g(x) + g^Phi(y) - Phi(x, y), nonnegative up to solver accuracy.
inline double fenchel_young_gap(const TestFunction& g, const Coupling& c, const Vector& x, const Vector& y,
                                const SolverConfig& cfg = {}) {
  if (!c.x_domain().contains(x)) throw Error(ErrorKind::kDomainViolation, "fenchel_young_gap: x outside X");
  return g.value(x) + conjugate(g, c, y, cfg) - c.eval(x, y);
}

struct EquivalenceConfig {
  double gap_tol = 1e-5;
  double dist_tol = 1e-4;
  double biconj_tol = 1e-4;
  SampleConfig sampling;
  SolverConfig solver;  // outer_box set => biconjugate implication is checked
};

struct EquivalenceReport {
  bool subgradient = false;  // (a) sampled membership with eps = 0
  bool fenchel_young = false;  // (b) gap <= gap_tol
  bool prox_member = false;  // (c) x̄ within dist_tol of a prox minimizer
  double worst_violation = 0.0;
  double gap = 0.0;
  double distance = kInf;
  bool biconjugate_checked = false;
  bool biconjugate_ok = true;
  double biconjugate_value = 0.0;

  bool agree() const { return subgradient == fenchel_young && fenchel_young == prox_member; }
  bool any() const { return subgradient || fenchel_young || prox_member; }
  bool consistent() const { return agree() && biconjugate_ok; }
};

inline EquivalenceReport equivalence_check(const TestFunction& g, const Coupling& c, const Vector& xbar,
                                           const Vector& ybar, const EquivalenceConfig& cfg = {}) {
  EquivalenceReport rep;
  SampleConfig sc = cfg.sampling;
  sc.tol = cfg.gap_tol;
  const SubgradientCertificate cert = is_phi_subgradient(g, c, xbar, ybar, 0.0, sc);
  rep.subgradient = cert.holds;
  rep.worst_violation = cert.worst_violation;

  SolverConfig inner = cfg.solver;
  inner.outer_box.reset();
  const ProxResult pr = prox(g, c, ybar, inner);
  if (pr.status == ProxStatus::kInfeasible) throw Error(ErrorKind::kSolverFailure, "equivalence_check: infeasible prox");
  rep.gap = g.value(xbar) + pr.envelope - c.eval(xbar, ybar);
  rep.fenchel_young = rep.gap <= cfg.gap_tol;
  for (const auto& m : pr.minimizers) rep.distance = std::min(rep.distance, (m - xbar).norm());
  rep.prox_member = rep.distance <= cfg.dist_tol;

  if (rep.any() && cfg.solver.outer_box) {
    rep.biconjugate_checked = true;
    rep.biconjugate_value = biconjugate(g, c, xbar, cfg.solver).value;
    rep.biconjugate_ok = std::abs(rep.biconjugate_value - g.value(xbar)) <= cfg.biconj_tol;
  }
  return rep;
}

}  // namespace phienv

#endif  // PHIENV_SUBDIFF_HPP_
