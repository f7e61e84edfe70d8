#ifndef PHIENV_REGULARITY_HPP_
#define PHIENV_REGULARITY_HPP_

// Sampled checks of the regularity hypotheses: twist injectivity, local
// strong twist, Phi-prox-regularity, strict Phi-monotonicity, local
// single-valuedness of the prox and the eigenvalue condition
// lambda_max(M) < 1/r with M = -hess_xx^{-1}.
//
// Neighbourhood quantifiers are replaced by a caller-supplied radius eps;
// sweep_epsilon() runs a check over {0.5, 0.1, 0.02}.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "phienv/coupling.hpp"
#include "phienv/prox_solver.hpp"
#include "phienv/sampling.hpp"
#include "phienv/testfns.hpp"
#include "phienv/types.hpp"

namespace phienv {

enum class Verdict { kHolds, kFails, kPreconditionFailed, kStructureViolation, kInsufficientSamples };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kHolds: return "holds";
    case Verdict::kFails: return "fails";
    case Verdict::kPreconditionFailed: return "precondition_failed";
    case Verdict::kStructureViolation: return "structure_violation";
    case Verdict::kInsufficientSamples: return "insufficient_samples";
  }
  return "unknown";
}

struct RegularityReport {
  std::string condition;
  Verdict verdict = Verdict::kFails;
  std::size_t samples_checked = 0;
  double worst_margin = kInf;
  Vector witness;    // x part of the worst sample
  Vector witness_y;  // y part where meaningful
  std::string note;

  bool holds() const { return verdict == Verdict::kHolds; }
};

struct RegularityConfig {
  std::size_t x_samples = 48;      // points in B(x̄, eps)
  std::size_t xprime_samples = 48;  // comparison points x'
  std::size_t min_pairs = 100;
  std::uint64_t seed = 3;
  double tol = 1e-10;
  // Strict inequalities are certified through the margin normalised by
  // ||x - x'||^2, which must exceed strict_tol.
  double strict_tol = 1e-8;
  bool strict = true;
  // Admissible y must satisfy grad_x(x, y) = v to this relative accuracy.
  double constraint_tol = 1e-9;
};

// Sweep values for the neighbourhood radius.
inline const std::vector<double>& epsilon_sweep() {
  static const std::vector<double> eps = {0.5, 0.1, 0.02};
  return eps;
}

// ---- twist -------------------------------------------------------------------

inline RegularityReport check_twist(const Coupling& c, const Vector& x, const std::vector<Vector>& y_grid,
                                    double tol = 1e-9) {
  if (c.dim_x() != c.dim_y())
    throw Error(ErrorKind::kDimensionMismatch,
                c.name() + ": twist check needs dim_y = dim_x (grad_x(x, .) maps R^m to R^n)");
  RegularityReport rep;
  rep.condition = "twist";
  std::vector<Vector> grads;
  grads.reserve(y_grid.size());
  for (const auto& y : y_grid) grads.push_back(c.grad_x(x, y));
  rep.verdict = Verdict::kHolds;
  rep.witness = x;
  for (std::size_t i = 0; i < y_grid.size(); ++i)
    for (std::size_t j = i + 1; j < y_grid.size(); ++j) {
      const double dy = (y_grid[i] - y_grid[j]).norm();
      if (dy == 0.0) continue;
      ++rep.samples_checked;
      const double ratio = (grads[i] - grads[j]).norm() / (1.0 + dy);
      if (ratio < rep.worst_margin) {
        rep.worst_margin = ratio;
        rep.witness_y = y_grid[i];
      }
      if (ratio <= tol) rep.verdict = Verdict::kFails;
    }
  return rep;
}

inline RegularityReport check_local_strong_twist(const Coupling& c, const Vector& x, const Vector& y,
                                                 double tol = 1e-8) {
  RegularityReport rep;
  rep.condition = "local_strong_twist";
  const Matrix Hxy = c.hess(x, y).xy;
  Eigen::JacobiSVD<Matrix> svd(Hxy);
  const double smin = svd.singularValues().size() ? svd.singularValues().minCoeff() : 0.0;
  rep.samples_checked = 1;
  rep.worst_margin = smin;
  rep.witness = x;
  rep.witness_y = y;
  rep.verdict = smin > tol ? Verdict::kHolds : Verdict::kFails;
  return rep;
}

// ---- localized subgradient samples ------------------------------------------

namespace detail {

// Subgradient description of g at x along each coordinate: the classical
// partial where g is smooth, the one-sided interval [left, right] at
// declared (separable) kinks. left > right means no subgradient exists.
struct SubgradientBox {
  Vector lo, hi;
  bool empty() const { return (lo.array() > hi.array() + 1e-9).any(); }
};

inline SubgradientBox subgradient_box(const TestFunction& g, const Vector& x) {
  const auto n = x.size();
  SubgradientBox b{Vector(n), Vector(n)};
  const Vector grad = g.grad(x);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (at_kink(g, x[i])) {
      const auto [l, r] = one_sided_partials(g, x, i);
      b.lo[i] = l;
      b.hi[i] = r;
    } else {
      b.lo[i] = b.hi[i] = grad[i];
    }
  }
  return b;
}

// Solve grad_x(x, y) = v for y near y0 (Gauss-Newton with the
// pseudo-inverse of hess_xy); used when the coupling has no twist inverse.
inline std::optional<Vector> solve_for_y(const Coupling& c, const Vector& x, const Vector& v, Vector y,
                                         double tol) {
  const Box Y = c.y_domain();
  for (int it = 0; it < 50; ++it) {
    if (!Y.contains(y)) return std::nullopt;
    const Vector r = c.grad_x(x, y) - v;
    if (r.norm() <= tol * (1.0 + v.norm())) return y;
    const Matrix Hxy = c.hess(x, y).xy;
    y -= Hxy.completeOrthogonalDecomposition().solve(r);
  }
  return std::nullopt;
}

}  // namespace detail

// A localized pair: v = grad_x(x, y) ∈ ∂g(x), ||x - x̄|| <= eps,
// g(x) <= g(x̄) + eps, ||v - v̄|| <= eps, ||y - ȳ|| <= eps.
struct AdmissiblePair {
  Vector x, y, v;
};

struct AdmissibleSet {
  std::vector<AdmissiblePair> pairs;
  bool precondition_ok = false;
  std::string note;
};

inline AdmissibleSet admissible_pairs(const TestFunction& g, const Coupling& c, const Vector& xbar,
                                      const Vector& ybar, double eps, const RegularityConfig& cfg) {
  AdmissibleSet out;
  const Box X = c.x_domain();
  if (!X.interior_contains(xbar)) {
    out.note = "x̄ not in int X";
    return out;
  }
  const double gbar = g.value(xbar);
  if (!std::isfinite(gbar)) {
    out.note = "g not finite at x̄";
    return out;
  }
  const Vector vbar = c.grad_x(xbar, ybar);
  const detail::SubgradientBox sb = detail::subgradient_box(g, xbar);
  if (sb.empty()) {
    out.note = "∂g(x̄) is empty (concave kink)";
    return out;
  }
  const double mtol = 1e-6 * (1.0 + vbar.norm());
  if ((vbar.array() < sb.lo.array() - mtol).any() || (vbar.array() > sb.hi.array() + mtol).any()) {
    out.note = "v̄ = grad_x Phi(x̄, ȳ) is not a subgradient of g at x̄";
    return out;
  }
  out.precondition_ok = true;

  std::vector<Vector> xs = {xbar};
  for (auto& p : sample_ball(xbar, eps, cfg.x_samples, cfg.seed)) xs.push_back(std::move(p));
  // Points on the kink hyperplanes through x̄.
  for (Eigen::Index i = 0; i < xbar.size(); ++i)
    if (at_kink(g, xbar[i]))
      for (auto p : sample_ball(xbar, eps, cfg.x_samples / 2, cfg.seed + 17 + static_cast<std::uint64_t>(i))) {
        p[i] = xbar[i];
        xs.push_back(std::move(p));
      }

  const std::vector<Vector> y0s = [&] {
    std::vector<Vector> v = {ybar};
    for (auto& p : sample_ball(ybar, eps, 4, cfg.seed + 5)) v.push_back(std::move(p));
    return v;
  }();

  auto collect = [&](const std::vector<Vector>& batch) {
    for (const Vector& x : batch) {
      if (!X.interior_contains(x) || !g.dom.interior_contains(x)) continue;
      const double gx = g.value(x);
      if (!std::isfinite(gx) || gx > gbar + eps) continue;
      const detail::SubgradientBox b = detail::subgradient_box(g, x);
      if (b.empty()) continue;
      // Candidate subgradients: the box corners and centre (a single point
      // when g is smooth at x).
      std::vector<Vector> vs = {0.5 * (b.lo + b.hi)};
      if ((b.hi - b.lo).maxCoeff() > 0.0) {
        vs.push_back(b.lo);
        vs.push_back(b.hi);
        // Also the member of the box closest to v̄.
        vs.push_back(vbar.cwiseMax(b.lo).cwiseMin(b.hi));
      }
      for (const Vector& v : vs) {
        if ((v - vbar).norm() > eps) continue;
        std::optional<Vector> y;
        if (c.has_twist_inverse()) {
          try {
            y = c.twist_inverse(x, v);
          } catch (const Error&) {
            y.reset();
          }
          if (y && !c.y_domain().contains(*y)) y.reset();
          if (y && (c.grad_x(x, *y) - v).norm() > cfg.constraint_tol * 1e3 * (1.0 + v.norm())) y.reset();
          if (y) {
            if ((*y - ybar).norm() <= eps) out.pairs.push_back({x, *y, v});
          }
        } else {
          for (const Vector& y0 : y0s) {
            y = detail::solve_for_y(c, x, v, y0, cfg.constraint_tol);
            if (y && (*y - ybar).norm() <= eps) out.pairs.push_back({x, *y, v});
          }
        }
      }
    }
  };
  collect(xs);

  // When the filters leave too few pairs for min_pairs comparisons,
  // resample on shrinking balls (still inside the eps-neighbourhood).
  auto enough = [&] { return out.pairs.size() * (out.pairs.size() - 1) / 2 >= cfg.min_pairs; };
  double radius = eps;
  for (int k = 1; k <= 4 && !out.pairs.empty() && !enough(); ++k) {
    radius *= 0.25;
    collect(sample_ball(xbar, radius, cfg.x_samples, cfg.seed + 31 * static_cast<std::uint64_t>(k)));
  }
  return out;
}

// ---- Phi-prox-regularity ----------------------------------------------------

inline RegularityReport check_phi_prox_regularity(const TestFunction& g, const Coupling& c, const Vector& xbar,
                                                  const Vector& ybar, double eps,
                                                  const RegularityConfig& cfg = {}) {
  RegularityReport rep;
  rep.condition = cfg.strict ? "phi_prox_regularity_strict" : "phi_prox_regularity";
  const AdmissibleSet adm = admissible_pairs(g, c, xbar, ybar, eps, cfg);
  if (!adm.precondition_ok) {
    rep.verdict = Verdict::kPreconditionFailed;
    rep.note = adm.note;
    rep.witness = xbar;
    rep.witness_y = ybar;
    return rep;
  }
  std::vector<Vector> xps;
  for (auto& p : sample_ball(xbar, eps, cfg.xprime_samples, cfg.seed + 101)) xps.push_back(std::move(p));
  for (const auto& a : adm.pairs) xps.push_back(a.x);
  const Box X = c.x_domain();
  const double min_sep = 1e-3 * eps;
  for (const auto& a : adm.pairs) {
    const double gx = g.value(a.x);
    const double phix = c.eval(a.x, a.y);
    for (const auto& xp : xps) {
      if (!X.contains(xp)) continue;
      const double gxp = g.value(xp);
      if (!std::isfinite(gxp)) continue;
      const double d = (xp - a.x).norm();
      if (cfg.strict && d < min_sep) continue;
      const double slack = gxp - gx - c.eval(xp, a.y) + phix;
      const double margin = cfg.strict ? slack / (d * d) : slack;
      ++rep.samples_checked;
      if (margin < rep.worst_margin) {
        rep.worst_margin = margin;
        rep.witness = xp;
        rep.witness_y = a.y;
      }
    }
  }
  if (rep.samples_checked == 0) {
    rep.verdict = Verdict::kInsufficientSamples;
    return rep;
  }
  const bool ok = cfg.strict ? rep.worst_margin > cfg.strict_tol : rep.worst_margin >= -cfg.tol;
  rep.verdict = ok ? Verdict::kHolds : Verdict::kFails;
  return rep;
}

// ---- strict Phi-monotonicity -----------------------------------------------

// 0 > Phi(x', y) - Phi(x, y) + Phi(x, y') - Phi(x', y') over localized pairs;
// worst_margin is min of -(that quantity) / ||x - x'||^2.
inline RegularityReport check_strict_monotonicity(const TestFunction& g, const Coupling& c, const Vector& xbar,
                                                  const Vector& ybar, double eps,
                                                  const RegularityConfig& cfg = {}) {
  RegularityReport rep;
  rep.condition = "strict_monotonicity";
  const AdmissibleSet adm = admissible_pairs(g, c, xbar, ybar, eps, cfg);
  if (!adm.precondition_ok) {
    rep.verdict = Verdict::kPreconditionFailed;
    rep.note = adm.note;
    return rep;
  }
  const double min_sep = 1e-3 * eps;
  const auto& P = adm.pairs;
  for (std::size_t i = 0; i < P.size(); ++i)
    for (std::size_t j = i + 1; j < P.size(); ++j) {
      const double d = (P[i].x - P[j].x).norm();
      if (d < min_sep) continue;
      const double q = c.eval(P[j].x, P[i].y) - c.eval(P[i].x, P[i].y) + c.eval(P[i].x, P[j].y) -
                       c.eval(P[j].x, P[j].y);
      const double margin = -q / (d * d);
      ++rep.samples_checked;
      if (margin < rep.worst_margin) {
        rep.worst_margin = margin;
        rep.witness = P[i].x;
        rep.witness_y = P[i].y;
      }
    }
  if (rep.samples_checked < cfg.min_pairs) {
    rep.verdict = Verdict::kInsufficientSamples;
    rep.note = "only " + std::to_string(rep.samples_checked) + " valid pairs";
    return rep;
  }
  rep.verdict = rep.worst_margin > cfg.strict_tol ? Verdict::kHolds : Verdict::kFails;
  return rep;
}

// ---- prox single-valuedness --------------------------------------------------

// Runs prox at ȳ and n_probe - 1 further points of B(ȳ, radius) ∩ Y.
// worst_margin is 1 - (largest number of clusters), so 0 means single-valued.
inline RegularityReport check_prox_single_valued(const TestFunction& g, const Coupling& c, const Vector& ybar,
                                                 double radius, std::size_t n_probe, const SolverConfig& cfg = {},
                                                 std::uint64_t seed = 9) {
  RegularityReport rep;
  rep.condition = "prox_single_valued";
  std::vector<Vector> probes = {ybar};
  for (auto& p : sample_ball(ybar, radius, n_probe > 0 ? n_probe - 1 : 0, seed)) probes.push_back(std::move(p));
  rep.worst_margin = 0.0;
  rep.verdict = Verdict::kHolds;
  for (const auto& y : probes) {
    if (!c.y_domain().contains(y)) continue;
    const ProxResult r = prox(g, c, y, cfg);
    if (r.status == ProxStatus::kInfeasible) throw Error(ErrorKind::kSolverFailure, "prox infeasible at probe");
    ++rep.samples_checked;
    const double m = 1.0 - static_cast<double>(r.minimizers.size());
    if (m < rep.worst_margin) {
      rep.worst_margin = m;
      rep.witness = r.minimizers.front();
      rep.witness_y = y;
    }
  }
  if (rep.worst_margin < 0.0) rep.verdict = Verdict::kFails;
  return rep;
}

// ---- eigenvalue condition ----------------------------------------------------

// r = 0 encodes convex g (condition vacuous).
inline RegularityReport check_eigen_condition(double r, const Coupling& c, const Vector& xbar, const Vector& ybar,
                                              double tol = 1e-12) {
  RegularityReport rep;
  rep.condition = "eigen_condition";
  rep.witness = xbar;
  rep.witness_y = ybar;
  rep.samples_checked = 1;
  const Matrix Hxx = c.hess(xbar, ybar).xx;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (Hxx + Hxx.transpose()));
  const double top = es.eigenvalues().maxCoeff();
  if (!(top < 0.0)) {
    rep.verdict = Verdict::kStructureViolation;
    rep.worst_margin = -top;
    rep.note = "hess_xx not negative definite (largest eigenvalue " + std::to_string(top) + ")";
    return rep;
  }
  // Eigenvalues of M = -hess_xx^{-1} are -1/lambda; the largest comes from top.
  const double lam_max = -1.0 / top;
  const double bound = r > 0.0 ? 1.0 / r : kInf;
  rep.worst_margin = bound - lam_max;
  rep.verdict = rep.worst_margin > tol ? Verdict::kHolds : Verdict::kFails;
  return rep;
}

// Largest eps in the sweep for which check(eps) holds; nullopt when none.
inline std::optional<double> sweep_epsilon(const std::function<RegularityReport(double)>& check) {
  for (double eps : epsilon_sweep())
    if (check(eps).holds()) return eps;
  return std::nullopt;
}

}  // namespace phienv

#endif  // PHIENV_REGULARITY_HPP_
