#ifndef PHIENV_DERIVATIVES_HPP_
#define PHIENV_DERIVATIVES_HPP_

// First and second derivatives of the Phi-envelope and the Jacobian of the
// generalized prox P(y) = (∂_Phi g)^{-1}(y), each paired with a
// finite-difference oracle.
//
// Orientation (fixed against the oracles, see tests):
//   grad g^Phi(y)   = grad_y Phi(P(y), y)
//   J = dP/dy       = M D^T hess_xy,  M = -hess_xx^{-1},
//                     D = Jacobian of z -> prox_M g(z) at z = x̄ + M grad_x Phi(x̄, ȳ)
//   hess g^Phi(y)   = hess_xy^T J + hess_yy
// hess_xy is n x m, J is n x m, the envelope Hessian is m x m.

#include <algorithm>
#include <cmath>
#include <optional>

#include "phienv/coupling.hpp"
#include "phienv/prox_solver.hpp"
#include "phienv/regularity.hpp"
#include "phienv/testfns.hpp"
#include "phienv/types.hpp"

namespace phienv {

struct DiffReport {
  Matrix analytic;
  Matrix oracle;
  double abs_err = 0.0;
  double rel_err = 0.0;
  double fd_step = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

enum class ErrorScale {
  kRelative,  // ||A - B|| / ||B||, absolute when ||B|| < 1e-8
  kMixed,     // ||A - B|| / (1 + ||B||)
};

inline DiffReport compare(const Matrix& analytic, const Matrix& oracle, double threshold, double fd_step,
                          ErrorScale scale = ErrorScale::kRelative) {
  if (analytic.rows() != oracle.rows() || analytic.cols() != oracle.cols())
    throw Error(ErrorKind::kDimensionMismatch, "compare: shapes differ");
  DiffReport r;
  r.analytic = analytic;
  r.oracle = oracle;
  r.abs_err = (analytic - oracle).norm();
  const double on = oracle.norm();
  r.rel_err = scale == ErrorScale::kMixed ? r.abs_err / (1.0 + on) : (on < 1e-8 ? r.abs_err : r.abs_err / on);
  r.fd_step = fd_step;
  r.threshold = threshold;
  r.passed = r.rel_err <= threshold;
  return r;
}

namespace detail {

inline Vector unique_prox(const TestFunction& g, const Coupling& c, const Vector& y, const SolverConfig& cfg) {
  const ProxResult r = prox(g, c, y, cfg);
  if (r.status == ProxStatus::kInfeasible) throw Error(ErrorKind::kSolverFailure, "prox infeasible");
  return r.point();
}

// Step such that y ± h e_i stay in Y for every i; halves up to 30 times.
// Returns nullopt when no symmetric stencil fits.
inline std::optional<double> fit_step(const Box& Y, const Vector& y, double h, double reach = 1.0) {
  for (int k = 0; k < 30; ++k, h *= 0.5) {
    bool ok = true;
    for (Eigen::Index i = 0; i < y.size() && ok; ++i) {
      Vector p = y, m = y;
      p[i] += reach * h;
      m[i] -= reach * h;
      ok = Y.contains(p) && Y.contains(m);
    }
    if (ok) return h;
  }
  return std::nullopt;
}

}  // namespace detail

// grad g^Phi(y) = grad_y Phi(P(y), y).
inline Vector envelope_gradient(const TestFunction& g, const Coupling& c, const Vector& y,
                                const SolverConfig& cfg = {}) {
  return c.grad_y(detail::unique_prox(g, c, y, cfg), y);
}

// Family-specific closed forms of the envelope gradient.
inline Vector envelope_gradient_table(const TestFunction& g, const Coupling& c, const Vector& y,
                                      const SolverConfig& cfg = {}) {
  const Vector P = detail::unique_prox(g, c, y, cfg);
  const double gam = c.gamma();
  switch (c.family()) {
    case CouplingFamily::kEuclidean:
      return (P - y) / gam;
    case CouplingFamily::kLeftBregman:
      return c.kernel()->hess_diag(y).cwiseProduct(P - y) / gam;
    case CouplingFamily::kRightBregman:
      return (c.kernel()->grad(P) - c.kernel()->grad(y)) / gam;
    case CouplingFamily::kAnisotropic:
      return c.kernel()->grad((P - y) / gam);
    case CouplingFamily::kEntropic: {
      const Kernel& phi = *c.kernel();
      Vector out(y.size());
      for (Eigen::Index i = 0; i < y.size(); ++i) out[i] = gam * phi.psi_conj(phi.dpsi(P[i] / y[i]));
      return out;
    }
    default:
      throw Error(ErrorKind::kMissingCapability,
                  std::string("no table row for ") + to_string(c.family()));
  }
}

// Central differences of the conjugate. Default step 1e-5 (1 + ||y||); it is
// halved near the boundary of Y and a one-sided quotient is used when no
// symmetric stencil fits.
inline Vector envelope_gradient_fd(const TestFunction& g, const Coupling& c, const Vector& y,
                                   const SolverConfig& cfg = {}, std::optional<double> step = std::nullopt,
                                   double* used_step = nullptr) {
  const Box Y = c.y_domain();
  const double h0 = step ? *step : 1e-5 * (1.0 + y.norm());
  const auto h = detail::fit_step(Y, y, h0);
  Vector out(y.size());
  if (h) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      Vector p = y, m = y;
      p[i] += *h;
      m[i] -= *h;
      out[i] = (conjugate(g, c, p, cfg) - conjugate(g, c, m, cfg)) / (2.0 * *h);
    }
    if (used_step) *used_step = *h;
    return out;
  }
  const double f0 = conjugate(g, c, y, cfg);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    Vector p = y, m = y;
    p[i] += h0;
    m[i] -= h0;
    if (Y.contains(p)) out[i] = (conjugate(g, c, p, cfg) - f0) / h0;
    else if (Y.contains(m)) out[i] = (f0 - conjugate(g, c, m, cfg)) / h0;
    else throw Error(ErrorKind::kDomainViolation, "envelope_gradient_fd: no stencil inside Y");
  }
  if (used_step) *used_step = h0;
  return out;
}

// Column-wise central differences of P at ȳ.
inline Matrix prox_jacobian_fd(const TestFunction& g, const Coupling& c, const Vector& ybar,
                               const SolverConfig& cfg = {}, std::optional<double> step = std::nullopt) {
  const double h0 = step ? *step : 1e-5 * (1.0 + ybar.norm());
  const auto h = detail::fit_step(c.y_domain(), ybar, h0);
  if (!h) throw Error(ErrorKind::kDomainViolation, "prox_jacobian_fd: no stencil inside Y");
  Matrix J(static_cast<Eigen::Index>(c.dim_x()), ybar.size());
  for (Eigen::Index j = 0; j < ybar.size(); ++j) {
    Vector p = ybar, m = ybar;
    p[j] += *h;
    m[j] -= *h;
    J.col(j) = (detail::unique_prox(g, c, p, cfg) - detail::unique_prox(g, c, m, cfg)) / (2.0 * *h);
  }
  return J;
}

// Jacobian of z -> prox_M g(z) by central differences.
inline Matrix scaled_prox_jacobian_fd(const TestFunction& g, const Matrix& M, const Vector& z,
                                      const SolverConfig& cfg = {}, std::optional<double> step = std::nullopt) {
  const double h = step ? *step : 1e-5 * (1.0 + z.norm());
  Matrix D(z.size(), z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    Vector p = z, m = z;
    p[j] += h;
    m[j] -= h;
    D.col(j) = (scaled_prox(g, M, p, cfg).point() - scaled_prox(g, M, m, cfg).point()) / (2.0 * h);
  }
  return D;
}

struct ProxJacobianParts {
  Vector xbar;
  Matrix M;
  Vector z;
  Matrix D;  // Jacobian of prox_M g at z
  Matrix J;  // M D^T hess_xy
};

inline ProxJacobianParts prox_jacobian_parts(const TestFunction& g, const Coupling& c, const Vector& ybar,
                                             const SolverConfig& cfg = {}) {
  ProxJacobianParts out;
  out.xbar = detail::unique_prox(g, c, ybar, cfg);
  const double r = g.meta.prox_regular_r.value_or(kInf);
  if (std::isinf(r))
    throw Error(ErrorKind::kInvalidArgument, g.id + " has no prox-regularity constant on its search box");
  const RegularityReport eig = check_eigen_condition(r, c, out.xbar, ybar);
  if (eig.verdict == Verdict::kStructureViolation)
    throw Error(ErrorKind::kNotSpd, "prox_jacobian_formula: " + eig.note);
  if (!eig.holds())
    throw Error(ErrorKind::kInvalidArgument, "prox_jacobian_formula: eigenvalue condition fails (margin " +
                                                 std::to_string(eig.worst_margin) + ")");
  const HessianBlocks H = c.hess(out.xbar, ybar);
  const auto n = H.xx.rows();
  out.M = -H.xx.ldlt().solve(Matrix::Identity(n, n));
  out.M = 0.5 * (out.M + out.M.transpose());
  out.z = out.xbar + out.M * c.grad_x(out.xbar, ybar);
  out.D = scaled_prox_jacobian_fd(g, out.M, out.z, cfg);
  out.J = out.M * out.D.transpose() * H.xy;
  return out;
}

inline Matrix prox_jacobian_formula(const TestFunction& g, const Coupling& c, const Vector& ybar,
                                    const SolverConfig& cfg = {}) {
  return prox_jacobian_parts(g, c, ybar, cfg).J;
}

enum class JacobianSource { kFormula, kFiniteDifference };

// hess g^Phi(ȳ) = hess_xy^T J + hess_yy, not symmetrized.
inline Matrix envelope_hessian(const TestFunction& g, const Coupling& c, const Vector& ybar,
                               const SolverConfig& cfg = {}, JacobianSource src = JacobianSource::kFormula) {
  const Matrix J =
      src == JacobianSource::kFormula ? prox_jacobian_formula(g, c, ybar, cfg) : prox_jacobian_fd(g, c, ybar, cfg);
  const Vector xbar = detail::unique_prox(g, c, ybar, cfg);
  const HessianBlocks H = c.hess(xbar, ybar);
  return H.xy.transpose() * J + H.yy;
}

// Second-order central differences of the conjugate, step 1e-3 (1 + ||y||)
// by default; symmetrized.
inline Matrix envelope_hessian_fd(const TestFunction& g, const Coupling& c, const Vector& ybar,
                                  const SolverConfig& cfg = {}, std::optional<double> step = std::nullopt,
                                  double* used_step = nullptr) {
  const double h0 = step ? *step : 1e-3 * (1.0 + ybar.norm());
  const auto hh = detail::fit_step(c.y_domain(), ybar, h0);
  if (!hh) throw Error(ErrorKind::kDomainViolation, "envelope_hessian_fd: no stencil inside Y");
  const double h = *hh;
  if (used_step) *used_step = h;
  const auto m = ybar.size();
  auto f = [&](const Vector& y) { return conjugate(g, c, y, cfg); };
  const double f0 = f(ybar);
  Matrix H(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    Vector p = ybar, q = ybar;
    p[i] += h;
    q[i] -= h;
    H(i, i) = (f(p) - 2.0 * f0 + f(q)) / (h * h);
    for (Eigen::Index j = i + 1; j < m; ++j) {
      Vector pp = ybar, pm = ybar, mp = ybar, mm = ybar;
      pp[i] += h; pp[j] += h;
      pm[i] += h; pm[j] -= h;
      mp[i] -= h; mp[j] += h;
      mm[i] -= h; mm[j] -= h;
      H(i, j) = H(j, i) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
    }
  }
  return H;
}

}  // namespace phienv

#endif  // PHIENV_DERIVATIVES_HPP_
