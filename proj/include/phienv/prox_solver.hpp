#ifndef PHIENV_PROX_SOLVER_HPP_
#define PHIENV_PROX_SOLVER_HPP_

// Inner minimization engine. The generalized prox
//   P(y) = argmin_{x in X} g(x) - Phi(x, y)
// is computed globally over X ∩ dom g ∩ search_box by a uniform grid
// followed by projected Newton / gradient refinement from the best grid
// cells. Minimizers closer than tol_cluster are merged; more than one
// surviving cluster means the prox is multi-valued at y.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "phienv/coupling.hpp"
#include "phienv/sampling.hpp"
#include "phienv/testfns.hpp"
#include "phienv/types.hpp"

namespace phienv {

struct SolverConfig {
  std::size_t grid_points_per_dim = 33;
  std::size_t local_steps = 500;
  double tol_grad = 1e-10;
  double tol_cluster = 1e-6;
  std::size_t multistart_topk = 8;
  // Restricts the search to the closed ball B(center, radius). The center
  // defaults to y when dim_x == dim_y.
  std::optional<double> locality_radius;
  std::optional<Vector> locality_center;
  // Above this many tensor-grid nodes the global phase switches to a
  // Halton sample of this size.
  std::size_t max_grid_points = 100000;
  // Relative objective gap under which two clusters both count as minimizers.
  double tol_value = 1e-9;
  // Outer search box over Y for the biconjugate.
  std::optional<Box> outer_box;
  std::size_t outer_grid_points = 21;

  void validate() const {
    if (grid_points_per_dim < 3)
      throw Error(ErrorKind::kInvalidArgument, "grid_points_per_dim must be >= 3");
    if (!(tol_grad > 0.0) || !(tol_cluster > 0.0) || !(tol_value > 0.0))
      throw Error(ErrorKind::kInvalidArgument, "solver tolerances must be positive");
    if (local_steps == 0 || multistart_topk == 0)
      throw Error(ErrorKind::kInvalidArgument, "local_steps and multistart_topk must be positive");
    if (locality_radius && !(*locality_radius > 0.0))
      throw Error(ErrorKind::kInvalidArgument, "locality_radius must be positive");
  }
};

enum class ProxStatus { kConverged, kMaxIter, kInfeasible };

inline const char* to_string(ProxStatus s) {
  switch (s) {
    case ProxStatus::kConverged: return "converged";
    case ProxStatus::kMaxIter: return "max_iter";
    case ProxStatus::kInfeasible: return "infeasible";
  }
  return "unknown";
}

struct ProxResult {
  std::vector<Vector> minimizers;  // lexicographically ordered cluster representatives
  double value = kInf;             // inf of the objective
  double envelope = -kInf;         // -value
  ProxStatus status = ProxStatus::kInfeasible;
  std::size_t n_starts_agreeing = 0;
  // A minimizer sits on a face of the search box that is not a face of
  // X ∩ dom g, so the true minimizer may lie outside the box.
  bool boundary_hit = false;

  bool single_valued() const { return minimizers.size() == 1; }
  const Vector& point() const {
    if (status == ProxStatus::kInfeasible || minimizers.empty())
      throw Error(ErrorKind::kSolverFailure, "prox is infeasible");
    if (minimizers.size() != 1)
      throw Error(ErrorKind::kMultiValued,
                  "prox has " + std::to_string(minimizers.size()) + " minimizer clusters");
    return minimizers.front();
  }
};

// Smooth-plus-kinks objective handed to the minimizer.
struct Objective {
  std::function<double(const Vector&)> value;  // +inf when infeasible
  std::function<Vector(const Vector&)> grad;   // may return non-finite entries on the boundary
  std::function<Matrix(const Vector&)> hess;   // optional
  // Magnitude of the gradient terms, used to scale the stationarity test.
  std::function<double(const Vector&)> grad_scale;
  std::vector<double> kinks;  // separable kink coordinates
};

namespace detail {

struct LocalResult {
  Vector x;
  double f = kInf;
  bool stationary = false;
};

inline bool coord_at_kink(const std::vector<double>& kinks, double t) {
  for (double k : kinks)
    if (t == k) return true;
  return false;
}

class Minimizer {
 public:
  Minimizer(const Objective& obj, Box box, const SolverConfig& cfg,
            std::optional<Vector> ball_center, double ball_radius)
      : obj_(obj), box_(std::move(box)), cfg_(cfg), center_(std::move(ball_center)),
        radius_(ball_radius), lo_(box_.lower()), hi_(box_.upper()) {}

  // Feasible-set projection: clamp onto the box, then pull toward the ball
  // center (the segment stays inside the box since the center is feasible).
  Vector project(const Vector& x) const {
    Vector p = box_.clamp(x);
    if (center_) {
      const Vector d = p - *center_;
      const double r = d.norm();
      if (r > radius_) p = *center_ + d * (radius_ / r);
    }
    return p;
  }

  bool in_ball(const Vector& x) const { return !center_ || (x - *center_).norm() <= radius_ * (1 + 1e-12); }

  double f(const Vector& x) const {
    const double v = obj_.value(x);
    return std::isnan(v) ? kInf : v;
  }

  // Gradient with a nudge off faces where it blows up (e.g. log at 0).
  Vector gradient(Vector& x) const {
    Vector g = obj_.grad(x);
    for (int attempt = 0; attempt < 40 && !g.allFinite(); ++attempt) {
      const Vector mid = 0.5 * (lo_ + hi_);
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (!std::isfinite(g[i])) {
          const double step = 1e-12 * std::pow(4.0, attempt) * (1.0 + std::abs(hi_[i] - lo_[i]));
          x[i] += (mid[i] > x[i] ? step : -step);
        }
      x = project(x);
      g = obj_.grad(x);
    }
    return g;
  }

  LocalResult refine(Vector x) const {
    x = project(x);
    double fx = f(x);
    LocalResult res{x, fx, false};
    if (!std::isfinite(fx)) return res;
    const Eigen::Index n = x.size();
    for (std::size_t it = 0; it < cfg_.local_steps; ++it) {
      Vector g = gradient(x);
      fx = f(x);
      if (!g.allFinite()) break;

      // Nonsmooth coordinates: replace the partial by the descending
      // one-sided slope, or freeze the coordinate when both sides ascend.
      std::vector<bool> frozen(static_cast<std::size_t>(n), false);
      bool kink_move = false;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!coord_at_kink(obj_.kinks, x[i])) continue;
        const double h = 1e-8 * (1.0 + std::abs(x[i]));
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double dr = (f(xp) - fx) / h;   // F'(x; +e_i)
        const double dl = (fx - f(xm)) / h;   // -F'(x; -e_i)
        if (dr < -kKinkTol) { g[i] = dr; kink_move = true; }
        else if (dl > kKinkTol) { g[i] = dl; kink_move = true; }
        else { g[i] = 0.0; frozen[static_cast<std::size_t>(i)] = true; }
      }

      // Free set of the box-constrained problem.
      std::vector<Eigen::Index> free;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (frozen[static_cast<std::size_t>(i)]) continue;
        const bool at_lo = x[i] <= lo_[i] && g[i] > 0.0;
        const bool at_hi = x[i] >= hi_[i] && g[i] < 0.0;
        if (!at_lo && !at_hi) free.push_back(i);
      }
      double pg = 0.0;
      for (Eigen::Index i : free) pg = std::max(pg, std::abs(g[i]));
      const double scale = obj_.grad_scale ? std::max(1.0, obj_.grad_scale(x)) : 1.0;
      if (pg <= cfg_.tol_grad * scale) {
        res = {x, fx, true};
        return polish(res);
      }

      Vector d = Vector::Zero(n);
      bool newton = false;
      if (obj_.hess && !kink_move && !free.empty()) {
        const Matrix H = obj_.hess(x);
        const auto m = static_cast<Eigen::Index>(free.size());
        Matrix Hf(m, m);
        Vector gf(m);
        for (Eigen::Index a = 0; a < m; ++a) {
          gf[a] = g[free[static_cast<std::size_t>(a)]];
          for (Eigen::Index b = 0; b < m; ++b)
            Hf(a, b) = H(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
        }
        Eigen::LLT<Matrix> llt(Hf);
        if (Hf.allFinite() && llt.info() == Eigen::Success) {
          const Vector df = -llt.solve(gf);
          if (df.allFinite()) {
            for (Eigen::Index a = 0; a < m; ++a) d[free[static_cast<std::size_t>(a)]] = df[a];
            newton = true;
          }
        }
      }
      if (!newton)
        for (Eigen::Index i : free) d[i] = -g[i];

      auto step = line_search(x, fx, g, d, newton ? 1.0 : initial_gradient_step(d));
      if (!step && newton) {
        for (Eigen::Index i = 0; i < n; ++i) d[i] = 0.0;
        for (Eigen::Index i : free) d[i] = -g[i];
        step = line_search(x, fx, g, d, initial_gradient_step(d));
      }
      if (!step) {
        // No decrease representable in floating point: accept as stationary
        // when the gradient is at roundoff level of its terms.
        res = {x, fx, pg <= 1e-7 * scale};
        return polish(res);
      }
      Vector xn = *step;
      double fn = f(xn);
      snap_to_kinks(x, xn, fn);
      const double moved = (xn - x).lpNorm<Eigen::Infinity>();
      x = xn;
      if (moved <= 1e-15 * (1.0 + x.lpNorm<Eigen::Infinity>()) && fn >= fx) {
        res = {x, fn, pg <= 1e-7 * scale};
        return polish(res);
      }
    }
    res = {x, f(x), false};
    return res;
  }

 private:
  static constexpr double kKinkTol = 1e-6;

  double initial_gradient_step(const Vector& d) const {
    const double dn = d.lpNorm<Eigen::Infinity>();
    if (dn == 0.0) return 1.0;
    const double width = (hi_ - lo_).lpNorm<Eigen::Infinity>();
    return std::min(1.0, 0.25 * width / dn);
  }

  // Armijo backtracking along the projected path x(t) = P(x + t d).
  std::optional<Vector> line_search(const Vector& x, double fx, const Vector& g, const Vector& d,
                                    double t0) const {
    double t = t0;
    for (int k = 0; k < 80; ++k, t *= 0.5) {
      const Vector xt = project(x + t * d);
      if ((xt - x).lpNorm<Eigen::Infinity>() == 0.0) return std::nullopt;
      const double ft = f(xt);
      if (!std::isfinite(ft)) continue;
      const double decrease = g.dot(xt - x);
      if (ft <= fx + 1e-4 * std::min(decrease, 0.0) && ft < fx) return xt;
      if (ft < fx && decrease >= 0.0) return xt;
    }
    return std::nullopt;
  }

  // If the step crossed (or landed near) a kink in some coordinate, try
  // putting that coordinate exactly on the kink.
  void snap_to_kinks(const Vector& x, Vector& xn, double& fn) const {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      for (double k : obj_.kinks) {
        const bool crossed = (x[i] - k) * (xn[i] - k) < 0.0;
        const bool near = std::abs(xn[i] - k) < 1e-6 * (1.0 + std::abs(k));
        if (!crossed && !near) continue;
        Vector trial = xn;
        trial[i] = k;
        trial = project(trial);
        const double ft = f(trial);
        if (ft <= fn) {
          xn = trial;
          fn = ft;
        }
      }
    }
  }

  // Extra Newton steps after convergence push the iterate to roundoff.
  LocalResult polish(LocalResult r) const {
    if (!obj_.hess) return r;
    for (int k = 0; k < 2; ++k) {
      Vector x = r.x;
      Vector g = gradient(x);
      if (!g.allFinite()) return r;
      const Matrix H = obj_.hess(x);
      Vector d = Vector::Zero(x.size());
      std::vector<Eigen::Index> free;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (coord_at_kink(obj_.kinks, x[i])) continue;
        if ((x[i] <= lo_[i] && g[i] > 0.0) || (x[i] >= hi_[i] && g[i] < 0.0)) continue;
        free.push_back(i);
      }
      if (free.empty()) return r;
      const auto m = static_cast<Eigen::Index>(free.size());
      Matrix Hf(m, m);
      Vector gf(m);
      for (Eigen::Index a = 0; a < m; ++a) {
        gf[a] = g[free[static_cast<std::size_t>(a)]];
        for (Eigen::Index b = 0; b < m; ++b)
          Hf(a, b) = H(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
      }
      Eigen::LLT<Matrix> llt(Hf);
      if (llt.info() != Eigen::Success) return r;
      const Vector df = -llt.solve(gf);
      for (Eigen::Index a = 0; a < m; ++a) d[free[static_cast<std::size_t>(a)]] = df[a];
      Vector xn = project(x + d);
      bool kink_crossed = false;
      for (Eigen::Index i = 0; i < x.size(); ++i)
        for (double kk : obj_.kinks)
          if ((x[i] - kk) * (xn[i] - kk) <= 0.0 && xn[i] != x[i]) kink_crossed = true;
      if (kink_crossed) return r;
      const double fn = f(xn);
      if (!std::isfinite(fn)) return r;
      if (!(fn <= r.f)) {
        // f is flat at roundoff level here; judge by the gradient instead.
        if (fn > r.f + 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(r.f))) return r;
        const Vector gn = gradient(xn);
        double before = 0.0, after = 0.0;
        for (Eigen::Index i : free) {
          before = std::max(before, std::abs(g[i]));
          after = std::max(after, std::abs(gn[i]));
        }
        if (!(after < before)) return r;
      }
      r.x = xn;
      r.f = fn;
    }
    return r;
  }

  const Objective& obj_;
  Box box_;
  const SolverConfig& cfg_;
  std::optional<Vector> center_;
  double radius_;
  Vector lo_, hi_;
};

// Discrete local minima of a tensor grid (axis neighbours), by value.
inline std::vector<std::size_t> grid_local_minima(const std::vector<double>& vals, std::size_t n,
                                                  std::size_t per_dim) {
  std::vector<std::size_t> out;
  const std::size_t total = vals.size();
  for (std::size_t k = 0; k < total; ++k) {
    if (!std::isfinite(vals[k])) continue;
    bool is_min = true;
    std::size_t stride = 1;
    for (std::size_t d = 0; d < n && is_min; ++d, stride *= per_dim) {
      const std::size_t coord = (k / stride) % per_dim;
      if (coord > 0 && vals[k - stride] < vals[k]) is_min = false;
      if (coord + 1 < per_dim && vals[k + stride] < vals[k]) is_min = false;
    }
    if (is_min) out.push_back(k);
  }
  return out;
}

inline bool lex_less(const Vector& a, const Vector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

}  // namespace detail

// Global minimization of obj over the bounded box (optionally intersected
// with a ball). `natural` is the box the problem lives in before the
// artificial search box was applied; minimizers on a search-box face that
// is not a natural face set boundary_hit.
inline ProxResult minimize_global(const Objective& obj, const Box& box, const Box& natural,
                                  const SolverConfig& cfg, std::optional<Vector> ball_center = std::nullopt,
                                  double ball_radius = kInf) {
  cfg.validate();
  ProxResult out;
  if (box.empty() || !box.bounded()) return out;
  const std::size_t n = box.dim();
  if (ball_center && !box.contains(box.clamp(*ball_center))) return out;
  if (ball_center && (box.clamp(*ball_center) - *ball_center).norm() > ball_radius) return out;
  if (ball_center) ball_center = box.clamp(*ball_center);

  detail::Minimizer local(obj, box, cfg, ball_center, ball_radius);

  // Global phase.
  std::size_t per_dim = cfg.grid_points_per_dim;
  double total = 1.0;
  for (std::size_t i = 0; i < n; ++i) total *= static_cast<double>(per_dim);
  const bool tensor = total <= static_cast<double>(cfg.max_grid_points);
  std::vector<Vector> pts = tensor ? tensor_grid(box, per_dim) : sample_box(box, cfg.max_grid_points, 0);
  std::vector<double> vals(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k)
    vals[k] = local.in_ball(pts[k]) ? local.f(pts[k]) : kInf;

  std::vector<Vector> seeds;
  std::vector<std::size_t> order;
  if (tensor) order = detail::grid_local_minima(vals, n, per_dim);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
  if (order.size() > cfg.multistart_topk) order.resize(cfg.multistart_topk);
  if (order.size() < cfg.multistart_topk) {
    std::vector<std::size_t> all(pts.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    std::stable_sort(all.begin(), all.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    for (std::size_t k : all) {
      if (order.size() >= cfg.multistart_topk) break;
      if (!std::isfinite(vals[k])) break;
      if (std::find(order.begin(), order.end(), k) == order.end()) order.push_back(k);
    }
  }
  for (std::size_t k : order) seeds.push_back(pts[k]);
  if (ball_center) seeds.push_back(*ball_center);
  // Kink candidates: the all-kink point and each grid-best seed snapped to a kink.
  for (double kink : obj.kinks) {
    const Vector kp = local.project(Vector::Constant(static_cast<Eigen::Index>(n), kink));
    if (std::isfinite(local.f(kp))) seeds.push_back(kp);
  }
  if (seeds.empty()) return out;

  std::vector<detail::LocalResult> runs;
  runs.reserve(seeds.size());
  for (const auto& s : seeds) runs.push_back(local.refine(s));

  double best = kInf;
  for (const auto& r : runs) best = std::min(best, r.f);
  if (!std::isfinite(best)) return out;

  // Cluster runs that reach the optimal level.
  struct Cluster {
    Vector rep;
    double f;
    std::size_t count;
    bool all_stationary;
  };
  std::vector<Cluster> clusters;
  std::vector<std::size_t> idx(runs.size());
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return runs[a].f < runs[b].f; });
  const double level = best + cfg.tol_value * (1.0 + std::abs(best));
  for (std::size_t k : idx) {
    const auto& r = runs[k];
    if (!(r.f <= level)) continue;
    bool merged = false;
    for (auto& c : clusters) {
      if ((c.rep - r.x).norm() <= cfg.tol_cluster) {
        ++c.count;
        c.all_stationary = c.all_stationary && r.stationary;
        merged = true;
        break;
      }
    }
    if (!merged) clusters.push_back({r.x, r.f, 1, r.stationary});
  }

  out.value = best;
  out.envelope = -best;
  out.n_starts_agreeing = clusters.front().count;
  bool stationary = true;
  const Vector lo = box.lower(), hi = box.upper();
  const Vector nlo = natural.lower(), nhi = natural.upper();
  for (const auto& c : clusters) {
    out.minimizers.push_back(c.rep);
    stationary = stationary && c.all_stationary;
    for (Eigen::Index i = 0; i < c.rep.size(); ++i) {
      const double tol = 1e-9 * (1.0 + hi[i] - lo[i]);
      if ((c.rep[i] <= lo[i] + tol && lo[i] > nlo[i]) || (c.rep[i] >= hi[i] - tol && hi[i] < nhi[i]))
        out.boundary_hit = true;
    }
  }
  std::sort(out.minimizers.begin(), out.minimizers.end(), detail::lex_less);
  out.status = stationary ? ProxStatus::kConverged : ProxStatus::kMaxIter;
  return out;
}

// Objective x -> g(x) - Phi(x, y) with derivatives where available.
inline Objective prox_objective(const TestFunction& g, const Coupling& c, const Vector& y) {
  const Box X = c.x_domain();
  const CouplingModel* model = &c.model();
  Objective obj;
  obj.value = [&g, model, X, y](const Vector& x) {
    if (!X.contains(x) || !g.dom.contains(x)) return kInf;
    const double gx = g.value(x);
    if (!std::isfinite(gx)) return kInf;
    return gx - model->eval(x, y);
  };
  obj.grad = [&g, model, X, y](const Vector& x) -> Vector {
    if (!X.interior_contains(x)) return Vector::Constant(x.size(), kInf);
    Vector gg;
    if (g.has_grad()) {
      gg = g.grad(x);
    } else {
      gg.resize(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = 1e-7 * (1.0 + std::abs(x[i]));
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        gg[i] = (g.value(xp) - g.value(xm)) / (2 * h);
      }
    }
    return gg - model->grad_x(x, y);
  };
  if (g.has_hess() && model->has_hessian()) {
    obj.hess = [&g, model, y](const Vector& x) -> Matrix { return g.hess(x) - model->hess(x, y).xx; };
  }
  obj.grad_scale = [&g, model, X, y](const Vector& x) {
    if (!X.interior_contains(x)) return 1.0;
    const double a = g.has_grad() ? g.grad(x).lpNorm<Eigen::Infinity>() : 0.0;
    return a + model->grad_x(x, y).lpNorm<Eigen::Infinity>();
  };
  obj.kinks = g.meta.kinks;
  return obj;
}

// (∂_Φ g)^{-1}(y) = argmin_{x in X} g(x) - Phi(x, y), over X ∩ dom g ∩ search_box.
inline ProxResult prox(const TestFunction& g, const Coupling& c, const Vector& y,
                       const SolverConfig& cfg = {}) {
  require_dim(y, static_cast<Eigen::Index>(c.dim_y()), "prox y");
  if (g.dim != c.dim_x())
    throw Error(ErrorKind::kDimensionMismatch, "function and coupling dimensions differ");
  if (!c.y_domain().contains(y)) throw Error(ErrorKind::kDomainViolation, "prox: y outside Y");
  const Box natural = c.x_domain().intersect(g.dom);
  const Box box = natural.intersect(g.search_box);
  std::optional<Vector> center;
  double radius = kInf;
  if (cfg.locality_radius) {
    radius = *cfg.locality_radius;
    if (cfg.locality_center) center = *cfg.locality_center;
    else if (c.dim_x() == c.dim_y()) center = y;
    else throw Error(ErrorKind::kInvalidArgument, "locality_center required when dim_x != dim_y");
  }
  const Objective obj = prox_objective(g, c, y);
  return minimize_global(obj, box, natural, cfg, center, radius);
}

// g^Phi(y) = sup_x Phi(x, y) - g(x).
inline double conjugate(const TestFunction& g, const Coupling& c, const Vector& y,
                        const SolverConfig& cfg = {}) {
  const ProxResult r = prox(g, c, y, cfg);
  if (r.status == ProxStatus::kInfeasible)
    throw Error(ErrorKind::kSolverFailure, "conjugate: X ∩ search_box is empty");
  return r.envelope;
}

struct BiconjugateResult {
  double value = -kInf;
  Vector argmax;
  bool at_boundary = false;  // outer maximizer on the outer box boundary
};

// g^{PhiPhi}(x) = sup_{y in Y} Phi(x, y) - g^Phi(y), with y restricted to
// cfg.outer_box: grid over the outer box, then compass search.
inline BiconjugateResult biconjugate(const TestFunction& g, const Coupling& c, const Vector& x,
                                     const SolverConfig& cfg) {
  if (!cfg.outer_box) throw Error(ErrorKind::kInvalidArgument, "biconjugate needs cfg.outer_box");
  require_dim(x, static_cast<Eigen::Index>(c.dim_x()), "biconjugate x");
  if (!c.x_domain().contains(x)) throw Error(ErrorKind::kDomainViolation, "biconjugate: x outside X");
  const Box& ob = *cfg.outer_box;
  if (ob.dim() != c.dim_y() || !ob.bounded())
    throw Error(ErrorKind::kInvalidArgument, "outer_box must be a bounded box in Y");
  const Box Y = c.y_domain();
  SolverConfig inner = cfg;
  inner.outer_box.reset();

  auto objective = [&](const Vector& y) {
    if (!Y.contains(y)) return -kInf;
    return c.eval(x, y) - conjugate(g, c, y, inner);
  };

  const std::size_t m = c.dim_y();
  double total = 1.0;
  for (std::size_t i = 0; i < m; ++i) total *= static_cast<double>(cfg.outer_grid_points);
  const std::vector<Vector> pts = total <= 20000.0 ? tensor_grid(ob, cfg.outer_grid_points)
                                                   : sample_box(ob, 20000, 0);
  BiconjugateResult best;
  for (const auto& y : pts) {
    const double v = objective(y);
    if (v > best.value) {
      best.value = v;
      best.argmax = y;
    }
  }
  if (!std::isfinite(best.value)) throw Error(ErrorKind::kSolverFailure, "biconjugate: no feasible y");

  const Vector lo = ob.lower(), hi = ob.upper();
  Vector step = (hi - lo) / static_cast<double>(std::max<std::size_t>(cfg.outer_grid_points - 1, 1));
  Vector y = best.argmax;
  double fy = best.value;
  const double stop = 1e-9;
  while (step.maxCoeff() > stop * (1.0 + (hi - lo).maxCoeff())) {
    bool improved = false;
    for (std::size_t i = 0; i < m && !improved; ++i) {
      for (double sgn : {1.0, -1.0}) {
        Vector t = y;
        t[static_cast<Eigen::Index>(i)] += sgn * step[static_cast<Eigen::Index>(i)];
        t = ob.clamp(t);
        if (t == y) continue;
        const double ft = objective(t);
        if (ft > fy) {
          y = t;
          fy = ft;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  best.value = fy;
  best.argmax = y;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double tol = 1e-6 * (hi[i] - lo[i]);
    if (y[i] <= lo[i] + tol || y[i] >= hi[i] - tol) best.at_boundary = true;
  }
  return best;
}

// prox_M g(z) = argmin_x 1/2 <x - z, M^{-1}(x - z)> + g(x) over dom g ∩ search_box.
inline ProxResult scaled_prox(const TestFunction& g, const Matrix& M, const Vector& z,
                              const SolverConfig& cfg = {}) {
  const auto n = static_cast<Eigen::Index>(g.dim);
  require_dim(z, n, "scaled_prox z");
  if (M.rows() != n || M.cols() != n)
    throw Error(ErrorKind::kDimensionMismatch, "scaled_prox: M has wrong shape");
  if (!M.allFinite() || (M - M.transpose()).norm() > 1e-12 * (1.0 + M.norm()))
    throw Error(ErrorKind::kNotSpd, "scaled_prox: M is not symmetric");
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success || M.diagonal().minCoeff() <= 0.0)
    throw Error(ErrorKind::kNotSpd, "scaled_prox: M is not positive definite");
  const Matrix Minv = llt.solve(Matrix::Identity(n, n));
  Objective obj;
  obj.value = [&g, Minv, z](const Vector& x) {
    if (!g.dom.contains(x)) return kInf;
    const double gx = g.value(x);
    if (!std::isfinite(gx)) return kInf;
    return 0.5 * (x - z).dot(Minv * (x - z)) + gx;
  };
  obj.grad = [&g, Minv, z](const Vector& x) -> Vector {
    Vector gg;
    if (g.has_grad()) {
      gg = g.grad(x);
    } else {
      gg.resize(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = 1e-7 * (1.0 + std::abs(x[i]));
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        gg[i] = (g.value(xp) - g.value(xm)) / (2 * h);
      }
    }
    return Minv * (x - z) + gg;
  };
  if (g.has_hess()) obj.hess = [&g, Minv](const Vector& x) -> Matrix { return Minv + g.hess(x); };
  obj.grad_scale = [&g, Minv, z](const Vector& x) {
    return (Minv * (x - z)).lpNorm<Eigen::Infinity>() +
           (g.has_grad() ? g.grad(x).lpNorm<Eigen::Infinity>() : 0.0);
  };
  obj.kinks = g.meta.kinks;
  const Box natural = g.dom;
  const Box box = natural.intersect(g.search_box);
  return minimize_global(obj, box, natural, cfg);
}

}  // namespace phienv

#endif  // PHIENV_PROX_SOLVER_HPP_
