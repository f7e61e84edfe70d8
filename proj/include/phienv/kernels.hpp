#ifndef PHIENV_KERNELS_HPP_
#define PHIENV_KERNELS_HPP_

// Separable Legendre kernels h(x) = sum_i psi(x_i). Every family carries a
// closed-form convex conjugate, so the gradient bijection grad h <-> grad h*
// is evaluated without any inner solve.

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "phienv/types.hpp"

namespace phienv {

enum class KernelId {
  kQuadratic,         // psi(t) = a t^2 / 2
  kBoltzmannShannon,  // psi(t) = t log t - t on [0, inf)
  kKlGenerator,       // psi(t) = t log t - t + 1 on [0, inf)
  kCosh,              // psi(t) = cosh t
  kQuarticQuadratic,  // psi(t) = a t^4 / 4 + b t^2 / 2
};

inline const char* to_string(KernelId id) {
  switch (id) {
    case KernelId::kQuadratic: return "quadratic";
    case KernelId::kBoltzmannShannon: return "boltzmann_shannon";
    case KernelId::kKlGenerator: return "kl_generator";
    case KernelId::kCosh: return "cosh";
    case KernelId::kQuarticQuadratic: return "quartic_quadratic";
  }
  return "unknown";
}

namespace detail {

// t log t with the continuous extension 0 log 0 = 0.
inline double xlogx(double t) { return t == 0.0 ? 0.0 : t * std::log(t); }

// Real root of a t^3 + b t = s for a > 0, b > 0 (strictly increasing cubic).
inline double solve_monotone_cubic(double a, double b, double s) {
  if (a == 0.0) return s / b;
  if (s < 0.0) return -solve_monotone_cubic(a, b, -s);
  const double p = b / a;
  const double half_q = s / (2.0 * a);
  const double disc = half_q * half_q + p * p * p / 27.0;
  const double u = std::cbrt(half_q + std::sqrt(disc));
  double t = u - p / (3.0 * u);
  // Cardano loses relative accuracy near s = 0; two Newton steps restore it.
  for (int k = 0; k < 2; ++k) {
    const double f = a * t * t * t + b * t - s;
    const double fp = 3.0 * a * t * t + b;
    t -= f / fp;
  }
  return t;
}

}  // namespace detail

class Kernel {
 public:
  Kernel(KernelId id, std::vector<double> params) : id_(id), params_(std::move(params)) {}

  KernelId id() const { return id_; }
  const std::vector<double>& params() const { return params_; }
  std::string name() const { return to_string(id_); }

  // ---- scalar generator psi -------------------------------------------------

  Interval scalar_domain() const {
    switch (id_) {
      case KernelId::kBoltzmannShannon:
      case KernelId::kKlGenerator:
        return Interval{0.0, kInf, false, true};
      default:
        return Interval::real_line();
    }
  }

  double psi(double t) const {
    if (!scalar_domain().contains(t)) return kInf;
    switch (id_) {
      case KernelId::kQuadratic: return 0.5 * a() * t * t;
      case KernelId::kBoltzmannShannon: return detail::xlogx(t) - t;
      case KernelId::kKlGenerator: return detail::xlogx(t) - t + 1.0;
      case KernelId::kCosh: return std::cosh(t);
      case KernelId::kQuarticQuadratic: return 0.25 * a() * t * t * t * t + 0.5 * b() * t * t;
    }
    return kInf;
  }

  double dpsi(double t) const {
    check_scalar(t);
    switch (id_) {
      case KernelId::kQuadratic: return a() * t;
      case KernelId::kBoltzmannShannon:
      case KernelId::kKlGenerator: return std::log(t);
      case KernelId::kCosh: return std::sinh(t);
      case KernelId::kQuarticQuadratic: return a() * t * t * t + b() * t;
    }
    return 0.0;
  }

  double d2psi(double t) const {
    check_scalar(t);
    switch (id_) {
      case KernelId::kQuadratic: return a();
      case KernelId::kBoltzmannShannon:
      case KernelId::kKlGenerator: return 1.0 / t;
      case KernelId::kCosh: return std::cosh(t);
      case KernelId::kQuarticQuadratic: return 3.0 * a() * t * t + b();
    }
    return 0.0;
  }

  double d3psi(double t) const {
    check_scalar(t);
    switch (id_) {
      case KernelId::kQuadratic: return 0.0;
      case KernelId::kBoltzmannShannon:
      case KernelId::kKlGenerator: return -1.0 / (t * t);
      case KernelId::kCosh: return std::sinh(t);
      case KernelId::kQuarticQuadratic: return 6.0 * a() * t;
    }
    return 0.0;
  }

  // psi*(s) = sup_t s t - psi(t). Every family here has dom psi* = R.
  double psi_conj(double s) const {
    switch (id_) {
      case KernelId::kQuadratic: return s * s / (2.0 * a());
      case KernelId::kBoltzmannShannon: return std::exp(s);
      case KernelId::kKlGenerator: return std::exp(s) - 1.0;
      case KernelId::kCosh: return s * std::asinh(s) - std::sqrt(1.0 + s * s);
      case KernelId::kQuarticQuadratic: {
        const double t = detail::solve_monotone_cubic(a(), b(), s);
        return s * t - psi(t);
      }
    }
    return kInf;
  }

  double dpsi_conj(double s) const {
    switch (id_) {
      case KernelId::kQuadratic: return s / a();
      case KernelId::kBoltzmannShannon:
      case KernelId::kKlGenerator: return std::exp(s);
      case KernelId::kCosh: return std::asinh(s);
      case KernelId::kQuarticQuadratic: return detail::solve_monotone_cubic(a(), b(), s);
    }
    return 0.0;
  }

  // ---- separable vector kernel ---------------------------------------------

  Box dom(std::size_t n) const { return Box::uniform(n, scalar_domain()); }
  bool in_dom(const Vector& x) const { return dom(static_cast<std::size_t>(x.size())).contains(x); }
  bool in_interior(const Vector& x) const {
    return dom(static_cast<std::size_t>(x.size())).interior_contains(x);
  }

  double value(const Vector& x) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += psi(x[i]);
    return s;
  }
  Vector grad(const Vector& x) const { return map(x, [this](double t) { return dpsi(t); }); }
  Vector hess_diag(const Vector& x) const { return map(x, [this](double t) { return d2psi(t); }); }
  Matrix hess(const Vector& x) const { return hess_diag(x).asDiagonal(); }
  // Diagonal of the third-derivative tensor (all other entries vanish).
  Vector third_diag(const Vector& x) const { return map(x, [this](double t) { return d3psi(t); }); }

  double conj_value(const Vector& v) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += psi_conj(v[i]);
    return s;
  }
  Vector conj_grad(const Vector& v) const {
    Vector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = dpsi_conj(v[i]);
    return out;
  }

  // Bregman divergence D_h(x, y) = h(x) - h(y) - <grad h(y), x - y>.
  double bregman(const Vector& x, const Vector& y) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      s += psi(x[i]) - psi(y[i]) - dpsi(y[i]) * (x[i] - y[i]);
    return s;
  }

  bool full_domain() const { return !scalar_domain().bounded() && std::isinf(scalar_domain().lo); }

  // Lower bound on psi'' over the domain; 0 when no uniform bound exists.
  double strong_convexity() const {
    switch (id_) {
      case KernelId::kQuadratic: return a();
      case KernelId::kCosh: return 1.0;
      case KernelId::kQuarticQuadratic: return b();
      default: return 0.0;
    }
  }

 private:
  double a() const { return params_.at(0); }
  double b() const { return params_.at(1); }

  void check_scalar(double t) const {
    if (!scalar_domain().contains(t))
      throw Error(ErrorKind::kDomainViolation,
                  name() + ": argument " + std::to_string(t) + " outside domain");
  }

  template <typename F>
  static Vector map(const Vector& x, F f) {
    Vector out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = f(x[i]);
    return out;
  }

  KernelId id_;
  std::vector<double> params_;
};

inline KernelId parse_kernel_id(std::string_view id) {
  if (id == "quadratic") return KernelId::kQuadratic;
  if (id == "boltzmann_shannon") return KernelId::kBoltzmannShannon;
  if (id == "kl_generator") return KernelId::kKlGenerator;
  if (id == "cosh") return KernelId::kCosh;
  if (id == "quartic_quadratic") return KernelId::kQuarticQuadratic;
  throw Error(ErrorKind::kUnknownId, "unknown kernel id '" + std::string(id) + "'");
}

// Parameters: quadratic {a > 0} (default 1); quartic_quadratic {a >= 0, b > 0}
// (default {1, 1}); the entropy families and cosh take none.
inline Kernel make_kernel(KernelId id, std::vector<double> params = {}) {
  const std::string name = to_string(id);
  auto bad = [&](const std::string& why) {
    return Error(ErrorKind::kInvalidArgument, name + ": " + why);
  };
  switch (id) {
    case KernelId::kQuadratic:
      if (params.empty()) params = {1.0};
      if (params.size() != 1) throw bad("expects one parameter (curvature)");
      if (!(params[0] > 0.0) || !std::isfinite(params[0])) throw bad("curvature must be positive");
      break;
    case KernelId::kQuarticQuadratic:
      if (params.empty()) params = {1.0, 1.0};
      if (params.size() != 2) throw bad("expects two parameters (quartic, quadratic weights)");
      if (!(params[0] >= 0.0) || !std::isfinite(params[0])) throw bad("quartic weight must be nonnegative");
      if (!(params[1] > 0.0) || !std::isfinite(params[1])) throw bad("quadratic weight must be positive");
      break;
    case KernelId::kBoltzmannShannon:
    case KernelId::kKlGenerator:
    case KernelId::kCosh:
      if (!params.empty()) throw bad("takes no parameters");
      break;
  }
  return Kernel(id, std::move(params));
}

inline Kernel make_kernel(std::string_view id, std::vector<double> params = {}) {
  return make_kernel(parse_kernel_id(id), std::move(params));
}

}  // namespace phienv

#endif  // PHIENV_KERNELS_HPP_
