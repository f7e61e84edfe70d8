#ifndef PHIENV_COUPLING_HPP_
#define PHIENV_COUPLING_HPP_

// Coupling functions Phi : X x Y -> R replacing the inner product in
// conjugacy. Each family supplies closed-form first and second derivatives
// and, where the family is a global strong twist, the inverse
// G(x, v) = (grad_x Phi(x, .))^{-1}(v).
//
// Sign conventions follow the envelope form g^Phi(y) = sup_x Phi(x,y) - g(x),
// so every distance-like family enters with a minus sign.

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "phienv/kernels.hpp"
#include "phienv/types.hpp"

namespace phienv {

enum class CouplingFamily {
  kEuclidean,
  kLeftBregman,
  kRightBregman,
  kAnisotropic,
  kEntropic,
  kQuadraticTransform,
  kExp,
  kCustom,
};

inline const char* to_string(CouplingFamily f) {
  switch (f) {
    case CouplingFamily::kEuclidean: return "euclidean";
    case CouplingFamily::kLeftBregman: return "left_bregman";
    case CouplingFamily::kRightBregman: return "right_bregman";
    case CouplingFamily::kAnisotropic: return "anisotropic";
    case CouplingFamily::kEntropic: return "entropic";
    case CouplingFamily::kQuadraticTransform: return "quadratic_transform";
    case CouplingFamily::kExp: return "exp_coupling";
    case CouplingFamily::kCustom: return "custom";
  }
  return "unknown";
}

inline CouplingFamily parse_coupling_family(std::string_view s) {
  for (auto f : {CouplingFamily::kEuclidean, CouplingFamily::kLeftBregman,
                 CouplingFamily::kRightBregman, CouplingFamily::kAnisotropic,
                 CouplingFamily::kEntropic, CouplingFamily::kQuadraticTransform,
                 CouplingFamily::kExp})
    if (s == to_string(f)) return f;
  throw Error(ErrorKind::kUnknownId, "unknown coupling family '" + std::string(s) + "'");
}

// Second-derivative blocks. xy has shape dim_x x dim_y; the yx block of the
// mixed Hessian is xy.transpose().
struct HessianBlocks {
  Matrix xx;
  Matrix xy;
  Matrix yy;
};

// Implementation interface. Implementations may assume arguments were
// validated by Coupling (dimensions, x in X or int X, y in Y).
class CouplingModel {
 public:
  virtual ~CouplingModel() = default;

  virtual CouplingFamily family() const = 0;
  virtual std::size_t dim_x() const = 0;
  virtual std::size_t dim_y() const = 0;
  virtual Box x_domain() const = 0;
  virtual Box y_domain() const = 0;

  virtual double eval(const Vector& x, const Vector& y) const = 0;
  virtual Vector grad_x(const Vector& x, const Vector& y) const = 0;
  virtual Vector grad_y(const Vector& x, const Vector& y) const = 0;

  virtual bool has_hessian() const { return true; }
  virtual HessianBlocks hess(const Vector& x, const Vector& y) const = 0;

  virtual bool has_twist_inverse() const { return false; }
  virtual Vector twist_inverse(const Vector& /*x*/, const Vector& /*v*/) const {
    throw Error(ErrorKind::kNoTwistInverse,
                std::string(to_string(family())) + " has no twist inverse");
  }
};

class Coupling {
 public:
  Coupling(std::shared_ptr<const CouplingModel> model, double gamma,
           std::optional<Kernel> kernel)
      : model_(std::move(model)), gamma_(gamma), kernel_(std::move(kernel)) {}

  CouplingFamily family() const { return model_->family(); }
  std::string name() const {
    std::string s = to_string(family());
    if (kernel_) s += "(" + kernel_->name() + ")";
    return s;
  }
  double gamma() const { return gamma_; }
  const std::optional<Kernel>& kernel() const { return kernel_; }
  std::size_t dim_x() const { return model_->dim_x(); }
  std::size_t dim_y() const { return model_->dim_y(); }
  Box x_domain() const { return model_->x_domain(); }
  Box y_domain() const { return model_->y_domain(); }
  const CouplingModel& model() const { return *model_; }

  double eval(const Vector& x, const Vector& y) const {
    check_x(x, false);
    check_y(y);
    return model_->eval(x, y);
  }
  Vector grad_x(const Vector& x, const Vector& y) const {
    check_x(x, true);
    check_y(y);
    return model_->grad_x(x, y);
  }
  Vector grad_y(const Vector& x, const Vector& y) const {
    check_x(x, true);
    check_y(y);
    return model_->grad_y(x, y);
  }
  bool has_hessian() const { return model_->has_hessian(); }
  HessianBlocks hess(const Vector& x, const Vector& y) const {
    if (!model_->has_hessian())
      throw Error(ErrorKind::kMissingCapability, name() + " has no second derivatives");
    check_x(x, true);
    check_y(y);
    return model_->hess(x, y);
  }
  bool has_twist_inverse() const { return model_->has_twist_inverse(); }
  Vector twist_inverse(const Vector& x, const Vector& v) const {
    if (!model_->has_twist_inverse())
      throw Error(ErrorKind::kNoTwistInverse, name() + " has no twist inverse");
    check_x(x, true);
    require_dim(v, static_cast<Eigen::Index>(dim_x()), "twist_inverse v");
    return model_->twist_inverse(x, v);
  }

 private:
  void check_x(const Vector& x, bool interior) const {
    require_dim(x, static_cast<Eigen::Index>(dim_x()), "coupling x");
    const Box X = x_domain();
    if (interior ? !X.interior_contains(x) : !X.contains(x))
      throw Error(ErrorKind::kDomainViolation,
                  name() + ": x outside " + (interior ? "int X" : "X"));
  }
  void check_y(const Vector& y) const {
    require_dim(y, static_cast<Eigen::Index>(dim_y()), "coupling y");
    if (!y_domain().contains(y))
      throw Error(ErrorKind::kDomainViolation, name() + ": y outside Y");
  }

  std::shared_ptr<const CouplingModel> model_;
  double gamma_;
  std::optional<Kernel> kernel_;
};

namespace detail {

class EuclideanModel final : public CouplingModel {
 public:
  EuclideanModel(std::size_t n, double gamma) : n_(n), gamma_(gamma) {}
  CouplingFamily family() const override { return CouplingFamily::kEuclidean; }
  std::size_t dim_x() const override { return n_; }
  std::size_t dim_y() const override { return n_; }
  Box x_domain() const override { return Box::uniform(n_, Interval::real_line()); }
  Box y_domain() const override { return Box::uniform(n_, Interval::real_line()); }
  double eval(const Vector& x, const Vector& y) const override {
    return -(x - y).squaredNorm() / (2.0 * gamma_);
  }
  Vector grad_x(const Vector& x, const Vector& y) const override { return -(x - y) / gamma_; }
  Vector grad_y(const Vector& x, const Vector& y) const override { return (x - y) / gamma_; }
  HessianBlocks hess(const Vector&, const Vector&) const override {
    const Matrix I = Matrix::Identity(n_, n_);
    return {-I / gamma_, I / gamma_, -I / gamma_};
  }
  bool has_twist_inverse() const override { return true; }
  Vector twist_inverse(const Vector& x, const Vector& v) const override { return x + gamma_ * v; }

 private:
  std::size_t n_;
  double gamma_;
};

// Phi(x, y) = -D_h(x, y) / gamma, X = dom h, Y = int dom h.
class LeftBregmanModel final : public CouplingModel {
 public:
  LeftBregmanModel(std::size_t n, double gamma, Kernel h) : n_(n), gamma_(gamma), h_(std::move(h)) {}
  CouplingFamily family() const override { return CouplingFamily::kLeftBregman; }
  std::size_t dim_x() const override { return n_; }
  std::size_t dim_y() const override { return n_; }
  Box x_domain() const override { return h_.dom(n_); }
  Box y_domain() const override {
    Interval d = h_.scalar_domain();
    d.lo_open = d.hi_open = true;
    return Box::uniform(n_, d);
  }
  double eval(const Vector& x, const Vector& y) const override { return -h_.bregman(x, y) / gamma_; }
  Vector grad_x(const Vector& x, const Vector& y) const override {
    return -(h_.grad(x) - h_.grad(y)) / gamma_;
  }
  Vector grad_y(const Vector& x, const Vector& y) const override {
    return h_.hess_diag(y).cwiseProduct(x - y) / gamma_;
  }
  HessianBlocks hess(const Vector& x, const Vector& y) const override {
    const Vector hy = h_.hess_diag(y);
    const Vector yy = h_.third_diag(y).cwiseProduct(x - y) - hy;
    return {Matrix((-h_.hess_diag(x)).asDiagonal()) / gamma_, Matrix(hy.asDiagonal()) / gamma_,
            Matrix(yy.asDiagonal()) / gamma_};
  }
  bool has_twist_inverse() const override { return true; }
  Vector twist_inverse(const Vector& x, const Vector& v) const override {
    return h_.conj_grad(h_.grad(x) + gamma_ * v);
  }

 private:
  std::size_t n_;
  double gamma_;
  Kernel h_;
};

// Phi(x, y) = -D_h(y, x) / gamma on R^n x R^n.
class RightBregmanModel final : public CouplingModel {
 public:
  RightBregmanModel(std::size_t n, double gamma, Kernel h) : n_(n), gamma_(gamma), h_(std::move(h)) {}
  CouplingFamily family() const override { return CouplingFamily::kRightBregman; }
  std::size_t dim_x() const override { return n_; }
  std::size_t dim_y() const override { return n_; }
  Box x_domain() const override { return Box::uniform(n_, Interval::real_line()); }
  Box y_domain() const override { return Box::uniform(n_, Interval::real_line()); }
  double eval(const Vector& x, const Vector& y) const override { return -h_.bregman(y, x) / gamma_; }
  Vector grad_x(const Vector& x, const Vector& y) const override {
    return h_.hess_diag(x).cwiseProduct(y - x) / gamma_;
  }
  Vector grad_y(const Vector& x, const Vector& y) const override {
    return -(h_.grad(y) - h_.grad(x)) / gamma_;
  }
  HessianBlocks hess(const Vector& x, const Vector& y) const override {
    const Vector hx = h_.hess_diag(x);
    const Vector xx = h_.third_diag(x).cwiseProduct(y - x) - hx;
    return {Matrix(xx.asDiagonal()) / gamma_, Matrix(hx.asDiagonal()) / gamma_,
            Matrix((-h_.hess_diag(y)).asDiagonal()) / gamma_};
  }
  bool has_twist_inverse() const override { return true; }
  Vector twist_inverse(const Vector& x, const Vector& v) const override {
    return x + gamma_ * v.cwiseQuotient(h_.hess_diag(x));
  }

 private:
  std::size_t n_;
  double gamma_;
  Kernel h_;
};

// Phi(x, y) = -(gamma * phi)((x - y)) with the epi-scaling
// (gamma * phi)(u) = gamma phi(u / gamma).
class AnisotropicModel final : public CouplingModel {
 public:
  AnisotropicModel(std::size_t n, double gamma, Kernel phi) : n_(n), gamma_(gamma), phi_(std::move(phi)) {}
  CouplingFamily family() const override { return CouplingFamily::kAnisotropic; }
  std::size_t dim_x() const override { return n_; }
  std::size_t dim_y() const override { return n_; }
  Box x_domain() const override { return Box::uniform(n_, Interval::real_line()); }
  Box y_domain() const override { return Box::uniform(n_, Interval::real_line()); }
  double eval(const Vector& x, const Vector& y) const override {
    return -gamma_ * phi_.value((x - y) / gamma_);
  }
  Vector grad_x(const Vector& x, const Vector& y) const override { return -phi_.grad((x - y) / gamma_); }
  Vector grad_y(const Vector& x, const Vector& y) const override { return phi_.grad((x - y) / gamma_); }
  HessianBlocks hess(const Vector& x, const Vector& y) const override {
    const Matrix H = Matrix(phi_.hess_diag((x - y) / gamma_).asDiagonal()) / gamma_;
    return {-H, H, -H};
  }
  bool has_twist_inverse() const override { return true; }
  Vector twist_inverse(const Vector& x, const Vector& v) const override {
    return x - gamma_ * phi_.conj_grad(-v);
  }

 private:
  std::size_t n_;
  double gamma_;
  Kernel phi_;
};

// Phi(x, y) = -gamma sum_i y_i phi(x_i / y_i), X = R^n_+, Y = R^n_++.
class EntropicModel final : public CouplingModel {
 public:
  EntropicModel(std::size_t n, double gamma, Kernel phi) : n_(n), gamma_(gamma), phi_(std::move(phi)) {}
  CouplingFamily family() const override { return CouplingFamily::kEntropic; }
  std::size_t dim_x() const override { return n_; }
  std::size_t dim_y() const override { return n_; }
  Box x_domain() const override { return Box::uniform(n_, Interval{0.0, kInf, false, true}); }
  Box y_domain() const override { return Box::uniform(n_, Interval::open(0.0, kInf)); }
  double eval(const Vector& x, const Vector& y) const override {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += y[i] * phi_.psi(x[i] / y[i]);
    return -gamma_ * s;
  }
  Vector grad_x(const Vector& x, const Vector& y) const override {
    Vector g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = -gamma_ * phi_.dpsi(x[i] / y[i]);
    return g;
  }
  Vector grad_y(const Vector& x, const Vector& y) const override {
    Vector g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double t = x[i] / y[i];
      g[i] = gamma_ * (t * phi_.dpsi(t) - phi_.psi(t));
    }
    return g;
  }
  HessianBlocks hess(const Vector& x, const Vector& y) const override {
    const auto n = x.size();
    Matrix xx = Matrix::Zero(n, n), xy = Matrix::Zero(n, n), yy = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = x[i] / y[i];
      const double c = phi_.d2psi(t);
      xx(i, i) = -gamma_ * c / y[i];
      xy(i, i) = gamma_ * c * t / y[i];
      yy(i, i) = -gamma_ * c * t * t / y[i];
    }
    return {xx, xy, yy};
  }
  bool has_twist_inverse() const override { return true; }
  Vector twist_inverse(const Vector& x, const Vector& v) const override {
    Vector y(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double ratio = phi_.dpsi_conj(-v[i] / gamma_);
      if (!(ratio > 0.0) || !std::isfinite(ratio))
        throw Error(ErrorKind::kOutsideRange, "entropic twist inverse: v outside range of grad_x");
      y[i] = x[i] / ratio;
    }
    return y;
  }

 private:
  std::size_t n_;
  double gamma_;
  Kernel phi_;
};

// Phi(x, (v, r)) = <x, v> - (r / 2) ||x||^2 on R^n x (R^n x R).
class QuadraticTransformModel final : public CouplingModel {
 public:
  explicit QuadraticTransformModel(std::size_t n) : n_(n) {}
  CouplingFamily family() const override { return CouplingFamily::kQuadraticTransform; }
  std::size_t dim_x() const override { return n_; }
  std::size_t dim_y() const override { return n_ + 1; }
  Box x_domain() const override { return Box::uniform(n_, Interval::real_line()); }
  Box y_domain() const override { return Box::uniform(n_ + 1, Interval::real_line()); }
  double eval(const Vector& x, const Vector& y) const override {
    const double r = y[static_cast<Eigen::Index>(n_)];
    return x.dot(y.head(n_)) - 0.5 * r * x.squaredNorm();
  }
  Vector grad_x(const Vector& x, const Vector& y) const override {
    const double r = y[static_cast<Eigen::Index>(n_)];
    return y.head(n_) - r * x;
  }
  Vector grad_y(const Vector& x, const Vector&) const override {
    Vector g(n_ + 1);
    g.head(n_) = x;
    g[static_cast<Eigen::Index>(n_)] = -0.5 * x.squaredNorm();
    return g;
  }
  HessianBlocks hess(const Vector& x, const Vector& y) const override {
    const auto n = static_cast<Eigen::Index>(n_);
    const double r = y[n];
    Matrix xy = Matrix::Zero(n, n + 1);
    xy.leftCols(n) = Matrix::Identity(n, n);
    xy.col(n) = -x;
    return {-r * Matrix::Identity(n, n), xy, Matrix::Zero(n + 1, n + 1)};
  }

 private:
  std::size_t n_;
};

// Phi(x, y) = exp(x - y) on R x R.
class ExpModel final : public CouplingModel {
 public:
  CouplingFamily family() const override { return CouplingFamily::kExp; }
  std::size_t dim_x() const override { return 1; }
  std::size_t dim_y() const override { return 1; }
  Box x_domain() const override { return Box::uniform(1, Interval::real_line()); }
  Box y_domain() const override { return Box::uniform(1, Interval::real_line()); }
  double eval(const Vector& x, const Vector& y) const override { return std::exp(x[0] - y[0]); }
  Vector grad_x(const Vector& x, const Vector& y) const override { return vec({std::exp(x[0] - y[0])}); }
  Vector grad_y(const Vector& x, const Vector& y) const override { return vec({-std::exp(x[0] - y[0])}); }
  HessianBlocks hess(const Vector& x, const Vector& y) const override {
    const double e = std::exp(x[0] - y[0]);
    Matrix p(1, 1), m(1, 1);
    p(0, 0) = e;
    m(0, 0) = -e;
    return {p, m, p};
  }
  bool has_twist_inverse() const override { return true; }
  Vector twist_inverse(const Vector& x, const Vector& v) const override {
    if (!(v[0] > 0.0))
      throw Error(ErrorKind::kOutsideRange, "exp_coupling twist inverse needs v > 0");
    return vec({x[0] - std::log(v[0])});
  }
};

inline void require_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw Error(ErrorKind::kInvalidArgument, "gamma must be positive and finite");
}

inline void require_n(std::size_t n) {
  if (n == 0) throw Error(ErrorKind::kInvalidArgument, "dimension must be positive");
}

}  // namespace detail

inline Coupling make_euclidean(std::size_t n, double gamma) {
  detail::require_n(n);
  detail::require_gamma(gamma);
  return Coupling(std::make_shared<detail::EuclideanModel>(n, gamma), gamma, std::nullopt);
}

inline Coupling make_left_bregman(std::size_t n, double gamma, const Kernel& h) {
  detail::require_n(n);
  detail::require_gamma(gamma);
  return Coupling(std::make_shared<detail::LeftBregmanModel>(n, gamma, h), gamma, h);
}

// Needs dom h = R^n and a positive definite Hessian everywhere.
inline Coupling make_right_bregman(std::size_t n, double gamma, const Kernel& h) {
  detail::require_n(n);
  detail::require_gamma(gamma);
  if (!h.full_domain() || !(h.strong_convexity() > 0.0))
    throw Error(ErrorKind::kInvalidArgument,
                "right_bregman requires dom h = R^n with positive definite Hessian; got " + h.name());
  return Coupling(std::make_shared<detail::RightBregmanModel>(n, gamma, h), gamma, h);
}

inline Coupling make_anisotropic(std::size_t n, double gamma, const Kernel& phi) {
  detail::require_n(n);
  detail::require_gamma(gamma);
  if (!phi.full_domain())
    throw Error(ErrorKind::kInvalidArgument, "anisotropic requires dom phi = R^n; got " + phi.name());
  return Coupling(std::make_shared<detail::AnisotropicModel>(n, gamma, phi), gamma, phi);
}

// The generator must live on [0, inf) with phi(1) = phi'(1) = 0.
inline Coupling make_entropic(std::size_t n, double gamma, const Kernel& phi) {
  detail::require_n(n);
  detail::require_gamma(gamma);
  const Interval d = phi.scalar_domain();
  if (d.lo != 0.0 || std::abs(phi.psi(1.0)) > 1e-12 || std::abs(phi.dpsi(1.0)) > 1e-12)
    throw Error(ErrorKind::kInvalidArgument,
                "entropic requires a divergence generator on [0, inf) with phi(1) = phi'(1) = 0; got " +
                    phi.name());
  return Coupling(std::make_shared<detail::EntropicModel>(n, gamma, phi), gamma, phi);
}

inline Coupling make_quadratic_transform(std::size_t n) {
  detail::require_n(n);
  return Coupling(std::make_shared<detail::QuadraticTransformModel>(n), 1.0, std::nullopt);
}

inline Coupling make_exp_coupling() {
  return Coupling(std::make_shared<detail::ExpModel>(), 1.0, std::nullopt);
}

inline Coupling make_custom(std::shared_ptr<const CouplingModel> model, double gamma = 1.0) {
  return Coupling(std::move(model), gamma, std::nullopt);
}

// Factory used by configuration files. gamma and kernel are ignored by the
// families that do not use them.
inline Coupling make_coupling(CouplingFamily family, std::size_t n, double gamma,
                              const std::optional<Kernel>& kernel) {
  auto need_kernel = [&]() -> const Kernel& {
    if (!kernel)
      throw Error(ErrorKind::kInvalidArgument,
                  std::string(to_string(family)) + " requires a kernel");
    return *kernel;
  };
  switch (family) {
    case CouplingFamily::kEuclidean: return make_euclidean(n, gamma);
    case CouplingFamily::kLeftBregman: return make_left_bregman(n, gamma, need_kernel());
    case CouplingFamily::kRightBregman: return make_right_bregman(n, gamma, need_kernel());
    case CouplingFamily::kAnisotropic: return make_anisotropic(n, gamma, need_kernel());
    case CouplingFamily::kEntropic: return make_entropic(n, gamma, need_kernel());
    case CouplingFamily::kQuadraticTransform: return make_quadratic_transform(n);
    case CouplingFamily::kExp:
      if (n != 1) throw Error(ErrorKind::kInvalidArgument, "exp_coupling is one-dimensional");
      return make_exp_coupling();
    case CouplingFamily::kCustom: break;
  }
  throw Error(ErrorKind::kInvalidArgument, "custom couplings cannot be built from a tag");
}

}  // namespace phienv

#endif  // PHIENV_COUPLING_HPP_
