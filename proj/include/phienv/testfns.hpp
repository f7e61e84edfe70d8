#ifndef PHIENV_TESTFNS_HPP_
#define PHIENV_TESTFNS_HPP_

// Catalog of target functions g with value oracles, gradients, curvature
// and the analytic metadata the regularity checks consume.

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phienv/types.hpp"

namespace phienv {

struct FunctionMeta {
  bool convex = false;
  // rho such that g + (rho/2)||.||^2 is convex on search_box; 0 when convex.
  double hypoconvex_modulus = 0.0;
  // Classical prox-regularity constant r valid at every point of the search
  // box where g is prox-regular; nullopt when g fails prox-regularity
  // somewhere (listed in kinks).
  std::optional<double> prox_regular_r = 0.0;
  // Prox-boundedness threshold lambda_g (inf when bounded below by a linear
  // function).
  double prox_bound = kInf;
  // Coordinate values where g is not differentiable (g separable there).
  std::vector<double> kinks;
  // g is twice continuously differentiable away from kinks.
  bool c2 = true;
};

struct TestFunction {
  std::string id;
  std::size_t dim = 1;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> grad;  // empty when unavailable
  std::function<Matrix(const Vector&)> hess;  // empty when unavailable
  Box dom;
  Box search_box;
  FunctionMeta meta;

  bool has_grad() const { return static_cast<bool>(grad); }
  bool has_hess() const { return static_cast<bool>(hess); }
  double operator()(const Vector& x) const { return value(x); }
};

namespace detail {

inline Box real_box(std::size_t n) { return Box::uniform(n, Interval::real_line()); }

inline double sgn(double t) { return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0); }

// Tridiagonal SPD matrix used by shifted_quad: 1.5 on the diagonal, 0.5 off.
inline Matrix shifted_quad_matrix(std::size_t n) {
  Matrix Q = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    Q(i, i) = 1.5;
    if (i + 1 < n) Q(i, i + 1) = Q(i + 1, i) = 0.5;
  }
  return Q;
}

}  // namespace detail

inline constexpr double kDefaultSearchHalfWidth = 6.0;

// 1/2 ||x||^2
inline TestFunction make_quad(std::size_t n) {
  TestFunction f;
  f.id = "quad";
  f.dim = n;
  f.value = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  f.grad = [](const Vector& x) { return Vector(x); };
  f.hess = [n](const Vector&) { return Matrix(Matrix::Identity(n, n)); };
  f.dom = detail::real_box(n);
  f.search_box = Box::closed_cube(n, -kDefaultSearchHalfWidth, kDefaultSearchHalfWidth);
  f.meta.convex = true;
  return f;
}

// 1/2 (x - c)^T Q (x - c) with c = (1/2, ..., 1/2) and Q tridiagonal SPD.
inline TestFunction make_shifted_quad(std::size_t n) {
  const Matrix Q = detail::shifted_quad_matrix(n);
  const Vector c = Vector::Constant(static_cast<Eigen::Index>(n), 0.5);
  TestFunction f;
  f.id = "shifted_quad";
  f.dim = n;
  f.value = [Q, c](const Vector& x) { return 0.5 * (x - c).dot(Q * (x - c)); };
  f.grad = [Q, c](const Vector& x) { return Vector(Q * (x - c)); };
  f.hess = [Q](const Vector&) { return Q; };
  f.dom = detail::real_box(n);
  f.search_box = Box::closed_cube(n, -kDefaultSearchHalfWidth, kDefaultSearchHalfWidth);
  f.meta.convex = true;
  return f;
}

// ||x||_1
inline TestFunction make_abs(std::size_t n) {
  TestFunction f;
  f.id = "abs";
  f.dim = n;
  f.value = [](const Vector& x) { return x.lpNorm<1>(); };
  f.grad = [](const Vector& x) { return Vector(x.unaryExpr([](double t) { return detail::sgn(t); })); };
  f.hess = [n](const Vector&) { return Matrix(Matrix::Zero(n, n)); };
  f.dom = detail::real_box(n);
  f.search_box = Box::closed_cube(n, -kDefaultSearchHalfWidth, kDefaultSearchHalfWidth);
  f.meta.convex = true;
  f.meta.kinks = {0.0};
  return f;
}

// -||x||_1: Phi-convex for the quadratic transform but with an empty
// Phi-subdifferential at 0.
inline TestFunction make_neg_abs(std::size_t n) {
  TestFunction f;
  f.id = "neg_abs";
  f.dim = n;
  f.value = [](const Vector& x) { return -x.lpNorm<1>(); };
  f.grad = [](const Vector& x) { return Vector(-x.unaryExpr([](double t) { return detail::sgn(t); })); };
  f.hess = [n](const Vector&) { return Matrix(Matrix::Zero(n, n)); };
  f.dom = detail::real_box(n);
  f.search_box = Box::closed_cube(n, -kDefaultSearchHalfWidth, kDefaultSearchHalfWidth);
  f.meta.convex = false;
  f.meta.hypoconvex_modulus = kInf;
  f.meta.prox_regular_r = std::nullopt;
  f.meta.kinks = {0.0};
  return f;
}

// sum_i (x_i^2 - 1)^2. g'' = 12 t^2 - 4 >= -4, so g + 2||.||^2 is convex and
// g is prox-regular everywhere with r = 4.
inline TestFunction make_double_well(std::size_t n) {
  TestFunction f;
  f.id = "double_well";
  f.dim = n;
  f.value = [](const Vector& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += (x[i] * x[i] - 1.0) * (x[i] * x[i] - 1.0);
    return s;
  };
  f.grad = [](const Vector& x) {
    return Vector(x.unaryExpr([](double t) { return 4.0 * t * (t * t - 1.0); }));
  };
  f.hess = [](const Vector& x) {
    return Matrix(x.unaryExpr([](double t) { return 12.0 * t * t - 4.0; }).asDiagonal());
  };
  f.dom = detail::real_box(n);
  f.search_box = Box::closed_cube(n, -kDefaultSearchHalfWidth, kDefaultSearchHalfWidth);
  f.meta.hypoconvex_modulus = 4.0;
  f.meta.prox_regular_r = 4.0;
  return f;
}

inline TestFunction make_const(std::size_t n, double rho = 5.0) {
  TestFunction f;
  f.id = "const_rho";
  f.dim = n;
  f.value = [rho](const Vector&) { return rho; };
  f.grad = [n](const Vector&) { return Vector(Vector::Zero(static_cast<Eigen::Index>(n))); };
  f.hess = [n](const Vector&) { return Matrix(Matrix::Zero(n, n)); };
  f.dom = detail::real_box(n);
  f.search_box = Box::closed_cube(n, -kDefaultSearchHalfWidth, kDefaultSearchHalfWidth);
  f.meta.convex = true;
  return f;
}

inline TestFunction make_zero(std::size_t n) {
  TestFunction f = make_const(n, 0.0);
  f.id = "zero";
  return f;
}

// <c, x> with c = (1, ..., 1) unless given.
inline TestFunction make_linear(std::size_t n, std::optional<Vector> coeff = std::nullopt) {
  const Vector c = coeff ? *coeff : Vector::Ones(static_cast<Eigen::Index>(n));
  require_dim(c, static_cast<Eigen::Index>(n), "linear coefficients");
  TestFunction f;
  f.id = "linear";
  f.dim = n;
  f.value = [c](const Vector& x) { return c.dot(x); };
  f.grad = [c](const Vector&) { return c; };
  f.hess = [n](const Vector&) { return Matrix(Matrix::Zero(n, n)); };
  f.dom = detail::real_box(n);
  f.search_box = Box::closed_cube(n, -kDefaultSearchHalfWidth, kDefaultSearchHalfWidth);
  f.meta.convex = true;
  return f;
}

// Indicator of [-1, 1]^n.
inline TestFunction make_indicator_box(std::size_t n) {
  const Box box = Box::closed_cube(n, -1.0, 1.0);
  TestFunction f;
  f.id = "indicator_box";
  f.dim = n;
  f.value = [box](const Vector& x) { return box.contains(x) ? 0.0 : kInf; };
  f.grad = [n](const Vector&) { return Vector(Vector::Zero(static_cast<Eigen::Index>(n))); };
  f.hess = [n](const Vector&) { return Matrix(Matrix::Zero(n, n)); };
  f.dom = box;
  f.search_box = Box::closed_cube(n, -kDefaultSearchHalfWidth, kDefaultSearchHalfWidth);
  f.meta.convex = true;
  f.meta.c2 = false;
  return f;
}

// Separable Huber with threshold 1: t^2/2 for |t| <= 1, |t| - 1/2 beyond.
inline TestFunction make_huber(std::size_t n) {
  TestFunction f;
  f.id = "huber";
  f.dim = n;
  f.value = [](const Vector& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double a = std::abs(x[i]);
      s += a <= 1.0 ? 0.5 * a * a : a - 0.5;
    }
    return s;
  };
  f.grad = [](const Vector& x) {
    return Vector(x.unaryExpr([](double t) { return std::abs(t) <= 1.0 ? t : detail::sgn(t); }));
  };
  f.hess = [](const Vector& x) {
    return Matrix(x.unaryExpr([](double t) { return std::abs(t) <= 1.0 ? 1.0 : 0.0; }).asDiagonal());
  };
  f.dom = detail::real_box(n);
  f.search_box = Box::closed_cube(n, -kDefaultSearchHalfWidth, kDefaultSearchHalfWidth);
  f.meta.convex = true;
  f.meta.c2 = false;
  return f;
}

// -1/2 ||x||^2: prox-bounded with threshold 1, prox-regular with r = 1.
inline TestFunction make_neg_quad(std::size_t n) {
  TestFunction f;
  f.id = "neg_quad";
  f.dim = n;
  f.value = [](const Vector& x) { return -0.5 * x.squaredNorm(); };
  f.grad = [](const Vector& x) { return Vector(-x); };
  f.hess = [n](const Vector&) { return Matrix(-Matrix::Identity(n, n)); };
  f.dom = detail::real_box(n);
  f.search_box = Box::closed_cube(n, -kDefaultSearchHalfWidth, kDefaultSearchHalfWidth);
  f.meta.hypoconvex_modulus = 1.0;
  f.meta.prox_regular_r = 1.0;
  f.meta.prox_bound = 1.0;
  return f;
}

inline const std::vector<std::string>& catalog_ids() {
  static const std::vector<std::string> ids = {
      "quad",   "shifted_quad", "abs",           "neg_abs", "double_well", "const_rho",
      "linear", "indicator_box", "huber", "zero", "neg_quad"};
  return ids;
}

inline TestFunction make_function(std::string_view id, std::size_t n) {
  if (n == 0) throw Error(ErrorKind::kInvalidArgument, "function dimension must be positive");
  if (id == "quad") return make_quad(n);
  if (id == "shifted_quad") return make_shifted_quad(n);
  if (id == "abs") return make_abs(n);
  if (id == "neg_abs") return make_neg_abs(n);
  if (id == "double_well") return make_double_well(n);
  if (id == "const_rho") return make_const(n);
  if (id == "linear") return make_linear(n);
  if (id == "indicator_box") return make_indicator_box(n);
  if (id == "huber") return make_huber(n);
  if (id == "zero") return make_zero(n);
  if (id == "neg_quad") return make_neg_quad(n);
  throw Error(ErrorKind::kUnknownId, "unknown test function '" + std::string(id) + "'");
}

inline std::vector<TestFunction> catalog(std::size_t n = 1) {
  std::vector<TestFunction> out;
  for (const auto& id : catalog_ids()) out.push_back(make_function(id, n));
  return out;
}

// One-sided partial derivatives of g at x along coordinate i, by forward
// quotients. Used where g may be nondifferentiable (declared kinks).
inline std::pair<double, double> one_sided_partials(const TestFunction& g, const Vector& x,
                                                    Eigen::Index i, double h = 1e-8) {
  Vector xp = x, xm = x;
  xp[i] += h;
  xm[i] -= h;
  const double g0 = g.value(x);
  return {(g0 - g.value(xm)) / h, (g.value(xp) - g0) / h};
}

inline bool at_kink(const TestFunction& g, double t, double tol = 1e-12) {
  for (double k : g.meta.kinks)
    if (std::abs(t - k) <= tol) return true;
  return false;
}

}  // namespace phienv

#endif  // PHIENV_TESTFNS_HPP_
