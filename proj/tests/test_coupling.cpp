#include <gtest/gtest.h>

#include <cmath>

#include "phienv/coupling.hpp"
#include "phienv/sampling.hpp"

using namespace phienv;

namespace {

struct Case {
  Coupling c;
  Box xs;  // interior sample box for x
  Box ys;  // sample box inside Y
};

std::vector<Case> twist_cases(std::size_t n) {
  const Box sym = Box::closed_cube(n, -2.0, 2.0);
  const Box pos = Box::closed_cube(n, 0.2, 3.0);
  return {
      {make_euclidean(n, 0.7), sym, sym},
      {make_left_bregman(n, 1.3, make_kernel("boltzmann_shannon")), pos, pos},
      {make_left_bregman(n, 0.5, make_kernel("quartic_quadratic", {1.0, 0.5})), sym, sym},
      {make_right_bregman(n, 0.8, make_kernel("cosh")), sym, sym},
      {make_anisotropic(n, 0.6, make_kernel("cosh")), sym, sym},
      {make_entropic(n, 1.5, make_kernel("kl_generator")), pos, pos},
  };
}

Vector fd_grad(const std::function<double(const Vector&)>& f, const Vector& x) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * (1.0 + std::abs(x[i]));
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

Matrix fd_jac(const std::function<Vector(const Vector&)>& f, const Vector& x) {
  const Vector f0 = f(x);
  Matrix J(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * (1.0 + std::abs(x[j]));
    Vector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    J.col(j) = (f(xp) - f(xm)) / (2 * h);
  }
  return J;
}

double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

}  // namespace

TEST(Coupling, EuclideanDeskValues) {
  const Coupling c = make_euclidean(2, 1.0);
  EXPECT_DOUBLE_EQ(c.eval(vec({1, 0}), vec({1, 0})), 0.0);
  const Coupling c2 = make_euclidean(1, 0.5);
  EXPECT_DOUBLE_EQ(c2.grad_x(vec({2}), vec({1}))[0], -2.0);
  const Coupling c3 = make_euclidean(1, 2.0);
  EXPECT_DOUBLE_EQ(c3.twist_inverse(vec({1}), vec({3}))[0], 7.0);
  const HessianBlocks H = make_euclidean(3, 0.25).hess(Vector::Zero(3), Vector::Ones(3));
  EXPECT_TRUE(H.xx.isApprox(-4.0 * Matrix::Identity(3, 3)));
  EXPECT_TRUE(H.xy.isApprox(4.0 * Matrix::Identity(3, 3)));
  EXPECT_TRUE(H.yy.isApprox(-4.0 * Matrix::Identity(3, 3)));
}

TEST(Coupling, EntropicDeskValues) {
  const Coupling c = make_entropic(1, 1.0, make_kernel("kl_generator"));
  EXPECT_NEAR(c.eval(vec({2}), vec({1})), -(2 * std::log(2.0) - 1.0), 1e-15);
  EXPECT_NEAR(c.eval(vec({2}), vec({1})), -0.386294, 1e-6);
  const Coupling c2 = make_entropic(1, 2.0, make_kernel("kl_generator"));
  EXPECT_DOUBLE_EQ(c2.grad_x(vec({1}), vec({1}))[0], 0.0);
  EXPECT_NEAR(c.twist_inverse(vec({2}), vec({std::log(2.0)}))[0], 4.0, 1e-14);
  // x = 0 is in X; the coupling is finite there.
  EXPECT_TRUE(std::isfinite(c.eval(vec({0}), vec({3}))));
}

TEST(Coupling, QuadraticTransformBlocks) {
  const Coupling c = make_quadratic_transform(1);
  EXPECT_EQ(c.dim_y(), 2u);
  const HessianBlocks H = c.hess(vec({0.3}), vec({1.0, 2.5}));
  EXPECT_DOUBLE_EQ(H.xx(0, 0), -2.5);
  EXPECT_EQ(H.xy.rows(), 1);
  EXPECT_EQ(H.xy.cols(), 2);
  EXPECT_FALSE(c.has_twist_inverse());
  EXPECT_THROW(c.twist_inverse(vec({0.0}), vec({1.0})), Error);
}

TEST(Coupling, ReductionIdentities) {
  const std::size_t n = 3;
  const Coupling e = make_euclidean(n, 0.8);
  const Coupling lb = make_left_bregman(n, 0.8, make_kernel("quadratic"));
  const Coupling an = make_anisotropic(n, 0.8, make_kernel("quadratic"));
  const Coupling rb = make_right_bregman(n, 0.8, make_kernel("quadratic"));
  const auto xs = sample_box(Box::closed_cube(n, -3, 3), 50, 3);
  const auto ys = sample_box(Box::closed_cube(n, -3, 3), 50, 4);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const Vector& x = xs[k];
    const Vector& y = ys[k];
    for (const Coupling* c : {&lb, &an, &rb}) {
      EXPECT_NEAR(c->eval(x, y), e.eval(x, y), 1e-12);
      EXPECT_LE((c->grad_x(x, y) - e.grad_x(x, y)).norm(), 1e-10);
      EXPECT_LE((c->grad_y(x, y) - e.grad_y(x, y)).norm(), 1e-10);
      const HessianBlocks a = c->hess(x, y), b = e.hess(x, y);
      EXPECT_LE((a.xx - b.xx).norm() + (a.xy - b.xy).norm() + (a.yy - b.yy).norm(), 1e-10);
    }
  }
}

TEST(Coupling, DerivativesMatchFiniteDifferences) {
  std::vector<Case> cases = twist_cases(2);
  cases.push_back({make_quadratic_transform(2), Box::closed_cube(2, -2, 2), Box::closed_cube(3, -2, 2)});
  cases.push_back({make_exp_coupling(), Box::closed_cube(1, -2, 2), Box::closed_cube(1, -2, 2)});
  for (const auto& cs : cases) {
    const auto xs = sample_box(cs.xs, 100, 11);
    const auto ys = sample_box(cs.ys, 100, 12);
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const Vector& x = xs[k];
      const Vector& y = ys[k];
      const Coupling& c = cs.c;
      const Vector gx = c.grad_x(x, y), gy = c.grad_y(x, y);
      const Vector fx = fd_grad([&](const Vector& t) { return c.eval(t, y); }, x);
      const Vector fy = fd_grad([&](const Vector& t) { return c.eval(x, t); }, y);
      EXPECT_LE(rel(gx, fx), 1e-5) << c.name();
      EXPECT_LE(rel(gy, fy), 1e-5) << c.name();
      const HessianBlocks H = c.hess(x, y);
      const Matrix hxx = fd_jac([&](const Vector& t) { return c.grad_x(t, y); }, x);
      const Matrix hxy = fd_jac([&](const Vector& t) { return c.grad_x(x, t); }, y);
      const Matrix hyy = fd_jac([&](const Vector& t) { return c.grad_y(x, t); }, y);
      EXPECT_LE(rel(H.xx, hxx), 1e-4) << c.name();
      EXPECT_LE(rel(H.xy, hxy), 1e-4) << c.name();
      EXPECT_LE(rel(H.yy, hyy), 1e-4) << c.name();
      EXPECT_LE((H.xx - H.xx.transpose()).norm(), 1e-12);
      EXPECT_LE((H.yy - H.yy.transpose()).norm(), 1e-12);
    }
  }
}

TEST(Coupling, TwistRoundTrip) {
  for (const auto& cs : twist_cases(3)) {
    const auto xs = sample_box(cs.xs, 100, 21);
    const auto ys = sample_box(cs.ys, 100, 22);
    double worst = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const Vector y = cs.c.twist_inverse(xs[k], cs.c.grad_x(xs[k], ys[k]));
      worst = std::max(worst, (y - ys[k]).norm());
    }
    EXPECT_LE(worst, 1e-8) << cs.c.name();
  }
  const Coupling ex = make_exp_coupling();
  EXPECT_NEAR(ex.twist_inverse(vec({0.5}), ex.grad_x(vec({0.5}), vec({-1.2})))[0], -1.2, 1e-14);
  EXPECT_THROW(ex.twist_inverse(vec({0.0}), vec({-1.0})), Error);
}

TEST(Coupling, ValidationErrors) {
  EXPECT_THROW(make_euclidean(2, 0.0), Error);
  EXPECT_THROW(make_right_bregman(1, 1.0, make_kernel("boltzmann_shannon")), Error);
  EXPECT_THROW(make_anisotropic(1, 1.0, make_kernel("kl_generator")), Error);
  EXPECT_THROW(make_entropic(1, 1.0, make_kernel("cosh")), Error);
  EXPECT_THROW(parse_coupling_family("torus"), Error);
  const Coupling e = make_euclidean(2, 1.0);
  EXPECT_THROW(e.eval(vec({1.0}), vec({1.0, 2.0})), Error);
  const Coupling ent = make_entropic(1, 1.0, make_kernel("kl_generator"));
  EXPECT_THROW(ent.eval(vec({1.0}), vec({0.0})), Error);
  EXPECT_THROW(ent.eval(vec({-1.0}), vec({1.0})), Error);
  EXPECT_THROW(ent.grad_x(vec({0.0}), vec({1.0})), Error);
  try {
    ent.eval(vec({1.0}), vec({-1.0}));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::kDomainViolation);
  }
}
