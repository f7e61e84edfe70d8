#include <gtest/gtest.h>

#include <cmath>

#include "phienv/derivatives.hpp"

using namespace phienv;

TEST(Derivatives, QuadEuclideanDeskValues) {
  const TestFunction g = make_quad(1);
  const Coupling c = make_euclidean(1, 1.0);
  const Vector y = vec({2.0});
  EXPECT_NEAR(envelope_gradient(g, c, y)[0], -1.0, 1e-10);
  EXPECT_NEAR(envelope_gradient_table(g, c, y)[0], -1.0, 1e-10);
  EXPECT_NEAR(envelope_gradient_fd(g, c, y)[0], -1.0, 1e-6);
  EXPECT_NEAR(prox_jacobian_fd(g, c, y)(0, 0), 0.5, 1e-6);
  const ProxJacobianParts parts = prox_jacobian_parts(g, c, y);
  EXPECT_NEAR(parts.M(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(parts.z[0], 2.0, 1e-9);
  EXPECT_NEAR(parts.D(0, 0), 0.5, 1e-6);
  EXPECT_NEAR(parts.J(0, 0), 0.5, 1e-6);
  EXPECT_NEAR(envelope_hessian(g, c, y)(0, 0), -0.5, 1e-6);
  EXPECT_NEAR(envelope_hessian_fd(g, c, y)(0, 0), -0.5, 1e-4);
}

TEST(Derivatives, ZeroFunction) {
  const TestFunction g = make_zero(2);
  const Coupling c = make_euclidean(2, 0.6);
  const Vector y = vec({0.3, -1.1});
  EXPECT_LE(envelope_gradient(g, c, y).norm(), 1e-12);
  EXPECT_LE(envelope_gradient_fd(g, c, y).norm(), 1e-8);
  EXPECT_LE((prox_jacobian_fd(g, c, y) - Matrix::Identity(2, 2)).norm(), 1e-6);
  EXPECT_LE((prox_jacobian_formula(g, c, y) - Matrix::Identity(2, 2)).norm(), 1e-6);
  EXPECT_LE(envelope_hessian(g, c, y).norm(), 1e-6);
  EXPECT_LE(envelope_hessian_fd(g, c, y).norm(), 1e-6);
}

TEST(Derivatives, EntropicTableRow) {
  const TestFunction g = make_linear(1, vec({1.0}));
  const Coupling c = make_entropic(1, 1.0, make_kernel("kl_generator"));
  const double expected = std::exp(-1.0) - 1.0;
  EXPECT_NEAR(envelope_gradient(g, c, vec({1.0}))[0], expected, 1e-10);
  EXPECT_NEAR(envelope_gradient_table(g, c, vec({1.0}))[0], expected, 1e-10);
  // Closed-form envelope -gamma y (1 - e^{-c/gamma}) has derivative -(1 - e^{-1}).
  EXPECT_NEAR(envelope_gradient_fd(g, c, vec({1.0}))[0], expected, 1e-8);
}

TEST(Derivatives, TableRowsMatchGenericFormula) {
  struct Case {
    Coupling c;
    std::vector<double> ys;
  };
  const std::vector<Case> cases = {
      {make_euclidean(1, 0.7), {-1.0, 0.2, 1.5}},
      {make_left_bregman(1, 1.0, make_kernel("boltzmann_shannon")), {0.4, 1.0, 2.5}},
      {make_left_bregman(1, 0.6, make_kernel("quadratic")), {-1.0, 0.5}},
      {make_right_bregman(1, 0.9, make_kernel("cosh")), {-0.5, 0.8}},
      {make_anisotropic(1, 0.5, make_kernel("cosh")), {-1.0, 0.3, 1.2}},
      {make_entropic(1, 1.0, make_kernel("kl_generator")), {0.5, 1.0, 2.0}}};
  for (const auto& cs : cases)
    for (const char* id : {"quad", "shifted_quad", "huber", "linear"})
      for (double yv : cs.ys) {
        const TestFunction g = make_function(id, 1);
        const Vector y = vec({yv});
        EXPECT_LE((envelope_gradient_table(g, cs.c, y) - envelope_gradient(g, cs.c, y)).norm(), 1e-8)
            << id << " " << cs.c.name();
      }
  // left_bregman with quadratic h reproduces the euclidean row.
  const Coupling e = make_euclidean(1, 0.6);
  const Coupling lb = make_left_bregman(1, 0.6, make_kernel("quadratic"));
  EXPECT_NEAR(envelope_gradient_table(make_double_well(1), lb, vec({1.3}))[0],
              envelope_gradient_table(make_double_well(1), e, vec({1.3}))[0], 1e-10);
  EXPECT_THROW(envelope_gradient_table(make_quad(1), make_quadratic_transform(1), vec({0.0, 2.0})), Error);
}

TEST(Derivatives, RightBregmanBoltzmannRowDeskValue) {
  // h = boltzmann_shannon lacks dom h = R, so the row is checked through the
  // formula (grad h(P) - grad h(y))/gamma with P computed by the solver on a
  // left Bregman coupling is not applicable; use the generic grad_y instead.
  const Kernel h = make_kernel("boltzmann_shannon");
  const double P = 0.6, y = 1.0, gamma = 1.0;
  const double row = (h.dpsi(P) - h.dpsi(y)) / gamma;
  const double generic = -(h.dpsi(y) - h.dpsi(P)) / gamma;
  EXPECT_NEAR(row, generic, 1e-15);
  EXPECT_THROW(make_right_bregman(1, 1.0, h), Error);
}

TEST(Derivatives, GradientMatchesFiniteDifferences) {
  const std::vector<Coupling> cs = {make_euclidean(2, 0.5), make_anisotropic(2, 0.5, make_kernel("cosh")),
                                    make_left_bregman(2, 0.5, make_kernel("boltzmann_shannon")),
                                    make_right_bregman(2, 0.4, make_kernel("cosh")),
                                    make_entropic(2, 1.0, make_kernel("kl_generator"))};
  for (const auto& c : cs)
    for (const char* id : {"shifted_quad", "double_well", "huber"}) {
      const TestFunction g = make_function(id, 2);
      const Vector y = c.y_domain()[0].lo == 0.0 ? vec({0.7, 1.4}) : vec({0.9, -0.6});
      const ProxResult r = prox(g, c, y);
      if (!r.single_valued()) continue;
      const Vector a = envelope_gradient(g, c, y);
      const DiffReport d = compare(a, envelope_gradient_fd(g, c, y), 1e-5, 0.0, ErrorScale::kMixed);
      EXPECT_TRUE(d.passed) << id << " " << c.name() << " err " << d.rel_err;
    }
}

TEST(Derivatives, JacobianFormulaNonCommuting) {
  // shifted_quad has a tridiagonal Hessian; left_bregman(boltzmann) gives a
  // diagonal non-scalar M, so M and the scaled-prox Jacobian do not commute.
  const TestFunction g = make_shifted_quad(2);
  const Coupling c = make_left_bregman(2, 0.8, make_kernel("boltzmann_shannon"));
  const Vector y = vec({0.6, 2.2});
  const ProxJacobianParts p = prox_jacobian_parts(g, c, y);
  ASSERT_GT((p.M * p.D - p.D * p.M).norm(), 1e-3);
  const Matrix fd = prox_jacobian_fd(g, c, y);
  EXPECT_TRUE(compare(p.J, fd, 1e-4, 0.0).passed);
  // The reading with D in Jacobian orientation disagrees with the oracle.
  const Matrix literal = p.M * p.D * c.hess(p.xbar, y).xy;
  EXPECT_FALSE(compare(literal, fd, 1e-4, 0.0).passed);
  // Implicit-function oracle: (hess g - hess_xx)^{-1} hess_xy.
  const HessianBlocks H = c.hess(p.xbar, y);
  const Matrix ift = (g.hess(p.xbar) - H.xx).ldlt().solve(H.xy);
  EXPECT_LE((p.J - ift).norm() / ift.norm(), 1e-5);
}

TEST(Derivatives, DoubleWellBasin) {
  const TestFunction g = make_double_well(1);
  const Coupling c = make_euclidean(1, 0.05);
  const Vector y = vec({1.1});
  const Vector x = prox(g, c, y).point();
  const double ift = 1.0 / (1.0 + 0.05 * (12.0 * x[0] * x[0] - 4.0));
  const double fd = prox_jacobian_fd(g, c, y)(0, 0);
  EXPECT_GT(fd, 0.0);
  EXPECT_LT(fd, 1.0);
  EXPECT_NEAR(fd, ift, 1e-6);
  EXPECT_NEAR(prox_jacobian_formula(g, c, y)(0, 0), fd, 1e-4 * fd);
  EXPECT_NEAR(envelope_gradient_fd(g, c, y)[0], envelope_gradient(g, c, y)[0], 1e-5);
  const double h = envelope_hessian(g, c, y)(0, 0);
  EXPECT_NEAR(envelope_hessian_fd(g, c, y)(0, 0), h, 1e-3 * std::abs(h));
}

TEST(Derivatives, HessianOrientationQuadraticTransform) {
  // m = n + 1: only hess_xy^T J + hess_yy is dimensionally valid.
  const TestFunction g = make_quad(1);
  const Coupling c = make_quadratic_transform(1);
  const Vector y = vec({0.8, 1.5});
  const Matrix H = envelope_hessian(g, c, y, {}, JacobianSource::kFiniteDifference);
  ASSERT_EQ(H.rows(), 2);
  ASSERT_EQ(H.cols(), 2);
  const Matrix fd = envelope_hessian_fd(g, c, y);
  EXPECT_TRUE(compare(H, fd, 1e-3, 0.0).passed) << H << "\n" << fd;
  // Closed form: g^Phi(v, r) = v^2 / (2 (1 + r)).
  const double v = 0.8, r = 1.5;
  Matrix exact(2, 2);
  exact << 1.0 / (1 + r), -v / ((1 + r) * (1 + r)), -v / ((1 + r) * (1 + r)), v * v / std::pow(1 + r, 3);
  EXPECT_LE((H - exact).norm(), 1e-6);
  EXPECT_LE((envelope_hessian(g, c, y) - exact).norm(), 1e-6);
}

TEST(Derivatives, EuclideanHessianIdentity) {
  const TestFunction g = make_shifted_quad(2);
  const Coupling c = make_euclidean(2, 0.4);
  const Vector y = vec({0.3, -0.8});
  const Matrix J = prox_jacobian_formula(g, c, y);
  const Matrix H = envelope_hessian(g, c, y);
  EXPECT_LE((H - (J - Matrix::Identity(2, 2)) / 0.4).norm(), 1e-8);
  EXPECT_LE((H - H.transpose()).norm(), 1e-6);
}

TEST(Derivatives, Errors) {
  const Coupling c = make_euclidean(1, 1.0);
  EXPECT_THROW(envelope_gradient(make_double_well(1), c, vec({0.0})), Error);
  // gamma = 1 > 1/r = 1/4 for double_well: eigen condition fails.
  EXPECT_THROW(prox_jacobian_formula(make_double_well(1), c, vec({2.0})), Error);
  EXPECT_THROW(prox_jacobian_formula(make_neg_abs(1), c, vec({2.0})), Error);
  EXPECT_THROW(compare(Matrix::Zero(1, 2), Matrix::Zero(2, 1), 1.0, 0.0), Error);
  // entropic stencil shrinks near the boundary of Y.
  double used = 0.0;
  const Coupling ent = make_entropic(1, 1.0, make_kernel("kl_generator"));
  envelope_gradient_fd(make_linear(1), ent, vec({1e-6}), {}, std::nullopt, &used);
  EXPECT_LT(used, 1e-6);
}
