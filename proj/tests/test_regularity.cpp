#include <gtest/gtest.h>

#include <cmath>

#include "phienv/regularity.hpp"
#include "phienv/subdiff.hpp"

using namespace phienv;

namespace {

// Engineered coupling with hess_xy = 0 in its second row: Phi(x, y) = x1 y1 - (x1^2 + x2^2)/2.
class DegenerateModel final : public CouplingModel {
 public:
  CouplingFamily family() const override { return CouplingFamily::kCustom; }
  std::size_t dim_x() const override { return 2; }
  std::size_t dim_y() const override { return 2; }
  Box x_domain() const override { return Box::uniform(2, Interval::real_line()); }
  Box y_domain() const override { return Box::uniform(2, Interval::real_line()); }
  double eval(const Vector& x, const Vector& y) const override { return x[0] * y[0] - 0.5 * x.squaredNorm(); }
  Vector grad_x(const Vector& x, const Vector& y) const override { return vec({y[0] - x[0], -x[1]}); }
  Vector grad_y(const Vector& x, const Vector&) const override { return vec({x[0], 0.0}); }
  HessianBlocks hess(const Vector&, const Vector&) const override {
    Matrix xy = Matrix::Zero(2, 2);
    xy(0, 0) = 1.0;
    return {-Matrix::Identity(2, 2), xy, Matrix::Zero(2, 2)};
  }
};

}  // namespace

TEST(Regularity, TwistChecks) {
  const std::vector<Vector> grid = tensor_grid(Box::closed_cube(1, -2, 2), 41);
  EXPECT_TRUE(check_twist(make_euclidean(1, 1.0), vec({0.0}), grid).holds());
  EXPECT_TRUE(check_twist(make_exp_coupling(), vec({0.0}), grid).holds());
  EXPECT_THROW(check_twist(make_quadratic_transform(1), vec({0.0}), grid), Error);
  const Coupling deg = make_custom(std::make_shared<DegenerateModel>());
  const std::vector<Vector> grid2 = tensor_grid(Box::closed_cube(2, -1, 1), 5);
  EXPECT_FALSE(check_twist(deg, vec({0.0, 0.0}), grid2).holds());
}

TEST(Regularity, TwistHoldsForStrongTwistFamilies) {
  const Box sym = Box::closed_cube(1, -2, 2), pos = Box::closed_cube(1, 0.2, 3);
  struct C {
    Coupling c;
    Box ys;
    Vector x;
  };
  const std::vector<C> cs = {{make_euclidean(1, 0.5), sym, vec({0.3})},
                             {make_left_bregman(1, 1.0, make_kernel("boltzmann_shannon")), pos, vec({1.2})},
                             {make_right_bregman(1, 1.0, make_kernel("cosh")), sym, vec({-0.4})},
                             {make_anisotropic(1, 0.7, make_kernel("cosh")), sym, vec({0.1})},
                             {make_entropic(1, 1.0, make_kernel("kl_generator")), pos, vec({0.8})}};
  for (const auto& c : cs) EXPECT_TRUE(check_twist(c.c, c.x, tensor_grid(c.ys, 101)).holds()) << c.c.name();
}

TEST(Regularity, LocalStrongTwist) {
  const RegularityReport e = check_local_strong_twist(make_euclidean(2, 0.5), vec({0, 0}), vec({1, 1}));
  EXPECT_TRUE(e.holds());
  EXPECT_NEAR(e.worst_margin, 2.0, 1e-12);
  const Coupling lb = make_left_bregman(1, 2.0, make_kernel("boltzmann_shannon"));
  const RegularityReport b = check_local_strong_twist(lb, vec({1.0}), vec({0.5}));
  EXPECT_TRUE(b.holds());
  EXPECT_NEAR(b.worst_margin, (1.0 / 0.5) / 2.0, 1e-12);  // h''(y)/gamma
  const Coupling deg = make_custom(std::make_shared<DegenerateModel>());
  EXPECT_FALSE(check_local_strong_twist(deg, vec({0, 0}), vec({0, 0})).holds());
}

TEST(Regularity, PhiProxRegularityExamples) {
  const Coupling e1 = make_euclidean(1, 1.0);
  const TestFunction quad = make_quad(1);
  const Vector xq = vec({0.4});
  const RegularityReport q = check_phi_prox_regularity(quad, e1, xq, smooth_phi_gradient(quad, e1, xq), 0.5);
  EXPECT_TRUE(q.holds()) << q.worst_margin;

  const TestFunction dw = make_double_well(1);
  const Coupling e05 = make_euclidean(1, 0.05);
  const RegularityReport d = check_phi_prox_regularity(dw, e05, vec({1.0}), vec({1.0}), 0.1);
  EXPECT_TRUE(d.holds()) << d.worst_margin;

  const RegularityReport na =
      check_phi_prox_regularity(make_neg_abs(1), e1, vec({0.0}), vec({0.0}), 0.1);
  EXPECT_EQ(na.verdict, Verdict::kPreconditionFailed);

  // Non-strict mode on a point where the strict version fails.
  const RegularityReport bad = check_phi_prox_regularity(dw, e1, vec({0.0}), vec({0.0}), 0.1);
  EXPECT_EQ(bad.verdict, Verdict::kFails);
  RegularityConfig loose;
  loose.strict = false;
  EXPECT_EQ(check_phi_prox_regularity(dw, e1, vec({0.0}), vec({0.0}), 0.1, loose).verdict, Verdict::kFails);
}

TEST(Regularity, PhiProxRegularityAtKink) {
  // abs at 0 with |v̄| < 1: x = 0 carries a whole interval of subgradients.
  const Coupling e1 = make_euclidean(1, 1.0);
  const RegularityReport r = check_phi_prox_regularity(make_abs(1), e1, vec({0.0}), vec({0.3}), 0.1);
  EXPECT_TRUE(r.holds()) << r.worst_margin;
  // v̄ outside [-1, 1] is not a subgradient.
  EXPECT_EQ(check_phi_prox_regularity(make_abs(1), e1, vec({0.0}), vec({1.5}), 0.1).verdict,
            Verdict::kPreconditionFailed);
}

TEST(Regularity, WithoutTwistInverse) {
  // quadratic transform: y is recovered by solving grad_x Phi(x, y) = v.
  const Coupling qt = make_quadratic_transform(1);
  const TestFunction g = make_quad(1);
  // x̄ = 0.5, r = 2: v̄ = g'(x̄) = 0.5 = v - r x̄ -> v = 1.5.
  const RegularityReport r = check_phi_prox_regularity(g, qt, vec({0.5}), vec({1.5, 2.0}), 0.1);
  EXPECT_TRUE(r.holds()) << r.note << " " << r.worst_margin;
  EXPECT_GT(r.samples_checked, 0u);
}

TEST(Regularity, StrictMonotonicity) {
  const Coupling e = make_euclidean(1, 0.5);
  const TestFunction quad = make_quad(1);
  const Vector x = vec({0.2});
  const RegularityReport q = check_strict_monotonicity(quad, e, x, smooth_phi_gradient(quad, e, x), 0.1);
  EXPECT_TRUE(q.holds());
  EXPECT_GE(q.samples_checked, 100u);
  // For quad/euclidean the quantity is -(1/gamma)(x - x')(y - y') with y = (1 + gamma) x.
  EXPECT_NEAR(q.worst_margin, (1.0 + 0.5) / 0.5, 1e-6);

  // -quad with gamma = 2: objective concave, y = (1 - gamma) x decreasing in x.
  const TestFunction nq = make_neg_quad(1);
  const Coupling e2 = make_euclidean(1, 2.0);
  EXPECT_EQ(check_strict_monotonicity(nq, e2, vec({0.0}), vec({0.0}), 0.1).verdict, Verdict::kFails);

  // A filter that leaves too few pairs is not reported as a pass.
  RegularityConfig tiny;
  tiny.x_samples = 2;  // at most 1 + 5 * 2 points
  EXPECT_EQ(check_strict_monotonicity(quad, e, x, smooth_phi_gradient(quad, e, x), 0.1, tiny).verdict,
            Verdict::kInsufficientSamples);
}

TEST(Regularity, ProxSingleValued) {
  EXPECT_TRUE(check_prox_single_valued(make_quad(1), make_euclidean(1, 1.0), vec({0.3}), 0.5, 10).holds());
  const RegularityReport dw = check_prox_single_valued(make_double_well(1), make_euclidean(1, 1.0), vec({0.0}), 0.1, 10);
  EXPECT_FALSE(dw.holds());
  EXPECT_DOUBLE_EQ(dw.worst_margin, -1.0);
  EXPECT_TRUE(check_prox_single_valued(make_double_well(1), make_euclidean(1, 0.05), vec({1.0}), 0.5, 10).holds());
}

TEST(Regularity, EigenCondition) {
  // euclidean: M = gamma I, condition gamma < 1/r.
  const RegularityReport a = check_eigen_condition(4.0, make_euclidean(2, 0.2), vec({0, 0}), vec({0, 0}));
  EXPECT_TRUE(a.holds());
  EXPECT_NEAR(a.worst_margin, 0.25 - 0.2, 1e-12);
  EXPECT_FALSE(check_eigen_condition(4.0, make_euclidean(2, 0.3), vec({0, 0}), vec({0, 0})).holds());
  EXPECT_TRUE(check_eigen_condition(0.0, make_euclidean(1, 100.0), vec({0}), vec({0})).holds());
  // anisotropic with sigma-strongly convex phi: M <= (gamma / sigma) I.
  const Coupling an = make_anisotropic(1, 0.5, make_kernel("quartic_quadratic", {1.0, 2.0}));
  const RegularityReport b = check_eigen_condition(0.0, an, vec({0.7}), vec({-0.1}));
  EXPECT_LE(1.0 / (-an.hess(vec({0.7}), vec({-0.1})).xx(0, 0)), 0.5 / 2.0 + 1e-12);
  EXPECT_TRUE(b.holds());
  // quadratic transform with r <= 0: hess_xx = -r >= 0.
  EXPECT_EQ(check_eigen_condition(1.0, make_quadratic_transform(1), vec({0}), vec({0.5, -1.0})).verdict,
            Verdict::kStructureViolation);
  EXPECT_EQ(check_eigen_condition(1.0, make_quadratic_transform(1), vec({0}), vec({0.5, 0.0})).verdict,
            Verdict::kStructureViolation);
}

TEST(Regularity, EpsilonSweep) {
  const TestFunction dw = make_double_well(1);
  const Coupling e = make_euclidean(1, 0.05);
  const auto best = sweep_epsilon([&](double eps) { return check_phi_prox_regularity(dw, e, vec({1.0}), vec({1.0}), eps); });
  ASSERT_TRUE(best.has_value());
  EXPECT_DOUBLE_EQ(*best, 0.5);
  const Coupling e1 = make_euclidean(1, 1.0);
  EXPECT_FALSE(sweep_epsilon([&](double eps) {
                 return check_phi_prox_regularity(dw, e1, vec({0.0}), vec({0.0}), eps);
               }).has_value());
}
