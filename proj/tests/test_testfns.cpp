#include <gtest/gtest.h>

#include <cmath>

#include "phienv/sampling.hpp"
#include "phienv/testfns.hpp"

using namespace phienv;

TEST(TestFunctions, DeskValues) {
  EXPECT_DOUBLE_EQ(make_quad(2).value(vec({3, 4})), 12.5);
  const TestFunction dw = make_double_well(1);
  EXPECT_DOUBLE_EQ(dw.value(vec({1})), 0.0);
  EXPECT_DOUBLE_EQ(dw.value(vec({-1})), 0.0);
  EXPECT_DOUBLE_EQ(dw.value(vec({0})), 1.0);
  EXPECT_DOUBLE_EQ(make_neg_abs(1).value(vec({0})), 0.0);
  EXPECT_DOUBLE_EQ(make_const(3).value(vec({1, 2, 3})), 5.0);
  EXPECT_TRUE(std::isinf(make_indicator_box(2).value(vec({0.0, 1.5}))));
}

TEST(TestFunctions, CatalogCoversRequiredIds) {
  for (const char* id : {"quad", "shifted_quad", "abs", "neg_abs", "double_well", "const_rho", "linear",
                         "indicator_box", "huber"}) {
    const TestFunction f = make_function(id, 2);
    EXPECT_EQ(f.id, id);
    EXPECT_TRUE(f.search_box.bounded());
  }
  EXPECT_THROW(make_function("banana", 1), Error);
}

TEST(TestFunctions, GradientsMatchFiniteDifferences) {
  for (const auto& f : catalog(2)) {
    for (const auto& x : sample_box(Box::closed_cube(2, -0.9, 0.9), 60, 5)) {
      if (at_kink(f, x[0], 1e-4) || at_kink(f, x[1], 1e-4)) continue;
      Vector fd(2);
      for (Eigen::Index i = 0; i < 2; ++i) {
        const double h = 1e-6;
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        fd[i] = (f.value(xp) - f.value(xm)) / (2 * h);
      }
      EXPECT_LE((f.grad(x) - fd).norm(), 1e-5 * std::max(1.0, fd.norm())) << f.id;
    }
  }
}

TEST(TestFunctions, ConvexEntriesAreMidpointConvex) {
  for (const auto& f : catalog(2)) {
    if (!f.meta.convex) continue;
    const auto a = sample_box(f.search_box, 1000, 31);
    const auto b = sample_box(f.search_box, 1000, 32);
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double mid = f.value(0.5 * (a[k] + b[k]));
      const double avg = 0.5 * (f.value(a[k]) + f.value(b[k]));
      if (std::isinf(avg)) continue;
      EXPECT_LE(mid, avg + 1e-9) << f.id;
    }
  }
}

TEST(TestFunctions, HypoconvexModulusHolds) {
  // g + (rho/2)||.||^2 midpoint convex with the declared rho.
  for (const char* id : {"double_well", "neg_quad"}) {
    const TestFunction f = make_function(id, 1);
    const double rho = f.meta.hypoconvex_modulus;
    auto shifted = [&](const Vector& x) { return f.value(x) + 0.5 * rho * x.squaredNorm(); };
    const Box box = Box::closed_cube(1, -2, 2);
    const auto a = sample_box(box, 1000, 41);
    const auto b = sample_box(box, 1000, 42);
    for (std::size_t k = 0; k < a.size(); ++k)
      EXPECT_LE(shifted(0.5 * (a[k] + b[k])), 0.5 * (shifted(a[k]) + shifted(b[k])) + 1e-9) << id;
  }
  // rho = 2 (adding ||.||^2) is not enough for double_well near 0.
  const TestFunction dw = make_double_well(1);
  auto weak = [&](double t) { return dw.value(vec({t})) + t * t; };
  EXPECT_GT(weak(0.0), 0.5 * (weak(-0.2) + weak(0.2)));
}

TEST(TestFunctions, LowerSemicontinuityBySampling) {
  for (const auto& f : catalog(1)) {
    for (double x0 : {-1.0, 0.0, 0.5, 1.0}) {
      const double v0 = f.value(vec({x0}));
      // liminf along x0 +- 10^-k stays above value(x0).
      for (double s : {-1.0, 1.0}) {
        double liminf = kInf;
        for (int k = 8; k <= 12; ++k) liminf = std::min(liminf, f.value(vec({x0 + s * std::pow(10.0, -k)})));
        EXPECT_GE(liminf, v0 - 1e-6) << f.id;
      }
    }
  }
}

TEST(TestFunctions, OneSidedPartialsAtKink) {
  const auto [l, r] = one_sided_partials(make_abs(1), vec({0.0}), 0);
  EXPECT_NEAR(l, -1.0, 1e-12);
  EXPECT_NEAR(r, 1.0, 1e-12);
  const auto [nl, nr] = one_sided_partials(make_neg_abs(1), vec({0.0}), 0);
  EXPECT_GT(nl, nr);  // concave kink: no classical subgradient
}
