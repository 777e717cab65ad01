#include <gtest/gtest.h>

#include "support.hpp"

using namespace dct;

TEST(Equations, LoadForms) {
  Problem k = load_equation(fixture("dpkdv_kov.toml"));
  EXPECT_FALSE(k.ode);
  EXPECT_TRUE(k.eq.is_kovalevskaya());
  EXPECT_EQ(k.eq.kov.K, 2);
  EXPECT_EQ(k.eq.kov.s, 1);
  Problem q = load_equation(fixture("dpkdv_quad.toml"));
  EXPECT_FALSE(q.eq.is_kovalevskaya());
  Problem o = load_equation(fixture("ode.toml"));
  EXPECT_TRUE(o.ode);
  EXPECT_EQ(o.ode_eq.K, 2);
}

TEST(Equations, BadFilesAreReported) {
  EXPECT_THROW(load_equation("/nonexistent.toml"), ProblemFileError);
  EXPECT_THROW(load_equation(KeyValueFile::parse("form = \"pentagon\"")), ProblemFileError);
  EXPECT_THROW(KeyValueFile::parse("omega = \"u[0,0]\"").expr("K"), ProblemFileError);
}

TEST(Equations, QuadCornersAgree) {
  EXPECT_TRUE(check_corners(load_equation(fixture("dpkdv_quad.toml")).eq.quad));
  EXPECT_TRUE(check_corners(load_equation(fixture("plv.toml")).eq.quad));
  QuadGraphPDE bad = load_equation(fixture("plv.toml")).eq.quad;
  bad.corners[0] = u(1, 1);
  EXPECT_FALSE(check_corners(bad));
}

TEST(Equations, ShearGivesKovalevskayaForm) {
  Equation q = load_equation(fixture("dpkdv_quad.toml")).eq;
  Equation k = load_equation(fixture("dpkdv_kov.toml")).eq;
  Equation t = to_kovalevskaya(q, LatticeTransform::shear(1));
  EXPECT_EQ(t.kov.K, k.kov.K);
  EXPECT_EQ(t.kov.s, k.kov.s);
  EXPECT_TRUE(is_zero(t.kov.omega - k.kov.omega));
  ASSERT_TRUE(t.kov.inverse);
  EXPECT_TRUE(is_zero(*t.kov.inverse - *k.kov.inverse));
}

TEST(Equations, TransformErrors) {
  Equation k = load_equation(fixture("dpkdv_kov.toml")).eq;
  EXPECT_THROW(to_kovalevskaya(k, LatticeTransform::shear(1)), UnsupportedTransform);
  LatticeTransform bad;
  bad.A = {{{2, 0}, {0, 1}}};
  EXPECT_THROW(relabel(u(0, 0), bad), UnsupportedTransform);
  EXPECT_THROW(pullback(u(0, 0), k, InitialDataSpec::cross()), NotReachable);
}

TEST(Equations, RelabelInverts) {
  Expr e = parse("m*u[1,0] + n*parity(1,0,1)*u[0,1] + parity(1,1,0)*u[2,-1]");
  for (int k : {-2, -1, 1, 3})
    for (auto t : {LatticeTransform::shear(k), LatticeTransform::shear_transpose(k)})
      EXPECT_TRUE(equal(relabel(relabel(e, t), t.inverse()), e)) << k;
}

TEST(Equations, InitialDataSets) {
  auto rows = InitialDataSpec::rows(2), cross = InitialDataSpec::cross(), st = InitialDataSpec::staircase();
  EXPECT_TRUE(rows.contains(uvar(1, -7)));
  EXPECT_FALSE(rows.contains(uvar(2, 0)));
  EXPECT_TRUE(cross.contains(uvar(-3, 0)));
  EXPECT_FALSE(cross.contains(uvar(1, 1)));
  EXPECT_TRUE(st.contains(uvar(-2, 1)));
  EXPECT_FALSE(st.contains(uvar(2, 1)));
}

TEST(Equations, BackwardPullbackUsesInverse) {
  Equation k = load_equation(fixture("dpkdv_kov.toml")).eq;
  Expr e = pullback(u(-1, 0), k);
  for (auto& v : e.vars()) EXPECT_TRUE(v.dm == 0 || v.dm == 1);
  // one step forward again returns the point
  Expr back = pullback(shift(k.kov.omega, -2, -1), k);
  EXPECT_TRUE(is_zero(substitute(back, {{uvar(-1, 0), e}}) - pullback(u(0, 0), k)));
}

TEST(Equations, LiftKeepsDeltaSlots) {
  Equation k = load_equation(fixture("dpkdv_kov.toml")).eq;
  Expr l = lift(u(2, 1), k, InitialDataSpec::rows(2));
  EXPECT_TRUE(is_zero(l - k.kov.omega - D(0, 0)));
}
