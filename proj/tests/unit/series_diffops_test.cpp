#include <gtest/gtest.h>

#include "support.hpp"

using namespace dct;

TEST(Series, ExpCoefficientsAreInverseFactorials) {
  EpsSeries a(5);
  a[1] = Expr(1);
  EpsSeries e = series_exp(a);
  mpq_class f = 1;
  for (int k = 0; k <= 5; ++k) {
    if (k > 0) f /= k;
    EXPECT_TRUE(equal(e[k], Expr(f))) << k;
  }
}

TEST(Series, LogInvertsExp) {
  EpsSeries a(4);
  a[1] = u(0, 0);
  a[2] = parse("alpha*u[1,0]");
  a[3] = parse("1/u[0,1]");
  EpsSeries e = series_exp(a);
  e[0] = Expr(0);
  EpsSeries l = series_log1p(e);
  for (int k = 0; k <= 4; ++k) EXPECT_TRUE(is_zero(l[k] - a[k])) << k;
}

TEST(Series, LogOfProductIsSum) {
  EpsSeries a(4), b(4);
  a[1] = u(0, 0);
  a[3] = u(1, 0);
  b[1] = u(0, 1);
  b[2] = Expr(3);
  EpsSeries one = series_constant(Expr(1), 4);
  EpsSeries prod = series_mul(series_add(one, a), series_add(one, b));
  prod[0] = Expr(0);
  EpsSeries lhs = series_log1p(prod), rhs = series_add(series_log1p(a), series_log1p(b));
  for (int k = 0; k <= 4; ++k) EXPECT_TRUE(is_zero(lhs[k] - rhs[k])) << k;
}

TEST(Series, LogNeedsZeroConstantTerm) {
  EXPECT_THROW(series_log1p(series_constant(Expr(1), 3)), NonzeroConstantTerm);
}

TEST(DiffOps, DivergenceOfShiftedDifference) {
  Expr F = parse("u[0,0]*u[0,1]"), G = parse("ln(u[1,0])");
  EXPECT_TRUE(is_zero(divergence(F, G) - parse("u[1,0]*u[1,1] - u[0,0]*u[0,1] + ln(u[1,1]) - ln(u[1,0])")));
}

TEST(DiffOps, EulerOfQuadratic) {
  // E(u00 u10) = u10 + u[-1,0]
  EXPECT_TRUE(is_zero(euler(parse("u[0,0]*u[1,0]")) - parse("u[1,0] + u[-1,0]")));
  EXPECT_TRUE(is_zero(euler(parse("u[0,0]^2/2")) - u(0, 0)));
}

TEST(DiffOps, EulerDeltaAndOmega) {
  EXPECT_TRUE(is_zero(euler_delta(parse("D[0,0]*u[1,0] + D[1,0]*u[0,0]")) - parse("u[1,0] + u[-1,0]")));
  EXPECT_TRUE(is_zero(euler_omega(parse("w[0,0]*w[0,1]")) - parse("w[0,1] + w[0,-1]")));
  EXPECT_THROW(euler_omega(parse("w[1,0]")), DomainError);
}

TEST(DiffOps, GateauxIsDirectionalDerivative) {
  Expr P = parse("u[0,0]^2*u[1,0]"), Q = parse("u[0,1]");
  EXPECT_TRUE(is_zero(gateaux(P, Q) - parse("2*u[0,0]*u[1,0]*u[0,1] + u[0,0]^2*u[1,1]")));
}

TEST(DiffOps, AdjointOfShift) {
  // P = u[1,0]: D_P = S_m, D*_P = S_m^-1
  EXPECT_TRUE(equal(adjoint_apply(u(1, 0), parse("alpha*u[0,0]")), parse("alpha*u[-1,0]")));
}
