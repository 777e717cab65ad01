#include <gtest/gtest.h>

#include "support.hpp"

using namespace dct;

TEST(Eval, ExactRational) {
  EvalPoint p;
  p.vars[uvar(0, 0)] = mpq_class(1, 2);
  p.vars[uvar(1, 0)] = 3;
  p.syms["alpha"] = mpq_class(-2, 3);
  p.syms["m"] = 3;
  p.syms["n"] = 0;
  EXPECT_EQ(ExactEvaluator{p}(parse("u[0,0]*u[1,0] + alpha")), mpq_class(5, 6));
  EXPECT_EQ(ExactEvaluator{p}(parse("parity(1,0,0)*u[1,0]")), -3);
  EXPECT_EQ(ExactEvaluator{p}(parse("2^(-m)")), mpq_class(1, 8));
  EXPECT_THROW(ExactEvaluator{p}(parse("1/(u[1,0] - 3)")), DomainError);
}

TEST(Eval, ZeroTestIdentities) {
  EXPECT_TRUE(is_zero(parse("(u[0,0] + u[1,0])^2 - u[0,0]^2 - 2*u[0,0]*u[1,0] - u[1,0]^2")));
  EXPECT_TRUE(is_zero(parse("1/(u[0,0] - 1) - 1/(u[0,0] + 1) - 2/(u[0,0]^2 - 1)")));
  EXPECT_TRUE(is_zero(parse("ln(u[0,0]^2 + 1) + ln(u[1,0]^2 + 2) - ln((u[0,0]^2 + 1)*(u[1,0]^2 + 2))")));
  EXPECT_TRUE(is_zero(parse("sqrt(u[0,0]^2 + 1)^2 - u[0,0]^2 - 1")));
}

TEST(Eval, NonzeroCarriesWitness) {
  ZeroTestReport r = zero_test(parse("u[0,0]*u[1,0] - u[1,0]*u[0,0] + 1/(10^30 + u[0,0]^2)"), {}, 2);
  EXPECT_FALSE(r.zero);
  ASSERT_EQ(r.witness_points.size(), 2u);
  for (auto& p : r.witness_points) EXPECT_NE(ExactEvaluator{p}(parse("1/(10^30 + u[0,0]^2)")), 0);
}

TEST(Eval, FloatPath) {
  ZeroTestConfig cfg;
  cfg.rational_mode = false;
  EXPECT_TRUE(is_zero(parse("ln(2*u[0,0]^2 + 2) - ln(2) - ln(u[0,0]^2 + 1)"), cfg));
  EXPECT_FALSE(is_zero(parse("ln(u[0,0]^2 + 1) + 10^(-30)"), cfg));
}

TEST(Eval, PrecisionMatters) {
  Expr e = parse("ln(u[0,0]^2 + 1 + 10^(-60)) - ln(u[0,0]^2 + 1)");
  ZeroTestConfig lo, hi;
  lo.float_precision_bits = 64;
  hi.relative_tolerance = mpq_class(mpz_class(1), mpz_class("1" + std::string(70, '0')));
  EXPECT_TRUE(is_zero(e, lo));
  EXPECT_FALSE(is_zero(e, hi));
}

TEST(Eval, SeedsAreReproducible) {
  Expr e = parse("u[0,0] - u[1,1] + alpha");
  ZeroTestConfig a, b;
  a.seed = b.seed = 77;
  auto ra = zero_test(e, a, 1), rb = zero_test(e, b, 1);
  ASSERT_FALSE(ra.zero);
  EXPECT_EQ(ra.witness_values, rb.witness_values);
}

TEST(Eval, DependsOnAndRatio) {
  Expr e = parse("u[0,0]*(u[1,0] - u[1,0]) + u[0,1]");
  EXPECT_FALSE(depends_on(e, uvar(1, 0)));
  EXPECT_TRUE(depends_on(e, uvar(0, 1)));
  auto c = constant_ratio(parse("-2*u[0,0] + 4*u[1,1]"), parse("u[0,0] - 2*u[1,1]"));
  ASSERT_TRUE(c);
  EXPECT_EQ(*c, -2);
  Expr a = parse("u[0,0]^2"), b = parse("u[0,0]");
  auto k = constant_ratio(a, b);
  ASSERT_TRUE(k);
  EXPECT_FALSE(is_zero(a - Expr(*k) * b));
}

TEST(Eval, SamplerSetsLatticeSymbols) {
  Sampler s(5);
  EvalPoint p = s.draw(parity(1, 1, 0) * u(0, 0));
  EXPECT_TRUE(p.syms.count("m"));
  EXPECT_TRUE(p.syms.count("n"));
  EXPECT_TRUE(p.vars.count(uvar(0, 0)));
}
