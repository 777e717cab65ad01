#include <gtest/gtest.h>

#include "support.hpp"

using namespace dct;

namespace {

Equation kov() { return load_equation(fixture("dpkdv_kov.toml")).eq; }

}  // namespace

TEST(Recon, OmegaSlotsRoundTrip) {
  Equation eq = kov();
  Expr q = parse("u[1,0]*u[2,1] + u[2,2]/u[0,0]");
  Expr slots = to_omega_slots(pullback(q, eq), eq.kov);
  EXPECT_TRUE(has_family(slots, Family::W));
  // row 0 goes through the inverse, so compare on solutions
  for (auto& v : vars_of(slots, Family::U)) EXPECT_NE(v.dm, 0);
  EXPECT_TRUE(is_zero(pullback(omega_slots_to_points(slots, eq.kov), eq) - pullback(q, eq)));
}

TEST(Recon, HomotopyReproducesRoot) {
  Equation eq = kov();
  Expr r = KeyValueFile::load(fixture("recon_c4.toml")).expr("root");
  Expr SmF = reconstruct_F_dependence(r);
  EXPECT_TRUE(reproduces_root(SmF, r));
}

TEST(Recon, HomotopyDegenerateIsReported) {
  // homogeneous of degree -1 in the slot: invisible from base 0
  Expr r = parse("1/w[0,0]");
  EXPECT_THROW(reconstruct_F_dependence(r), DomainError);
  Expr SmF = reconstruct_F_dependence(r, Expr(1));
  EXPECT_TRUE(is_zero(euler_omega(SmF) - r));
}

TEST(Recon, DirectMethodFourthLaw) {
  Equation eq = kov();
  auto f = KeyValueFile::load(fixture("recon_c4.toml"));
  Ansatz a = load_ansatz(KeyValueFile::load(fixture("ansatz_c4.toml")));
  DensityPair d = reconstruct_densities(eq, f.expr("root"), a);
  EXPECT_TRUE(verify_claw(eq, d));
  DensityPair stated = load_densities(fixture("recon_c4.toml"), eq);
  EXPECT_TRUE(equivalent(eq, d, stated).equivalent);
}

TEST(Recon, DirectMethodSixthLaw) {
  Equation eq = kov();
  auto f = KeyValueFile::load(fixture("recon_c6.toml"));
  Ansatz a = load_ansatz(KeyValueFile::load(fixture("ansatz_c6.toml")));
  DensityPair d = reconstruct_densities(eq, f.expr("root"), a);
  EXPECT_TRUE(verify_claw(eq, d));
  EXPECT_TRUE(equivalent(eq, d, load_densities(fixture("recon_c6.toml"), eq)).equivalent);
}

TEST(Recon, EmptyAnsatzIsInsufficient) {
  Equation eq = kov();
  Expr r = KeyValueFile::load(fixture("recon_c4.toml")).expr("root");
  EXPECT_THROW(reconstruct_densities(eq, r, Ansatz{}), AnsatzInsufficient);
}

TEST(Recon, RequiresKovalevskayaForm) {
  Equation q = load_equation(fixture("dpkdv_quad.toml")).eq;
  EXPECT_THROW(reconstruct_densities(q, parse("w[0,0]"), Ansatz{}), NotKovalevskaya);
}

TEST(Recon, OdeFirstIntegral) {
  Problem p = load_equation(fixture("ode.toml"));
  auto f = KeyValueFile::load(fixture("ode_integral.toml"));
  Expr phi = f.expr("phi");
  EXPECT_TRUE(ode_is_first_integral(p.ode_eq, phi));
  EXPECT_TRUE(is_zero(ode_root(p.ode_eq, phi) - f.expr("root")));
  Expr rec = reconstruct_ode_first_integral(p.ode_eq, f.expr("root"));
  EXPECT_TRUE(ode_is_first_integral(p.ode_eq, rec));
  // equal up to a constant
  Expr diff = rec - phi;
  EXPECT_FALSE(depends_on(diff, uvar(0, 0)));
  EXPECT_FALSE(depends_on(diff, uvar(1, 0)));
}

TEST(Recon, OdeCharacteristic) {
  Problem p = load_equation(fixture("ode.toml"));
  auto f = KeyValueFile::load(fixture("ode_integral.toml"));
  EXPECT_TRUE(ode_characteristic_check(p.ode_eq, f.expr("characteristic"), f.expr("phi")));
}

TEST(Recon, OdeNonRootIsRejected) {
  Problem p = load_equation(fixture("ode.toml"));
  EXPECT_THROW(reconstruct_ode_first_integral(p.ode_eq, parse("u[1,0]^3")), std::exception);
}

TEST(Recon, SummationOverParityAndPowers) {
  Expr H = parse("n^2 + parity(0,1,0)");
  Expr h = solve_summation(H);
  EXPECT_TRUE(is_zero(ode_shift(h, 1) - h - H));
}
