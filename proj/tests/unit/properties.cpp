#include <gtest/gtest.h>

#include "support.hpp"

using namespace dct;

constexpr int kCases = 200;

TEST(Property, EulerKillsDivergences) {
  for (int s = 0; s < kCases; ++s) {
    ExprGen g(1000 + s);
    Expr F = g.expr(), G = g.expr();
    EXPECT_TRUE(is_zero(euler(divergence(F, G)), fast_cfg(s))) << "seed " << s << ": F=" << F << " G=" << G;
  }
}

TEST(Property, EulerOfNonDivergence) {
  // u^2 terms without a partner are not differences
  int nonzero = 0;
  for (int s = 0; s < kCases; ++s) {
    ExprGen g(2000 + s);
    Expr P = g.expr(false) * u(0, 0) * u(0, 0);
    if (!is_zero(euler(P), fast_cfg(s))) ++nonzero;
  }
  EXPECT_GT(nonzero, kCases * 9 / 10);
}

TEST(Property, ShiftCommutesWithDifferentiation) {
  for (int s = 0; s < kCases; ++s) {
    ExprGen g(3000 + s);
    Expr f = g.expr();
    int i = g.pick(-1, 1), j = g.pick(-1, 1), a = g.pick(-2, 2), b = g.pick(-2, 2);
    Expr lhs = shift(differentiate(f, uvar(i, j)), a, b);
    Expr rhs = differentiate(shift(f, a, b), uvar(i + a, j + b));
    EXPECT_TRUE(is_zero(lhs - rhs, fast_cfg(s))) << "seed " << s << ": " << f;
  }
}

TEST(Property, EulerLeibniz) {
  for (int s = 0; s < kCases; ++s) {
    ExprGen g(4000 + s);
    Expr P = g.expr(), Q = g.expr();
    Expr lhs = euler(P * Q);
    Expr rhs = adjoint_apply(P, Q) + adjoint_apply(Q, P);
    EXPECT_TRUE(is_zero(lhs - rhs, fast_cfg(s))) << "seed " << s << ": P=" << P << " Q=" << Q;
  }
}

TEST(Property, GateauxAdjointPairing) {
  // Q D_P(R) - R D*_P(Q) is a divergence
  for (int s = 0; s < kCases; ++s) {
    ExprGen g(5000 + s);
    Expr P = g.expr(false), Q = g.expr(false), R = g.expr(false);
    Expr d = Q * gateaux(P, R) - R * adjoint_apply(P, Q);
    EXPECT_TRUE(is_zero(euler(d), fast_cfg(s))) << "seed " << s;
  }
}

namespace {
Equation dpkdv_kov() { return load_equation(fixture("dpkdv_kov.toml")).eq; }
}  // namespace

TEST(Property, SecondKindTrivialRootVanishes) {
  Equation eq = dpkdv_kov();
  for (int s = 0; s < kCases; ++s) {
    ExprGen g(6000 + s);
    Expr H = g.expr();
    DensityPair d{shift(H, 0, 1) - H, H - shift(H, 1, 0), InitialDataSpec::rows(2)};
    EXPECT_TRUE(is_zero(root(eq, d).expr, fast_cfg(s))) << "seed " << s << ": H=" << H;
  }
}

TEST(Property, FirstKindTrivialRootVanishes) {
  Equation eq = dpkdv_kov();
  for (int s = 0; s < kCases; ++s) {
    ExprGen g(7000 + s);
    // densities vanishing on solutions
    Expr A = g.expr(false), B = g.expr(false);
    Expr Del = eq.delta();
    DensityPair d{A * shift(Del, 0, -1), B * shift(Del, -1, -1), InitialDataSpec::rows(2)};
    EXPECT_TRUE(is_zero(root(eq, d).expr, fast_cfg(s))) << "seed " << s;
  }
}

TEST(Property, RootInvariantUnderTrivialDensities) {
  Equation eq = dpkdv_kov();
  DensityPair base = load_densities(fixture("claw1.toml"), eq);
  Expr r0 = root(eq, base).expr;
  for (int s = 0; s < kCases; ++s) {
    ExprGen g(8000 + s);
    Expr H = g.expr();
    mpq_class c(g.pick(1, 4), g.pick(1, 3));
    DensityPair d{Expr(c) * base.F + shift(H, 0, 1) - H, Expr(c) * base.G + H - shift(H, 1, 0), base.spec};
    EXPECT_TRUE(is_zero(root(eq, d).expr - Expr(c) * r0, fast_cfg(s))) << "seed " << s;
  }
}

TEST(Property, TransportRoundTripPreservesDivergence) {
  for (int s = 0; s < kCases; ++s) {
    ExprGen g(9000 + s);
    Expr F = g.expr(), G = g.expr();
    int k = g.pick(-2, 2);
    LatticeTransform t = g.pick(0, 1) ? LatticeTransform::shear(k) : LatticeTransform::shear_transpose(k);
    auto [Ft, Gt] = transport_densities(F, G, t, Direction::Forward);
    auto [Fb, Gb] = transport_densities(Ft, Gt, t, Direction::Back);
    // the round trip differs from (F, G) by a trivial pair at most
    EXPECT_TRUE(is_zero(divergence(Fb, Gb) - divergence(F, G), fast_cfg(s))) << "seed " << s << " k=" << k;
  }
}

TEST(Property, TransportedClawsKeepRoots) {
  Problem p = load_equation(fixture("plv.toml"));
  LatticeTransform t = LatticeTransform::shear(1);
  Equation kq = to_kovalevskaya(p.eq, t);
  std::vector<DensityPair> laws;
  for (int i = 2; i <= 6; ++i) laws.push_back(load_densities(fixture("plv_claw" + std::to_string(i) + ".toml"), p.eq));
  for (int s = 0; s < kCases; ++s) {
    ExprGen g(10000 + s);
    const DensityPair& d = laws[static_cast<std::size_t>(s) % laws.size()];
    Expr H = g.expr(false);
    Expr F = d.F + shift(H, 0, 1) - H, G = d.G + H - shift(H, 1, 0);
    auto [Ft, Gt] = transport_densities(F, G, t, Direction::Forward);
    auto [Fb, Gb] = transport_densities(Ft, Gt, t, Direction::Back);
    ZeroTestConfig cfg = fast_cfg(s);
    cfg.sample_count = 3;
    EXPECT_TRUE(is_zero(divergence_on_solutions(kq, {Ft, Gt, InitialDataSpec::rows(2)}), cfg)) << "seed " << s;
    Expr r0 = root(p.eq, d).expr;
    Expr rb = root(p.eq, {Fb, Gb, InitialDataSpec::cross()}).expr;
    EXPECT_TRUE(is_zero(rb - r0, cfg)) << "seed " << s;
  }
}

namespace {

// evolve a 5x5 patch from row data: u[K+i, s+j] = omega shifted
std::map<std::pair<int, int>, mpq_class> evolve_rows(const KovalevskayaPDE& k, const EvalPoint& p, int size) {
  std::map<std::pair<int, int>, mpq_class> grid;
  for (auto& [v, x] : p.vars) grid[{v.dm, v.dn}] = x;
  for (int i = k.K; i < size; ++i)
    for (int j = i - k.K - 5; j < size; ++j) {
      EvalPoint q;
      q.syms = p.syms;
      Expr om = shift(k.omega, i - k.K, j - k.s);
      for (auto& v : om.vars()) q.vars[v] = grid.at({v.dm, v.dn});
      grid[{i, j}] = ExactEvaluator{q}(om);
    }
  return grid;
}

// forward quadrant from cross data with the (1,1) corner
std::map<std::pair<int, int>, mpq_class> evolve_cross(const QuadGraphPDE& qg, const EvalPoint& p, int size) {
  std::map<std::pair<int, int>, mpq_class> grid;
  for (auto& [v, x] : p.vars) grid[{v.dm, v.dn}] = x;
  for (int i = 1; i < size; ++i)
    for (int j = 1; j < size; ++j) {
      EvalPoint q;
      q.syms = p.syms;
      Expr om = shift(qg.omega(), i - 1, j - 1);
      for (auto& v : om.vars()) q.vars[v] = grid.at({v.dm, v.dn});
      grid[{i, j}] = ExactEvaluator{q}(om);
    }
  return grid;
}

}  // namespace

TEST(Property, PullbackMatchesForwardEvolutionOnRows) {
  Equation eq = dpkdv_kov();
  const int N = 5;
  int checked = 0;
  for (int s = 0; s < kCases; ++s) {
    Sampler smp(11000 + s);
    EvalPoint p;
    for (int i = 0; i < 2; ++i)
      for (int j = -6; j < N + 2; ++j) p.vars[uvar(i, j)] = smp.rational();
    p.syms["alpha"] = smp.rational();
    p.syms["beta"] = smp.rational();
    p.syms["m"] = 0;
    p.syms["n"] = 0;
    int i = 2 + s % 3, j = 1 + (s / 3) % 4;
    try {
      auto grid = evolve_rows(eq.kov, p, N);
      Expr e = pullback(u(i, j), eq);
      EXPECT_EQ(ExactEvaluator{p}(e), grid.at({i, j})) << "seed " << s;
      ++checked;
    } catch (const DomainError&) {
    }
  }
  EXPECT_GT(checked, kCases * 9 / 10);
}

TEST(Property, PullbackMatchesForwardEvolutionOnCross) {
  Problem pr = load_equation(fixture("plv.toml"));
  const int N = 5;
  int checked = 0;
  for (int s = 0; s < kCases; ++s) {
    Sampler smp(12000 + s);
    EvalPoint p;
    for (int k = 0; k < N; ++k) {
      p.vars[uvar(k, 0)] = smp.rational();
      p.vars[uvar(0, k)] = smp.rational();
    }
    p.syms["m"] = 0;
    p.syms["n"] = 0;
    int i = 1 + s % 4, j = 1 + (s / 4) % 4;
    try {
      auto grid = evolve_cross(pr.eq.quad, p, N);
      Expr e = pullback(u(i, j), pr.eq);
      EXPECT_EQ(ExactEvaluator{p}(e), grid.at({i, j})) << "seed " << s;
      ++checked;
    } catch (const DomainError&) {
    }
  }
  EXPECT_GT(checked, kCases * 9 / 10);
}
