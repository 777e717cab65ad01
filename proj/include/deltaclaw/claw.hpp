#pragma once

#include "diffops.hpp"
#include "equations.hpp"
#include "integrate.hpp"

namespace deltaclaw {

struct JacobianDegenerate : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotVariational : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DensityPair {
  Expr F;
  Expr G;
  InitialDataSpec spec;
};

struct Root {
  Expr expr;
  InitialDataSpec spec;
};

struct Characteristic {
  Expr expr;
};

inline bool needs_forward_shift(const Equation& eq, const InitialDataSpec& spec) {
  return spec.shape == Shape::Rows && !eq.kov.inverse;
}

// divergence written on the initial data
inline Expr divergence_on_solutions(const Equation& eq, const DensityPair& d) {
  Expr C = divergence(d.F, d.G);
  if (needs_forward_shift(eq, d.spec)) return pullback_forward(C, eq, d.spec);
  return pullback(C, eq, d.spec);
}

inline bool verify_claw(const Equation& eq, const DensityPair& d, const ZeroTestConfig& cfg = {}) {
  return is_zero(divergence_on_solutions(eq, d), cfg);
}

inline Expr set_delta_zero(const Expr& e) {
  return map_family(e, Family::D, [](const LatticeVar&) { return Expr(0); });
}

// E_Delta of the lifted divergence, before Delta is set to zero; terms are lifted again
inline Expr euler_delta_lifted(const Equation& eq, const Expr& C, const InitialDataSpec& spec, bool at_zero) {
  Pullback lifter(eq, spec, true);
  Expr L = lifter(C);
  std::vector<Expr> ts;
  for (auto& v : vars_of(L, Family::D)) {
    Expr t = differentiate(L, v);
    if (at_zero) t = set_delta_zero(t);
    t = shift(t, -v.dm, -v.dn);
    ts.push_back(at_zero ? pullback(t, eq, spec) : lifter(t));
  }
  return add(ts);
}

inline Expr root_delta_route(const Equation& eq, const DensityPair& d) {
  Expr C = divergence(d.F, d.G);
  if (needs_forward_shift(eq, d.spec)) C = shift(C, std::max(0, -min_row(C)), 0);
  return euler_delta_lifted(eq, C, d.spec, true);
}

// E_omega of S_m F, row K points of S_m F taken as omega slots
inline Expr root_omega_route(const Equation& eq, const DensityPair& d) {
  if (!eq.is_kovalevskaya() || d.spec.shape != Shape::Rows)
    throw NotReachable("the omega route needs Kovalevskaya form with row data");
  const auto& k = eq.kov;
  Expr F = d.F;
  int lo = min_row(F);
  if (lo < 0 && !k.inverse) F = shift(F, -lo, 0);
  Expr Fp = pullback(F, eq, d.spec);
  Expr SmF = shift(Fp, 1, 0);
  Expr slotted = map_family(SmF, Family::U, [&](const LatticeVar& v) {
    if (v.dm == k.K) return w(0, v.dn - k.s);
    return var(v);
  });
  Expr Q = euler_omega(slotted);
  Q = map_family(Q, Family::W, [&](const LatticeVar& v) { return var(k.omega_point(v.dm, v.dn)); });
  return pullback(Q, eq, d.spec);
}

inline Root root(const Equation& eq, const DensityPair& d) {
  if (eq.is_kovalevskaya() && d.spec.shape == Shape::Rows) return {root_omega_route(eq, d), d.spec};
  return {root_delta_route(eq, d), d.spec};
}

inline bool is_trivial(const Equation& eq, const DensityPair& d, const ZeroTestConfig& cfg = {}) {
  return is_zero(root(eq, d).expr, cfg);
}

struct Equivalence {
  bool equivalent = false;
  mpq_class c = 0;
  int a = 0, b = 0;
};

inline std::vector<std::pair<int, int>> shift_order(int N) {
  std::vector<std::pair<int, int>> out;
  for (int s = 0; s <= 2 * N; ++s)
    for (int a = -N; a <= N; ++a)
      for (int b = -N; b <= N; ++b)
        if (std::abs(a) + std::abs(b) == s) out.push_back({a, b});
  return out;
}

// r1 = c * shift(r2, a, b) on the initial data
inline Equivalence roots_equivalent(const Equation& eq, const Root& r1, const Root& r2, bool allow_scaling,
                                    int max_shift, const ZeroTestConfig& cfg = {}) {
  bool z1 = is_zero(r1.expr, cfg), z2 = is_zero(r2.expr, cfg);
  if (z1 || z2) {
    if (z1 && z2) return {true, 1, 0, 0};
    return {};
  }
  for (auto [a, b] : shift_order(max_shift)) {
    Expr s2;
    try {
      s2 = pullback(shift(r2.expr, a, b), eq, r2.spec);
    } catch (const NotReachable&) {
      continue;
    }
    mpq_class c = 1;
    if (allow_scaling) {
      auto k = constant_ratio(r1.expr, s2, cfg);
      if (!k || sgn(*k) == 0) continue;
      c = *k;
    }
    if (is_zero(r1.expr - Expr(c) * s2, cfg)) return {true, c, a, b};
  }
  return {};
}

inline Equivalence equivalent(const Equation& eq, const DensityPair& d1, const DensityPair& d2, bool allow_scaling = true,
                              int allow_shifts = 2, const ZeroTestConfig& cfg = {}) {
  return roots_equivalent(eq, root(eq, d1), root(eq, d2), allow_scaling, allow_shifts, cfg);
}

// Q(z,[Delta]) = int_0^1 E_Delta(C)|_{Delta -> lambda Delta} dlambda
inline Characteristic characteristic_from_claw(const Equation& eq, const DensityPair& d, const ZeroTestConfig& cfg = {}) {
  Expr C = divergence(d.F, d.G);
  if (needs_forward_shift(eq, d.spec)) C = shift(C, std::max(0, -min_row(C)), 0);
  Expr E = euler_delta_lifted(eq, C, d.spec, false);
  Expr lam = sym("lambda");
  Expr scaled = map_family(E, Family::D, [&](const LatticeVar& v) { return lam * var(v); });
  return {integrate01(scaled, "lambda", cfg)};
}

// Delta slots replaced by the equation itself
inline Expr delta_substituted(const Expr& Q, const Equation& eq) {
  Expr delta = eq.delta();
  Expr r = map_family(Q, Family::D, [&](const LatticeVar& v) { return shift(delta, v.dm, v.dn); });
  Expr om = eq.omega();
  return map_family(r, Family::W, [&](const LatticeVar& v) { return shift(om, v.dm, v.dn); });
}

inline bool characteristic_check(const Expr& Q, const Equation& eq, const ZeroTestConfig& cfg = {}) {
  if (Q.is_zero_const()) return true;
  return is_zero(euler(delta_substituted(Q, eq) * eq.delta()), cfg);
}

inline bool is_variational_symmetry(const Expr& L, const Expr& Q, const ZeroTestConfig& cfg = {}) {
  return is_zero(euler(gateaux(L, Q)), cfg);
}

inline Characteristic noether_claw(const Expr& L, const Expr& Q, const ZeroTestConfig& cfg = {}) {
  if (!is_variational_symmetry(L, Q, cfg)) throw NotVariational("Q is not a variational symmetry of L");
  if (!is_zero(euler(Q * euler(L)), cfg)) throw NotVariational("Q times the Euler-Lagrange expression is not a divergence");
  return {Q};
}

}  // namespace deltaclaw
