#pragma once

#include <set>

#include "io.hpp"
#include "linsolve.hpp"
#include "poly.hpp"

namespace deltaclaw {

struct InconsistentRoot : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AnsatzInsufficient : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NegativeShiftIrremovable : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// homotopy integral that does not give back the root, e.g. parts homogeneous of degree -1
struct HomotopyDegenerate : DomainError {
  using DomainError::DomainError;
};

// value at an integer lattice site: m, n and parities become numbers
inline Expr at_site(const Expr& e, long m0, long n0) {
  Rewriter rw(
      [&](const Expr& x) -> std::optional<Expr> {
        const Node& nd = x.node();
        if (nd.kind == Kind::Sym) {
          if (nd.name == "m") return Expr(mpq_class(m0));
          if (nd.name == "n") return Expr(mpq_class(n0));
          return x;
        }
        if (nd.kind == Kind::Parity) return parity(0, 0, nd.pa * m0 + nd.pb * n0 + nd.pc);
        return std::nullopt;
      },
      [](const Expr& x) { return !x.node().indexed && !x.has_sym("m") && !x.has_sym("n"); });
  return rw(e);
}

inline void collect_exp(const Expr& e, std::vector<Expr>& out) {
  if (e.kind() == Kind::Exp) {
    for (auto& o : out)
      if (equal(o, e)) return;
    out.push_back(e);
    return;
  }
  for (std::size_t i = 0; i < e.arity(); ++i) collect_exp(e.kid(i), out);
}

// ---------------------------------------------------------------- ordinary difference equations

// S: u[k] -> u[k+1], n -> n+1
inline Expr ode_shift(const Expr& e, int k) {
  if (k == 0) return e;
  Rewriter rw(
      [&](const Expr& x) -> std::optional<Expr> {
        const Node& nd = x.node();
        if (nd.kind == Kind::Var) return var(nd.var.shifted(k, 0));
        if (nd.kind == Kind::Sym) return nd.name == "n" ? x + Expr(k) : x;
        if (nd.kind == Kind::Parity) return parity(nd.pa, nd.pb, nd.pc + nd.pb * k);
        return std::nullopt;
      },
      [](const Expr& x) { return !x.node().indexed; });
  return rw(e);
}

inline Expr ode_on_solutions(const Expr& e, const OdeEquation& eq) {
  return substitute(e, {{uvar(eq.K, 0), eq.gamma}});
}

inline bool ode_is_first_integral(const OdeEquation& eq, const Expr& phi, const ZeroTestConfig& cfg = {}) {
  return is_zero(ode_on_solutions(ode_shift(phi, 1), eq) - phi, cfg);
}

inline Expr ode_root(const OdeEquation& eq, const Expr& phi) {
  return ode_on_solutions(differentiate(ode_shift(phi, 1), uvar(eq.K, 0)), eq);
}

// difference quotient of S phi across u[K] = gamma + D
inline Expr ode_characteristic(const OdeEquation& eq, const Expr& phi) {
  Expr Sphi = ode_shift(phi, 1);
  Expr d = D(0, 0);
  Expr hi = substitute(Sphi, {{uvar(eq.K, 0), eq.gamma + d}});
  return (hi - ode_on_solutions(Sphi, eq)) / d;
}

inline bool ode_characteristic_check(const OdeEquation& eq, const Expr& Q, const Expr& phi,
                                     const ZeroTestConfig& cfg = {}) {
  Expr lhs = substitute(Q, {{dvar(0, 0), eq.delta()}}) * eq.delta();
  return is_zero(lhs - (ode_shift(phi, 1) - phi), cfg);
}

// h(n+1) - h(n) = H(n) over n^p, n^p (-1)^n and n^p times exponentials found in H
inline Expr solve_summation(const Expr& H, const ZeroTestConfig& cfg = {}) {
  if (H.is_zero_const() || is_zero(H, cfg)) return Expr(0);
  for (auto& v : H.vars())
    if (depends_on(H, v, cfg)) throw InconsistentRoot("summation right-hand side depends on " + to_string(v));
  std::vector<Expr> atoms{Expr(1), parity(0, 1, 0)};
  collect_exp(H, atoms);
  Expr n = sym("n");
  std::vector<Expr> basis;
  for (auto& a : atoms)
    for (int p = 0; p <= 3; ++p) basis.push_back(pow(n, p) * a);
  std::size_t cols = basis.size();
  QMatrix A;
  std::vector<Expr> b;
  for (long n0 = -7; n0 <= 3 * static_cast<long>(cols); ++n0) {
    std::vector<mpq_class> row;
    bool ok = true;
    for (auto& f : basis) {
      Expr d = at_site(f, 0, n0 + 1) - at_site(f, 0, n0);
      if (!d.is_const()) {
        ok = false;
        break;
      }
      row.push_back(d.value());
    }
    if (!ok) throw IntegrationUnsupported("summation basis did not evaluate");
    A.push_back(std::move(row));
    b.push_back(at_site(H, 0, n0));
  }
  std::vector<Expr> c;
  try {
    c = solve_symbolic_rhs(A, b, cols, cfg);
  } catch (const LinearSystemInconsistent&) {
    throw IntegrationUnsupported("no closed-form sum in the basis");
  }
  std::vector<Expr> ts;
  for (std::size_t i = 0; i < cols; ++i) ts.push_back(c[i] * basis[i]);
  Expr h = add(ts);
  if (!is_zero(ode_shift(h, 1) - h - H, cfg)) throw IntegrationUnsupported("summation check failed");
  return h;
}

// first integral phi(n, u[0..K-1]) from a root Qbar(n, u[0..K-1])
inline Expr reconstruct_ode_first_integral(const OdeEquation& eq, const Expr& qbar, const ZeroTestConfig& cfg = {}) {
  if (qbar.is_zero_const() || is_zero(qbar, cfg)) return Expr(0);
  if (!eq.inverse) throw InconsistentRoot("reconstruction needs u[0] in terms of u[1..K]");
  const int K = eq.K;
  Expr top = denest(substitute(qbar, {{uvar(0, 0), *eq.inverse}}));
  Expr Phi1 = integrate(top, uvar(K, 0), cfg);
  Expr total = ode_shift(Phi1, -1);
  // unknown part S^level k(n, u[0..a-1])
  int a = K - 1, level = 0;
  for (;;) {
    Expr R = -(denest(ode_on_solutions(ode_shift(total, 1), eq)) - total);
    Expr Rk = ode_shift(R, -level);
    if (a == 0) {
      total = total + ode_shift(solve_summation(Rk, cfg), level);
      break;
    }
    Expr dk = -differentiate(Rk, uvar(0, 0));
    for (auto& v : dk.vars())
      if (v.dm >= a && depends_on(dk, v, cfg)) throw InconsistentRoot("not a root: residual depends on " + to_string(v));
    Expr K0 = dk.is_zero_const() ? Expr(0) : integrate(dk, uvar(0, 0), cfg);
    total = total + ode_shift(K0, level);
    ++level;
    --a;
  }
  if (!ode_is_first_integral(eq, total, cfg)) throw InconsistentRoot("reconstructed function is not a first integral");
  return total;
}

// ---------------------------------------------------------------- partial differential equations

inline const KovalevskayaPDE& require_kovalevskaya(const Equation& eq) {
  if (!eq.is_kovalevskaya()) throw NotKovalevskaya("reconstruction needs Kovalevskaya form");
  return eq.kov;
}

// root on row data rewritten with w[0,j] for omega_{0j}; row 0 eliminated through the inverse
inline Expr to_omega_slots(const Expr& qbar, const KovalevskayaPDE& k) {
  if (!k.inverse) throw InconsistentRoot("omega slots need the inverse of the equation");
  for (auto& v : k.inverse->vars())
    if (v.fam == Family::U && v.dm == 0) throw InconsistentRoot("inverse still contains row 0");
  Expr r = map_family(qbar, Family::U, [&](const LatticeVar& v) {
    if (v.dm == 0) return shift(*k.inverse, 0, v.dn - k.L);
    return var(v);
  });
  return map_family(r, Family::U, [&](const LatticeVar& v) {
    if (v.dm == k.K) return w(0, v.dn - k.s);
    return var(v);
  });
}

inline Expr omega_slots_to_points(const Expr& e, const KovalevskayaPDE& k) {
  return map_family(e, Family::W, [&](const LatticeVar& v) { return var(k.omega_point(v.dm, v.dn)); });
}

inline int min_w_shift(const Expr& t) {
  int lo = 0;
  bool any = false;
  for (auto& v : t.vars())
    if (v.fam == Family::W) {
      lo = any ? std::min(lo, v.dn) : v.dn;
      any = true;
    }
  return any ? lo : 0;
}

// S_m F in omega slots: int_0^1 (omega_00 - g) Qbar(omega_lambda) dlambda, terms moved off negative shifts
inline Expr homotopy_F(const Expr& qbar_slots, const std::optional<Expr>& g = std::nullopt,
                       const ZeroTestConfig& cfg = {}) {
  Expr lam = sym("lambda");
  Expr base = g ? *g : Expr(0);
  std::vector<Expr> parts;
  for (auto& t : terms_of(qbar_slots)) {
    Expr scaled = map_family(t, Family::W, [&](const LatticeVar& v) {
      return lam * var(v) + (Expr(1) - lam) * shift(base, v.dm, v.dn);
    });
    Expr piece = (w(0, 0) - base) * scaled;
    int j0 = min_w_shift(t);
    parts.push_back(j0 < 0 ? shift(piece, 0, -j0) : piece);
  }
  Expr SmF = tidy(integrate01(add(parts), "lambda", cfg));
  for (auto& v : SmF.vars())
    if (v.fam == Family::W && v.dn < 0 && depends_on(SmF, v, cfg))
      throw NegativeShiftIrremovable("omega slot " + to_string(v) + " remains after shifting");
  return SmF;
}

inline bool reproduces_root(const Expr& SmF_slots, const Expr& qbar_slots, const ZeroTestConfig& cfg = {}) {
  return is_zero(euler_omega(SmF_slots) - qbar_slots, cfg);
}

// homotopy result, checked against the root
inline Expr reconstruct_F_dependence(const Expr& qbar_slots, const std::optional<Expr>& g = std::nullopt,
                                     const ZeroTestConfig& cfg = {}) {
  Expr SmF = homotopy_F(qbar_slots, g, cfg);
  if (!reproduces_root(SmF, qbar_slots, cfg))
    throw HomotopyDegenerate("restricted Euler operator of the result differs from the root");
  return SmF;
}

inline Expr partial_F(const Expr& SmF_slots, const KovalevskayaPDE& k) {
  return shift(omega_slots_to_points(SmF_slots, k), -1, 0);
}

// Q = int_0^1 E_Delta(S_m F(omega + Delta))|_{Delta -> lambda Delta} dlambda
inline Characteristic characteristic_from_partial(const Expr& SmF_slots, const ZeroTestConfig& cfg = {}) {
  Expr lifted = map_family(SmF_slots, Family::W, [&](const LatticeVar& v) { return var(v) + D(v.dm, v.dn); });
  std::vector<Expr> ts;
  for (auto& v : vars_of(lifted, Family::D)) ts.push_back(shift(differentiate(lifted, v), -v.dm, -v.dn));
  Expr lam = sym("lambda");
  Expr scaled = map_family(add(ts), Family::D, [&](const LatticeVar& v) { return lam * var(v); });
  return {tidy(integrate01(scaled, "lambda", cfg))};
}

// unknown functions of lattice points added to F or G
struct Ansatz {
  std::vector<LatticeVar> f;
  std::vector<LatticeVar> G;
};

inline Ansatz load_ansatz(const KeyValueFile& file) {
  Ansatz a;
  if (file.has("f"))
    for (auto& s : file.list("f")) a.f.push_back(parse_var(s));
  if (file.has("G"))
    for (auto& s : file.list("G")) a.G.push_back(parse_var(s));
  return a;
}

namespace detail {

struct Unknown {
  bool in_F;
  std::vector<LatticeVar> args;
};

struct Instance {
  std::size_t unknown;
  int sign;
  int dm, dn;
  std::vector<LatticeVar> points;
};

inline std::vector<LatticeVar> shifted(const std::vector<LatticeVar>& a, int dm, int dn) {
  std::vector<LatticeVar> out;
  for (auto& v : a) out.push_back(v.shifted(dm, dn));
  std::sort(out.begin(), out.end());
  return out;
}

inline bool subset(const std::vector<LatticeVar>& a, const std::vector<LatticeVar>& b) {
  for (auto& v : a)
    if (std::find(b.begin(), b.end(), v) == b.end()) return false;
  return true;
}

// a function of a is trivially equivalent to one of b when a shifted along the trivial direction lies in b
inline bool absorbed(const std::vector<LatticeVar>& a, const std::vector<LatticeVar>& b, bool in_F) {
  if (subset(a, b)) return true;
  for (int s : {-1, 1})
    if (subset(in_F ? shifted(a, 0, s) : shifted(a, s, 0), b)) return true;
  return false;
}

inline void normalize(std::vector<Unknown>& us) {
  for (auto& u : us) std::sort(u.args.begin(), u.args.end());
  std::vector<Unknown> out;
  for (std::size_t i = 0; i < us.size(); ++i) {
    bool drop = false;
    for (std::size_t j = 0; j < us.size() && !drop; ++j) {
      if (i == j || us[i].in_F != us[j].in_F) continue;
      bool ij = absorbed(us[i].args, us[j].args, us[i].in_F);
      bool ji = absorbed(us[j].args, us[i].args, us[i].in_F);
      // mutual absorption keeps the smaller argument list
      if (ij && (!ji || us[j].args < us[i].args || (us[j].args == us[i].args && j < i))) drop = true;
    }
    if (!drop) out.push_back(us[i]);
  }
  us = std::move(out);
}

// points the expression does not depend on are set to small integers
inline Expr pin_outside(const Expr& e, const std::vector<LatticeVar>& keep, const ZeroTestConfig& cfg) {
  std::vector<LatticeVar> out;
  for (auto& v : e.vars())
    if (v.fam == Family::U && !std::binary_search(keep.begin(), keep.end(), v)) out.push_back(v);
  if (out.empty()) return e;
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  for (int attempt = 0; attempt < 8; ++attempt) {
    Bindings b;
    for (std::size_t i = 0; i < out.size(); ++i) b[out[i]] = attempt == 0 ? Expr(0) : Expr(primes[(i + 3 * attempt) % 16] + attempt);
    try {
      Expr r = tidy(substitute(e, b));
      if (is_zero(r - e, cfg)) return r;
    } catch (const SamplingExhausted&) {
    } catch (const DomainError&) {
    }
  }
  return e;
}

// (S_m - 1) f + (S_n - 1) g = -R over polynomials in m, n times parities
inline std::pair<Expr, Expr> solve_terminal(const Expr& R, bool with_f, bool with_g, const ZeroTestConfig& cfg) {
  if (R.is_zero_const() || is_zero(R, cfg)) return {Expr(0), Expr(0)};
  if (!with_f && !with_g) throw AnsatzInsufficient("residual depends only on m, n and no unknown remains");
  Expr m = sym("m"), n = sym("n");
  std::vector<Expr> atoms{Expr(1), parity(1, 0, 0), parity(0, 1, 0), parity(1, 1, 0)};
  collect_exp(R, atoms);
  std::vector<Expr> basis;
  for (auto& a : atoms)
    for (int p = 0; p <= 2; ++p)
      for (int q = 0; p + q <= 2; ++q) basis.push_back(pow(m, p) * pow(n, q) * a);
  std::vector<std::pair<bool, Expr>> cols;
  if (with_f)
    for (auto& b : basis) cols.push_back({true, b});
  if (with_g)
    for (auto& b : basis) cols.push_back({false, b});
  QMatrix A;
  std::vector<Expr> rhs;
  for (long m0 = -3; m0 <= 4; ++m0)
    for (long n0 = -3; n0 <= 4; ++n0) {
      std::vector<mpq_class> row;
      for (auto& [isf, b] : cols) {
        Expr d = at_site(b, m0 + (isf ? 1 : 0), n0 + (isf ? 0 : 1)) - at_site(b, m0, n0);
        if (!d.is_const()) throw IntegrationUnsupported("terminal basis did not evaluate");
        row.push_back(d.value());
      }
      A.push_back(std::move(row));
      rhs.push_back(tidy(-at_site(R, m0, n0)));
    }
  std::vector<Expr> c;
  try {
    c = solve_symbolic_rhs(A, rhs, cols.size(), cfg);
  } catch (const LinearSystemInconsistent&) {
    throw AnsatzInsufficient("no polynomial-parity solution of the terminal equation");
  }
  std::vector<Expr> fs, gs;
  for (std::size_t i = 0; i < cols.size(); ++i) (cols[i].first ? fs : gs).push_back(tidy(c[i]) * cols[i].second);
  return {add(fs), add(gs)};
}

}  // namespace detail

// F = F0 + f(args), G = G0 + G(args); unknowns are peeled off the residual divergence one variable set at a time
inline DensityPair complete_densities(const Equation& eq, const InitialDataSpec& spec, const Expr& F0, const Expr& G0,
                                      const Ansatz& ansatz, const ZeroTestConfig& cfg = {},
                                      std::vector<std::string>* steps = nullptr) {
  auto note = [&](const std::string& s) {
    if (steps) steps->push_back(s);
  };
  std::vector<detail::Unknown> unknowns;
  if (!ansatz.f.empty()) unknowns.push_back({true, ansatz.f});
  if (!ansatz.G.empty()) unknowns.push_back({false, ansatz.G});
  Expr Fx = Expr(0), Gx = Expr(0);
  for (int iter = 0; iter < 64; ++iter) {
    detail::normalize(unknowns);
    Expr R = divergence_on_solutions(eq, {F0 + Fx, G0 + Gx, spec});
    std::vector<detail::Instance> inst;
    bool any_args = false;
    for (std::size_t i = 0; i < unknowns.size(); ++i) {
      auto& un = unknowns[i];
      if (un.args.empty()) continue;
      any_args = true;
      int pm = un.in_F ? 1 : 0, pn = un.in_F ? 0 : 1;
      for (auto [sg, dm, dn] : {std::tuple{1, pm, pn}, std::tuple{-1, 0, 0}}) {
        auto pts = detail::shifted(un.args, dm, dn);
        for (auto& v : pts)
          if (!spec.contains(v))
            throw AnsatzInsufficient("argument " + to_string(v) + " of a shifted unknown leaves the initial data");
        inst.push_back({i, sg, dm, dn, pts});
      }
    }
    if (!any_args) {
      for (auto& v : R.vars())
        if (depends_on(R, v, cfg)) throw AnsatzInsufficient("residual still depends on " + to_string(v));
      bool wf = false, wg = false;
      for (auto& un : unknowns) (un.in_F ? wf : wg) = true;
      auto [f, g] = detail::solve_terminal(detail::pin_outside(R, {}, cfg), wf, wg, cfg);
      Fx = Fx + f;
      Gx = Gx + g;
      break;
    }
    std::set<LatticeVar> pts;
    for (auto& I : inst) pts.insert(I.points.begin(), I.points.end());
    std::vector<std::vector<LatticeVar>> cands;
    for (auto& x : pts) cands.push_back({x});
    for (auto a = pts.begin(); a != pts.end(); ++a)
      for (auto b = std::next(a); b != pts.end(); ++b) cands.push_back({*a, *b});
    bool progressed = false;
    for (auto& V : cands) {
      std::vector<std::size_t> hit;
      for (std::size_t i = 0; i < inst.size(); ++i)
        if (detail::subset(V, inst[i].points)) hit.push_back(i);
      if (hit.size() != 1) continue;
      auto& I = inst[hit[0]];
      Expr rhs = R;
      for (auto& x : V) rhs = differentiate(rhs, x);
      rhs = Expr(mpq_class(-I.sign)) * rhs;
      bool local = true;
      for (auto& v : rhs.vars())
        if (v.fam == Family::U && !std::binary_search(I.points.begin(), I.points.end(), v) && depends_on(rhs, v, cfg)) {
          local = false;
          break;
        }
      if (!local) {
        std::string vs;
        for (auto& x : V) vs += to_string(x) + " ";
        note("skip " + vs + "rhs " + to_string(rhs));
        continue;
      }
      Expr canon = shift(detail::pin_outside(rhs, I.points, cfg), -I.dm, -I.dn);
      Expr Phi = canon;
      try {
        for (auto& x : V) Phi = tidy(integrate(Phi, x.shifted(-I.dm, -I.dn), cfg));
      } catch (const IntegrationUnsupported&) {
        continue;
      }
      auto& un = unknowns[I.unknown];
      (un.in_F ? Fx : Gx) += Phi;
      {
        std::string vs;
        for (auto& x : V) vs += " " + to_string(x);
        note(std::string(un.in_F ? "f" : "G") + ": d/d" + vs + " of " + to_string(canon) + " gives " + to_string(Phi));
      }
      auto without = [&](const LatticeVar& x) {
        std::vector<LatticeVar> out;
        for (auto& v : un.args)
          if (v != x.shifted(-I.dm, -I.dn)) out.push_back(v);
        return out;
      };
      if (V.size() == 1) {
        un.args = without(V[0]);
      } else {
        detail::Unknown second{un.in_F, without(V[1])};
        un.args = without(V[0]);
        unknowns.push_back(second);
      }
      progressed = true;
      break;
    }
    if (!progressed) throw AnsatzInsufficient("no variable set isolates a single unknown");
  }
  DensityPair d{tidy(F0 + Fx), tidy(G0 + Gx), spec};
  if (!verify_claw(eq, d, cfg)) throw AnsatzInsufficient("completed densities do not form a conservation law");
  return d;
}

// root in omega slots to densities on row data
inline DensityPair reconstruct_densities(const Equation& eq, const Expr& qbar_slots, const Ansatz& ansatz,
                                         const std::optional<Expr>& g = std::nullopt, const ZeroTestConfig& cfg = {}) {
  const auto& k = require_kovalevskaya(eq);
  Expr F0 = partial_F(reconstruct_F_dependence(qbar_slots, g, cfg), k);
  return complete_densities(eq, InitialDataSpec::rows(k.K), F0, Expr(0), ansatz, cfg);
}

}  // namespace deltaclaw
