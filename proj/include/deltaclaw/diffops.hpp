#pragma once

#include "expr.hpp"

namespace deltaclaw {

inline Expr divergence(const Expr& F, const Expr& G) {
  return add({shift(F, 1, 0), -F, shift(G, 0, 1), -G});
}

// sum over family-fam variables v of shift(d(term)/dv, -v)
inline Expr euler_family(const Expr& P, Family fam, const std::function<Expr(const LatticeVar&)>& term) {
  std::vector<Expr> ts;
  for (auto& v : vars_of(P, fam)) ts.push_back(shift(term(v), -v.dm, -v.dn));
  return add(std::move(ts));
}

inline Expr euler(const Expr& P) {
  return euler_family(P, Family::U, [&](const LatticeVar& v) { return differentiate(P, v); });
}

inline Expr euler_delta(const Expr& C) {
  return euler_family(C, Family::D, [&](const LatticeVar& v) { return differentiate(C, v); });
}

// omega slots are W-family variables w[0,j]
inline Expr euler_omega(const Expr& SmF, int R = -1) {
  std::vector<Expr> ts;
  for (auto& v : vars_of(SmF, Family::W)) {
    if (v.dm != 0) throw DomainError("omega slot must have row offset 0");
    if (R >= 0 && (v.dn < 0 || v.dn > R)) continue;
    ts.push_back(shift(differentiate(SmF, v), 0, -v.dn));
  }
  return add(std::move(ts));
}

inline Expr gateaux(const Expr& P, const Expr& Q) {
  std::vector<Expr> ts;
  for (auto& v : vars_of(P, Family::U)) ts.push_back(differentiate(P, v) * shift(Q, v.dm, v.dn));
  return add(std::move(ts));
}

inline Expr adjoint_apply(const Expr& P, const Expr& Q) {
  return euler_family(P, Family::U, [&](const LatticeVar& v) { return differentiate(P, v) * Q; });
}

}  // namespace deltaclaw
