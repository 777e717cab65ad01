#pragma once

#include "linsolve.hpp"
#include "recon.hpp"

namespace deltaclaw {

struct NotQuadGraph : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Q - S_n(w2 Q) - S_m(w3 Q) - S_m S_n(w1 Q) on cross data, w_k = d omega / d (u00, u10, u01)
inline Expr alsc_residual(const Equation& eq, const Expr& Q) {
  if (eq.is_kovalevskaya()) throw NotQuadGraph("the adjoint condition is written for quad-graph equations");
  const Expr& om = eq.quad.omega();
  Expr w1 = differentiate(om, uvar(0, 0));
  Expr w2 = differentiate(om, uvar(1, 0));
  Expr w3 = differentiate(om, uvar(0, 1));
  Expr r = add({Q, -shift(w2 * Q, 0, 1), -shift(w3 * Q, 1, 0), -shift(w1 * Q, 1, 1)});
  return pullback(r, eq, InitialDataSpec::cross());
}

// first shear that puts the quad-graph in Kovalevskaya form with an inverse
inline std::pair<Equation, LatticeTransform> kovalevskaya_frame(const Equation& eq) {
  if (eq.is_kovalevskaya()) return {eq, LatticeTransform{}};
  for (int k : {1, -1}) {
    for (auto t : {LatticeTransform::shear(k), LatticeTransform::shear_transpose(k)}) {
      try {
        KovalevskayaPDE kq = to_kovalevskaya(eq.quad, t);
        if (kq.inverse) return {Equation::kovalevskaya(std::move(kq)), t};
      } catch (const NotKovalevskaya&) {
      }
    }
  }
  throw NotKovalevskaya("no unit shear gives Kovalevskaya form");
}

struct CharacteristicVerdict {
  bool is_root = false;
  bool reproduces_root = false;                // E_omega of the homotopy result gives qbar back
  Equation frame;                              // Kovalevskaya equation the pipeline ran on
  LatticeTransform transform;                  // quad-graph to frame
  Expr SmF;                                    // omega slots
  std::optional<Expr> base;                    // homotopy base point, when not 0
  std::optional<Characteristic> characteristic;  // absent when the lambda integral is out of reach
  Expr witness;                                // E(Q Delta) with Delta slots, zero for YES
  std::vector<EvalPoint> witness_points;
  std::vector<std::string> witness_values;
};

// E(Q Delta) through E(F - S_m F|omega): the Delta homotopy for Q differs from
// S_m F(omega + Delta) - S_m F(omega) by an S_n difference
inline Expr euler_of_q_delta(const Expr& SmF_slots, const KovalevskayaPDE& k) {
  Expr P = omega_slots_to_points(SmF_slots, k);
  Expr P_on = map_family(SmF_slots, Family::W, [&](const LatticeVar& v) { return shift(k.omega, v.dm, v.dn); });
  return euler(shift(P, -1, 0) - P_on);
}

inline CharacteristicVerdict is_characteristic_root(const Equation& eq, const Expr& qbar,
                                                    const std::optional<Expr>& g = std::nullopt,
                                                    const ZeroTestConfig& cfg = {}) {
  CharacteristicVerdict out;
  auto [frame, t] = kovalevskaya_frame(eq);
  out.frame = frame;
  out.transform = t;
  const auto& k = frame.kov;
  Expr q = eq.is_kovalevskaya() ? qbar : pullback(relabel(qbar, t), frame, InitialDataSpec::rows(k.K));
  if (q.is_zero_const()) {
    out.is_root = out.reproduces_root = true;
    out.SmF = Expr(0);
    out.characteristic = Characteristic{Expr(0)};
    return out;
  }
  Expr slots = to_omega_slots(q, k);
  try {
    out.SmF = reconstruct_F_dependence(slots, std::nullopt, cfg);
    out.reproduces_root = true;
  } catch (const DomainError&) {
    out.base = g ? *g : Expr(1);
    out.SmF = homotopy_F(slots, out.base, cfg);
    out.reproduces_root = reproduces_root(out.SmF, slots, cfg);
  }
  Expr W;
  try {
    out.characteristic = characteristic_from_partial(out.SmF, cfg);
    W = euler(delta_substituted(out.characteristic->expr, frame) * frame.delta());
  } catch (const std::exception& e) {
    if (!dynamic_cast<const IntegrationUnsupported*>(&e) && !dynamic_cast<const DomainError*>(&e)) throw;
    out.characteristic.reset();
    W = euler_of_q_delta(out.SmF, k);
  }
  // on solutions E(Q Delta) vanishes for any cosymmetry, so the witness keeps Delta
  out.witness = lift(W, frame, InitialDataSpec::rows(k.K));
  ZeroTestReport rep = zero_test(out.witness, cfg, 3);
  out.is_root = rep.zero && out.reproduces_root;
  if (!rep.zero) {
    out.witness_points = rep.witness_points;
    out.witness_values = rep.witness_values;
  } else {
    out.witness = Expr(0);
  }
  return out;
}

// kernel of c -> alsc_residual(sum c_k b_k), each vector rechecked
inline std::vector<Expr> solve_alsc_linear_ansatz(const Equation& eq, const std::vector<Expr>& basis,
                                                  const ZeroTestConfig& cfg = {}) {
  std::size_t nb = basis.size();
  if (nb == 0) return {};
  std::vector<Expr> res;
  for (auto& b : basis) res.push_back(alsc_residual(eq, b));
  Expr probe = add(res);
  std::size_t want = std::max<std::size_t>(2 * nb, 8);
  QMatrix A;
  Sampler sampler(cfg.seed ^ 0x5eedc0ULL);
  int tries = 0;
  while (A.size() < want) {
    if (++tries > static_cast<int>(want) + cfg.max_resamples) throw SamplingExhausted("no regular sample points for the residuals");
    EvalPoint p = sampler.draw(probe);
    std::vector<mpq_class> row;
    try {
      for (auto& r : res) row.push_back(ExactEvaluator(p)(r));
    } catch (const DomainError&) {
      continue;
    } catch (const detail::NeedFloat&) {
      throw std::invalid_argument("basis residuals must evaluate to exact rationals");
    }
    A.push_back(std::move(row));
  }
  std::vector<Expr> out;
  for (auto& c : nullspace(A, nb)) {
    std::vector<Expr> ts;
    for (std::size_t i = 0; i < nb; ++i)
      if (sgn(c[i]) != 0) ts.push_back(Expr(c[i]) * basis[i]);
    Expr Q = add(ts);
    if (is_zero(alsc_residual(eq, Q), cfg)) out.push_back(Q);
  }
  return out;
}

}  // namespace deltaclaw
