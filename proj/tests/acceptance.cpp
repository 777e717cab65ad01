#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>

#include <deltaclaw/deltaclaw.hpp>

using namespace deltaclaw;

namespace {

std::string fixture(const std::string& f) { return std::string(DELTACLAW_DATA) + "/" + f; }

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double s() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
};

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
  if (!ok) ++failures;
  std::cout << "criterion " << n << ": " << (ok ? "PASS" : "FAIL") << "  " << detail << std::endl;
}

void note(const std::string& s) { std::cout << "    " << s << std::endl; }

std::string fmt(double s) {
  char b[32];
  std::snprintf(b, sizeof b, "%.2fs", s);
  return b;
}

Equation kov() { return load_equation(fixture("dpkdv_kov.toml")).eq; }

DensityPair claw(int k, const Equation& eq) { return load_densities(fixture("claw" + std::to_string(k) + ".toml"), eq); }

// stated roots use w[0,j] for the shifted right-hand side
Expr stated_root(const std::string& file, const Equation& eq) {
  Expr r = KeyValueFile::load(fixture(file)).expr("root");
  return pullback(map_family(r, Family::W, [&](const LatticeVar& v) { return shift(eq.omega(), v.dm, v.dn); }), eq);
}

void c1() {
  Timer t;
  Equation eq = kov();
  ZeroTestConfig cfg;
  int ok = 0;
  for (int k = 1; k <= 7; ++k) {
    auto z = zero_test(divergence_on_solutions(eq, claw(k, eq)), cfg);
    if (z.zero && z.points == 12) ++ok;
    else note("law " + std::to_string(k) + " fails");
  }
  double s = t.s();
  report(1, ok == 7 && s < 10, std::to_string(ok) + "/7 density pairs verified at 12 points, " + fmt(s));
}

void c2() {
  Timer t;
  Equation eq = kov();
  std::vector<int> exact, flipped, other;
  for (int k = 1; k <= 6; ++k) {
    Expr r = root(eq, claw(k, eq)).expr, q = stated_root("claw" + std::to_string(k) + ".toml", eq);
    if (is_zero(r - q)) {
      exact.push_back(k);
    } else if (is_zero(r + q)) {
      flipped.push_back(k);
    } else {
      other.push_back(k);
    }
  }
  auto list = [](const std::vector<int>& v) {
    std::string s;
    for (int k : v) s += (s.empty() ? "" : ",") + std::to_string(k);
    return s.empty() ? std::string("none") : s;
  };
  double s = t.s();
  report(2, flipped.empty() && other.empty() && s < 30,
         "rows matching: " + list(exact) + "; off by a factor -1: " + list(flipped) + "; other: " + list(other) + ", " + fmt(s));
  if (!flipped.empty()) {
    // independent route: characteristic from the lambda integral of E_Delta, restricted to Delta = 0
    std::vector<int> confirmed;
    for (int k : flipped) {
      try {
        Characteristic q = characteristic_from_claw(eq, claw(k, eq));
        Expr on = pullback(delta_substituted(set_delta_zero(q.expr), eq), eq);
        if (is_zero(on - root(eq, claw(k, eq)).expr)) confirmed.push_back(k);
      } catch (const std::exception&) {
      }
    }
    note("rows " + list(flipped) + " are the rows whose stated root carries the parity sign (-1)^(m+1);");
    note("the computed roots are exactly -1 times the stated ones; the characteristic from the lambda integral,");
    note("restricted to solutions, reproduces the computed sign for rows " + list(confirmed));
  }
  Expr r7 = root(eq, claw(7, eq)).expr, q7 = stated_root("claw7.toml", eq);
  ZeroTestReport z = zero_test(r7 - q7, {}, 1);
  if (z.zero) {
    note("row 7: computed root equals the stated one");
  } else {
    auto c = constant_ratio(r7, q7);
    bool prop = c && is_zero(r7 - Expr(*c) * q7);
    note("row 7 discrepancy: root minus stated is nonzero, e.g. " + z.witness_values.front() +
         (prop ? "; roots are proportional with factor " + c->get_str() : "; not a constant multiple"));
    // the composite part differs by a density of lambda-free terms
    Expr r5 = root(eq, claw(5, eq)).expr, r6 = root(eq, claw(6, eq)).expr;
    Expr composite = (sym("m") - sym("n")) * r5 + sym("n") * r6;
    Expr rest = r7 - composite;
    note(std::string("row 7 minus ((m-n) Q5 + n Q6) is ") + (depends_on_symbol(rest, "m") || depends_on_symbol(rest, "n") ? "lattice dependent" : "free of m and n"));
  }
}

void c3() {
  Equation eq = kov();
  DensityPair h = load_densities(fixture("highorder.toml"), eq);
  bool verified = verify_claw(eq, h);
  bool collapse = is_zero(root(eq, h).expr - parse("2*parity(1,0,0)*(u[1,1] - u[1,0])"));
  Equivalence e = equivalent(eq, h, claw(1, eq));
  bool expected = e.equivalent && e.c == -1 && e.a == 0 && e.b == 0;
  std::ostringstream d;
  d << "verified " << (verified ? "yes" : "no") << ", root = 2(-1)^m(u11 - u10) " << (collapse ? "yes" : "no") << ", ";
  if (e.equivalent)
    d << "EQUIVALENT(c = " << e.c.get_str() << ", shift (" << e.a << "," << e.b << ")), expected c = -1";
  else
    d << "DISTINCT";
  report(3, verified && collapse && expected, d.str());
  if (verified && collapse && e.equivalent && e.c == 1)
    note("c = +1 follows from the row 1 sign of criterion 2: the computed row 1 root is 2(-1)^m(u11 - u10)");
}

void c4() {
  Timer t;
  Problem p = load_equation(fixture("ode.toml"));
  auto f = KeyValueFile::load(fixture("ode_integral.toml"));
  Expr phi = f.expr("phi");
  Expr rec = reconstruct_ode_first_integral(p.ode_eq, f.expr("root"));
  Expr d = rec - phi;
  Expr at = substitute(d, {{uvar(0, 0), num(1, 3)}, {uvar(1, 0), num(-2, 5)}});
  at = substitute_symbol(at, "n", Expr(2));
  bool ok = is_zero(d - at);
  report(4, ok, std::string("reconstructed first integral ") + (ok ? "equals" : "differs from") + " the stated one up to a constant, " + fmt(t.s()));
}

void c5() {
  Timer t;
  Equation eq = kov();
  bool ok = true;
  std::ostringstream d;
  Equivalence e4, hs;
  bool neg_match = false;
  for (int k : {4, 6}) {
    std::string tag = "c" + std::to_string(k);
    auto f = KeyValueFile::load(fixture("recon_" + tag + ".toml"));
    Ansatz a = load_ansatz(KeyValueFile::load(fixture("ansatz_" + tag + ".toml")));
    Expr r = f.expr("root");
    DensityPair rec = reconstruct_densities(eq, r, a);
    DensityPair stated = load_densities(fixture("recon_" + tag + ".toml"), eq);
    bool v = verify_claw(eq, rec);
    bool match = is_zero(root(eq, rec).expr - root(eq, stated).expr);
    Equivalence e = equivalent(eq, rec, stated);
    if (k == 4) e4 = e;
    d << "law " << k << ": verified " << (v ? "yes" : "no") << ", roots match " << (match ? "yes" : "no");
    if (e.equivalent) d << " (EQUIVALENT c = " << e.c.get_str() << ")";
    d << "; ";
    ok = ok && v && match;
    if (k == 4) {
      DensityPair h = load_densities(fixture("homotopy_c4.toml"), eq);
      Equivalence eh = equivalent(eq, h, rec);
      hs = equivalent(eq, h, stated);
      bool hm = eh.equivalent && eh.c == 1;
      d << "homotopy densities vs direct " << (eh.equivalent ? "EQUIVALENT c = " + eh.c.get_str() : std::string("DISTINCT")) << "; ";
      ok = ok && hm;
      if (!match) {
        DensityPair neg = reconstruct_densities(eq, -r, a);
        neg_match = is_zero(root(eq, neg).expr - root(eq, stated).expr);
      }
    }
  }
  d << fmt(t.s());
  report(5, ok, d.str());
  if (e4.equivalent && e4.c == -1) {
    note("law 4: the stated densities, and the homotopy densities (" + std::string(hs.equivalent && hs.c == 1 ? "EQUIVALENT to them with c = 1" : "not equivalent to them") + "),");
    note("have root -Q4, Q4 being a row with the parity sign of criterion 2; reconstructing from -Q4 " +
         std::string(neg_match ? "matches exactly" : "does not match either"));
  }
}

void c6() {
  Timer t;
  bool ok = true;
  std::string pats;
  for (auto& r : check_inflem(4)) {
    std::string p = r.depends_next ? "nonzero" : "zero";
    for (bool b : r.depends_further) p += b ? ",nonzero" : ",zero";
    pats += " " + std::to_string(r.alpha) + ":(" + p + ")";
    ok = ok && r.holds();
  }
  Equation eq = dpkdv_quadgraph();
  int good = 0;
  for (int a = 1; a <= 3; ++a) {
    auto L = gardner_densities(a, a);
    if (verify_claw(eq, L.densities()) && !is_trivial(eq, L.densities())) ++good;
  }
  int distinct = 0;
  auto rows = check_distinctness(3);
  for (auto& r : rows)
    if (r.distinct()) ++distinct;
  double s = t.s();
  ok = ok && good == 3 && distinct == static_cast<int>(rows.size()) && s < 120;
  report(6, ok, "inflem" + pats + "; levels 1..3 verified and nontrivial " + std::to_string(good) + "/3; distinct " +
                    std::to_string(distinct) + "/" + std::to_string(rows.size()) + ", " + fmt(s));
}

void c7() {
  Timer t;
  Problem p = load_equation(fixture("plv.toml"));
  const Equation& eq = p.eq;
  auto q = [&](const std::string& f) { return KeyValueFile::load(fixture(f)).expr("q"); };
  std::vector<int> alsc_fail;
  for (int k = 1; k <= 6; ++k)
    if (!is_zero(alsc_residual(eq, q("plv_q" + std::to_string(k) + ".toml")))) alsc_fail.push_back(k);
  bool fixed_ok = is_zero(alsc_residual(eq, q("plv_q3_fixed.toml"))) && is_zero(alsc_residual(eq, q("plv_q4_fixed.toml")));

  int verified = 0, proportional = 0, proportional_printed = 0;
  for (int k = 2; k <= 6; ++k) {
    DensityPair d = load_densities(fixture("plv_claw" + std::to_string(k) + ".toml"), eq);
    if (verify_claw(eq, d)) ++verified;
    Expr r = root(eq, d).expr;
    auto multiple = [&](const Expr& target) {
      if (is_zero(r)) return false;
      for (int a = -2; a <= 2; ++a)
        for (int b = -2; b <= 2; ++b) {
          Expr s = pullback(shift(target, a, b), eq);
          auto c = constant_ratio(r, s);
          if (c && sgn(*c) != 0 && is_zero(r - Expr(*c) * s)) return true;
        }
      return false;
    };
    std::string printed = "plv_q" + std::to_string(k) + ".toml";
    std::string fixed = (k == 3 || k == 4) ? "plv_q" + std::to_string(k) + "_fixed.toml" : printed;
    if (multiple(q(fixed))) ++proportional;
    if (multiple(q(printed))) ++proportional_printed;
  }
  auto v1 = is_characteristic_root(eq, q("plv_q1.toml"));
  bool no = !v1.is_root && !v1.witness_values.empty();
  for (auto& w : v1.witness_values) no = no && w != "0";

  std::ostringstream d;
  d << "adjoint condition on the given rows: " << 6 - alsc_fail.size() << "/6";
  if (!alsc_fail.empty()) {
    d << " (fails:";
    for (int k : alsc_fail) d << " " << k;
    d << ")";
  }
  d << "; densities verified " << verified << "/5; roots a multiple of a shifted row " << proportional_printed
    << "/5 given, " << proportional << "/5 corrected; row 1 " << (no ? "NO" : "not rejected");
  if (no) d << " with E(Q Delta) = " << v1.witness_values.front();
  d << ", " << fmt(t.s());
  report(7, alsc_fail.empty() && verified == 5 && proportional_printed == 5 && no, d.str());
  if (!alsc_fail.empty())
    note(std::string("rows 3 and 4 as given are not cosymmetries; with the u10 factor restored in the second term and the sign of the first term flipped they ") +
         (fixed_ok ? "solve the adjoint condition" : "still fail") + " and match the roots of densities 3 and 4");
}

void c8() {
  Timer t;
  std::string cmd = std::string(DELTACLAW_UNIT) + " --gtest_brief=1 --gtest_filter='Property.*:Cosym.RootsOfLawsAreCosymmetries:Cosym.AdjointConditionIsLinear' > /dev/null 2>&1";
  int st = std::system(cmd.c_str());
  report(8, st == 0, "property suites (200 seeded cases each) " + std::string(st == 0 ? "passed" : "failed") + ", " + fmt(t.s()));
}

void c9() {
  std::vector<std::pair<std::string, std::vector<std::string>>> cases{
      {"lagrangian.toml", {"1", "u[0,0]", "parity(1,1,0)", "m", "n", "u[1,0] - u[0,0]"}},
      {"lagrangian_cubic.toml", {"1", "u[0,0]", "parity(1,1,0)"}}};
  int accepted = 0;
  bool ok = true, translation = false;
  for (auto& [file, qs] : cases) {
    Expr L = KeyValueFile::load(fixture(file)).expr("L");
    for (auto& s : qs) {
      Expr Q = parse(s);
      if (!is_variational_symmetry(L, Q)) continue;
      ++accepted;
      try {
        Characteristic c = noether_claw(L, Q);
        ok = ok && is_zero(euler(c.expr * euler(L)));
        if (file == "lagrangian.toml" && s == "1") translation = true;
      } catch (const NotVariational&) {
        ok = false;
      }
    }
  }
  report(9, ok && translation, "translation symmetry accepted " + std::string(translation ? "yes" : "no") + "; " +
                                   std::to_string(accepted) + " accepted pairs, E(Q E(L)) = 0 for all " + (ok ? "yes" : "no"));
}

}  // namespace

int main() {
  Timer total;
  for (auto f : {c1, c2, c3, c4, c5, c6, c7, c8, c9}) {
    try {
      f();
    } catch (const std::exception& e) {
      ++failures;
      std::cout << "criterion error: " << e.what() << std::endl;
    }
  }
  std::cout << failures << " of 9 criteria failed, " << fmt(total.s()) << std::endl;
  return failures == 0 ? 0 : 1;
}
