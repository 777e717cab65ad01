#pragma once

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "deltaclaw.hpp"

namespace deltaclaw::cli {

using json = nlohmann::ordered_json;

enum Exit { Ok = 0, False = 1, Usage = 2, Unsupported = 3, Sampling = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Report {
  std::string verdict;
  std::string headline;
  std::optional<std::string> witness;
  std::vector<std::pair<std::string, std::string>> lines;  // text mode details
  json details = json::object();
  int code = Ok;

  void add(const std::string& k, const std::string& v) {
    lines.push_back({k, v});
    details[k] = v;
  }
  void add(const std::string& k, const Expr& e) { add(k, to_string(e)); }
};

// "1e-40", "3/1000", "0.001"
inline mpq_class parse_rational(const std::string& s) {
  auto bad = [&] { return UsageError("not a rational number: " + s); };
  std::string t = s;
  for (auto& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  try {
    if (t.find('/') != std::string::npos) {
      mpq_class q(t);
      q.canonicalize();
      return q;
    }
    long ex = 0;
    auto epos = t.find('e');
    if (epos != std::string::npos) {
      ex = std::stol(t.substr(epos + 1));
      t = t.substr(0, epos);
    }
    auto dot = t.find('.');
    if (dot != std::string::npos) {
      ex -= static_cast<long>(t.size() - dot - 1);
      t.erase(dot, 1);
    }
    if (t.empty() || t == "-" || t == "+") throw bad();
    if (t[0] == '+') t.erase(0, 1);
    mpq_class q{mpz_class(t, 10)};
    mpz_class p10;
    mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(ex)));
    if (ex >= 0)
      q *= p10;
    else
      q /= p10;
    q.canonicalize();
    return q;
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception&) {
    throw bad();
  }
}

inline std::string point_string(const EvalPoint& p) {
  std::string s;
  for (auto& [v, x] : p.vars) s += (s.empty() ? "" : " ") + to_string(v) + "=" + x.get_str();
  for (auto& [k, x] : p.syms) s += (s.empty() ? "" : " ") + k + "=" + x.get_str();
  return s;
}

inline std::string qtext(const mpq_class& q) { return q.get_str(); }

inline DensityPair load_pair(const std::string& path, const Equation& eq) { return load_densities(path, eq); }

inline const Equation& pde(const Problem& p) {
  if (p.ode) throw UsageError(p.name + " is an ordinary difference equation");
  return p.eq;
}

// ---------------------------------------------------------------- commands

inline Report cmd_verify(const std::string& eqf, const std::string& clf, const ZeroTestConfig& cfg) {
  Problem p = load_equation(eqf);
  DensityPair d = load_pair(clf, pde(p));
  Expr C = divergence_on_solutions(p.eq, d);
  ZeroTestReport z = zero_test(C, cfg, 1);
  Report r;
  r.add("initial_data", to_string(d.spec.shape));
  if (z.zero) {
    r.verdict = "VERIFIED";
    r.headline = "CLaw verified (" + std::to_string(z.points) + "/" + std::to_string(z.points) + " points)";
  } else {
    r.verdict = "NOT_A_CLAW";
    r.headline = "not a CLaw: divergence is nonzero on solutions";
    r.witness = point_string(z.witness_points.front()) + " -> " + z.witness_values.front();
    r.code = False;
  }
  return r;
}

inline Report cmd_root(const std::string& eqf, const std::string& clf, const ZeroTestConfig& cfg) {
  Problem p = load_equation(eqf);
  DensityPair d = load_pair(clf, pde(p));
  Root rt = root(p.eq, d);
  rt.expr = tidy(rt.expr);
  Report r;
  bool zero = is_zero(rt.expr, cfg);
  r.verdict = zero ? "ZERO_ROOT" : "ROOT";
  r.headline = "root = " + to_string(zero ? Expr(0) : rt.expr);
  r.add("root", zero ? Expr(0) : rt.expr);
  r.add("initial_data", to_string(rt.spec.shape));
  return r;
}

inline Report cmd_trivial(const std::string& eqf, const std::string& clf, const ZeroTestConfig& cfg) {
  Problem p = load_equation(eqf);
  DensityPair d = load_pair(clf, pde(p));
  Root rt = root(p.eq, d);
  ZeroTestReport z = zero_test(rt.expr, cfg, 1);
  Report r;
  if (z.zero) {
    r.verdict = "TRIVIAL";
    r.headline = "trivial: root vanishes";
  } else {
    r.verdict = "NONTRIVIAL";
    r.headline = "nontrivial: root is nonzero";
    r.witness = point_string(z.witness_points.front()) + " -> " + z.witness_values.front();
    r.add("root", rt.expr);
    r.code = False;
  }
  return r;
}

inline Report cmd_equivalent(const std::string& eqf, const std::string& c1, const std::string& c2, int shifts,
                             const ZeroTestConfig& cfg) {
  Problem p = load_equation(eqf);
  DensityPair d1 = load_pair(c1, pde(p)), d2 = load_pair(c2, p.eq);
  Equivalence e = equivalent(p.eq, d1, d2, true, shifts, cfg);
  Report r;
  if (e.equivalent) {
    r.verdict = "EQUIVALENT";
    r.headline = "EQUIVALENT c=" + qtext(e.c) + " shift=(" + std::to_string(e.a) + "," + std::to_string(e.b) + ")";
    r.details["c"] = qtext(e.c);
    r.details["shift"] = {e.a, e.b};
  } else {
    r.verdict = "DISTINCT";
    r.headline = "DISTINCT within shifts |a|,|b| <= " + std::to_string(shifts);
    r.code = False;
  }
  return r;
}

inline Report cmd_characteristic(const std::string& eqf, const std::string& clf, const ZeroTestConfig& cfg) {
  Problem p = load_equation(eqf);
  DensityPair d = load_pair(clf, pde(p));
  Characteristic Q = characteristic_from_claw(p.eq, d, cfg);
  Expr q = tidy(Q.expr);
  bool ok = characteristic_check(q, p.eq, cfg);
  Report r;
  r.add("characteristic", q);
  r.verdict = ok ? "CHARACTERISTIC" : "CHECK_FAILED";
  r.headline = ok ? "characteristic found, E(Q Delta) = 0" : "characteristic check failed";
  if (!ok) r.code = False;
  return r;
}

inline Report cmd_reconstruct(const std::string& eqf, const std::string& rootexpr, const std::string& ansatzf,
                              const std::optional<std::string>& base, const ZeroTestConfig& cfg) {
  Problem p = load_equation(eqf);
  const Equation& eq = pde(p);
  const auto& k = require_kovalevskaya(eq);
  Expr q = parse(rootexpr);
  Expr slots = has_family(q, Family::W) ? q : to_omega_slots(q, k);
  Ansatz a = load_ansatz(KeyValueFile::load(ansatzf));
  Report r;
  Expr SmF;
  try {
    SmF = reconstruct_F_dependence(slots, std::nullopt, cfg);
  } catch (const DomainError&) {
    if (!base) throw;
    SmF = reconstruct_F_dependence(slots, parse(*base), cfg);
    r.add("base_point", *base);
  }
  Expr F0 = partial_F(SmF, k);
  r.add("partial_F", F0);
  std::vector<std::string> steps;
  DensityPair d = complete_densities(eq, InitialDataSpec::rows(k.K), F0, Expr(0), a, cfg, &steps);
  r.add("F", d.F);
  r.add("G", d.G);
  r.details["steps"] = steps;
  r.verdict = "RECONSTRUCTED";
  r.headline = "densities reconstructed and verified";
  return r;
}

inline Report cmd_ode_reconstruct(const std::string& eqf, const std::string& rootexpr, const ZeroTestConfig& cfg) {
  Problem p = load_equation(eqf);
  if (!p.ode) throw UsageError(p.name + " is not an ordinary difference equation");
  Expr phi = tidy(reconstruct_ode_first_integral(p.ode_eq, parse(rootexpr), cfg));
  Report r;
  r.add("first_integral", phi);
  r.verdict = "FIRST_INTEGRAL";
  r.headline = "first integral reconstructed and verified";
  return r;
}

inline Report cmd_transform(const std::string& eqf, int k, bool transpose, const std::optional<std::string>& claw,
                            const ZeroTestConfig& cfg) {
  Problem p = load_equation(eqf);
  const Equation& eq = pde(p);
  LatticeTransform t = transpose ? LatticeTransform::shear_transpose(k) : LatticeTransform::shear(k);
  Equation kq = to_kovalevskaya(eq, t);
  Report r;
  r.details["K"] = kq.kov.K;
  r.details["s"] = kq.kov.s;
  r.details["L"] = kq.kov.L;
  r.lines.push_back({"K", std::to_string(kq.kov.K)});
  r.lines.push_back({"s", std::to_string(kq.kov.s)});
  r.add("omega", kq.kov.omega);
  if (kq.kov.inverse) r.add("inverse", *kq.kov.inverse);
  r.verdict = "TRANSFORMED";
  r.headline = "Kovalevskaya form u[" + std::to_string(kq.kov.K) + "," + std::to_string(kq.kov.s) + "] = omega";
  if (claw) {
    DensityPair d = load_pair(*claw, eq);
    auto [F, G] = transport_densities(d.F, d.G, t, Direction::Forward);
    DensityPair dt{F, G, InitialDataSpec::rows(kq.kov.K)};
    bool ok = verify_claw(kq, dt, cfg);
    r.add("F", F);
    r.add("G", G);
    r.details["verified"] = ok;
    r.lines.push_back({"verified", ok ? "yes" : "no"});
    if (!ok) {
      r.verdict = "TRANSPORT_FAILED";
      r.code = False;
    }
  }
  return r;
}

inline Report cmd_gardner(int alpha_max, const ZeroTestConfig& cfg) {
  if (alpha_max < 1) throw UsageError("--alpha-max must be at least 1");
  Report r;
  bool ok = true;
  json inflem = json::array();
  for (auto& row : check_inflem(alpha_max, cfg)) {
    std::string pat = row.depends_next ? "1" : "0";
    for (bool b : row.depends_further) pat += b ? "1" : "0";
    inflem.push_back({{"alpha", row.alpha}, {"pattern", pat}, {"mixed_nonzero", row.mixed_nonzero}, {"holds", row.holds()}});
    r.lines.push_back({"v-term " + std::to_string(row.alpha),
                       "dependence " + pat + (row.mixed_nonzero ? ", mixed derivative nonzero" : ", mixed derivative zero")});
    ok = ok && row.holds();
  }
  json levels = json::array();
  for (auto& row : check_distinctness(alpha_max, cfg)) {
    std::string lower;
    for (bool b : row.lower_depend) lower += b ? "1" : "0";
    levels.push_back({{"alpha", row.alpha}, {"verified", row.verified}, {"trivial", row.trivial},
                      {"depends_on_witness", row.depends_witness}, {"lower_levels", lower}, {"distinct", row.distinct()}});
    r.lines.push_back({"level " + std::to_string(row.alpha),
                       std::string(row.verified ? "verified" : "NOT verified") + (row.trivial ? ", trivial" : ", nontrivial") +
                           (row.depends_witness ? ", root depends on u[" + std::to_string(-(row.alpha + 1)) + ",1]" : ", no witness")});
    ok = ok && row.distinct();
  }
  r.details["inflem"] = inflem;
  r.details["levels"] = levels;
  r.verdict = ok ? "DISTINCT" : "NOT_CERTIFIED";
  r.headline = ok ? "levels 0.." + std::to_string(alpha_max) + " verified and pairwise distinct"
                  : "distinctness not certified";
  if (!ok) r.code = False;
  return r;
}

inline Report cmd_cosym_check(const std::string& eqf, const std::string& qexpr, const std::optional<std::string>& base,
                              const ZeroTestConfig& cfg) {
  Problem p = load_equation(eqf);
  const Equation& eq = pde(p);
  Expr q = parse(qexpr);
  Report r;
  ZeroTestReport z = zero_test(alsc_residual(eq, q), cfg, 1);
  r.details["cosymmetry"] = z.zero;
  r.lines.push_back({"cosymmetry", z.zero ? "yes" : "no"});
  if (!z.zero) {
    r.verdict = "NOT_COSYMMETRY";
    r.headline = "adjoint condition fails";
    r.witness = point_string(z.witness_points.front()) + " -> " + z.witness_values.front();
    r.code = False;
    return r;
  }
  auto v = is_characteristic_root(eq, q, base ? std::optional<Expr>(parse(*base)) : std::nullopt, cfg);
  r.details["reproduces_root"] = v.reproduces_root;
  r.lines.push_back({"homotopy reproduces root", v.reproduces_root ? "yes" : "no"});
  if (v.base) r.add("base_point", *v.base);
  r.add("partial_F_slots", tidy(v.SmF));
  if (v.characteristic) r.add("characteristic", tidy(v.characteristic->expr));
  if (v.is_root) {
    r.verdict = "CHARACTERISTIC_ROOT";
    r.headline = "cosymmetry is the root of a characteristic";
  } else {
    r.verdict = "NOT_CHARACTERISTIC_ROOT";
    r.headline = "cosymmetry is not the root of a characteristic: E(Q Delta) != 0";
    std::string w;
    for (std::size_t i = 0; i < v.witness_points.size(); ++i)
      w += (i ? "; " : "") + point_string(v.witness_points[i]) + " -> " + v.witness_values[i];
    r.witness = w;
    r.code = False;
  }
  return r;
}

inline Report cmd_cosym_solve(const std::string& eqf, const std::string& basisf, const ZeroTestConfig& cfg) {
  Problem p = load_equation(eqf);
  const Equation& eq = pde(p);
  auto sols = solve_alsc_linear_ansatz(eq, load_basis(basisf), cfg);
  Report r;
  json arr = json::array();
  for (std::size_t i = 0; i < sols.size(); ++i) {
    arr.push_back(to_string(sols[i]));
    r.lines.push_back({"solution " + std::to_string(i + 1), to_string(sols[i])});
  }
  r.details["solutions"] = arr;
  r.verdict = sols.empty() ? "NONE" : "FOUND";
  r.headline = std::to_string(sols.size()) + " independent cosymmetr" + (sols.size() == 1 ? "y" : "ies") + " in the span";
  if (sols.empty()) r.code = False;
  return r;
}

inline Report cmd_noether(const std::string& lf, const std::string& qexpr, const ZeroTestConfig& cfg) {
  KeyValueFile f = KeyValueFile::load(lf);
  Expr L = f.expr("L");
  Expr Q = parse(qexpr);
  Report r;
  r.add("euler_lagrange", euler(L));
  if (!is_variational_symmetry(L, Q, cfg)) {
    r.verdict = "NOT_VARIATIONAL";
    r.headline = "not a variational symmetry: E(D_L(Q)) != 0";
    r.code = False;
    return r;
  }
  try {
    Characteristic c = noether_claw(L, Q, cfg);
    r.add("characteristic", c.expr);
    r.verdict = "NOETHER_CLAW";
    r.headline = "variational symmetry; Q is a characteristic of the Euler-Lagrange equation";
  } catch (const NotVariational& e) {
    r.verdict = "NOT_VARIATIONAL";
    r.headline = e.what();
    r.code = False;
  }
  return r;
}

// ---------------------------------------------------------------- driver

struct Globals {
  std::uint64_t seed = ZeroTestConfig{}.seed;
  int samples = ZeroTestConfig{}.sample_count;
  unsigned precision = ZeroTestConfig{}.float_precision_bits;
  std::string tol;
  std::string format = "text";
  bool deterministic = false;
};

inline void emit(std::ostream& out, const Globals& g, const std::string& command, const Report& r, double ms) {
  if (g.format == "json") {
    json j;
    j["command"] = command;
    j["verdict"] = r.verdict;
    if (r.witness) j["witness"] = *r.witness;
    j["samples"] = g.samples;
    j["seed"] = g.seed;
    j["elapsed_ms"] = g.deterministic ? 0.0 : ms;
    j["message"] = r.headline;
    for (auto& [k, v] : r.details.items()) j[k] = v;
    out << j.dump(2) << "\n";
    return;
  }
  out << r.headline << "\n";
  for (auto& [k, v] : r.lines) out << "  " << k << ": " << v << "\n";
  if (r.witness) out << "  witness: " << *r.witness << "\n";
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"conservation laws of difference equations through their characteristics", "deltaclaw"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  if (const char* env = std::getenv("DELTACLAW_SEED")) {
    try {
      g.seed = std::stoull(env);
    } catch (const std::exception&) {
      err << "DELTACLAW_SEED is not an unsigned integer\n";
      return Usage;
    }
  }
  app.add_option("--seed", g.seed, "random seed for the zero test");
  app.add_option("--samples", g.samples, "sample points per zero test")->check(CLI::Range(1, 100000));
  app.add_option("--precision", g.precision, "float precision in bits")->check(CLI::Range(64u, 65536u));
  app.add_option("--tol", g.tol, "relative tolerance for float evaluation, e.g. 1e-40");
  app.add_option("--format", g.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  app.add_flag("--deterministic", g.deterministic, "report elapsed_ms as 0");

  std::string eqf, c1, c2, rootexpr, ansatzf, qexpr, basisf, lagf;
  std::optional<std::string> base, densities;
  int shifts = 2, shear = 1, alpha_max = 3;
  bool transpose = false;

  std::function<Report(const ZeroTestConfig&)> action;
  std::string command;

  auto sub = [&](const std::string& name, const std::string& help) { return app.add_subcommand(name, help); };
  auto* verify = sub("verify", "check that densities form a conservation law");
  verify->add_option("equation", eqf)->required();
  verify->add_option("claw", c1)->required();
  verify->final_callback([&] { action = [&](const ZeroTestConfig& c) { return cmd_verify(eqf, c1, c); }; });

  auto* rt = sub("root", "root of a conservation law on the initial data");
  rt->add_option("equation", eqf)->required();
  rt->add_option("claw", c1)->required();
  rt->final_callback([&] { action = [&](const ZeroTestConfig& c) { return cmd_root(eqf, c1, c); }; });

  auto* triv = sub("trivial", "decide triviality through the root");
  triv->add_option("equation", eqf)->required();
  triv->add_option("claw", c1)->required();
  triv->final_callback([&] { action = [&](const ZeroTestConfig& c) { return cmd_trivial(eqf, c1, c); }; });

  auto* eqv = sub("equivalent", "compare two conservation laws up to scaling and shifts");
  eqv->add_option("equation", eqf)->required();
  eqv->add_option("claw1", c1)->required();
  eqv->add_option("claw2", c2)->required();
  eqv->add_option("--shifts", shifts, "largest shift tried in each direction")->check(CLI::Range(0, 8));
  eqv->final_callback([&] { action = [&](const ZeroTestConfig& c) { return cmd_equivalent(eqf, c1, c2, shifts, c); }; });

  auto* chr = sub("characteristic", "characteristic of a conservation law");
  chr->add_option("equation", eqf)->required();
  chr->add_option("claw", c1)->required();
  chr->final_callback([&] { action = [&](const ZeroTestConfig& c) { return cmd_characteristic(eqf, c1, c); }; });

  auto* rec = sub("reconstruct", "densities from a root");
  rec->add_option("equation", eqf)->required();
  rec->add_option("--root", rootexpr, "root, on row data or with w[0,j] slots")->required();
  rec->add_option("--ansatz", ansatzf, "unknown functions and their arguments")->required();
  rec->add_option("--base", base, "homotopy base point used when the integral at 0 is singular");
  rec->final_callback([&] { action = [&](const ZeroTestConfig& c) { return cmd_reconstruct(eqf, rootexpr, ansatzf, base, c); }; });

  auto* orec = sub("ode-reconstruct", "first integral of an ordinary difference equation from its root");
  orec->add_option("equation", eqf)->required();
  orec->add_option("--root", rootexpr)->required();
  orec->final_callback([&] { action = [&](const ZeroTestConfig& c) { return cmd_ode_reconstruct(eqf, rootexpr, c); }; });

  auto* tr = sub("transform", "shear a quad-graph equation into Kovalevskaya form");
  tr->add_option("equation", eqf)->required();
  tr->add_option("--shear", shear, "shear parameter k")->required();
  tr->add_flag("--transpose", transpose, "use (1 0; k 1) instead of (1 k; 0 1)");
  tr->add_option("--densities", densities, "conservation law to carry along");
  tr->final_callback([&] { action = [&](const ZeroTestConfig& c) { return cmd_transform(eqf, shear, transpose, densities, c); }; });

  auto* gd = sub("gardner", "Gardner hierarchy levels and their distinctness");
  gd->add_option("--alpha-max", alpha_max)->required()->check(CLI::Range(1, 6));
  gd->final_callback([&] { action = [&](const ZeroTestConfig& c) { return cmd_gardner(alpha_max, c); }; });

  auto* cc = sub("cosym-check", "adjoint condition and characteristic test");
  cc->add_option("equation", eqf)->required();
  cc->add_option("--q", qexpr)->required();
  cc->add_option("--base", base, "homotopy base point used when the integral at 0 is singular");
  cc->final_callback([&] { action = [&](const ZeroTestConfig& c) { return cmd_cosym_check(eqf, qexpr, base, c); }; });

  auto* cs = sub("cosym-solve", "cosymmetries in the span of a basis");
  cs->add_option("equation", eqf)->required();
  cs->add_option("--basis", basisf)->required();
  cs->final_callback([&] { action = [&](const ZeroTestConfig& c) { return cmd_cosym_solve(eqf, basisf, c); }; });

  auto* no = sub("noether", "variational symmetry to conservation law");
  no->add_option("lagrangian", lagf)->required();
  no->add_option("--q", qexpr)->required();
  no->final_callback([&] { action = [&](const ZeroTestConfig& c) { return cmd_noether(lagf, qexpr, c); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return Ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return Ok;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return Usage;
  }

  command = app.get_subcommands().front()->get_name();
  ZeroTestConfig cfg;
  cfg.seed = g.seed;
  cfg.sample_count = g.samples;
  cfg.float_precision_bits = g.precision;
  auto t0 = std::chrono::steady_clock::now();
  Report r;
  try {
    if (!g.tol.empty()) cfg.relative_tolerance = parse_rational(g.tol);
    if (!action) throw UsageError("no subcommand");
    r = action(cfg);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return Usage;
  } catch (const ProblemFileError& e) {
    err << "problem file: " << e.what() << "\n";
    return Usage;
  } catch (const ParseError& e) {
    err << "expression: " << e.what() << "\n";
    return Usage;
  } catch (const SamplingExhausted& e) {
    r = {};
    r.verdict = "SAMPLING_EXHAUSTED";
    r.headline = std::string("sampling exhausted: ") + e.what();
    r.code = Sampling;
  } catch (const std::exception& e) {
    // integration class, Kovalevskaya form, ansatz and similar limits
    r = {};
    r.verdict = "UNSUPPORTED";
    r.headline = std::string("unsupported: ") + e.what();
    r.code = Unsupported;
  }
  double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  emit(out, g, command, r, ms);
  return r.code;
}

}  // namespace deltaclaw::cli
