#pragma once

#include <mpfr.h>

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <unordered_map>
#include <variant>

#include "expr.hpp"

namespace deltaclaw {

struct SamplingExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// RAII mpfr value, precision fixed at construction
class Real {
 public:
  explicit Real(mpfr_prec_t prec = 256) { mpfr_init2(v_, prec); mpfr_set_zero(v_, 1); }
  Real(const mpq_class& q, mpfr_prec_t prec) {
    mpfr_init2(v_, prec);
    mpfr_set_q(v_, q.get_mpq_t(), MPFR_RNDN);
  }
  Real(const Real& o) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, MPFR_RNDN);
  }
  Real(Real&& o) noexcept {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_swap(v_, o.v_);
  }
  Real& operator=(const Real& o) {
    if (this != &o) {
      mpfr_set_prec(v_, mpfr_get_prec(o.v_));
      mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    return *this;
  }
  Real& operator=(Real&& o) noexcept {
    mpfr_swap(v_, o.v_);
    return *this;
  }
  ~Real() { mpfr_clear(v_); }

  mpfr_prec_t prec() const { return mpfr_get_prec(v_); }
  mpfr_ptr raw() { return v_; }
  mpfr_srcptr raw() const { return v_; }
  int sign() const { return mpfr_sgn(v_); }
  bool is_zero() const { return mpfr_zero_p(v_); }
  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }

  Real abs() const {
    Real r(prec());
    mpfr_abs(r.v_, v_, MPFR_RNDN);
    return r;
  }
  friend Real operator+(const Real& a, const Real& b) {
    Real r(a.prec());
    mpfr_add(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }
  friend Real operator-(const Real& a, const Real& b) {
    Real r(a.prec());
    mpfr_sub(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }
  friend Real operator*(const Real& a, const Real& b) {
    Real r(a.prec());
    mpfr_mul(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }
  friend Real operator/(const Real& a, const Real& b) {
    Real r(a.prec());
    mpfr_div(r.v_, a.v_, b.v_, MPFR_RNDN);
    return r;
  }
  friend bool operator<(const Real& a, const Real& b) { return mpfr_less_p(a.v_, b.v_); }
  friend bool operator<=(const Real& a, const Real& b) { return mpfr_lessequal_p(a.v_, b.v_); }

  Real pow_si(long k) const {
    Real r(prec());
    mpfr_pow_si(r.v_, v_, k, MPFR_RNDN);
    return r;
  }
  Real pow(const Real& e) const {
    Real r(prec());
    mpfr_pow(r.v_, v_, e.v_, MPFR_RNDN);
    return r;
  }
  Real log() const {
    Real r(prec());
    mpfr_log(r.v_, v_, MPFR_RNDN);
    return r;
  }
  std::string str(int digits = 20) const {
    char* s = nullptr;
    mpfr_asprintf(&s, "%.*Rg", digits, v_);
    std::string out(s);
    mpfr_free_str(s);
    return out;
  }

 private:
  mpfr_t v_;
};

struct EvalPoint {
  std::map<LatticeVar, mpq_class> vars;
  std::map<std::string, mpq_class> syms;
};

struct ZeroTestConfig {
  int sample_count = 12;
  bool rational_mode = true;
  unsigned float_precision_bits = 256;
  mpq_class relative_tolerance = mpq_class(mpz_class(1), mpz_class("10000000000000000000000000000000000000000"));
  int max_resamples = 200;
  bool strict_ln = false;  // ln of nonpositive values is a domain error instead of ln|x|
  std::uint64_t seed = 20240611ULL;
};

namespace detail {
struct NeedFloat {};
}  // namespace detail

class ExactEvaluator {
 public:
  explicit ExactEvaluator(const EvalPoint& p) : p_(p) {}
  mpq_class operator()(const Expr& e) {
    const Node* n = e.get();
    if (n->kind == Kind::Const) return n->q;
    auto it = memo_.find(n);
    if (it != memo_.end()) return it->second;
    mpq_class v = compute(e);
    memo_.emplace(n, v);
    return v;
  }

 private:
  mpq_class compute(const Expr& e) {
    const Node& n = e.node();
    switch (n.kind) {
      case Kind::Sym: {
        auto it = p_.syms.find(n.name);
        if (it == p_.syms.end()) throw DomainError("no value for symbol " + n.name);
        return it->second;
      }
      case Kind::Var: {
        auto it = p_.vars.find(n.var);
        if (it == p_.vars.end()) throw DomainError("no value for " + to_string(n.var));
        return it->second;
      }
      case Kind::Parity: {
        mpz_class mm = sym_int("m"), nn = sym_int("n");
        mpz_class t = n.pa * mm + n.pb * nn + n.pc;
        return mpz_odd_p(t.get_mpz_t()) ? mpq_class(-1) : mpq_class(1);
      }
      case Kind::Sum: {
        mpq_class s = 0;
        for (auto& k : n.kids) s += (*this)(Expr(k));
        return s;
      }
      case Kind::Prod: {
        mpq_class s = 1;
        // no early exit: a later factor may be undefined here
        for (auto& k : n.kids) s *= (*this)(Expr(k));
        return s;
      }
      case Kind::Pow:
        return qpow((*this)(e.kid(0)), n.ex);
      case Kind::Root: {
        mpq_class b = (*this)(e.kid(0));
        unsigned long d = n.q.get_den().get_ui();
        if (sgn(b) < 0 && d % 2 == 0) throw DomainError("even root of negative value");
        mpq_class ab = abs(b);
        auto rn = detail::exact_root(ab.get_num(), d);
        auto rd = detail::exact_root(ab.get_den(), d);
        if (!rn || !rd) throw detail::NeedFloat{};
        mpq_class r(*rn, *rd);
        if (sgn(b) < 0) r = -r;
        return qpow(r, n.q.get_num().get_si());
      }
      case Kind::Exp: {
        mpq_class x = (*this)(e.kid(0));
        if (x.get_den() != 1) throw detail::NeedFloat{};
        return qpow(n.q, x.get_num().get_si());
      }
      case Kind::Ln: {
        mpq_class x = (*this)(e.kid(0));
        if (sgn(x) == 0) throw DomainError("ln of zero");
        if (abs(x) == 1) return 0;
        throw detail::NeedFloat{};
      }
      default:
        return n.q;
    }
  }
  static mpq_class qpow(const mpq_class& b, long k) { return detail::qpow(b, k); }
  mpz_class sym_int(const std::string& s) const {
    auto it = p_.syms.find(s);
    if (it == p_.syms.end() || it->second.get_den() != 1) throw DomainError("parity needs integer " + s);
    return it->second.get_num();
  }
  const EvalPoint& p_;
  std::unordered_map<const Node*, mpq_class> memo_;
};

class FloatEvaluator {
 public:
  FloatEvaluator(const EvalPoint& p, unsigned bits, bool strict_ln)
      : p_(p), bits_(bits), strict_(strict_ln), scale_(mpq_class(1), bits) {}
  Real operator()(const Expr& e) {
    const Node* n = e.get();
    auto it = memo_.find(n);
    if (it != memo_.end()) return it->second;
    Real v = compute(e);
    Real a = v.abs();
    if (scale_ < a) scale_ = a;
    memo_.emplace(n, v);
    return v;
  }
  // largest magnitude seen among intermediate values, at least 1
  const Real& scale() const { return scale_; }

 private:
  Real compute(const Expr& e) {
    const Node& n = e.node();
    switch (n.kind) {
      case Kind::Const:
        return Real(n.q, bits_);
      case Kind::Sym:
      case Kind::Var:
      case Kind::Parity:
        return Real(ExactEvaluator(p_)(e), bits_);
      case Kind::Sum: {
        Real s(bits_), big(bits_);
        for (auto& k : n.kids) {
          Real t = (*this)(Expr(k));
          if (big < t.abs()) big = t.abs();
          s = s + t;
        }
        // cancellation down to rounding level counts as an exact zero
        Real eps(mpq_class(mpz_class(1), mpz_class(1) << (bits_ - 24)), bits_);
        if (s.abs() <= big * eps) return Real(bits_);
        return s;
      }
      case Kind::Prod: {
        Real s(mpq_class(1), bits_);
        for (auto& k : n.kids) s = s * (*this)(Expr(k));
        return s;
      }
      case Kind::Pow: {
        Real b = (*this)(e.kid(0));
        if (n.ex < 0 && b.is_zero()) throw DomainError("division by zero");
        return b.pow_si(n.ex);
      }
      case Kind::Root: {
        Real b = (*this)(e.kid(0));
        unsigned long d = n.q.get_den().get_ui();
        if (b.sign() < 0 && d % 2 == 0) throw DomainError("even root of negative value");
        if (b.is_zero() && sgn(n.q) < 0) throw DomainError("division by zero");
        Real r = b.abs().pow(Real(mpq_class(1, d), bits_));
        if (b.sign() < 0) r = Real(mpq_class(0), bits_) - r;
        return r.pow_si(n.q.get_num().get_si());
      }
      case Kind::Exp: {
        Real x = (*this)(e.kid(0));
        return Real(n.q, bits_).pow(x);
      }
      case Kind::Ln: {
        Real x = (*this)(e.kid(0));
        if (x.is_zero()) throw DomainError("ln of zero");
        if (x.sign() < 0) {
          if (strict_) throw DomainError("ln of negative value");
          x = x.abs();
        }
        return x.log();
      }
    }
    return Real(bits_);
  }
  const EvalPoint& p_;
  unsigned bits_;
  bool strict_;
  Real scale_;
  std::unordered_map<const Node*, Real> memo_;
};

using Value = std::variant<mpq_class, Real>;

inline Value evaluate(const Expr& e, const EvalPoint& p, const ZeroTestConfig& cfg = {}) {
  if (cfg.rational_mode) {
    try {
      return ExactEvaluator(p)(e);
    } catch (const detail::NeedFloat&) {
    }
  }
  return FloatEvaluator(p, cfg.float_precision_bits, cfg.strict_ln)(e);
}

inline double to_double(const Value& v) {
  if (auto q = std::get_if<mpq_class>(&v)) return q->get_d();
  return std::get<Real>(v).to_double();
}

inline std::string to_string(const Value& v) {
  if (auto q = std::get_if<mpq_class>(&v)) return q->get_str();
  return std::get<Real>(v).str();
}

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}
  mpq_class rational() {
    std::uniform_int_distribution<int> d(-12, 11);
    int a = d(rng_), b = d(rng_);
    if (a >= 0) ++a;
    if (b >= 0) ++b;
    mpq_class q(a, b);
    q.canonicalize();
    return q;
  }
  long integer() {
    std::uniform_int_distribution<long> d(-12, 12);
    return d(rng_);
  }
  EvalPoint draw(const Expr& e) {
    EvalPoint p;
    for (auto& v : e.vars()) p.vars[v] = rational();
    for (auto& s : e.syms()) p.syms[s] = (s == "m" || s == "n") ? mpq_class(integer()) : rational();
    // parity nodes read m and n without listing them as symbols
    if (!p.syms.count("m")) p.syms["m"] = mpq_class(integer());
    if (!p.syms.count("n")) p.syms["n"] = mpq_class(integer());
    return p;
  }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

struct ZeroTestReport {
  bool zero = true;
  int points = 0;
  int resamples = 0;
  std::vector<EvalPoint> witness_points;
  std::vector<std::string> witness_values;
};

// nonzero at a point: exact check, or relative float check
inline bool nonzero_at(const Expr& e, const EvalPoint& p, const ZeroTestConfig& cfg, std::string* shown = nullptr) {
  if (cfg.rational_mode) {
    try {
      mpq_class v = ExactEvaluator(p)(e);
      if (shown) *shown = v.get_str();
      return sgn(v) != 0;
    } catch (const detail::NeedFloat&) {
    }
  }
  FloatEvaluator fe(p, cfg.float_precision_bits, cfg.strict_ln);
  Real v = fe(e);
  if (shown) *shown = v.str();
  Real bound = Real(cfg.relative_tolerance, cfg.float_precision_bits) * fe.scale();
  return !(v.abs() <= bound);
}

inline ZeroTestReport zero_test(const Expr& e, const ZeroTestConfig& cfg = {}, int witnesses = 0) {
  ZeroTestReport r;
  if (e.is_const()) {
    r.zero = sgn(e.value()) == 0;
    r.points = cfg.sample_count;
    return r;
  }
  Sampler s(cfg.seed ^ (e.hash() * 0x9e3779b97f4a7c15ULL));
  std::size_t want = witnesses > 0 ? static_cast<std::size_t>(witnesses) : 1;
  int cap = 4 * std::max(cfg.sample_count, witnesses);
  while (r.points < cap) {
    if (r.points >= cfg.sample_count && (r.zero || r.witness_points.size() >= want)) break;
    EvalPoint p = s.draw(e);
    bool nz;
    std::string shown;
    try {
      nz = nonzero_at(e, p, cfg, witnesses ? &shown : nullptr);
    } catch (const DomainError&) {
      if (++r.resamples > cfg.max_resamples)
        throw SamplingExhausted("no valid sample point after " + std::to_string(cfg.max_resamples) + " resamples");
      continue;
    }
    ++r.points;
    if (!nz) continue;
    r.zero = false;
    if (!witnesses) return r;
    if (r.witness_points.size() < want) {
      r.witness_points.push_back(p);
      r.witness_values.push_back(shown);
    }
  }
  return r;
}

inline bool is_zero(const Expr& e, const ZeroTestConfig& cfg = {}) { return zero_test(e, cfg).zero; }

inline bool depends_on(const Expr& e, const LatticeVar& v, const ZeroTestConfig& cfg = {}) {
  if (!e.has_var(v)) return false;
  return !is_zero(differentiate(e, v), cfg);
}

inline bool depends_on_symbol(const Expr& e, const std::string& s, const ZeroTestConfig& cfg = {}) {
  if (!e.has_sym(s)) return false;
  return !is_zero(differentiate(e, sym(s)), cfg);
}

// candidate c with a = c*b at one sample point, callers confirm
inline std::optional<mpq_class> constant_ratio(const Expr& a, const Expr& b, const ZeroTestConfig& cfg = {}) {
  Sampler s(cfg.seed ^ 0x5bd1e995ULL ^ a.hash());
  Expr both = a + b;
  for (int tries = 0; tries < cfg.max_resamples; ++tries) {
    EvalPoint p = s.draw(both);
    try {
      Value va = evaluate(a, p, cfg), vb = evaluate(b, p, cfg);
      if (auto qa = std::get_if<mpq_class>(&va)) {
        if (auto qb = std::get_if<mpq_class>(&vb)) {
          if (sgn(*qb) == 0) continue;
          return *qa / *qb;
        }
      }
      double da = to_double(va), db = to_double(vb);
      if (db == 0) continue;
      // recognize a small rational from the float ratio
      double r = da / db;
      for (long den = 1; den <= 1000; ++den) {
        double nu = std::round(r * den);
        if (std::fabs(nu / den - r) < 1e-12 * std::max(1.0, std::fabs(r))) return mpq_class(static_cast<long>(nu), den);
      }
      return std::nullopt;
    } catch (const DomainError&) {
    }
  }
  throw SamplingExhausted("no valid point for ratio");
}

}  // namespace deltaclaw
