#pragma once

#include <unordered_map>

#include "eval.hpp"

namespace deltaclaw {

// multivariate polynomials over Q in opaque atoms, graded lex order
class AtomTable {
 public:
  int id(const Expr& e) {
    auto it = ids_.find(e);
    if (it != ids_.end()) return it->second;
    int k = static_cast<int>(atoms_.size());
    atoms_.push_back(e);
    ids_.emplace(e, k);
    return k;
  }
  std::optional<int> find(const Expr& e) const {
    auto it = ids_.find(e);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }
  const Expr& atom(int k) const { return atoms_[k]; }
  int size() const { return static_cast<int>(atoms_.size()); }

 private:
  std::vector<Expr> atoms_;
  std::unordered_map<Expr, int, ExprHash, ExprEq> ids_;
};

struct Monomial {
  std::vector<int> e;  // exponent per atom id, trailing zeros trimmed

  int degree() const {
    int d = 0;
    for (int x : e) d += x;
    return d;
  }
  int at(int k) const { return k < static_cast<int>(e.size()) ? e[k] : 0; }
  void trim() {
    while (!e.empty() && e.back() == 0) e.pop_back();
  }
  Monomial operator*(const Monomial& o) const {
    Monomial r;
    r.e.resize(std::max(e.size(), o.e.size()), 0);
    for (std::size_t i = 0; i < r.e.size(); ++i) r.e[i] = at(static_cast<int>(i)) + o.at(static_cast<int>(i));
    r.trim();
    return r;
  }
  std::optional<Monomial> divide(const Monomial& o) const {
    Monomial r;
    r.e.resize(std::max(e.size(), o.e.size()), 0);
    for (std::size_t i = 0; i < r.e.size(); ++i) {
      r.e[i] = at(static_cast<int>(i)) - o.at(static_cast<int>(i));
      if (r.e[i] < 0) return std::nullopt;
    }
    r.trim();
    return r;
  }
};

struct GrLex {
  bool operator()(const Monomial& a, const Monomial& b) const {
    int da = a.degree(), db = b.degree();
    if (da != db) return da < db;
    std::size_t n = std::max(a.e.size(), b.e.size());
    for (std::size_t i = 0; i < n; ++i) {
      int x = a.at(static_cast<int>(i)), y = b.at(static_cast<int>(i));
      if (x != y) return x < y;
    }
    return false;
  }
};

class MPoly {
 public:
  using Terms = std::map<Monomial, mpq_class, GrLex>;

  MPoly() = default;
  explicit MPoly(const mpq_class& c) {
    if (sgn(c) != 0) t_[Monomial{}] = c;
  }
  static MPoly atom(int k, int power = 1) {
    Monomial m;
    m.e.assign(k + 1, 0);
    m.e[k] = power;
    MPoly p;
    p.t_[m] = 1;
    return p;
  }

  bool is_zero() const { return t_.empty(); }
  bool is_constant() const { return t_.empty() || (t_.size() == 1 && t_.begin()->first.e.empty()); }
  mpq_class constant() const {
    auto it = t_.find(Monomial{});
    return it == t_.end() ? mpq_class(0) : it->second;
  }
  const Terms& terms() const { return t_; }
  std::size_t size() const { return t_.size(); }
  const Monomial& lead() const { return t_.rbegin()->first; }
  const mpq_class& lead_coeff() const { return t_.rbegin()->second; }

  MPoly operator+(const MPoly& o) const {
    MPoly r = *this;
    for (auto& [m, c] : o.t_) r.accumulate(m, c);
    return r;
  }
  MPoly operator-(const MPoly& o) const {
    MPoly r = *this;
    for (auto& [m, c] : o.t_) r.accumulate(m, -c);
    return r;
  }
  MPoly operator*(const MPoly& o) const {
    MPoly r;
    for (auto& [m1, c1] : t_)
      for (auto& [m2, c2] : o.t_) r.accumulate(m1 * m2, c1 * c2);
    return r;
  }
  MPoly scaled(const mpq_class& c) const {
    MPoly r;
    if (sgn(c) == 0) return r;
    for (auto& [m, x] : t_) r.t_[m] = x * c;
    return r;
  }
  MPoly pow(int k) const {
    MPoly r(1), b = *this;
    while (k > 0) {
      if (k & 1) r = r * b;
      b = b * b;
      k >>= 1;
    }
    return r;
  }
  bool operator==(const MPoly& o) const { return (*this - o).is_zero(); }

  int degree_in(int atom) const {
    int d = 0;
    for (auto& [m, c] : t_) d = std::max(d, m.at(atom));
    return d;
  }
  // coefficient of atom^k, as a polynomial free of that atom
  MPoly coeff_in(int atom, int k) const {
    MPoly r;
    for (auto& [m, c] : t_) {
      if (m.at(atom) != k) continue;
      Monomial mm = m;
      if (atom < static_cast<int>(mm.e.size())) mm.e[atom] = 0;
      mm.trim();
      r.accumulate(mm, c);
    }
    return r;
  }

  // exact quotient, if the division leaves no remainder
  std::optional<MPoly> divide(const MPoly& d) const {
    if (d.is_zero()) return std::nullopt;
    MPoly q, r = *this;
    const Monomial& lm = d.lead();
    const mpq_class& lc = d.lead_coeff();
    std::size_t guard = 0;
    while (!r.is_zero()) {
      auto m = r.lead().divide(lm);
      if (!m) return std::nullopt;
      mpq_class c = r.lead_coeff() / lc;
      MPoly t;
      t.t_[*m] = c;
      q = q + t;
      r = r - t * d;
      if (++guard > 100000) return std::nullopt;
    }
    return q;
  }

  // exact square root, if this is a perfect square (up to sign of the result)
  std::optional<MPoly> sqrt() const {
    if (is_zero()) return MPoly();
    const Monomial& lm = lead();
    Monomial h;
    for (int x : lm.e) {
      if (x % 2) return std::nullopt;
      h.e.push_back(x / 2);
    }
    h.trim();
    mpq_class lc = lead_coeff();
    if (sgn(lc) < 0) return std::nullopt;
    mpz_class nn = lc.get_num(), dd = lc.get_den();
    if (!mpz_perfect_square_p(nn.get_mpz_t()) || !mpz_perfect_square_p(dd.get_mpz_t())) return std::nullopt;
    mpz_class sn, sd;
    mpz_sqrt(sn.get_mpz_t(), nn.get_mpz_t());
    mpz_sqrt(sd.get_mpz_t(), dd.get_mpz_t());
    MPoly s;
    s.t_[h] = mpq_class(sn, sd);
    const Monomial slm = h;
    const mpq_class slc = mpq_class(sn, sd);
    MPoly r = *this - s * s;
    std::size_t guard = 0;
    while (!r.is_zero()) {
      auto m = r.lead().divide(slm);
      if (!m) return std::nullopt;
      // the remainder lead must come from 2 * lead(s) * t
      if (!GrLex()(*m, slm)) return std::nullopt;
      MPoly t;
      t.t_[*m] = r.lead_coeff() / (2 * slc);
      s = s + t;
      r = *this - s * s;
      if (++guard > size() + 64) return std::nullopt;
    }
    return s;
  }

  Expr to_expr(const AtomTable& at) const {
    std::vector<Expr> ts;
    for (auto it = t_.rbegin(); it != t_.rend(); ++it) {
      std::vector<Expr> fs{Expr(it->second)};
      for (std::size_t k = 0; k < it->first.e.size(); ++k)
        if (it->first.e[k]) fs.push_back(deltaclaw::pow(at.atom(static_cast<int>(k)), it->first.e[k]));
      ts.push_back(mul(std::move(fs)));
    }
    return add(std::move(ts));
  }

 private:
  void accumulate(const Monomial& m, const mpq_class& c) {
    if (sgn(c) == 0) return;
    auto it = t_.find(m);
    if (it == t_.end()) {
      t_.emplace(m, c);
      return;
    }
    it->second += c;
    if (sgn(it->second) == 0) t_.erase(it);
  }

  Terms t_;
};

struct RatFun {
  MPoly num, den = MPoly(1);
};

inline RatFun operator+(const RatFun& a, const RatFun& b) {
  if (a.den == b.den) return {a.num + b.num, a.den};
  return {a.num * b.den + b.num * a.den, a.den * b.den};
}
inline RatFun operator*(const RatFun& a, const RatFun& b) { return {a.num * b.num, a.den * b.den}; }

// Expr -> ratio of polynomials; sqrt atoms are stored as sqrt(b) and raised to integer powers
struct PolyBudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class PolyConverter {
 public:
  explicit PolyConverter(AtomTable& at, std::size_t budget = 0) : at_(at), budget_(budget) {}

  RatFun operator()(const Expr& e) {
    auto it = memo_.find(e.get());
    if (it != memo_.end()) return it->second;
    RatFun r = convert(e);
    memo_.emplace(e.get(), r);
    keep_.push_back(e);
    return r;
  }

 private:
  RatFun power(const RatFun& b, long k) {
    if (k >= 0) return {b.num.pow(static_cast<int>(k)), b.den.pow(static_cast<int>(k))};
    if (b.num.is_zero()) throw DomainError("zero to a negative power");
    return {b.den.pow(static_cast<int>(-k)), b.num.pow(static_cast<int>(-k))};
  }

  RatFun convert(const Expr& e) {
    switch (e.kind()) {
      case Kind::Const:
        return {MPoly(e.value())};
      case Kind::Sum: {
        RatFun r{MPoly()};
        for (std::size_t i = 0; i < e.arity(); ++i) {
          RatFun k = (*this)(e.kid(i));
          if (!(r.den == k.den)) charge(r.num.size() * k.den.size() + k.num.size() * r.den.size() + r.den.size() * k.den.size());
          r = r + k;
        }
        return r;
      }
      case Kind::Prod: {
        RatFun r{MPoly(1)};
        for (std::size_t i = 0; i < e.arity(); ++i) {
          RatFun k = (*this)(e.kid(i));
          charge(r.num.size() * k.num.size() + r.den.size() * k.den.size());
          r = r * k;
        }
        return r;
      }
      case Kind::Pow:
        return power((*this)(e.kid(0)), e.node().ex);
      case Kind::Root: {
        const mpq_class& q = e.node().q;
        if (q.get_den() == 2) {
          Expr base = sqrt(e.kid(0));
          RatFun a{MPoly::atom(at_.id(base))};
          return power(a, q.get_num().get_si());
        }
        return {MPoly::atom(at_.id(e))};
      }
      default:
        return {MPoly::atom(at_.id(e))};
    }
  }

  void charge(std::size_t work) {
    if (budget_ == 0) return;
    if (work > budget_) throw PolyBudgetExceeded("polynomial arithmetic over budget");
    budget_ -= work;
    if (budget_ == 0) throw PolyBudgetExceeded("polynomial arithmetic over budget");
  }

  AtomTable& at_;
  std::size_t budget_;
  std::unordered_map<const Node*, RatFun> memo_;
  std::vector<Expr> keep_;
};

// rewrite with one common denominator, cancelling it when it divides exactly
inline Expr together(const Expr& e, std::size_t budget = 0) {
  AtomTable at;
  PolyConverter pc(at, budget);
  RatFun r = pc(e);
  if (r.den.is_constant()) return r.num.scaled(mpq_class(1) / r.den.constant()).to_expr(at);
  if (auto q = r.num.divide(r.den)) return q->to_expr(at);
  return r.num.to_expr(at) / r.den.to_expr(at);
}

// term by term, keeps the combined form only where it is shorter
inline Expr tidy(const Expr& e, std::size_t max_len = 4000, std::size_t budget = 200000) {
  auto attempt = [&](const Expr& x, std::size_t len) -> std::optional<Expr> {
    try {
      Expr c = together(x, budget);
      if (to_string(c).size() <= len) return c;
    } catch (const PolyBudgetExceeded&) {
    }
    return std::nullopt;
  };
  std::string whole = to_string(e);
  if (whole.size() <= max_len)
    if (auto c = attempt(e, whole.size())) return *c;
  std::vector<Expr> ts;
  for (auto& t : terms_of(e)) {
    std::string ts0 = to_string(t);
    auto c = ts0.size() <= max_len ? attempt(t, ts0.size()) : std::nullopt;
    ts.push_back(c ? *c : t);
  }
  return add(ts);
}

namespace detail {

// x + y*R with (x + y*R)^2 = p + q*R and R^2 = r, x and y polynomials
inline std::optional<std::pair<MPoly, MPoly>> denest_pair(const MPoly& p, const MPoly& q, const MPoly& r) {
  if (q.is_zero()) {
    auto s = p.sqrt();
    if (!s) return std::nullopt;
    return std::pair{*s, MPoly()};
  }
  auto S = (p * p - q * q * r).sqrt();
  if (!S) return std::nullopt;
  for (int sg : {1, -1}) {
    MPoly x2 = (sg > 0 ? p + *S : p - *S).scaled(mpq_class(1, 2));
    if (x2.is_zero()) {
      // p = -/+ S: x = 0, y^2 r = p
      auto y2 = p.divide(r);
      if (!y2) continue;
      auto y = y2->sqrt();
      if (!y) continue;
      return std::pair{MPoly(), *y};
    }
    auto x = x2.sqrt();
    if (!x) continue;
    auto y = q.divide(x->scaled(2));
    if (!y) continue;
    return std::pair{*x, *y};
  }
  return std::nullopt;
}

// the sign that makes cand agree with target, checked at several points
inline std::optional<int> matching_sign(const Expr& target, const Expr& cand, std::uint64_t seed) {
  ZeroTestConfig cfg;
  cfg.rational_mode = false;
  cfg.strict_ln = true;
  Sampler s(seed);
  int found = 0, sign = 0, tries = 0;
  while (found < 6 && tries < 400) {
    ++tries;
    EvalPoint p = s.draw(target + cand);
    try {
      FloatEvaluator ft(p, cfg.float_precision_bits, true), fc(p, cfg.float_precision_bits, true);
      Real a = ft(target), b = fc(cand);
      Real tol = Real(mpq_class(1, 1000000000), cfg.float_precision_bits) * (a.abs() + Real(mpq_class(1), cfg.float_precision_bits));
      int sg;
      if ((a - b).abs() <= tol)
        sg = 1;
      else if ((a + b).abs() <= tol)
        sg = -1;
      else
        return std::nullopt;
      if (a.abs() <= tol) continue;
      if (sign && sg != sign) return std::nullopt;
      sign = sg;
      ++found;
    } catch (const DomainError&) {
    }
  }
  if (!sign) return std::nullopt;
  return sign;
}

}  // namespace detail

// sqrt(p + q*sqrt(r)) -> x + y*sqrt(r) where possible; applied bottom up
inline Expr denest(const Expr& e) {
  Rewriter rw(
      [&](const Expr& x) -> std::optional<Expr> {
        if (x.kind() != Kind::Root || x.node().q.get_den() != 2) return std::nullopt;
        Expr base = denest(x.kid(0));
        long k = x.node().q.get_num().get_si();
        Expr fallback = root_pow(base, mpq_class(k, 2));
        AtomTable at;
        PolyConverter pc(at);
        RatFun X;
        try {
          X = pc(base);
        } catch (const DomainError&) {
          return fallback;
        }
        // at most one square-root atom, with a radical-free radicand
        std::optional<int> rid;
        for (int i = 0; i < at.size(); ++i) {
          const Expr& a = at.atom(i);
          if (a.kind() == Kind::Root) {
            if (rid || a.node().q != mpq_class(1, 2)) return fallback;
            rid = i;
          }
        }
        MPoly p, q, d, r;
        if (rid) {
          RatFun rr = PolyConverter(at)(at.atom(*rid).kid(0));
          if (!rr.den.is_constant()) return fallback;
          for (int i = 0; i < at.size(); ++i)
            if (i != *rid && at.atom(i).kind() == Kind::Root) return fallback;
          r = rr.num.scaled(mpq_class(1) / rr.den.constant());
          if (r.degree_in(*rid) > 0) return fallback;
          auto split = [&](const MPoly& P) {
            MPoly a, b;
            int dg = P.degree_in(*rid);
            for (int j = 0; j <= dg; ++j) {
              MPoly c = P.coeff_in(*rid, j) * r.pow(j / 2);
              if (j % 2)
                b = b + c;
              else
                a = a + c;
            }
            return std::pair{a, b};
          };
          auto [A, B] = split(X.num);
          auto [C, E] = split(X.den);
          // (A + B R)/(C + E R) = ((A + B R)(C - E R))/(C^2 - E^2 r)
          d = C * C - E * E * r;
          MPoly p0 = A * C - B * E * r, q0 = B * C - A * E;
          p = p0 * d;
          q = q0 * d;
        } else {
          d = X.den;
          p = X.num * X.den;
        }
        if (d.is_zero()) return fallback;
        auto xy = detail::denest_pair(p, q, r);
        if (!xy) return fallback;
        Expr R = rid ? at.atom(*rid) : Expr(0);
        Expr cand = (xy->first.to_expr(at) + xy->second.to_expr(at) * R) / d.to_expr(at);
        auto sg = detail::matching_sign(sqrt(base), cand, base.hash());
        if (!sg) return fallback;
        return pow(Expr(*sg) * cand, k);
      },
      [](const Expr& x) { return x.is_const(); });
  return rw(e);
}

}  // namespace deltaclaw
