#pragma once

#include "eval.hpp"

namespace deltaclaw {

struct IntegrationUnsupported : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularIntegral : DomainError {
  using DomainError::DomainError;
};

using Poly = std::vector<Expr>;  // coefficient of x^k at k

namespace poly {

inline Expr coef(const Poly& p, std::size_t k) { return k < p.size() ? p[k] : Expr(0); }

inline void drop_structural(Poly& p) {
  while (!p.empty() && p.back().is_zero_const()) p.pop_back();
}

inline Poly add(const Poly& a, const Poly& b) {
  Poly r(std::max(a.size(), b.size()), Expr(0));
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = coef(a, i) + coef(b, i);
  drop_structural(r);
  return r;
}

inline Poly scale(const Poly& a, const Expr& c) {
  Poly r;
  r.reserve(a.size());
  for (auto& x : a) r.push_back(c * x);
  drop_structural(r);
  return r;
}

inline Poly mul(const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return {};
  std::vector<std::vector<Expr>> acc(a.size() + b.size() - 1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].is_zero_const()) continue;
    for (std::size_t j = 0; j < b.size(); ++j)
      if (!b[j].is_zero_const()) acc[i + j].push_back(a[i] * b[j]);
  }
  Poly r;
  for (auto& t : acc) r.push_back(deltaclaw::add(t));
  drop_structural(r);
  return r;
}

inline Poly power(const Poly& a, int k) {
  Poly r{Expr(1)};
  for (int i = 0; i < k; ++i) r = mul(r, a);
  return r;
}

inline Poly monomial(int k, const Expr& c = Expr(1)) {
  Poly r(k + 1, Expr(0));
  r[k] = c;
  return r;
}

inline Expr to_expr(const Poly& p, const Expr& x) {
  std::vector<Expr> ts;
  for (std::size_t k = 0; k < p.size(); ++k)
    if (!p[k].is_zero_const()) ts.push_back(p[k] * pow(x, static_cast<long>(k)));
  return deltaclaw::add(ts);
}

inline Expr at(const Poly& p, const Expr& x0) {
  Expr r(0);
  for (std::size_t k = p.size(); k-- > 0;) r = r * x0 + p[k];
  return r;
}

inline Poly derivative(const Poly& p) {
  Poly r;
  for (std::size_t k = 1; k < p.size(); ++k) r.push_back(Expr(static_cast<long>(k)) * p[k]);
  drop_structural(r);
  return r;
}

// Taylor coefficients of p at x0, orders 0..n-1
inline Poly taylor(const Poly& p, const Expr& x0, int n) {
  Poly r;
  Poly cur = p;
  mpq_class fact = 1;
  for (int j = 0; j < n; ++j) {
    if (j > 0) fact *= j;
    r.push_back(Expr(mpq_class(1) / fact) * at(cur, x0));
    cur = derivative(cur);
  }
  return r;
}

// truncated power series product
inline Poly series_mul(const Poly& a, const Poly& b, int n) {
  Poly r(n, Expr(0));
  for (int i = 0; i < n; ++i) {
    std::vector<Expr> ts;
    for (int j = 0; j <= i; ++j) {
      Expr x = coef(a, j), y = coef(b, i - j);
      if (!x.is_zero_const() && !y.is_zero_const()) ts.push_back(x * y);
    }
    r[i] = deltaclaw::add(ts);
  }
  return r;
}

}  // namespace poly

// univariate integration in x (a lattice variable or a symbol)
class Integrator {
 public:
  explicit Integrator(Expr x, ZeroTestConfig cfg = {}) : x_(std::move(x)), cfg_(std::move(cfg)) {
    if (x_.kind() != Kind::Var && x_.kind() != Kind::Sym) throw IntegrationUnsupported("integration variable must be a variable");
  }

  bool free_of_x(const Expr& e) const {
    return x_.kind() == Kind::Var ? !e.has_var(x_.node().var) : !e.has_sym(x_.node().name);
  }

  Expr antiderivative(const Expr& f) {
    if (free_of_x(f)) return f * x_;
    std::vector<Expr> done, rest;
    for (auto& t : terms_of(f)) {
      if (free_of_x(t)) {
        done.push_back(t * x_);
        continue;
      }
      if (auto r = pattern(t))
        done.push_back(*r);
      else
        rest.push_back(t);
    }
    if (!rest.empty()) done.push_back(rational_antiderivative(add(rest)));
    return add(done);
  }

  // integral over [0, 1]
  Expr definite01(const Expr& f) {
    if (free_of_x(f)) return f;
    std::vector<Expr> plain, done;
    for (auto& t : terms_of(f)) {
      auto lg = log_factor(t);
      if (!lg) {
        plain.push_back(t);
        continue;
      }
      // int ln(g) r = [ln(g) R] - int R g'/g, with R(0) = 0
      Expr r = t / *lg;
      Expr R = Integrator(x_, cfg_).antiderivative(r);
      R = R - at_point(R, Expr(0));
      if (!free_of_x(R) && has_log_of_x(R)) throw IntegrationUnsupported("repeated integration by parts");
      done.push_back(at_point(*lg, Expr(1)) * at_point(R, Expr(1)));
      plain.push_back(-R * dx(*lg));
    }
    if (!plain.empty()) {
      Rat r = convert(add(plain));
      simplify(r);
      done.push_back(definite(r));
    }
    return add(done);
  }

 private:
  struct Rat {
    Poly n0, n1;               // n0 + n1*R
    std::map<int, int> den;    // registry index -> multiplicity
  };

  Expr dx(const Expr& e) { return differentiate(e, x_); }

  bool has_log_of_x(const Expr& e) const {
    if (free_of_x(e)) return false;
    if (e.kind() == Kind::Ln) return true;
    for (std::size_t i = 0; i < e.arity(); ++i)
      if (has_log_of_x(e.kid(i))) return true;
    return false;
  }

  // the single logarithm of x in a product term, other factors free of logarithms of x
  std::optional<Expr> log_factor(const Expr& t) const {
    if (t.kind() == Kind::Ln) return free_of_x(t) ? std::nullopt : std::optional<Expr>(t);
    if (t.kind() != Kind::Prod) return std::nullopt;
    std::optional<Expr> found;
    for (auto& f : factors_of(t)) {
      if (!has_log_of_x(f)) continue;
      if (found || f.kind() != Kind::Ln || has_log_of_x(f.kid(0))) return std::nullopt;
      found = f;
    }
    return found;
  }

  bool zero(const Expr& e) { return e.is_zero_const() || (!e.is_const() && is_zero(e, cfg_)); }

  void trim(Poly& p) {
    while (!p.empty() && zero(p.back())) p.pop_back();
  }

  std::optional<Expr> pattern(const Expr& t) {
    for (auto& f : factors_of(t)) {
      if (free_of_x(f)) continue;
      Expr g = f;
      mpq_class r = 1;
      if (f.kind() == Kind::Pow) {
        g = f.kid(0);
        r = f.node().ex;
      } else if (f.kind() == Kind::Root) {
        g = f.kid(0);
        r = f.node().q;
      }
      if (g.kind() == Kind::Var || g.kind() == Kind::Sym) {
        if (r == -1) continue;  // handled by the rational engine
      }
      Expr gp = dx(g);
      if (gp.is_zero_const()) continue;
      Expr k = t / (gp * root_pow(g, r));
      Expr dk;
      try {
        dk = dx(k);
      } catch (const DomainError&) {
        continue;
      }
      bool xfree = false;
      try {
        xfree = zero(dk);
      } catch (const SamplingExhausted&) {
        continue;
      }
      if (!xfree) continue;
      if (r == -1) return k * ln(g);
      return k * root_pow(g, r + 1) / Expr(r + 1);
    }
    return std::nullopt;
  }

  // ---- factor registry

  static bool structurally_equal(const Poly& a, const Poly& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!equal(a[i], b[i])) return false;
    return true;
  }

  // kappa with a = kappa * b, if proportional
  std::optional<Expr> proportional(const Poly& a, const Poly& b) {
    if (a.size() != b.size()) return std::nullopt;
    if (structurally_equal(a, b)) return Expr(1);
    std::size_t d = a.size() - 1;
    Expr kappa = a[d] / b[d];
    for (std::size_t i = 0; i < d; ++i)
      if (!zero(a[i] - kappa * b[i])) return std::nullopt;
    return kappa;
  }

  // returns registry index; numerator must be multiplied by scale^(-mult)
  int register_factor(const Poly& p, Expr& scale) {
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      if (auto k = proportional(p, factors_[i])) {
        scale = *k;
        return static_cast<int>(i);
      }
    }
    factors_.push_back(p);
    scale = Expr(1);
    return static_cast<int>(factors_.size()) - 1;
  }

  void mul_num(Rat& r, const Expr& c) {
    r.n0 = poly::scale(r.n0, c);
    r.n1 = poly::scale(r.n1, c);
  }

  static std::pair<Poly, Poly> divmod(Poly a, const Poly& b) {
    // b trimmed with a nonzero leading coefficient
    std::size_t db = b.size() - 1;
    if (a.size() < b.size()) return {Poly{}, a};
    Poly q(a.size() - db, Expr(0));
    Expr lc_inv = pow(b.back(), -1);
    for (std::size_t k = a.size(); k-- > db;) {
      Expr c = a[k] * lc_inv;
      q[k - db] = c;
      if (c.is_zero_const()) continue;
      for (std::size_t i = 0; i <= db; ++i) a[k - db + i] = a[k - db + i] - c * b[i];
    }
    a.resize(db);
    return {q, a};
  }

  bool divides(const Poly& f, const Poly& p, Poly& quotient) {
    auto [q, rem] = divmod(p, f);
    for (auto& c : rem)
      if (!zero(c)) return false;
    poly::drop_structural(q);
    quotient = q;
    return true;
  }

  void add_den(Rat& r, Poly p, int mult) {
    trim(p);
    if (p.empty()) throw DomainError("division by zero polynomial");
    std::size_t low = 0;
    while (low < p.size() && zero(p[low])) ++low;
    if (low > 0) {
      Poly x{Expr(0), Expr(1)};
      Expr s;
      int id = register_factor(x, s);
      r.den[id] += static_cast<int>(low) * mult;
      p.erase(p.begin(), p.begin() + low);
    }
    if (p.size() == 1) {
      mul_num(r, pow(p[0], -mult));
      return;
    }
    if (p.size() == 2) {
      Expr s;
      int id = register_factor(p, s);
      r.den[id] += mult;
      mul_num(r, pow(s, -mult));
      return;
    }
    // peel known linear factors
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      if (factors_[i].size() != 2) continue;
      Poly q;
      if (divides(factors_[i], p, q)) {
        r.den[static_cast<int>(i)] += mult;
        add_den(r, q, mult);
        return;
      }
    }
    // perfect power of a linear factor
    {
      int d = static_cast<int>(p.size()) - 1;
      Expr root = -p[d - 1] / (Expr(d) * p[d]);
      Poly lin{-root, Expr(1)};
      Poly pw = poly::scale(poly::power(lin, d), p[d]);
      bool ok = true;
      for (int i = 0; i < d && ok; ++i) ok = zero(p[i] - pw[i]);
      if (ok) {
        Expr s;
        int id = register_factor(lin, s);
        r.den[id] += d * mult;
        mul_num(r, pow(p[d], -mult) * pow(s, -d * mult));
        return;
      }
    }
    Expr s;
    int id = register_factor(p, s);
    r.den[id] += mult;
    mul_num(r, pow(s, -mult));
  }

  // ---- conversion

  Rat constant(const Expr& c) { return Rat{Poly{c}, Poly{}, {}}; }

  Rat radd(const Rat& a, const Rat& b) {
    Rat r;
    r.den = a.den;
    for (auto& [id, m] : b.den) r.den[id] = std::max(r.den[id], m);
    auto lift = [&](const Rat& x) {
      Poly f{Expr(1)};
      for (auto& [id, m] : r.den) {
        int have = x.den.count(id) ? x.den.at(id) : 0;
        if (m > have) f = poly::mul(f, poly::power(factors_[id], m - have));
      }
      return std::pair<Poly, Poly>{poly::mul(x.n0, f), poly::mul(x.n1, f)};
    };
    auto [a0, a1] = lift(a);
    auto [b0, b1] = lift(b);
    r.n0 = poly::add(a0, b0);
    r.n1 = poly::add(a1, b1);
    return r;
  }

  Rat rmul(const Rat& a, const Rat& b) {
    Rat r;
    r.n0 = poly::mul(a.n0, b.n0);
    r.n1 = poly::add(poly::mul(a.n0, b.n1), poly::mul(a.n1, b.n0));
    Poly t = poly::mul(a.n1, b.n1);
    if (!t.empty()) r.n0 = poly::add(r.n0, poly::mul(t, *radicand_));
    r.den = a.den;
    for (auto& [id, m] : b.den) r.den[id] += m;
    return r;
  }

  Rat rinv(const Rat& a) {
    Rat r;
    Poly dn{Expr(1)};
    for (auto& [id, m] : a.den) dn = poly::mul(dn, poly::power(factors_[id], m));
    Poly p;
    if (a.n1.empty()) {
      r.n0 = dn;
      p = a.n0;
    } else {
      r.n0 = poly::mul(dn, a.n0);
      r.n1 = poly::scale(poly::mul(dn, a.n1), Expr(-1));
      p = poly::add(poly::mul(a.n0, a.n0), poly::scale(poly::mul(poly::mul(a.n1, a.n1), *radicand_), Expr(-1)));
    }
    add_den(r, p, 1);
    return r;
  }

  Rat rpow(const Rat& a, long k) {
    Rat base = k < 0 ? rinv(a) : a;
    Rat r = constant(Expr(1));
    for (long i = 0; i < std::labs(k); ++i) r = rmul(r, base);
    return r;
  }

  Rat convert(const Expr& e) {
    auto it = memo_.find(e.get());
    if (it != memo_.end()) return it->second;
    Rat r = convert_uncached(e);
    memo_.emplace(e.get(), r);
    keep_.push_back(e);
    return r;
  }

  Rat convert_uncached(const Expr& e) {
    if (free_of_x(e)) return constant(e);
    switch (e.kind()) {
      case Kind::Var:
      case Kind::Sym:
        return Rat{Poly{Expr(0), Expr(1)}, Poly{}, {}};
      case Kind::Sum: {
        Rat r = constant(Expr(0));
        for (auto& k : e.node().kids) r = radd(r, convert(Expr(k)));
        return r;
      }
      case Kind::Prod: {
        Rat r = constant(Expr(1));
        for (auto& k : e.node().kids) r = rmul(r, convert(Expr(k)));
        return r;
      }
      case Kind::Pow:
        return rpow(convert(e.kid(0)), e.node().ex);
      case Kind::Root: {
        mpq_class q2 = e.node().q * 2;
        if (q2.get_den() != 1) throw IntegrationUnsupported("only square roots are supported");
        Rat b = convert(e.kid(0));
        if (!b.n1.empty() || !b.den.empty()) throw IntegrationUnsupported("radicand must be polynomial in the variable");
        Poly q = b.n0;
        trim(q);
        if (!radicand_) {
          radicand_ = q;
          radical_ = sqrt(poly::to_expr(q, x_));
        } else {
          auto k = proportional(q, *radicand_);
          if (!k || !zero(*k - Expr(1))) throw IntegrationUnsupported("more than one radical");
        }
        long p = q2.get_num().get_si();
        // R^p = R * q^((p-1)/2)
        long h = (p - 1) / 2;
        Rat rr{Poly{}, Poly{Expr(1)}, {}};
        Rat qq{*radicand_, Poly{}, {}};
        return rmul(rr, rpow(qq, h));
      }
      default:
        throw IntegrationUnsupported("integrand contains a non-rational function of the variable: " + to_string(e));
    }
  }

  void simplify(Rat& r) {
    trim(r.n0);
    trim(r.n1);
    for (auto& [id, m] : r.den) {
      while (m > 0) {
        Poly q0, q1;
        const Poly& f = factors_[id];
        if (!r.n0.empty() && !divides(f, r.n0, q0)) break;
        if (!r.n1.empty() && !divides(f, r.n1, q1)) break;
        r.n0 = q0;
        r.n1 = q1;
        --m;
      }
    }
    for (auto it = r.den.begin(); it != r.den.end();) it = it->second == 0 ? r.den.erase(it) : std::next(it);
  }

  Expr den_expr(const Rat& r) {
    std::vector<Expr> fs;
    for (auto& [id, m] : r.den) fs.push_back(pow(poly::to_expr(factors_[id], x_), m));
    return mul(fs);
  }

  struct Fractions {
    Poly polypart;
    // per linear factor (a, b): coefficient of (a x + b)^(-p) at index p-1
    struct Part {
      Expr a, b;
      std::vector<Expr> c;
    };
    std::vector<Part> parts;
  };

  Fractions partial(const Rat& r) {
    Fractions out;
    Poly dn{Expr(1)};
    for (auto& [id, m] : r.den) {
      if (factors_[id].size() != 2)
        throw IntegrationUnsupported("denominator factor of degree " + std::to_string(factors_[id].size() - 1) +
                                     " does not split");
      dn = poly::mul(dn, poly::power(factors_[id], m));
    }
    Poly rem = r.n0;
    if (dn.size() > 1) {
      auto [q, rr] = divmod(r.n0, dn);
      out.polypart = q;
      rem = rr;
    } else {
      out.polypart = poly::scale(r.n0, pow(dn[0], -1));
      return out;
    }
    for (auto& [id, m] : r.den) {
      const Poly& f = factors_[id];
      Expr a = f[1], b = f[0];
      Expr root = -b / a;
      Poly g = poly::taylor(rem, root, m);
      for (auto& [id2, m2] : r.den) {
        if (id2 == id) continue;
        Expr fr = poly::at(factors_[id2], root);
        Expr ak = factors_[id2][1];
        // (fr + ak t)^(-m2) = fr^(-m2) (1 + (ak/fr) t)^(-m2)
        Poly s;
        Expr ratio = ak / fr;
        mpq_class binom = 1;
        for (int j = 0; j < m; ++j) {
          if (j > 0) binom = binom * (-m2 - (j - 1)) / j;
          s.push_back(Expr(binom) * pow(ratio, j) * pow(fr, -m2));
        }
        g = poly::series_mul(g, s, m);
      }
      Fractions::Part part{a, b, {}};
      part.c.resize(m);
      for (int j = 0; j < m; ++j) {
        int p = m - j;
        part.c[p - 1] = pow(a, p - m) * poly::coef(g, j);
      }
      out.parts.push_back(part);
    }
    return out;
  }

  Expr radical_antiderivative(const Rat& r) {
    if (r.n1.empty()) return Expr(0);
    Expr B = poly::to_expr(r.n1, x_) / den_expr(r);
    Expr q = poly::to_expr(*radicand_, x_);
    Expr k = Expr(2) * q * B / dx(q);
    if (!zero(dx(k))) throw IntegrationUnsupported("radical term outside the supported class");
    return k * radical_;
  }

  Expr rational_antiderivative(const Expr& f) {
    Rat r = convert(f);
    simplify(r);
    std::vector<Expr> ts;
    Rat rad{Poly{}, r.n1, r.den};
    simplify(rad);
    ts.push_back(radical_antiderivative(rad));
    Rat rr{r.n0, Poly{}, r.den};
    simplify(rr);
    Fractions fr = partial(rr);
    for (std::size_t k = 0; k < fr.polypart.size(); ++k)
      ts.push_back(fr.polypart[k] * pow(x_, static_cast<long>(k + 1)) / Expr(static_cast<long>(k + 1)));
    for (auto& part : fr.parts) {
      Expr lin = part.a * x_ + part.b;
      for (std::size_t i = 0; i < part.c.size(); ++i) {
        long p = static_cast<long>(i) + 1;
        if (part.c[i].is_zero_const()) continue;
        if (p == 1)
          ts.push_back(part.c[i] / part.a * ln(lin));
        else
          ts.push_back(part.c[i] * pow(lin, 1 - p) / (part.a * Expr(1 - p)));
      }
    }
    return add(ts);
  }

  Expr at_point(const Expr& e, const Expr& v) {
    if (x_.kind() == Kind::Var) return substitute(e, {{x_.node().var, v}});
    return substitute_symbol(e, x_.node().name, v);
  }

  Expr definite(const Rat& r) {
    std::vector<Expr> ts;
    if (!r.n1.empty()) {
      Rat rad{Poly{}, r.n1, r.den};
      simplify(rad);
      Expr F = radical_antiderivative(rad);
      ts.push_back(at_point(F, Expr(1)) - at_point(F, Expr(0)));
    }
    Rat rr{r.n0, Poly{}, r.den};
    simplify(rr);
    Fractions fr = partial(rr);
    for (std::size_t k = 0; k < fr.polypart.size(); ++k)
      ts.push_back(fr.polypart[k] / Expr(static_cast<long>(k + 1)));
    for (auto& part : fr.parts) {
      bool b0 = zero(part.b);
      for (std::size_t i = 0; i < part.c.size(); ++i) {
        long p = static_cast<long>(i) + 1;
        const Expr& c = part.c[i];
        if (c.is_zero_const()) continue;
        if (b0) {
          if (!zero(c)) throw SingularIntegral("integrand is singular at the lower limit");
          continue;
        }
        if (p == 1)
          ts.push_back(c / part.a * ln((part.a + part.b) / part.b));
        else
          ts.push_back(c / (part.a * Expr(1 - p)) * (pow(part.a + part.b, 1 - p) - pow(part.b, 1 - p)));
      }
    }
    return add(ts);
  }

  Expr x_;
  ZeroTestConfig cfg_;
  std::vector<Poly> factors_;
  std::optional<Poly> radicand_;
  Expr radical_;
  std::unordered_map<const Node*, Rat> memo_;
  std::vector<Expr> keep_;
};

inline Expr integrate(const Expr& f, const LatticeVar& v, const ZeroTestConfig& cfg = {}) {
  return Integrator(var(v), cfg).antiderivative(f);
}

inline Expr integrate01(const Expr& f, const std::string& s, const ZeroTestConfig& cfg = {}) {
  return Integrator(sym(s), cfg).definite01(f);
}

}  // namespace deltaclaw
