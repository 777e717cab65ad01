#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace deltaclaw {

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// U: dependent variable, D: equation value Delta, W: omega slot
enum class Family : std::uint8_t { U = 0, D = 1, W = 2 };

struct LatticeVar {
  Family fam = Family::U;
  int dm = 0;
  int dn = 0;
  friend auto operator<=>(const LatticeVar&, const LatticeVar&) = default;
  friend bool operator==(const LatticeVar&, const LatticeVar&) = default;
  LatticeVar shifted(int a, int b) const { return {fam, dm + a, dn + b}; }
};

inline LatticeVar uvar(int i, int j = 0) { return {Family::U, i, j}; }
inline LatticeVar dvar(int i, int j = 0) { return {Family::D, i, j}; }
inline LatticeVar wvar(int i, int j = 0) { return {Family::W, i, j}; }

inline std::string to_string(const LatticeVar& v) {
  const char* f = v.fam == Family::U ? "u" : v.fam == Family::D ? "D" : "w";
  return std::string(f) + "[" + std::to_string(v.dm) + "," + std::to_string(v.dn) + "]";
}

enum class Kind : std::uint8_t { Const, Sym, Var, Parity, Exp, Ln, Pow, Root, Prod, Sum };

struct Node;
using NodePtr = std::shared_ptr<const Node>;
using VarSet = std::vector<LatticeVar>;
using SymSet = std::vector<std::string>;

struct Node {
  Kind kind = Kind::Const;
  mpq_class q;  // constant value, root exponent, exponential base
  std::string name;
  LatticeVar var;
  int pa = 0, pb = 0, pc = 0;
  long ex = 0;
  std::vector<NodePtr> kids;
  std::size_t hash = 0;
  std::shared_ptr<const VarSet> vars;
  std::shared_ptr<const SymSet> syms;
  bool transcendental = false;
  bool indexed = false;  // changes under shift
  std::size_t size = 1;
};

namespace detail {

inline std::size_t mix(std::size_t h, std::size_t v) {
  v += 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  v ^= v >> 31;
  v *= 0xbf58476d1ce4e5b9ULL;
  v ^= v >> 29;
  return h ^ v;
}

inline std::size_t hash_mpz(const mpz_class& z) {
  std::size_t h = static_cast<std::size_t>(mpz_sgn(z.get_mpz_t()) + 7);
  std::size_t n = mpz_size(z.get_mpz_t());
  for (std::size_t i = 0; i < n; ++i) h = mix(h, mpz_getlimbn(z.get_mpz_t(), i));
  return h;
}

inline std::size_t hash_mpq(const mpq_class& q) {
  return mix(hash_mpz(q.get_num()), hash_mpz(q.get_den()));
}

inline std::size_t hash_str(const std::string& s) {
  std::size_t h = 1469598103934665603ULL;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  return h;
}

inline const std::shared_ptr<const VarSet>& empty_vars() {
  static const auto e = std::make_shared<const VarSet>();
  return e;
}
inline const std::shared_ptr<const SymSet>& empty_syms() {
  static const auto e = std::make_shared<const SymSet>();
  return e;
}

template <class Set>
std::shared_ptr<const Set> merge_sets(const std::vector<std::shared_ptr<const Set>>& parts,
                                      const std::shared_ptr<const Set>& empty) {
  const std::shared_ptr<const Set>* best = nullptr;
  std::size_t nonempty = 0;
  for (auto& p : parts) {
    if (!p->empty()) {
      ++nonempty;
      if (!best || p->size() > (*best)->size()) best = &p;
    }
  }
  if (nonempty == 0) return empty;
  if (nonempty == 1) return *best;
  Set out = **best;
  bool grew = false;
  for (auto& p : parts) {
    if (&p == best || p->empty()) continue;
    Set merged;
    merged.reserve(out.size() + p->size());
    std::set_union(out.begin(), out.end(), p->begin(), p->end(), std::back_inserter(merged));
    if (merged.size() != out.size()) {
      grew = true;
      out.swap(merged);
    }
  }
  if (!grew) return *best;
  return std::make_shared<const Set>(std::move(out));
}

}  // namespace detail

class Expr {
 public:
  Expr();
  Expr(int v);
  Expr(long v);
  Expr(const mpq_class& v);
  explicit Expr(NodePtr n) : p_(std::move(n)) {}

  const Node& node() const { return *p_; }
  const Node* get() const { return p_.get(); }
  const NodePtr& ptr() const { return p_; }
  Kind kind() const { return p_->kind; }
  bool is_const() const { return p_->kind == Kind::Const; }
  bool is_zero_const() const { return is_const() && sgn(p_->q) == 0; }
  bool is_one() const { return is_const() && p_->q == 1; }
  const mpq_class& value() const { return p_->q; }
  const VarSet& vars() const { return *p_->vars; }
  const SymSet& syms() const { return *p_->syms; }
  bool has_var(const LatticeVar& v) const {
    return std::binary_search(p_->vars->begin(), p_->vars->end(), v);
  }
  bool has_sym(const std::string& s) const {
    return std::binary_search(p_->syms->begin(), p_->syms->end(), s);
  }
  std::size_t arity() const { return p_->kids.size(); }
  Expr kid(std::size_t i) const { return Expr(p_->kids[i]); }
  std::size_t hash() const { return p_->hash; }

 private:
  NodePtr p_;
};

// ---------------------------------------------------------------- raw nodes

namespace detail {

inline Expr finish(Node&& n) {
  std::size_t h = static_cast<std::size_t>(n.kind) * 0x100000001b3ULL;
  std::vector<std::shared_ptr<const VarSet>> vparts;
  std::vector<std::shared_ptr<const SymSet>> sparts;
  switch (n.kind) {
    case Kind::Const:
      h = mix(h, hash_mpq(n.q));
      break;
    case Kind::Sym:
      h = mix(h, hash_str(n.name));
      n.indexed = (n.name == "m" || n.name == "n");
      sparts.push_back(std::make_shared<const SymSet>(SymSet{n.name}));
      break;
    case Kind::Var:
      h = mix(h, static_cast<std::size_t>(n.var.fam) * 1000003ULL);
      h = mix(h, static_cast<std::size_t>(static_cast<long>(n.var.dm) + 1000));
      h = mix(h, static_cast<std::size_t>(static_cast<long>(n.var.dn) + 1000));
      n.indexed = true;
      vparts.push_back(std::make_shared<const VarSet>(VarSet{n.var}));
      break;
    case Kind::Parity:
      h = mix(h, static_cast<std::size_t>(n.pa * 4 + n.pb * 2 + n.pc));
      n.indexed = true;
      break;
    case Kind::Pow:
      h = mix(h, static_cast<std::size_t>(n.ex + 100000));
      break;
    case Kind::Root:
    case Kind::Exp:
      h = mix(h, hash_mpq(n.q));
      break;
    default:
      break;
  }
  std::size_t size = 1;
  for (auto& k : n.kids) {
    h = mix(h, k->hash);
    vparts.push_back(k->vars);
    sparts.push_back(k->syms);
    n.transcendental = n.transcendental || k->transcendental;
    n.indexed = n.indexed || k->indexed;
    size += k->size;
  }
  if (n.kind == Kind::Ln || n.kind == Kind::Root) n.transcendental = true;
  n.size = std::min<std::size_t>(size, std::size_t(1) << 40);
  n.hash = h;
  n.vars = merge_sets<VarSet>(vparts, empty_vars());
  n.syms = merge_sets<SymSet>(sparts, empty_syms());
  return Expr(std::make_shared<const Node>(std::move(n)));
}

inline Expr raw_const(const mpq_class& q) {
  Node n;
  n.kind = Kind::Const;
  n.q = q;
  n.q.canonicalize();
  return finish(std::move(n));
}

inline Expr raw(Kind k, std::vector<NodePtr> kids) {
  Node n;
  n.kind = k;
  n.kids = std::move(kids);
  return finish(std::move(n));
}

inline const Expr& zero_expr() {
  static const Expr z = raw_const(0);
  return z;
}
inline const Expr& one_expr() {
  static const Expr o = raw_const(1);
  return o;
}

}  // namespace detail

inline Expr::Expr() : Expr(detail::zero_expr()) {}
inline Expr::Expr(int v) : Expr(v == 0 ? detail::zero_expr() : v == 1 ? detail::one_expr() : detail::raw_const(mpq_class(v))) {}
inline Expr::Expr(long v) : Expr(detail::raw_const(mpq_class(mpz_class(v)))) {}
inline Expr::Expr(const mpq_class& v) : Expr(detail::raw_const(v)) {}

// ---------------------------------------------------------------- ordering

bool equal(const Expr& a, const Expr& b);
int compare(const Expr& a, const Expr& b);

inline bool equal(const Expr& a, const Expr& b) {
  const Node* x = a.get();
  const Node* y = b.get();
  if (x == y) return true;
  if (x->hash != y->hash || x->kind != y->kind || x->kids.size() != y->kids.size()) return false;
  switch (x->kind) {
    case Kind::Const:
      if (x->q != y->q) return false;
      break;
    case Kind::Sym:
      if (x->name != y->name) return false;
      break;
    case Kind::Var:
      if (!(x->var == y->var)) return false;
      break;
    case Kind::Parity:
      if (x->pa != y->pa || x->pb != y->pb || x->pc != y->pc) return false;
      break;
    case Kind::Pow:
      if (x->ex != y->ex) return false;
      break;
    case Kind::Root:
    case Kind::Exp:
      if (x->q != y->q) return false;
      break;
    default:
      break;
  }
  for (std::size_t i = 0; i < x->kids.size(); ++i)
    if (!equal(Expr(x->kids[i]), Expr(y->kids[i]))) return false;
  return true;
}

inline int compare(const Expr& a, const Expr& b) {
  const Node* x = a.get();
  const Node* y = b.get();
  if (x == y) return 0;
  if (x->kind != y->kind) return x->kind < y->kind ? -1 : 1;
  switch (x->kind) {
    case Kind::Const:
      return cmp(x->q, y->q) < 0 ? -1 : (x->q == y->q ? 0 : 1);
    case Kind::Sym:
      return x->name < y->name ? -1 : (x->name == y->name ? 0 : 1);
    case Kind::Var:
      return x->var < y->var ? -1 : (x->var == y->var ? 0 : 1);
    case Kind::Parity: {
      int kx = x->pa * 4 + x->pb * 2 + x->pc, ky = y->pa * 4 + y->pb * 2 + y->pc;
      return kx < ky ? -1 : (kx == ky ? 0 : 1);
    }
    default:
      break;
  }
  if (x->size != y->size) return x->size < y->size ? -1 : 1;
  if (x->hash != y->hash) return x->hash < y->hash ? -1 : 1;
  if (x->ex != y->ex) return x->ex < y->ex ? -1 : 1;
  if (x->q != y->q) return cmp(x->q, y->q) < 0 ? -1 : 1;
  if (x->kids.size() != y->kids.size()) return x->kids.size() < y->kids.size() ? -1 : 1;
  for (std::size_t i = 0; i < x->kids.size(); ++i) {
    int c = compare(Expr(x->kids[i]), Expr(y->kids[i]));
    if (c) return c;
  }
  return 0;
}

struct ExprHash {
  std::size_t operator()(const Expr& e) const { return e.hash(); }
};
struct ExprEq {
  bool operator()(const Expr& a, const Expr& b) const { return equal(a, b); }
};

// ---------------------------------------------------------------- constructors

Expr add(std::vector<Expr> terms);
Expr mul(std::vector<Expr> factors);
Expr pow(const Expr& b, long k);
Expr root_pow(const Expr& b, const mpq_class& q);

inline Expr num(const mpq_class& q) { return Expr(q); }
inline Expr num(long p, long d) { return Expr(mpq_class(p, d)); }

inline Expr sym(const std::string& name) {
  Node n;
  n.kind = Kind::Sym;
  n.name = name;
  return detail::finish(std::move(n));
}

inline Expr var(const LatticeVar& v) {
  Node n;
  n.kind = Kind::Var;
  n.var = v;
  return detail::finish(std::move(n));
}
inline Expr u(int i, int j = 0) { return var(uvar(i, j)); }
inline Expr D(int i, int j = 0) { return var(dvar(i, j)); }
inline Expr w(int i, int j = 0) { return var(wvar(i, j)); }

inline int mod2(long v) { return static_cast<int>(((v % 2) + 2) % 2); }

inline Expr mul(std::vector<Expr> factors);

inline Expr parity(long a, long b, long c) {
  int A = mod2(a), B = mod2(b), C = mod2(c);
  if (A == 0 && B == 0) return Expr(C ? -1 : 1);
  Node n;
  n.kind = Kind::Parity;
  n.pa = A;
  n.pb = B;
  Expr p = detail::finish(std::move(n));
  return C ? mul({Expr(-1), p}) : p;
}

inline Expr ln(const Expr& a) {
  if (a.is_one()) return Expr(0);
  return detail::raw(Kind::Ln, {a.ptr()});
}

// base^E for a positive rational base and an exponent over m, n
inline Expr expc(const mpq_class& base, const Expr& exponent) {
  if (sgn(base) <= 0) throw DomainError("exponential base must be positive");
  if (base == 1) return Expr(1);
  if (!exponent.vars().empty()) throw DomainError("exponent of constant base must not contain lattice variables");
  if (exponent.is_const()) {
    const mpq_class& e = exponent.value();
    if (e.get_den() != 1) throw DomainError("non-integer constant exponent");
    long k = e.get_num().get_si();
    mpq_class r = 1;
    mpq_class bb = k >= 0 ? base : mpq_class(1) / base;
    for (long i = 0; i < std::labs(k); ++i) r *= bb;
    return Expr(r);
  }
  Node n;
  n.kind = Kind::Exp;
  n.q = base;
  n.kids = {exponent.ptr()};
  return detail::finish(std::move(n));
}

namespace detail {

inline Expr raw_pow(const Expr& b, long k) {
  Node n;
  n.kind = Kind::Pow;
  n.ex = k;
  n.kids = {b.ptr()};
  return finish(std::move(n));
}

inline Expr raw_root(const Expr& b, const mpq_class& q) {
  Node n;
  n.kind = Kind::Root;
  n.q = q;
  n.kids = {b.ptr()};
  return finish(std::move(n));
}

inline std::optional<mpz_class> exact_root(const mpz_class& z, unsigned long k) {
  if (sgn(z) < 0) return std::nullopt;
  mpz_class r;
  if (mpz_root(r.get_mpz_t(), z.get_mpz_t(), k) != 0) return r;
  return std::nullopt;
}

inline mpq_class qpow(const mpq_class& b, long k) {
  mpq_class r = 1;
  if (k < 0) {
    if (sgn(b) == 0) throw DomainError("division by zero");
    mpq_class inv = mpq_class(1) / b;
    for (long i = 0; i < -k; ++i) r *= inv;
  } else {
    for (long i = 0; i < k; ++i) r *= b;
  }
  return r;
}

// split term into rational coefficient and remaining product
inline std::pair<mpq_class, Expr> split_coeff(const Expr& t) {
  if (t.is_const()) return {t.value(), one_expr()};
  if (t.kind() == Kind::Prod && t.kid(0).is_const()) {
    const auto& kids = t.node().kids;
    if (kids.size() == 2) return {t.kid(0).value(), Expr(kids[1])};
    std::vector<NodePtr> rest(kids.begin() + 1, kids.end());
    return {t.kid(0).value(), raw(Kind::Prod, std::move(rest))};
  }
  return {mpq_class(1), t};
}

inline Expr scale_term(const mpq_class& c, const Expr& rest) {
  if (c == 1) return rest;
  if (rest.is_one()) return Expr(c);
  std::vector<NodePtr> kids;
  kids.push_back(raw_const(c).ptr());
  if (rest.kind() == Kind::Prod) {
    for (auto& k : rest.node().kids) kids.push_back(k);
  } else {
    kids.push_back(rest.ptr());
  }
  return raw(Kind::Prod, std::move(kids));
}

struct TermTable {
  struct Slot {
    Expr key;
    mpq_class coef;
  };
  std::vector<Slot> slots;
  std::unordered_multimap<std::size_t, std::size_t> index;
  void add(const Expr& key, const mpq_class& c) {
    auto range = index.equal_range(key.hash());
    for (auto it = range.first; it != range.second; ++it) {
      if (equal(slots[it->second].key, key)) {
        slots[it->second].coef += c;
        return;
      }
    }
    index.emplace(key.hash(), slots.size());
    slots.push_back({key, c});
  }
};

}  // namespace detail

inline Expr add(std::vector<Expr> terms) {
  std::vector<Expr> flat;
  flat.reserve(terms.size());
  for (auto& t : terms) {
    if (t.kind() == Kind::Sum) {
      for (auto& k : t.node().kids) flat.emplace_back(k);
    } else {
      flat.push_back(std::move(t));
    }
  }
  mpq_class c = 0;
  detail::TermTable table;
  for (auto& t : flat) {
    if (t.is_const()) {
      c += t.value();
      continue;
    }
    auto [coef, rest] = detail::split_coeff(t);
    table.add(rest, coef);
  }
  std::vector<Expr> out;
  for (auto& s : table.slots)
    if (sgn(s.coef) != 0) out.push_back(detail::scale_term(s.coef, s.key));
  if (out.empty()) return Expr(c);
  std::sort(out.begin(), out.end(), [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
  if (sgn(c) != 0) out.insert(out.begin(), Expr(c));
  if (out.size() == 1) return out[0];
  std::vector<NodePtr> kids;
  kids.reserve(out.size());
  for (auto& e : out) kids.push_back(e.ptr());
  return detail::raw(Kind::Sum, std::move(kids));
}

inline Expr mul(std::vector<Expr> factors) {
  std::vector<Expr> flat;
  flat.reserve(factors.size());
  for (auto& f : factors) {
    if (f.kind() == Kind::Prod) {
      for (auto& k : f.node().kids) flat.emplace_back(k);
    } else {
      flat.push_back(std::move(f));
    }
  }
  mpq_class c = 1;
  int pa = 0, pb = 0, pc = 0;
  bool has_parity = false;
  detail::TermTable bases;  // key: base, coef: exponent
  std::vector<std::pair<mpq_class, std::vector<Expr>>> exps;
  for (auto& f : flat) {
    switch (f.kind()) {
      case Kind::Const:
        if (sgn(f.value()) == 0) return Expr(0);
        c *= f.value();
        break;
      case Kind::Parity:
        has_parity = true;
        pa += f.node().pa;
        pb += f.node().pb;
        pc += f.node().pc;
        break;
      case Kind::Pow:
        bases.add(f.kid(0), mpq_class(mpz_class(f.node().ex)));
        break;
      case Kind::Root:
        bases.add(f.kid(0), f.node().q);
        break;
      case Kind::Exp: {
        bool found = false;
        for (auto& e : exps)
          if (e.first == f.node().q) {
            e.second.push_back(f.kid(0));
            found = true;
          }
        if (!found) exps.push_back({f.node().q, {f.kid(0)}});
        break;
      }
      default:
        bases.add(f, 1);
        break;
    }
  }
  std::vector<Expr> out;
  if (has_parity) {
    if (mod2(pc)) c = -c;
    Expr p = parity(pa, pb, 0);
    if (p.is_const())
      c *= p.value();
    else
      out.push_back(p);
  }
  for (auto& s : bases.slots) {
    if (sgn(s.coef) == 0) continue;
    if (s.coef.get_den() == 1) {
      Expr pw = pow(s.key, s.coef.get_num().get_si());
      if (pw.is_const()) {
        c *= pw.value();
      } else if (pw.kind() == Kind::Prod) {
        for (auto& k : pw.node().kids) {
          Expr ke(k);
          if (ke.is_const())
            c *= ke.value();
          else
            out.push_back(ke);
        }
      } else {
        out.push_back(pw);
      }
    } else {
      Expr r = root_pow(s.key, s.coef);
      if (r.is_const())
        c *= r.value();
      else if (r.kind() == Kind::Prod)
        for (auto& k : r.node().kids) {
          Expr ke(k);
          if (ke.is_const())
            c *= ke.value();
          else
            out.push_back(ke);
        }
      else
        out.push_back(r);
    }
  }
  for (auto& e : exps) {
    Expr ex = expc(e.first, add(e.second));
    if (ex.is_const())
      c *= ex.value();
    else
      out.push_back(ex);
  }
  if (sgn(c) == 0) return Expr(0);
  if (out.empty()) return Expr(c);
  std::sort(out.begin(), out.end(), [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
  if (c == 1 && out.size() == 1) return out[0];
  std::vector<NodePtr> kids;
  if (c != 1) kids.push_back(Expr(c).ptr());
  for (auto& e : out) kids.push_back(e.ptr());
  return detail::raw(Kind::Prod, std::move(kids));
}

inline Expr pow(const Expr& b, long k) {
  if (k == 0) return Expr(1);
  if (k == 1) return b;
  switch (b.kind()) {
    case Kind::Const:
      return Expr(detail::qpow(b.value(), k));
    case Kind::Pow: {
      long e = b.node().ex * k;
      return pow(b.kid(0), e);
    }
    case Kind::Root:
      return root_pow(b.kid(0), b.node().q * k);
    case Kind::Prod: {
      std::vector<Expr> fs;
      for (auto& f : b.node().kids) fs.push_back(pow(Expr(f), k));
      return mul(std::move(fs));
    }
    case Kind::Parity:
      return (k % 2 == 0) ? Expr(1) : b;
    case Kind::Exp: {
      return expc(b.node().q, mul({Expr(k), b.kid(0)}));
    }
    default:
      return detail::raw_pow(b, k);
  }
}

inline Expr root_pow(const Expr& b, const mpq_class& qin) {
  mpq_class q = qin;
  q.canonicalize();
  if (q.get_den() == 1) return pow(b, q.get_num().get_si());
  if (b.is_const()) {
    const mpq_class& v = b.value();
    unsigned long d = q.get_den().get_ui();
    auto rn = detail::exact_root(v.get_num(), d);
    auto rd = detail::exact_root(v.get_den(), d);
    if (rn && rd) return Expr(detail::qpow(mpq_class(*rn, *rd), q.get_num().get_si()));
  }
  if (b.kind() == Kind::Root) return root_pow(b.kid(0), b.node().q * q);
  return detail::raw_root(b, q);
}

inline Expr sqrt(const Expr& b) { return root_pow(b, mpq_class(1, 2)); }

inline Expr operator+(const Expr& a, const Expr& b) { return add({a, b}); }
inline Expr operator-(const Expr& a, const Expr& b) { return add({a, mul({Expr(-1), b})}); }
inline Expr operator-(const Expr& a) { return mul({Expr(-1), a}); }
inline Expr operator*(const Expr& a, const Expr& b) { return mul({a, b}); }
inline Expr operator/(const Expr& a, const Expr& b) { return mul({a, pow(b, -1)}); }
inline Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }
inline Expr& operator-=(Expr& a, const Expr& b) { return a = a - b; }
inline Expr& operator*=(Expr& a, const Expr& b) { return a = a * b; }

// generic rebuild of a node with new children (renormalizes)
inline Expr rebuild(const Expr& e, std::vector<Expr> kids) {
  switch (e.kind()) {
    case Kind::Sum:
      return add(std::move(kids));
    case Kind::Prod:
      return mul(std::move(kids));
    case Kind::Pow:
      return pow(kids[0], e.node().ex);
    case Kind::Root:
      return root_pow(kids[0], e.node().q);
    case Kind::Ln:
      return ln(kids[0]);
    case Kind::Exp:
      return expc(e.node().q, kids[0]);
    default:
      return e;
  }
}

// bottom-up memoized transform over the DAG
class Rewriter {
 public:
  using Leaf = std::function<std::optional<Expr>(const Expr&)>;
  using Skip = std::function<bool(const Expr&)>;
  Rewriter(Leaf leaf, Skip skip) : leaf_(std::move(leaf)), skip_(std::move(skip)) {}
  Expr operator()(const Expr& e) {
    if (skip_(e)) return e;
    auto it = memo_.find(e.get());
    if (it != memo_.end()) return it->second;
    Expr out = e;
    if (auto r = leaf_(e)) {
      out = *r;
    } else if (e.arity() > 0) {
      std::vector<Expr> kids;
      kids.reserve(e.arity());
      bool changed = false;
      for (std::size_t i = 0; i < e.arity(); ++i) {
        Expr k = (*this)(e.kid(i));
        changed = changed || k.get() != e.node().kids[i].get();
        kids.push_back(std::move(k));
      }
      out = changed ? rebuild(e, std::move(kids)) : e;
    }
    memo_.emplace(e.get(), out);
    keep_.push_back(e);
    return out;
  }

 private:
  Leaf leaf_;
  Skip skip_;
  std::unordered_map<const Node*, Expr> memo_;
  std::vector<Expr> keep_;
};

// ---------------------------------------------------------------- core ops

inline Expr shift(const Expr& e, int dm, int dn) {
  if (dm == 0 && dn == 0) return e;
  Rewriter rw(
      [&](const Expr& x) -> std::optional<Expr> {
        const Node& n = x.node();
        if (n.kind == Kind::Var) return var(n.var.shifted(dm, dn));
        if (n.kind == Kind::Sym) {
          if (n.name == "m" && dm) return x + Expr(dm);
          if (n.name == "n" && dn) return x + Expr(dn);
          return x;
        }
        if (n.kind == Kind::Parity) return parity(n.pa, n.pb, n.pc + n.pa * dm + n.pb * dn);
        return std::nullopt;
      },
      [](const Expr& x) { return !x.node().indexed; });
  return rw(e);
}

using Bindings = std::map<LatticeVar, Expr>;

inline bool touches(const Expr& e, const Bindings& b) {
  const VarSet& vs = e.vars();
  if (vs.empty() || b.empty()) return false;
  if (vs.size() < b.size()) {
    for (auto& v : vs)
      if (b.count(v)) return true;
    return false;
  }
  for (auto& kv : b)
    if (std::binary_search(vs.begin(), vs.end(), kv.first)) return true;
  return false;
}

inline Expr substitute(const Expr& e, const Bindings& b) {
  if (b.empty()) return e;
  Rewriter rw(
      [&](const Expr& x) -> std::optional<Expr> {
        if (x.kind() == Kind::Var) {
          auto it = b.find(x.node().var);
          if (it != b.end()) return it->second;
          return x;
        }
        return std::nullopt;
      },
      [&](const Expr& x) { return !touches(x, b); });
  return rw(e);
}

inline Expr substitute_symbol(const Expr& e, const std::string& s, const Expr& val) {
  Rewriter rw(
      [&](const Expr& x) -> std::optional<Expr> {
        if (x.kind() == Kind::Sym) return x.node().name == s ? val : x;
        return std::nullopt;
      },
      [&](const Expr& x) { return !x.has_sym(s); });
  return rw(e);
}

// replace every variable of one family by a function of its offsets
inline Expr map_family(const Expr& e, Family fam, const std::function<Expr(const LatticeVar&)>& f) {
  Rewriter rw(
      [&](const Expr& x) -> std::optional<Expr> {
        if (x.kind() == Kind::Var) return x.node().var.fam == fam ? f(x.node().var) : x;
        return std::nullopt;
      },
      [&](const Expr& x) {
        for (auto& v : x.vars())
          if (v.fam == fam) return false;
        return true;
      });
  return rw(e);
}

inline std::vector<LatticeVar> vars_of(const Expr& e, Family fam) {
  std::vector<LatticeVar> out;
  for (auto& v : e.vars())
    if (v.fam == fam) out.push_back(v);
  return out;
}

inline bool has_family(const Expr& e, Family fam) {
  for (auto& v : e.vars())
    if (v.fam == fam) return true;
  return false;
}

// derivative with respect to a lattice variable or a symbol
class Differentiator {
 public:
  explicit Differentiator(const Expr& v) : v_(v) {}
  Expr operator()(const Expr& e) {
    if (!depends(e)) return Expr(0);
    auto it = memo_.find(e.get());
    if (it != memo_.end()) return it->second;
    Expr r = compute(e);
    memo_.emplace(e.get(), r);
    keep_.push_back(e);
    return r;
  }

 private:
  bool depends(const Expr& e) const {
    if (v_.kind() == Kind::Var) return e.has_var(v_.node().var);
    return e.has_sym(v_.node().name);
  }
  Expr compute(const Expr& e) {
    const Node& n = e.node();
    switch (n.kind) {
      case Kind::Var:
      case Kind::Sym:
        return equal(e, v_) ? Expr(1) : Expr(0);
      case Kind::Sum: {
        std::vector<Expr> ts;
        for (auto& k : n.kids) ts.push_back((*this)(Expr(k)));
        return add(std::move(ts));
      }
      case Kind::Prod: {
        std::vector<Expr> ts;
        for (std::size_t i = 0; i < n.kids.size(); ++i) {
          Expr d = (*this)(Expr(n.kids[i]));
          if (d.is_zero_const()) continue;
          std::vector<Expr> fs;
          for (std::size_t j = 0; j < n.kids.size(); ++j) fs.emplace_back(j == i ? d.ptr() : n.kids[j]);
          ts.push_back(mul(std::move(fs)));
        }
        return add(std::move(ts));
      }
      case Kind::Pow: {
        Expr b = e.kid(0);
        return mul({Expr(n.ex), pow(b, n.ex - 1), (*this)(b)});
      }
      case Kind::Root: {
        Expr b = e.kid(0);
        return mul({Expr(n.q), root_pow(b, n.q - 1), (*this)(b)});
      }
      case Kind::Ln: {
        Expr b = e.kid(0);
        return mul({(*this)(b), pow(b, -1)});
      }
      case Kind::Exp:
        throw DomainError("derivative of exponential with respect to a symbol in its exponent");
      default:
        return Expr(0);
    }
  }
  Expr v_;
  std::unordered_map<const Node*, Expr> memo_;
  std::vector<Expr> keep_;
};

inline Expr differentiate(const Expr& e, const LatticeVar& v) {
  Differentiator d(var(v));
  return d(e);
}
inline Expr differentiate(const Expr& e, const Expr& v) {
  Differentiator d(v);
  return d(e);
}

inline std::vector<Expr> terms_of(const Expr& e) {
  if (e.kind() == Kind::Sum) {
    std::vector<Expr> out;
    for (auto& k : e.node().kids) out.emplace_back(k);
    return out;
  }
  return {e};
}

inline std::vector<Expr> factors_of(const Expr& e) {
  if (e.kind() == Kind::Prod) {
    std::vector<Expr> out;
    for (auto& k : e.node().kids) out.emplace_back(k);
    return out;
  }
  return {e};
}

// multiply out one level: products of sums become sums of products
inline Expr expand_once(const Expr& e) {
  if (e.kind() != Kind::Prod) return e;
  std::vector<Expr> acc{Expr(1)};
  for (auto& f : factors_of(e)) {
    std::vector<Expr> next;
    for (auto& a : acc)
      for (auto& t : terms_of(f)) next.push_back(a * t);
    acc.swap(next);
    if (acc.size() > 4096) return e;
  }
  return add(acc);
}

// ---------------------------------------------------------------- printing

namespace detail {

inline std::string qstr(const mpq_class& q) { return q.get_str(); }

std::string print(const Expr& e, int prec);

inline std::string print_factor_list(const std::vector<Expr>& fs) {
  std::string s;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    if (i) s += "*";
    s += print(fs[i], 3);
  }
  return s;
}

inline std::string print_product(const Expr& e, int prec) {
  mpq_class c = 1;
  std::vector<Expr> numer, denom;
  for (auto& f : factors_of(e)) {
    if (f.is_const()) {
      c *= f.value();
    } else if (f.kind() == Kind::Pow && f.node().ex < 0) {
      denom.push_back(pow(f.kid(0), -f.node().ex));
    } else if (f.kind() == Kind::Root && sgn(f.node().q) < 0) {
      denom.push_back(root_pow(f.kid(0), -f.node().q));
    } else {
      numer.push_back(f);
    }
  }
  std::string s;
  bool neg = sgn(c) < 0;
  mpz_class cn = abs(c.get_num());
  mpz_class cd = c.get_den();
  std::vector<std::string> nparts;
  if (cn != 1 || numer.empty()) nparts.push_back(cn.get_str());
  for (auto& f : numer) nparts.push_back(print(f, 3));
  for (std::size_t i = 0; i < nparts.size(); ++i) {
    if (i) s += "*";
    s += nparts[i];
  }
  std::vector<std::string> dparts;
  if (cd != 1) dparts.push_back(cd.get_str());
  for (auto& f : denom) dparts.push_back(print(f, 3));
  if (!dparts.empty()) {
    s += "/";
    if (dparts.size() == 1) {
      s += dparts[0];
    } else {
      s += "(";
      for (std::size_t i = 0; i < dparts.size(); ++i) {
        if (i) s += "*";
        s += dparts[i];
      }
      s += ")";
    }
  }
  if (neg) {
    s = "-" + s;
    if (prec > 1) s = "(" + s + ")";
  } else if (prec > 2 && (nparts.size() > 1 || !dparts.empty())) {
    s = "(" + s + ")";
  }
  return s;
}

inline bool leading_negative(const Expr& t) {
  if (t.is_const()) return sgn(t.value()) < 0;
  if (t.kind() == Kind::Prod && t.kid(0).is_const()) return sgn(t.kid(0).value()) < 0;
  return false;
}

inline std::string print(const Expr& e, int prec) {
  const Node& n = e.node();
  switch (n.kind) {
    case Kind::Const: {
      std::string s = qstr(n.q);
      bool composite = sgn(n.q) < 0 || n.q.get_den() != 1;
      if (composite && prec > 1) return "(" + s + ")";
      return s;
    }
    case Kind::Sym:
      return n.name;
    case Kind::Var:
      return to_string(n.var);
    case Kind::Parity:
      return "parity(" + std::to_string(n.pa) + "," + std::to_string(n.pb) + "," + std::to_string(n.pc) + ")";
    case Kind::Ln:
      return "ln(" + print(e.kid(0), 0) + ")";
    case Kind::Exp: {
      std::string b = n.q.get_den() == 1 ? qstr(n.q) : "(" + qstr(n.q) + ")";
      return b + "^(" + print(e.kid(0), 0) + ")";
    }
    case Kind::Pow: {
      std::string b = print(e.kid(0), 4);
      std::string s = b + "^" + (n.ex < 0 ? "(" + std::to_string(n.ex) + ")" : std::to_string(n.ex));
      return s;
    }
    case Kind::Root: {
      mpq_class twice = n.q * 2;
      std::string inner = "sqrt(" + print(e.kid(0), 0) + ")";
      if (twice.get_den() != 1) throw DomainError("only half-integer roots are printable");
      long k = twice.get_num().get_si();
      if (k == 1) return inner;
      return inner + "^" + (k < 0 ? "(" + std::to_string(k) + ")" : std::to_string(k));
    }
    case Kind::Prod:
      return print_product(e, prec);
    case Kind::Sum: {
      std::string s;
      bool first = true;
      std::vector<Expr> ts = terms_of(e);
      // constant last reads better
      if (!ts.empty() && ts[0].is_const()) std::rotate(ts.begin(), ts.begin() + 1, ts.end());
      for (auto& t : ts) {
        if (first) {
          s += print(t, 1);
          first = false;
        } else if (leading_negative(t)) {
          s += " - " + print(mul({Expr(-1), t}), 2);
        } else {
          s += " + " + print(t, 2);
        }
      }
      if (prec > 1) return "(" + s + ")";
      return s;
    }
  }
  return "?";
}

}  // namespace detail

inline std::string to_string(const Expr& e) { return detail::print(e, 0); }

inline std::ostream& operator<<(std::ostream& os, const Expr& e) { return os << to_string(e); }

// ---------------------------------------------------------------- parsing

class Parser {
 public:
  explicit Parser(std::string src) : s_(std::move(src)) {}

  Expr parse() {
    Expr e = expr();
    skip();
    if (i_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg + " at offset " + std::to_string(i_) + " in '" + s_ + "'");
  }
  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool eat(char c) {
    skip();
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }
  long integer() {
    skip();
    bool neg = false;
    if (i_ < s_.size() && (s_[i_] == '-' || s_[i_] == '+')) {
      neg = s_[i_] == '-';
      ++i_;
      skip();
    }
    std::size_t st = i_;
    while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
    if (st == i_) fail("expected integer");
    long v = std::stol(s_.substr(st, i_ - st));
    return neg ? -v : v;
  }
  Expr expr() {
    std::vector<Expr> ts;
    ts.push_back(term());
    for (;;) {
      if (eat('+'))
        ts.push_back(term());
      else if (eat('-'))
        ts.push_back(-term());
      else
        break;
    }
    return add(std::move(ts));
  }
  Expr term() {
    std::vector<Expr> fs;
    fs.push_back(unary());
    for (;;) {
      if (eat('*'))
        fs.push_back(unary());
      else if (eat('/'))
        fs.push_back(pow(unary(), -1));
      else
        break;
    }
    return mul(std::move(fs));
  }
  Expr unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return power();
  }
  Expr power() {
    Expr b = primary();
    if (eat('^')) {
      Expr ex = unary();
      return raise(b, ex);
    }
    return b;
  }
  Expr raise(const Expr& b, const Expr& ex) {
    if (ex.is_const()) {
      const mpq_class& q = ex.value();
      if (q.get_den() == 1) return pow(b, q.get_num().get_si());
      return root_pow(b, q);
    }
    if (b.is_const() && sgn(b.value()) > 0 && ex.vars().empty()) return expc(b.value(), ex);
    fail("exponent must be a rational constant, or an index expression over a positive constant base");
  }
  Expr primary() {
    skip();
    if (i_ >= s_.size()) fail("unexpected end of input");
    char c = s_[i_];
    if (c == '(') {
      ++i_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t st = i_;
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
      return Expr(mpq_class(mpz_class(s_.substr(st, i_ - st))));
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t st = i_;
      while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) ++i_;
      std::string id = s_.substr(st, i_ - st);
      skip();
      if ((id == "u" || id == "D" || id == "w") && i_ < s_.size() && s_[i_] == '[') {
        ++i_;
        long a = integer();
        long b = 0;
        if (eat(',')) b = integer();
        expect(']');
        Family f = id == "u" ? Family::U : id == "D" ? Family::D : Family::W;
        return var({f, static_cast<int>(a), static_cast<int>(b)});
      }
      if (id == "parity") {
        expect('(');
        long a = integer();
        expect(',');
        long b = integer();
        expect(',');
        long cc = integer();
        expect(')');
        return parity(a, b, cc);
      }
      if (id == "ln" || id == "log") {
        expect('(');
        Expr e = expr();
        expect(')');
        return ln(e);
      }
      if (id == "sqrt") {
        expect('(');
        Expr e = expr();
        expect(')');
        return sqrt(e);
      }
      return sym(id);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string s_;
  std::size_t i_ = 0;
};

inline Expr parse(const std::string& s) { return Parser(s).parse(); }

inline LatticeVar parse_var(const std::string& s) {
  Expr e = parse(s);
  if (e.kind() != Kind::Var) throw ParseError("expected a lattice variable: " + s);
  return e.node().var;
}

}  // namespace deltaclaw
