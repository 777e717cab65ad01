#pragma once

#include <array>
#include <optional>

#include "eval.hpp"

namespace deltaclaw {

struct NotReachable : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotKovalevskaya : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedTransform : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Shape { Rows, Cross, Staircase };

struct InitialDataSpec {
  Shape shape = Shape::Cross;
  int K = 0;

  static InitialDataSpec rows(int K) { return {Shape::Rows, K}; }
  static InitialDataSpec cross() { return {Shape::Cross, 0}; }
  static InitialDataSpec staircase() { return {Shape::Staircase, 0}; }

  bool contains(const LatticeVar& v) const {
    if (v.fam != Family::U) return true;
    switch (shape) {
      case Shape::Rows:
        return v.dm >= 0 && v.dm < K;
      case Shape::Cross:
        return v.dm == 0 || v.dn == 0;
      case Shape::Staircase:
        return v.dm == 0 || (v.dn == 0 && v.dm > 0) || (v.dn == 1 && v.dm < 0);
    }
    return false;
  }
};

inline std::string to_string(Shape s) {
  return s == Shape::Rows ? "rows" : s == Shape::Cross ? "cross" : "staircase";
}

// u[K, s] = omega(rows 0..K-1)
struct KovalevskayaPDE {
  int K = 2;
  Expr omega;
  int s = 0;
  int L = 0;
  std::optional<Expr> inverse;  // u[0,L] in terms of the other points of the stencil
  std::vector<std::string> params;

  Expr solved() const { return u(K, s); }
  Expr delta() const { return solved() - omega; }
  // omega_{ij} as a point: u[K+i, s+j]
  LatticeVar omega_point(int i, int j) const { return uvar(K + i, s + j); }
};

// corner index: 0 -> (0,0), 1 -> (1,0), 2 -> (0,1), 3 -> (1,1)
struct QuadGraphPDE {
  std::array<Expr, 4> corners;
  std::vector<std::string> params;

  static int index(int i, int j) { return i + 2 * j; }
  const Expr& corner(int i, int j) const { return corners[index(i, j)]; }
  const Expr& omega() const { return corners[3]; }
  Expr delta() const { return u(1, 1) - corners[3]; }
};

struct Equation {
  enum class Form { Kovalevskaya, QuadGraph };
  Form form = Form::QuadGraph;
  KovalevskayaPDE kov;
  QuadGraphPDE quad;

  static Equation kovalevskaya(KovalevskayaPDE k) {
    Equation e;
    e.form = Form::Kovalevskaya;
    e.kov = std::move(k);
    return e;
  }
  static Equation quadgraph(QuadGraphPDE q) {
    Equation e;
    e.form = Form::QuadGraph;
    e.quad = std::move(q);
    return e;
  }
  bool is_kovalevskaya() const { return form == Form::Kovalevskaya; }
  InitialDataSpec default_spec() const {
    return is_kovalevskaya() ? InitialDataSpec::rows(kov.K) : InitialDataSpec::cross();
  }
  Expr delta() const { return is_kovalevskaya() ? kov.delta() : quad.delta(); }
  Expr omega() const { return is_kovalevskaya() ? kov.omega : quad.omega(); }
  // the point that the equation solves for, at base offset (0,0)
  LatticeVar solved_point() const { return is_kovalevskaya() ? uvar(kov.K, kov.s) : uvar(1, 1); }
};

// rewrites expressions onto initial data; with_delta keeps D[i,j] = Delta at base (i,j)
class Pullback {
 public:
  Pullback(const Equation& eq, InitialDataSpec spec, bool with_delta = false)
      : eq_(eq), spec_(spec), lift_(with_delta) {
    if (spec.shape == Shape::Rows && !eq.is_kovalevskaya())
      throw NotReachable("row data needs an equation in Kovalevskaya form");
    if (spec.shape != Shape::Rows && eq.is_kovalevskaya())
      throw NotReachable("cross data needs a quad-graph equation");
  }

  Expr operator()(const Expr& e) {
    Bindings b;
    for (auto& v : e.vars())
      if (v.fam == Family::U && !spec_.contains(v)) b[v] = point(v);
    return substitute(e, b);
  }

  Expr point(const LatticeVar& v) {
    if (spec_.contains(v)) return var(v);
    auto it = memo_.find(v);
    if (it != memo_.end()) return it->second;
    Expr r = (*this)(step(v));
    memo_.emplace(v, r);
    return r;
  }

  const InitialDataSpec& spec() const { return spec_; }

 private:
  // one elimination: v in terms of points nearer the data
  Expr step(const LatticeVar& v) {
    if (spec_.shape == Shape::Rows) {
      const auto& k = eq_.kov;
      if (v.dm < 0) {
        if (!k.inverse) throw NotReachable("point " + to_string(v) + " lies below the initial rows");
        if (++depth_ > 4096) throw NotReachable("backward elimination does not terminate");
        int bi = v.dm, bj = v.dn - k.L;
        Expr inv = *k.inverse;
        if (lift_) inv = substitute(inv, {{uvar(k.K, k.s), u(k.K, k.s) - D(0, 0)}});
        return shift(inv, bi, bj);
      }
      int i = v.dm - k.K, j = v.dn - k.s;
      Expr r = shift(k.omega, i, j);
      if (lift_) r = r + D(i, j);
      return r;
    }
    int i = v.dm, j = v.dn;
    int bi, bj, ci, cj;
    if (i > 0 && j > 0) {
      bi = i - 1, bj = j - 1, ci = 1, cj = 1;
    } else if (i < 0 && j > 0) {
      bi = i, bj = j - 1, ci = 0, cj = 1;
    } else if (i > 0 && j < 0) {
      bi = i - 1, bj = j, ci = 1, cj = 0;
    } else {
      bi = i, bj = j, ci = 0, cj = 0;
    }
    const auto& q = eq_.quad;
    Expr c = q.corner(ci, cj);
    if (!lift_) return shift(c, bi, bj);
    if (ci == 1 && cj == 1) return shift(c, bi, bj) + D(bi, bj);
    Expr slot = substitute(c, {{uvar(1, 1), u(1, 1) - D(0, 0)}});
    return shift(slot, bi, bj);
  }

  const Equation& eq_;
  InitialDataSpec spec_;
  bool lift_;
  int depth_ = 0;
  std::map<LatticeVar, Expr> memo_;
};

inline int min_row(const Expr& e) {
  int r = 0;
  bool first = true;
  for (auto& v : e.vars())
    if (v.fam == Family::U) {
      r = first ? v.dm : std::min(r, v.dm);
      first = false;
    }
  return r;
}

inline Expr pullback(const Expr& e, const Equation& eq, const InitialDataSpec& spec) {
  Pullback pb(eq, spec);
  return pb(e);
}
inline Expr pullback(const Expr& e, const Equation& eq) { return pullback(e, eq, eq.default_spec()); }

// expression with Delta slots: u points off the data are written as data plus D[i,j]
inline Expr lift(const Expr& e, const Equation& eq, const InitialDataSpec& spec) {
  Pullback pb(eq, spec, true);
  return pb(e);
}

// row data pullback after shifting forward so that no row is negative
inline Expr pullback_forward(const Expr& e, const Equation& eq, const InitialDataSpec& spec, int* shifted = nullptr) {
  int k = 0;
  if (spec.shape == Shape::Rows) k = std::max(0, -min_row(e));
  if (shifted) *shifted = k;
  return pullback(shift(e, k, 0), eq, spec);
}

// ---------------------------------------------------------------- lattice transforms

struct LatticeTransform {
  std::array<std::array<int, 2>, 2> A{{{1, 0}, {0, 1}}};
  std::array<int, 2> b{0, 0};

  static LatticeTransform shear(int k) { return {{{{1, k}, {0, 1}}}, {0, 0}}; }
  static LatticeTransform shear_transpose(int k) { return {{{{1, 0}, {k, 1}}}, {0, 0}}; }
  int det() const { return A[0][0] * A[1][1] - A[0][1] * A[1][0]; }
  bool is_identity() const { return A[0][0] == 1 && A[1][1] == 1 && A[0][1] == 0 && A[1][0] == 0; }
  // +k for (1 k; 0 1), -k for (1 0; k 1)
  bool upper() const { return A[1][0] == 0; }
  int k() const { return upper() ? A[0][1] : A[1][0]; }
  void check() const {
    if (std::abs(det()) != 1) throw UnsupportedTransform("transform must be unimodular");
    if (A[0][0] != 1 || A[1][1] != 1 || (A[0][1] != 0 && A[1][0] != 0))
      throw UnsupportedTransform("only shears (1 k; 0 1), their transposes and translations are implemented");
  }
  LatticeTransform inverse() const {
    check();
    LatticeTransform t;
    t.A = {{{1, -A[0][1]}, {-A[1][0], 1}}};
    // new = A old + b, so old = A^-1 new - A^-1 b
    t.b = {-(b[0] - A[0][1] * b[1]), -(b[1] - A[1][0] * b[0])};
    return t;
  }
};

// relabel an expression into the transformed coordinates
inline Expr relabel(const Expr& e, const LatticeTransform& t) {
  t.check();
  int k = t.k();
  bool up = t.upper();
  // old (m,n) in terms of new: m = mt - k nt + .., n = nt - ..
  int a01 = t.A[0][1], a10 = t.A[1][0];
  int b0 = t.b[0], b1 = t.b[1];
  // old = Ainv (new - b); Ainv = (1 -a01; -a10 1)
  auto old_m = [&](const Expr& mt, const Expr& nt) { return (mt - Expr(b0)) - Expr(a01) * (nt - Expr(b1)); };
  auto old_n = [&](const Expr& mt, const Expr& nt) { return (nt - Expr(b1)) - Expr(a10) * (mt - Expr(b0)); };
  Expr M = sym("m"), N = sym("n");
  Expr om = old_m(M, N), on = old_n(M, N);
  Rewriter rw(
      [&](const Expr& x) -> std::optional<Expr> {
        const Node& n = x.node();
        if (n.kind == Kind::Var) {
          LatticeVar v = n.var;
          if (up)
            v.dm += k * v.dn;
          else
            v.dn += k * v.dm;
          return var(v);
        }
        if (n.kind == Kind::Sym) {
          if (n.name == "m") return om;
          if (n.name == "n") return on;
          return x;
        }
        if (n.kind == Kind::Parity) {
          // a*m_old + b*n_old + c with the old indices affine in the new ones
          long pa = n.pa, pb = n.pb, pc = n.pc;
          long na = pa - pb * a10;
          long nb = pb - pa * a01;
          long nc = pc - pa * (b0 - a01 * b1) - pb * (b1 - a10 * b0);
          return parity(na, nb, nc);
        }
        return std::nullopt;
      },
      [](const Expr& x) { return !x.node().indexed && x.syms().empty(); });
  return rw(e);
}

// densities of the same CLaw in transformed coordinates
inline std::pair<Expr, Expr> transport_forward(const Expr& F, const Expr& G, const LatticeTransform& t) {
  t.check();
  Expr Ft = relabel(F, t), Gt = relabel(G, t);
  int k = t.k();
  if (k == 0) return {Ft, Gt};
  if (t.upper()) {
    // S_n = S_mt^k S_nt
    std::vector<Expr> extra{Ft};
    if (k > 0)
      for (int i = 0; i < k; ++i) extra.push_back(shift(Gt, i, 0));
    else
      for (int i = 1; i <= -k; ++i) extra.push_back(-shift(Gt, -i, 0));
    return {add(extra), shift(Gt, k, 0)};
  }
  // S_m = S_mt S_nt^k
  std::vector<Expr> extra{Gt};
  if (k > 0)
    for (int i = 0; i < k; ++i) extra.push_back(shift(Ft, 0, i));
  else
    for (int i = 1; i <= -k; ++i) extra.push_back(-shift(Ft, 0, -i));
  return {shift(Ft, 0, k), add(extra)};
}

enum class Direction { Forward, Back };

inline std::pair<Expr, Expr> transport_densities(const Expr& F, const Expr& G, const LatticeTransform& t,
                                                 Direction dir) {
  if (dir == Direction::Forward) return transport_forward(F, G, t);
  return transport_forward(F, G, t.inverse());
}

inline KovalevskayaPDE to_kovalevskaya(const QuadGraphPDE& q, const LatticeTransform& t) {
  t.check();
  if (t.b[0] != 0 || t.b[1] != 0) throw UnsupportedTransform("translation not needed for the stencil change");
  struct P {
    int c;
    LatticeVar v;
  };
  std::vector<P> pts;
  for (int c = 0; c < 4; ++c) {
    Expr moved = relabel(u(c % 2, c / 2), t);
    pts.push_back({c, moved.node().var});
  }
  int lo = pts[0].v.dm, hi = pts[0].v.dm;
  for (auto& p : pts) lo = std::min(lo, p.v.dm), hi = std::max(hi, p.v.dm);
  int count_hi = 0, ctop = -1, count_lo = 0;
  for (auto& p : pts) {
    if (p.v.dm == hi) ++count_hi, ctop = p.c;
    if (p.v.dm == lo) ++count_lo;
  }
  if (count_hi != 1 || hi - lo < 1) throw NotKovalevskaya("transformed stencil has no unique top point");
  // place the lowest row at 0
  auto norm = [&](const Expr& e) { return shift(relabel(e, t), -lo, 0); };
  KovalevskayaPDE k;
  k.K = hi - lo;
  k.s = pts[ctop].v.dn;
  k.omega = norm(q.corners[ctop]);
  k.params = q.params;
  // leftmost point of row 0
  int L = 0;
  bool found = false;
  int cL = -1;
  for (auto& p : pts)
    if (p.v.dm == lo && (!found || p.v.dn < L)) L = p.v.dn, found = true, cL = p.c;
  k.L = L;
  if (count_lo == 1 || cL >= 0) k.inverse = norm(q.corners[cL]);
  return k;
}

inline Equation to_kovalevskaya(const Equation& eq, const LatticeTransform& t) {
  if (eq.is_kovalevskaya()) {
    if (t.is_identity() && t.b[0] == 0 && t.b[1] == 0) return eq;
    throw UnsupportedTransform("equation is already in Kovalevskaya form");
  }
  return Equation::kovalevskaya(to_kovalevskaya(eq.quad, t));
}

// quad-graph equation with corner (1,1) as omega; others checked against it
inline bool check_corners(const QuadGraphPDE& q, const ZeroTestConfig& cfg = {}) {
  for (int c = 0; c < 3; ++c) {
    int i = c % 2, j = c / 2;
    Expr rel = substitute(q.omega(), {{uvar(i, j), q.corners[c]}}) - u(1, 1);
    if (!is_zero(rel, cfg)) return false;
  }
  return true;
}

}  // namespace deltaclaw
