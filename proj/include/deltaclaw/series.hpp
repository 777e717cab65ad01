#pragma once

#include <vector>

#include "expr.hpp"

namespace deltaclaw {

struct NonzeroConstantTerm : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// truncated power series in eps, coefficient k at index k
struct EpsSeries {
  int order = 5;
  std::vector<Expr> coeffs;

  EpsSeries() : coeffs(6, Expr(0)) {}
  explicit EpsSeries(int n) : order(n), coeffs(n + 1, Expr(0)) {}
  EpsSeries(int n, std::vector<Expr> c) : order(n), coeffs(std::move(c)) { coeffs.resize(n + 1, Expr(0)); }

  const Expr& operator[](int k) const { return coeffs[k]; }
  Expr& operator[](int k) { return coeffs[k]; }
  Expr coefficient(int k) const { return k <= order ? coeffs[k] : Expr(0); }
};

inline EpsSeries series_constant(const Expr& c, int order) {
  EpsSeries s(order);
  s[0] = c;
  return s;
}

inline EpsSeries series_add(const EpsSeries& a, const EpsSeries& b) {
  int n = std::min(a.order, b.order);
  EpsSeries r(n);
  for (int k = 0; k <= n; ++k) r[k] = a[k] + b[k];
  return r;
}

inline EpsSeries series_scale(const EpsSeries& a, const Expr& c) {
  EpsSeries r(a.order);
  for (int k = 0; k <= a.order; ++k) r[k] = c * a[k];
  return r;
}

inline EpsSeries series_mul(const EpsSeries& a, const EpsSeries& b) {
  int n = std::min(a.order, b.order);
  EpsSeries r(n);
  for (int k = 0; k <= n; ++k) {
    std::vector<Expr> ts;
    for (int i = 0; i <= k; ++i) {
      if (a[i].is_zero_const() || b[k - i].is_zero_const()) continue;
      ts.push_back(a[i] * b[k - i]);
    }
    r[k] = add(std::move(ts));
  }
  return r;
}

// ln(1+a) by the Mercator series
inline EpsSeries series_log1p(const EpsSeries& a) {
  if (!a[0].is_zero_const()) throw NonzeroConstantTerm("log1p needs a zero constant term");
  int n = a.order;
  EpsSeries r(n);
  EpsSeries pk = a;
  for (int k = 1; k <= n; ++k) {
    Expr c = num((k % 2 == 1) ? 1 : -1, k);
    for (int i = 0; i <= n; ++i)
      if (!pk[i].is_zero_const()) r[i] = r[i] + c * pk[i];
    pk = series_mul(pk, a);
  }
  return r;
}

inline EpsSeries series_exp(const EpsSeries& a) {
  if (!a[0].is_zero_const()) throw NonzeroConstantTerm("exp needs a zero constant term");
  int n = a.order;
  EpsSeries r = series_constant(Expr(1), n);
  EpsSeries pk = series_constant(Expr(1), n);
  mpq_class fact = 1;
  for (int k = 1; k <= n; ++k) {
    pk = series_mul(pk, a);
    fact *= k;
    for (int i = 0; i <= n; ++i)
      if (!pk[i].is_zero_const()) r[i] = r[i] + Expr(mpq_class(1) / fact) * pk[i];
  }
  return r;
}

}  // namespace deltaclaw
