#pragma once

#include <map>

#include "claw.hpp"
#include "series.hpp"

namespace deltaclaw {

// (u00 - u11)(u10 - u01) = alpha - beta
inline Equation dpkdv_quadgraph() {
  QuadGraphPDE q;
  q.corners[QuadGraphPDE::index(1, 1)] = parse("u[0,0] + (beta - alpha)/(u[1,0] - u[0,1])");
  q.corners[QuadGraphPDE::index(0, 0)] = parse("u[1,1] - (beta - alpha)/(u[1,0] - u[0,1])");
  q.corners[QuadGraphPDE::index(1, 0)] = parse("u[0,1] + (beta - alpha)/(u[1,1] - u[0,0])");
  q.corners[QuadGraphPDE::index(0, 1)] = parse("u[1,0] - (beta - alpha)/(u[1,1] - u[0,0])");
  q.params = {"alpha", "beta"};
  return Equation::quadgraph(std::move(q));
}

class VTerms {
 public:
  const Expr& operator()(int i) {
    if (i < 1) throw std::invalid_argument("v terms start at 1");
    auto it = memo_.find(i);
    if (it != memo_.end()) return it->second;
    Expr inv = pow(u(0, 0) - u(2, 0), -1);
    Expr r;
    if (i == 1) {
      r = inv;
    } else {
      std::vector<Expr> ts;
      for (int j = 1; j < i; ++j) ts.push_back((*this)(j) * shift((*this)(i - j), 1, 0));
      r = inv * add(ts);
    }
    return memo_.emplace(i, r).first->second;
  }

 private:
  std::map<int, Expr> memo_;
};

inline Expr v_term(int i) {
  static thread_local VTerms v;
  return v(i);
}

struct GardnerLevel {
  int alpha = 0;
  Expr F, G;
  std::vector<Expr> v_terms;
  DensityPair densities() const { return {F, G, InitialDataSpec::cross()}; }
};

// eps^alpha coefficients of F = -ln(u10 - u01) - ln(1 + sum v^(i) eps^i/(u10 - u01)) and
// G = ln eps - ln(u00 - u20) + ln(1 + sum v^(i+1) eps^i / v^(1)), without the ln eps offset
inline GardnerLevel gardner_densities(int alpha, int order) {
  if (alpha < 0 || order < alpha || order < 1) throw std::invalid_argument("need 0 <= alpha <= order");
  GardnerLevel L;
  L.alpha = alpha;
  for (int i = 1; i <= alpha + 1; ++i) L.v_terms.push_back(v_term(i));
  if (alpha == 0) {
    L.F = -ln(u(1, 0) - u(0, 1));
    L.G = -ln(u(0, 0) - u(2, 0));
    return L;
  }
  EpsSeries aF(alpha), aG(alpha);
  Expr d = pow(u(1, 0) - u(0, 1), -1);
  Expr inv1 = pow(v_term(1), -1);
  for (int i = 1; i <= alpha; ++i) {
    aF[i] = v_term(i) * d;
    aG[i] = v_term(i + 1) * inv1;
  }
  L.F = -series_log1p(aF)[alpha];
  L.G = series_log1p(aG)[alpha];
  return L;
}

struct InflemRow {
  int alpha = 0;
  bool depends_next = false;         // on u[alpha+1,0]
  std::vector<bool> depends_further;  // on u[alpha+2..alpha+4,0]
  bool mixed_nonzero = false;        // d^2/du00 du[alpha+2,0] of v^(alpha+1)/v^(1)
  bool holds() const {
    for (bool b : depends_further)
      if (b) return false;
    return depends_next && mixed_nonzero;
  }
};

inline std::vector<InflemRow> check_inflem(int alpha_max, const ZeroTestConfig& cfg = {}) {
  std::vector<InflemRow> out;
  for (int a = 1; a <= alpha_max; ++a) {
    InflemRow r;
    r.alpha = a;
    Expr v = v_term(a);
    r.depends_next = depends_on(v, uvar(a + 1, 0), cfg);
    for (int j = 2; j <= 4; ++j) r.depends_further.push_back(depends_on(v, uvar(a + j, 0), cfg));
    Expr ratio = v_term(a + 1) / v_term(1);
    r.mixed_nonzero = !is_zero(differentiate(differentiate(ratio, uvar(0, 0)), uvar(a + 2, 0)), cfg);
    out.push_back(r);
  }
  return out;
}

struct DistinctRow {
  int alpha = 0;
  bool verified = false;
  bool trivial = true;
  bool depends_witness = false;                  // root depends on u[-(alpha+1),1]
  std::vector<bool> lower_depend;                 // roots of levels 0..alpha-1 on the same point
  bool distinct() const {
    for (bool b : lower_depend)
      if (b) return false;
    return verified && !trivial && depends_witness;
  }
};

inline std::vector<DistinctRow> check_distinctness(int alpha_max, const ZeroTestConfig& cfg = {}) {
  Equation eq = dpkdv_quadgraph();
  std::vector<Expr> roots;
  std::vector<DistinctRow> out;
  for (int a = 0; a <= alpha_max; ++a) {
    auto L = gardner_densities(a, std::max(a, 1));
    DistinctRow r;
    r.alpha = a;
    r.verified = verify_claw(eq, L.densities(), cfg);
    // u[-(alpha+1),1] is a data point of the staircase set, not of the cross
    DensityPair st = L.densities();
    st.spec = InitialDataSpec::staircase();
    Expr q = root(eq, st).expr;
    r.trivial = is_zero(q, cfg);
    LatticeVar wit = uvar(-(a + 1), 1);
    r.depends_witness = depends_on(q, wit, cfg);
    for (auto& lower : roots) r.lower_depend.push_back(depends_on(lower, wit, cfg));
    roots.push_back(q);
    out.push_back(r);
  }
  return out;
}

}  // namespace deltaclaw
