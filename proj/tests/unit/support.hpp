#pragma once

#include <random>
#include <string>

#include <deltaclaw/deltaclaw.hpp>

namespace dct {

using namespace deltaclaw;

inline std::string fixture(const std::string& f) { return std::string(DELTACLAW_DATA) + "/" + f; }

// small random expressions in u[i,j], |i|,|j| <= span
class ExprGen {
 public:
  explicit ExprGen(std::uint64_t seed, int span = 1) : rng_(seed), span_(span) {}

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Expr coeff() {
    int a = pick(-5, 5);
    if (a == 0) a = 1;
    return Expr(mpq_class(a, pick(1, 3)));
  }
  Expr atom() {
    if (pick(0, 5) == 0) return sym(pick(0, 1) ? "alpha" : "beta");
    return u(pick(-span_, span_), pick(-span_, span_));
  }
  Expr poly(int terms = 2) {
    std::vector<Expr> ts;
    for (int t = 0; t < terms; ++t) {
      Expr m = coeff();
      for (int k = pick(1, 2); k > 0; --k) m = m * atom();
      ts.push_back(m);
    }
    ts.push_back(coeff());
    return add(ts);
  }
  // polynomial, quotient, ln or sqrt factor
  Expr expr(bool transcendental = true) {
    switch (pick(0, transcendental ? 4 : 2)) {
      case 0:
        return poly(pick(1, 3));
      case 1:
        return poly(2) / poly(1);
      case 2:
        return poly(1) * poly(1) + coeff() * atom() / poly(1);
      case 3:
        return coeff() * ln(poly(1) * poly(1) + Expr(1)) + poly(1);
      default:
        return sqrt(atom() * atom() + Expr(1)) * poly(1);
    }
  }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
  int span_;
};

inline ZeroTestConfig fast_cfg(std::uint64_t seed) {
  ZeroTestConfig c;
  c.sample_count = 6;
  c.seed = seed;
  return c;
}

}  // namespace dct
