#pragma once

#include "poly.hpp"

namespace deltaclaw {

using QMatrix = std::vector<std::vector<mpq_class>>;

// kernel of a rational matrix, full pivoting; each vector scaled so its first nonzero entry is 1
inline std::vector<std::vector<mpq_class>> nullspace(QMatrix A, std::size_t cols) {
  std::size_t rows = A.size();
  std::vector<std::size_t> colperm(cols);
  for (std::size_t j = 0; j < cols; ++j) colperm[j] = j;
  std::size_t rank = 0;
  for (; rank < std::min(rows, cols); ++rank) {
    std::size_t pr = rows, pc = cols;
    mpz_class best = 0;
    for (std::size_t i = rank; i < rows; ++i)
      for (std::size_t j = rank; j < cols; ++j) {
        if (sgn(A[i][colperm[j]]) == 0) continue;
        // smallest numerator keeps entries small
        mpz_class h = abs(A[i][colperm[j]].get_num()) + A[i][colperm[j]].get_den();
        if (pr == rows || h < best) {
          pr = i, pc = j, best = h;
        }
      }
    if (pr == rows) break;
    std::swap(A[rank], A[pr]);
    std::swap(colperm[rank], colperm[pc]);
    mpq_class piv = A[rank][colperm[rank]];
    for (auto& x : A[rank]) x /= piv;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == rank) continue;
      mpq_class f = A[i][colperm[rank]];
      if (sgn(f) == 0) continue;
      for (std::size_t j = 0; j < cols; ++j) A[i][j] -= f * A[rank][j];
    }
  }
  std::vector<std::vector<mpq_class>> out;
  for (std::size_t k = rank; k < cols; ++k) {
    std::vector<mpq_class> v(cols, mpq_class(0));
    std::size_t free = colperm[k];
    v[free] = 1;
    for (std::size_t i = 0; i < rank; ++i) v[colperm[i]] = -A[i][free];
    for (auto& x : v)
      if (sgn(x) != 0) {
        mpq_class lead = x;
        for (auto& y : v) y /= lead;
        break;
      }
    out.push_back(std::move(v));
  }
  return out;
}

struct LinearSystemInconsistent : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A c = b with rational A and symbolic b; free unknowns are set to zero
inline std::vector<Expr> solve_symbolic_rhs(QMatrix A, std::vector<Expr> b, std::size_t cols, const ZeroTestConfig& cfg = {}) {
  std::size_t rows = A.size();
  std::vector<std::size_t> pivcol;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t p = rows;
    for (std::size_t i = r; i < rows; ++i)
      if (sgn(A[i][c]) != 0) {
        p = i;
        break;
      }
    if (p == rows) continue;
    std::swap(A[r], A[p]);
    std::swap(b[r], b[p]);
    mpq_class piv = A[r][c];
    for (auto& x : A[r]) x /= piv;
    b[r] = together(Expr(mpq_class(1) / piv) * b[r]);
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r || sgn(A[i][c]) == 0) continue;
      mpq_class f = A[i][c];
      for (std::size_t j = 0; j < cols; ++j) A[i][j] -= f * A[r][j];
      b[i] = together(b[i] - Expr(f) * b[r]);
    }
    pivcol.push_back(c);
    ++r;
  }
  for (std::size_t i = r; i < rows; ++i)
    if (!b[i].is_zero_const() && !is_zero(b[i], cfg)) throw LinearSystemInconsistent("linear system has no solution");
  std::vector<Expr> x(cols, Expr(0));
  for (std::size_t i = 0; i < r; ++i) x[pivcol[i]] = b[i];
  return x;
}

}  // namespace deltaclaw
