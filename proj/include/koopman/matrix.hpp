#ifndef KOOPMAN_MATRIX_HPP
#define KOOPMAN_MATRIX_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "koopman/base.hpp"

namespace koopman {

// Dense square complex matrix, row major. Acts on functions over atoms (or
// Fourier coefficients) as (Av)(r) = sum_c a[r][c] v(c).
class ComplexMatrix {
 public:
  ComplexMatrix() : n_(0) {}
  explicit ComplexMatrix(std::size_t n) : n_(n), a_(n * n, cx(0.0, 0.0)) {}

  static ComplexMatrix identity(std::size_t n) {
    ComplexMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static ComplexMatrix diagonal(std::span<const cx> d) {
    ComplexMatrix m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t dim() const { return n_; }
  cx& operator()(std::size_t r, std::size_t c) { return a_[r * n_ + c]; }
  const cx& operator()(std::size_t r, std::size_t c) const { return a_[r * n_ + c]; }

  std::vector<cx> apply(std::span<const cx> v) const {
    if (v.size() != n_) throw Error(errc::dimension_mismatch, "matrix apply");
    std::vector<cx> out(n_, cx(0.0, 0.0));
    for (std::size_t r = 0; r < n_; ++r) {
      cx acc(0.0, 0.0);
      const cx* row = &a_[r * n_];
      for (std::size_t c = 0; c < n_; ++c) acc += row[c] * v[c];
      out[r] = acc;
    }
    return out;
  }

  ComplexMatrix& operator+=(const ComplexMatrix& o) {
    check_same(o);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
  }
  ComplexMatrix& operator-=(const ComplexMatrix& o) {
    check_same(o);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
  }
  ComplexMatrix& operator*=(cx s) {
    for (auto& x : a_) x *= s;
    return *this;
  }

  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
  friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
  friend ComplexMatrix operator*(ComplexMatrix a, cx s) { return a *= s; }
  friend ComplexMatrix operator*(cx s, ComplexMatrix a) { return a *= s; }

  friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    a.check_same(b);
    std::size_t n = a.n_;
    ComplexMatrix out(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t k = 0; k < n; ++k) {
        cx av = a(r, k);
        if (av == cx(0.0, 0.0)) continue;
        const cx* brow = &b.a_[k * n];
        cx* orow = &out.a_[r * n];
        for (std::size_t c = 0; c < n; ++c) orow[c] += av * brow[c];
      }
    }
    return out;
  }

  // max absolute row sum
  double norm_inf() const {
    double best = 0.0;
    for (std::size_t r = 0; r < n_; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < n_; ++c) s += std::abs(a_[r * n_ + c]);
      if (s > best) best = s;
    }
    return best;
  }

  double max_abs_entry() const {
    double best = 0.0;
    for (const auto& x : a_) best = std::max(best, std::abs(x));
    return best;
  }

 private:
  void check_same(const ComplexMatrix& o) const {
    if (n_ != o.n_) throw Error(errc::dimension_mismatch, "matrix dimensions differ");
  }

  std::size_t n_;
  std::vector<cx> a_;
};

// LU with partial pivoting.
struct LuDecomposition {
  ComplexMatrix lu;
  std::vector<std::size_t> perm;
};

inline LuDecomposition lu_factor(ComplexMatrix a) {
  std::size_t n = a.dim();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    double best = std::abs(a(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      double v = std::abs(a(r, col));
      if (v > best) { best = v; piv = r; }
    }
    if (best == 0.0) throw Error(errc::singular_matrix, "lu_factor");
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(piv, c), a(col, c));
      std::swap(perm[piv], perm[col]);
    }
    cx d = a(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      cx m = a(r, col) / d;
      a(r, col) = m;
      if (m == cx(0.0, 0.0)) continue;
      for (std::size_t c = col + 1; c < n; ++c) a(r, c) -= m * a(col, c);
    }
  }
  return LuDecomposition{std::move(a), std::move(perm)};
}

inline std::vector<cx> lu_solve(const LuDecomposition& f, std::span<const cx> b) {
  std::size_t n = f.lu.dim();
  if (b.size() != n) throw Error(errc::dimension_mismatch, "lu_solve");
  std::vector<cx> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[f.perm[i]];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) x[i] -= f.lu(i, j) * x[j];
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = i + 1; j < n; ++j) x[i] -= f.lu(i, j) * x[j];
    x[i] /= f.lu(i, i);
  }
  return x;
}

inline ComplexMatrix lu_solve_matrix(const LuDecomposition& f, const ComplexMatrix& b) {
  std::size_t n = f.lu.dim();
  ComplexMatrix x(n);
  std::vector<cx> col(n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < n; ++r) col[r] = b(r, c);
    std::vector<cx> sol = lu_solve(f, col);
    for (std::size_t r = 0; r < n; ++r) x(r, c) = sol[r];
  }
  return x;
}

inline ComplexMatrix inverse(const ComplexMatrix& a) {
  return lu_solve_matrix(lu_factor(a), ComplexMatrix::identity(a.dim()));
}

// Matrix exponential: scaling and squaring with the diagonal (6,6) Pade
// approximant. Scaling threshold 0.25 keeps the approximant at full double
// accuracy (Higham's theta_6 = 0.248).
inline ComplexMatrix expm(const ComplexMatrix& a) {
  constexpr double c[7] = {1.0,        1.0 / 2.0,    5.0 / 44.0,  1.0 / 66.0,
                           1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0};
  std::size_t n = a.dim();
  double norm = a.norm_inf();
  int squarings = 0;
  ComplexMatrix x = a;
  if (norm > 0.25) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
    x *= cx(std::ldexp(1.0, -squarings), 0.0);
  }

  ComplexMatrix x2 = x * x;
  ComplexMatrix x4 = x2 * x2;
  ComplexMatrix x6 = x4 * x2;

  // odd part U = x (c1 I + c3 x^2 + c5 x^4), even part V = c0 I + c2 x^2 + c4 x^4 + c6 x^6
  ComplexMatrix u_inner = ComplexMatrix::identity(n) * cx(c[1], 0.0);
  u_inner += x2 * cx(c[3], 0.0);
  u_inner += x4 * cx(c[5], 0.0);
  ComplexMatrix u = x * u_inner;

  ComplexMatrix v = ComplexMatrix::identity(n) * cx(c[0], 0.0);
  v += x2 * cx(c[2], 0.0);
  v += x4 * cx(c[4], 0.0);
  v += x6 * cx(c[6], 0.0);

  ComplexMatrix num = v + u;
  ComplexMatrix den = v - u;
  ComplexMatrix r = lu_solve_matrix(lu_factor(std::move(den)), num);

  for (int i = 0; i < squarings; ++i) r = r * r;
  return r;
}

}  // namespace koopman

#endif
