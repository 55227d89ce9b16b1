#ifndef KOOPMAN_RATIONAL_HPP
#define KOOPMAN_RATIONAL_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>

#include "koopman/base.hpp"

namespace koopman {

// Exact rational with int64 numerator/denominator, always reduced, den > 0.
// Arithmetic goes through 128-bit intermediates and reports overflow instead
// of wrapping; frequencies and times in this library stay far below the limit.
class Rational {
 public:
  Rational() : num_(0), den_(1) {}
  Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (den_ == 0) throw Error(errc::invalid_argument, "rational with zero denominator");
    normalize();
  }
  static Rational integer(std::int64_t n) { return Rational(n, 1); }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  bool is_zero() const { return num_ == 0; }
  bool is_integer() const { return den_ == 1; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string str() const {
    return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    __int128 n = static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_;
    __int128 d = static_cast<__int128>(a.den_) * b.den_;
    return from128(n, d);
  }
  friend Rational operator-(const Rational& a, const Rational& b) { return a + Rational(-b.num_, b.den_); }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return from128(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw Error(errc::invalid_argument, "rational division by zero");
    return from128(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
  }
  Rational operator-() const { return Rational(-num_, den_); }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator<(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
  }

 private:
  static Rational from128(__int128 n, __int128 d) {
    if (d < 0) { n = -n; d = -d; }
    __int128 g = gcd128(n < 0 ? -n : n, d);
    if (g > 1) { n /= g; d /= g; }
    constexpr __int128 lim = static_cast<__int128>(INT64_MAX);
    if (n > lim || n < -lim || d > lim)
      throw Error(errc::invalid_argument, "rational overflow");
    Rational r;
    r.num_ = static_cast<std::int64_t>(n);
    r.den_ = static_cast<std::int64_t>(d);
    return r;
  }
  static __int128 gcd128(__int128 a, __int128 b) {
    while (b != 0) { __int128 t = a % b; a = b; b = t; }
    return a == 0 ? 1 : a;
  }
  void normalize() {
    if (den_ < 0) { num_ = -num_; den_ = -den_; }
    std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) { num_ /= g; den_ /= g; }
  }

  std::int64_t num_;
  std::int64_t den_;
};

// Best rational approximation of x by continued fractions, restricted to
// denominators <= max_den. Returns nothing when no convergent lands within tol.
inline std::optional<Rational> rational_approx(double x, std::int64_t max_den, double tol) {
  if (!std::isfinite(x)) return std::nullopt;
  double y = x;
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  for (int iter = 0; iter < 64; ++iter) {
    double fl = std::floor(y);
    if (fl > 9.0e17 || fl < -9.0e17) break;
    std::int64_t a = static_cast<std::int64_t>(fl);
    __int128 p2 = static_cast<__int128>(a) * p1 + p0;
    __int128 q2 = static_cast<__int128>(a) * q1 + q0;
    if (q2 > max_den || p2 > INT64_MAX || p2 < INT64_MIN) break;
    p0 = p1; q0 = q1;
    p1 = static_cast<std::int64_t>(p2);
    q1 = static_cast<std::int64_t>(q2);
    double approx = static_cast<double>(p1) / static_cast<double>(q1);
    if (std::abs(x - approx) <= tol) return Rational(p1, q1);
    double frac = y - fl;
    if (frac < 1e-18) break;
    y = 1.0 / frac;
  }
  return std::nullopt;
}

// Detects doubles that are rationals held exactly (1, 0.5, 1/3 up to one ulp).
// Deliberately much stricter than the 1e-9 reporting tolerance: at 1e-9 the
// continued fraction expansion of double(sqrt(2)) already fits under a 1e6
// denominator, which would silently poison the exact-arithmetic path.
inline std::optional<Rational> exact_rational_of(double x, std::int64_t max_den = 1'000'000) {
  double scale = std::max(1.0, std::abs(x));
  return rational_approx(x, max_den, 4e-16 * scale);
}

}  // namespace koopman

#endif
