#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

namespace chamberwalk {

namespace mp = boost::multiprecision;

using BigInt = mp::number<mp::gmp_int, mp::et_off>;
using Rational = mp::number<mp::gmp_rational, mp::et_off>;
// 64 decimal digits: enough headroom for the cancellation in the symmetrized
// Macdonald sum near z = 0 (|R+| * log10(1/eps) digits are lost).
using HighFloat = mp::number<mp::mpfr_float_backend<64>, mp::et_off>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal invariant that must hold by construction was violated.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

BigInt ipow(std::int64_t base, unsigned exponent);
Rational rpow(std::int64_t base, std::int64_t exponent);

/// True when q is a perfect square; sets root = sqrt(q).
bool is_perfect_square(std::int64_t q, std::int64_t* root = nullptr);

/// Exact element a + b*sqrt(q) of the quadratic field Q(sqrt(q)).
///
/// Half-integer powers of q appear in the step probabilities of odd rank
/// walks; this type keeps them exact. When q is a perfect square the
/// irrational part is folded into a.
class QuadraticSurd {
 public:
  QuadraticSurd() = default;
  explicit QuadraticSurd(std::int64_t q) : q_(q) {}
  QuadraticSurd(std::int64_t q, Rational a, Rational b = 0);

  /// q^(half_units / 2), exactly.
  static QuadraticSurd half_power(std::int64_t q, std::int64_t half_units);

  std::int64_t q() const { return q_; }
  const Rational& rational_part() const { return a_; }
  const Rational& surd_part() const { return b_; }
  bool is_rational() const { return b_ == 0; }
  bool is_zero() const { return a_ == 0 && b_ == 0; }
  double to_double() const;

  QuadraticSurd& operator+=(const QuadraticSurd& o);
  QuadraticSurd& operator-=(const QuadraticSurd& o);
  QuadraticSurd& operator*=(const QuadraticSurd& o);
  QuadraticSurd& operator/=(const QuadraticSurd& o);
  QuadraticSurd operator-() const { return {q_, -a_, -b_}; }

  friend QuadraticSurd operator+(QuadraticSurd x, const QuadraticSurd& y) { return x += y; }
  friend QuadraticSurd operator-(QuadraticSurd x, const QuadraticSurd& y) { return x -= y; }
  friend QuadraticSurd operator*(QuadraticSurd x, const QuadraticSurd& y) { return x *= y; }
  friend QuadraticSurd operator/(QuadraticSurd x, const QuadraticSurd& y) { return x /= y; }
  friend bool operator==(const QuadraticSurd& x, const QuadraticSurd& y);

  std::string str() const;

 private:
  void normalize();
  void check_field(const QuadraticSurd& o) const;

  std::int64_t q_ = 0;  // 0 marks "any field" (a pure rational constant)
  Rational a_{0};
  Rational b_{0};
};

std::ostream& operator<<(std::ostream& os, const QuadraticSurd& x);

inline double to_double(double x) { return x; }
inline double to_double(const Rational& x) { return x.convert_to<double>(); }
inline double to_double(const QuadraticSurd& x) { return x.to_double(); }

}  // namespace chamberwalk
