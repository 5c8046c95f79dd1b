#include "chamberwalk/numeric.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace chamberwalk {

BigInt ipow(std::int64_t base, unsigned exponent) {
  BigInt result = 1;
  BigInt b = base;
  while (exponent > 0) {
    if (exponent & 1U) result *= b;
    b *= b;
    exponent >>= 1U;
  }
  return result;
}

Rational rpow(std::int64_t base, std::int64_t exponent) {
  if (exponent >= 0) return Rational(ipow(base, static_cast<unsigned>(exponent)));
  return Rational(BigInt(1), ipow(base, static_cast<unsigned>(-exponent)));
}

bool is_perfect_square(std::int64_t q, std::int64_t* root) {
  if (q < 0) return false;
  auto s = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(q))));
  for (std::int64_t c = std::max<std::int64_t>(0, s - 1); c <= s + 1; ++c) {
    if (c * c == q) {
      if (root) *root = c;
      return true;
    }
  }
  return false;
}

QuadraticSurd::QuadraticSurd(std::int64_t q, Rational a, Rational b)
    : q_(q), a_(std::move(a)), b_(std::move(b)) {
  normalize();
}

QuadraticSurd QuadraticSurd::half_power(std::int64_t q, std::int64_t half_units) {
  const std::int64_t whole = half_units >= 0 ? half_units / 2 : -((-half_units + 1) / 2);
  const bool odd = (half_units - 2 * whole) != 0;
  Rational scale = rpow(q, whole);
  if (odd) return QuadraticSurd(q, 0, scale);
  return QuadraticSurd(q, scale, 0);
}

void QuadraticSurd::normalize() {
  if (b_ == 0 || q_ == 0) return;
  std::int64_t root = 0;
  if (is_perfect_square(q_, &root)) {
    a_ += b_ * root;
    b_ = 0;
  }
}

void QuadraticSurd::check_field(const QuadraticSurd& o) const {
  if (q_ != 0 && o.q_ != 0 && q_ != o.q_) {
    throw DomainError("QuadraticSurd: mixing fields Q(sqrt(" + std::to_string(q_) + ")) and Q(sqrt(" +
                      std::to_string(o.q_) + "))");
  }
}

double QuadraticSurd::to_double() const {
  if (b_ == 0) return a_.convert_to<double>();
  HighFloat v = HighFloat(a_) + HighFloat(b_) * mp::sqrt(HighFloat(q_));
  return v.convert_to<double>();
}

QuadraticSurd& QuadraticSurd::operator+=(const QuadraticSurd& o) {
  check_field(o);
  if (q_ == 0) q_ = o.q_;
  a_ += o.a_;
  b_ += o.b_;
  return *this;
}

QuadraticSurd& QuadraticSurd::operator-=(const QuadraticSurd& o) {
  check_field(o);
  if (q_ == 0) q_ = o.q_;
  a_ -= o.a_;
  b_ -= o.b_;
  return *this;
}

QuadraticSurd& QuadraticSurd::operator*=(const QuadraticSurd& o) {
  check_field(o);
  if (q_ == 0) q_ = o.q_;
  Rational a = a_ * o.a_ + b_ * o.b_ * q_;
  Rational b = a_ * o.b_ + b_ * o.a_;
  a_ = std::move(a);
  b_ = std::move(b);
  normalize();
  return *this;
}

QuadraticSurd& QuadraticSurd::operator/=(const QuadraticSurd& o) {
  check_field(o);
  if (q_ == 0) q_ = o.q_;
  const Rational norm = o.a_ * o.a_ - o.b_ * o.b_ * q_;
  if (norm == 0) throw DomainError("QuadraticSurd: division by zero");
  QuadraticSurd conj(q_, o.a_ / norm, -o.b_ / norm);
  return *this *= conj;
}

bool operator==(const QuadraticSurd& x, const QuadraticSurd& y) {
  return x.a_ == y.a_ && x.b_ == y.b_;
}

std::string QuadraticSurd::str() const {
  std::ostringstream os;
  os << a_;
  if (b_ != 0) os << (b_ > 0 ? "+" : "-") << mp::abs(b_) << "*sqrt(" << q_ << ")";
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const QuadraticSurd& x) { return os << x.str(); }

}  // namespace chamberwalk
