#include "chamberwalk/q_combinatorics.hpp"

#include <cmath>
#include <map>

namespace chamberwalk {

double QExponent::value() const { return std::pow(static_cast<double>(q), exponent()); }

Rational QExponent::exact() const {
  if (!is_integral()) throw DomainError("QExponent: half-integer power of q is not rational");
  return rpow(q, half_units / 2);
}

QExponent QExponent::sqrt() const {
  if (!is_integral()) throw DomainError("QExponent: quarter powers are not representable");
  return {q, half_units / 2};
}

QExponent QExponent::operator*(const QExponent& o) const {
  if (q != o.q) throw DomainError("QExponent: mismatched q");
  return {q, half_units + o.half_units};
}

QExponent q_t(const Weight& lambda, int q) {
  if (!lambda.is_dominant()) {
    throw DomainError("q_t: " + to_string(lambda) + " is not dominant (use q_tilde)");
  }
  return q_tilde(lambda, q);
}

QExponent q_tilde(const Weight& nu, int q) { return {q, 2 * two_rho_pairing(nu)}; }

Rational poincare(std::span<const WeylElement> subgroup, int q) {
  Rational total = 0;
  for (const auto& w : subgroup) total += rpow(q, -w.length());
  return total;
}

namespace {

// [k]_t = 1 + t + ... + t^{k-1}
Rational q_integer(int k, const Rational& t) {
  Rational s = 0;
  Rational p = 1;
  for (int j = 0; j < k; ++j) {
    s += p;
    p *= t;
  }
  return s;
}

Rational type_a_poincare(int size, const Rational& t) {
  Rational prod = 1;
  for (int k = 1; k <= size; ++k) prod *= q_integer(k, t);
  return prod;
}

}  // namespace

Rational weyl_poincare(int rank, int q) { return type_a_poincare(rank + 1, Rational(1, q)); }

Rational stabilizer_poincare(const Weight& lambda, int q) {
  const Eigen::VectorXi a = lambda.partition();
  std::map<int, int> blocks;
  for (int k = 0; k < a.size(); ++k) ++blocks[a[k]];
  const Rational t(1, q);
  Rational prod = 1;
  for (const auto& [value, size] : blocks) prod *= type_a_poincare(size, t);
  return prod;
}

std::vector<WeylElement> stabilizer(const Weight& lambda) {
  const Eigen::VectorXi a = lambda.partition();
  std::vector<WeylElement> out;
  for (auto& w : weyl_group(lambda.rank())) {
    if (w.apply_partition(a) == a) out.push_back(w);
  }
  return out;
}

BigInt n_lambda(const Weight& lambda, int q) {
  const Rational v = weyl_poincare(lambda.rank(), q) / stabilizer_poincare(lambda, q) * q_t(lambda, q).exact();
  if (mp::denominator(v) != 1) {
    throw ConsistencyError("n_lambda: non-integral sphere cardinality for " + to_string(lambda));
  }
  return mp::numerator(v);
}

Rational sphere_ratio(const Weight& mu, const Weight& lambda, int q) {
  if (!mu.is_dominant() || !lambda.is_dominant()) throw DomainError("sphere_ratio: weights must be dominant");
  return stabilizer_poincare(lambda, q) / stabilizer_poincare(mu, q) *
         rpow(q, two_rho_pairing(mu) - two_rho_pairing(lambda));
}

}  // namespace chamberwalk
