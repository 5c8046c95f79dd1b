#pragma once

// q-power bookkeeping on the building: q_{t_lambda}, its signed extension,
// Poincare polynomials of W0 and its parabolic subgroups, and the sphere
// cardinalities N_lambda.

#include "chamberwalk/numeric.hpp"
#include "chamberwalk/root_system.hpp"

#include <span>

namespace chamberwalk {

/// q^(half_units / 2) with an exact exponent.
struct QExponent {
  int q = 2;
  std::int64_t half_units = 0;

  bool is_integral() const { return half_units % 2 == 0; }
  /// Exponent as a double (may be a half-integer).
  double exponent() const { return static_cast<double>(half_units) / 2.0; }
  double value() const;
  /// Exact q^e; throws DomainError for half-integer exponents.
  Rational exact() const;
  QuadraticSurd surd() const { return QuadraticSurd::half_power(q, half_units); }

  QExponent sqrt() const;
  QExponent operator*(const QExponent& o) const;
  friend bool operator==(const QExponent&, const QExponent&) = default;
};

/// q_{t_lambda} = q^{<2 rho, lambda>}; lambda must be dominant.
QExponent q_t(const Weight& lambda, int q);

/// The extension q^{<2 rho, nu>} to all of P (negative exponents allowed).
QExponent q_tilde(const Weight& nu, int q);

/// sum_{w in V} q^{-l(w)}.
Rational poincare(std::span<const WeylElement> subgroup, int q);

/// W0(q^{-1}) = prod_{k=1}^{r+1} (1 + t + ... + t^{k-1}) at t = 1/q.
Rational weyl_poincare(int rank, int q);

/// W_{0 lambda}(q^{-1}) for the stabilizer of lambda, read off from the
/// blocks of equal partition coordinates (a product of type-A factors).
Rational stabilizer_poincare(const Weight& lambda, int q);

/// Stabilizer of lambda as an explicit list (rank <= kMaxEnumeratedRank).
std::vector<WeylElement> stabilizer(const Weight& lambda);

/// N_lambda = W0(q^{-1}) / W0lambda(q^{-1}) * q_{t_lambda}; throws
/// ConsistencyError if the rational result is not an integer.
BigInt n_lambda(const Weight& lambda, int q);

/// N_mu / N_lambda, exactly, without forming the (huge) cardinalities.
Rational sphere_ratio(const Weight& mu, const Weight& lambda, int q);

}  // namespace chamberwalk
