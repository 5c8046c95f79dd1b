#pragma once

// Geometry and combinatorics of the root system of type A_r.
//
// A weight is stored by its integer coordinates m in the basis of fundamental
// weights.  Its "partition" coordinates a in Z^{r+1} (a_k = m_k + ... + m_r,
// a_{r+1} = 0) are an integer representative of the ambient vector modulo
// the all-ones direction; every pairing <e_i - e_j, x> is a_i - a_j, so all
// combinatorics stays in exact integer arithmetic.  Ambient coordinates in the
// trace-zero hyperplane of R^{r+1} are derived views.

#include "chamberwalk/numeric.hpp"

#include <Eigen/Core>

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <utility>
#include <vector>

namespace chamberwalk {

template <class Scalar>
using AmbientVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
using AmbientMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Rank r of the root system and regularity q of the building.
struct RankConfig {
  int rank = 1;
  int q = 2;

  /// Throws DomainError unless rank >= 1 and q >= 2.
  void validate() const;
};

class Weight {
 public:
  Weight() = default;
  explicit Weight(Eigen::VectorXi coords) : m_(std::move(coords)) {}
  Weight(std::initializer_list<int> coords);

  static Weight zero(int rank);
  /// The fundamental weight lambda_i, 1 <= i <= rank.
  static Weight fundamental(int rank, int i);
  /// Inverse of partition(): a has length rank + 1.
  static Weight from_partition(const Eigen::VectorXi& a);

  int rank() const { return static_cast<int>(m_.size()); }
  int operator[](int i) const { return m_[i]; }
  const Eigen::VectorXi& coords() const { return m_; }

  /// Membership in P+ (all m_i >= 0).
  bool is_dominant() const;
  /// Membership in P++ (all m_i >= 1).
  bool is_regular() const;
  /// m_1 + ... + m_r; for dominant weights this is max(a) - min(a).
  int level() const { return m_.sum(); }

  Eigen::VectorXi partition() const;

  Weight operator+(const Weight& o) const { return Weight(Eigen::VectorXi(m_ + o.m_)); }
  Weight operator-(const Weight& o) const { return Weight(Eigen::VectorXi(m_ - o.m_)); }
  Weight operator-() const { return Weight(Eigen::VectorXi(-m_)); }
  Weight operator*(int s) const { return Weight(Eigen::VectorXi(m_ * s)); }

  friend bool operator==(const Weight& x, const Weight& y);
  friend std::strong_ordering operator<=>(const Weight& x, const Weight& y);

 private:
  Eigen::VectorXi m_;
};

struct WeightHash {
  std::size_t operator()(const Weight& w) const noexcept;
};

std::string to_string(const Weight& w);

/// An element of W0 = S_{r+1}, acting on ambient coordinates by
/// (w x)_{sigma(k)} = x_k, i.e. w e_k = e_{sigma(k)}.
class WeylElement {
 public:
  WeylElement() = default;
  explicit WeylElement(std::vector<int> sigma);
  static WeylElement identity(int rank);

  int rank() const { return static_cast<int>(sigma_.size()) - 1; }
  const std::vector<int>& permutation() const { return sigma_; }
  /// |{alpha in R+ : w alpha in R-}|, the number of inversions of sigma.
  int length() const { return length_; }
  int sign() const { return (length_ % 2 == 0) ? 1 : -1; }

  WeylElement inverse() const;
  WeylElement operator*(const WeylElement& o) const;

  Weight apply(const Weight& x) const;
  Eigen::VectorXi apply_partition(const Eigen::VectorXi& a) const;
  template <class Derived>
  AmbientVector<typename Derived::Scalar> apply(const Eigen::MatrixBase<Derived>& x) const {
    AmbientVector<typename Derived::Scalar> y(x.size());
    for (int k = 0; k < x.size(); ++k) y[sigma_[k]] = x[k];
    return y;
  }

  friend bool operator==(const WeylElement& x, const WeylElement& y) { return x.sigma_ == y.sigma_; }

 private:
  std::vector<int> sigma_;
  int length_ = 0;
};

/// Largest rank for which W0 is materialized as an explicit list.
inline constexpr int kMaxEnumeratedRank = 8;

/// Columns are alpha_i = e_i - e_{i+1}.
template <class Scalar = double>
AmbientMatrix<Scalar> simple_roots(int rank) {
  AmbientMatrix<Scalar> roots = AmbientMatrix<Scalar>::Zero(rank + 1, rank);
  for (int i = 0; i < rank; ++i) {
    roots(i, i) = Scalar(1);
    roots(i + 1, i) = Scalar(-1);
  }
  return roots;
}

/// Columns are e_i - e_j, i < j, in lexicographic order of (i, j).
template <class Scalar = double>
AmbientMatrix<Scalar> positive_roots(int rank) {
  const int n = rank + 1;
  AmbientMatrix<Scalar> roots = AmbientMatrix<Scalar>::Zero(n, n * (n - 1) / 2);
  int col = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j, ++col) {
      roots(i, col) = Scalar(1);
      roots(j, col) = Scalar(-1);
    }
  }
  return roots;
}

/// Columns are lambda_j = e_1 + ... + e_j - j/(r+1) (e_1 + ... + e_{r+1}).
template <class Scalar = double>
AmbientMatrix<Scalar> fundamental_weights(int rank) {
  const int n = rank + 1;
  AmbientMatrix<Scalar> weights(n, rank);
  for (int j = 1; j <= rank; ++j) {
    for (int k = 1; k <= n; ++k) {
      Scalar v = Scalar(k <= j ? 1 : 0) - Scalar(j) / Scalar(n);
      weights(k - 1, j - 1) = v;
    }
  }
  return weights;
}

template <class Scalar = double>
AmbientVector<Scalar> ambient(const Weight& x) {
  const Eigen::VectorXi a = x.partition();
  AmbientVector<Scalar> v(a.size());
  Scalar mean = Scalar(a.sum()) / Scalar(static_cast<int>(a.size()));
  for (int k = 0; k < a.size(); ++k) v[k] = Scalar(a[k]) - mean;
  return v;
}

/// Fundamental coordinates <alpha_i, x> of an ambient vector.
template <class Derived>
AmbientVector<typename Derived::Scalar> fundamental_coordinates(const Eigen::MatrixBase<Derived>& x) {
  AmbientVector<typename Derived::Scalar> m(x.size() - 1);
  for (int i = 0; i + 1 < x.size(); ++i) m[i] = x[i] - x[i + 1];
  return m;
}

/// <x, y> in the ambient Euclidean structure, exactly.
Rational inner_product(const Weight& x, const Weight& y);
Rational norm2(const Weight& x);

/// Distinct elements of the W0-orbit, sorted.
std::vector<Weight> weyl_orbit(const Weight& x);

/// Dominant weights of level <= window, ordered by level then lexicographically.
std::vector<Weight> dominant_weights(int rank, int window);

/// (lambda, w) with lambda in P+, w x = lambda and w of minimal length.
std::pair<Weight, WeylElement> dominant_representative(const Weight& x);
Weight dominant(const Weight& x);

/// All (r+1)! elements of W0; throws DomainError for rank > kMaxEnumeratedRank.
std::vector<WeylElement> weyl_group(int rank);

/// pi(x) = prod_{alpha > 0} <alpha, x>; exact on P.
BigInt pi(const Weight& x);

template <class Derived>
typename Derived::Scalar pi(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  Scalar p(1);
  for (int i = 0; i < x.size(); ++i)
    for (int j = i + 1; j < x.size(); ++j) p *= x[i] - x[j];
  return p;
}

/// <2 rho, x> = sum_{alpha > 0} <alpha, x> = sum_j m_j j (r + 1 - j).
std::int64_t two_rho_pairing(const Weight& x);

/// h(0) = |union of W0 lambda_i| = 2^{r+1} - 2.
std::int64_t h_zero(int rank);

/// c = 2^{r-2} / (2^r - 1), the ratio ||x||^2 / |x|^2.
Rational norm_constant(int rank);
double norm_constant_double(int rank);

/// ||x||^2 computed by the orbit sum, cross-checked against c |x|^2.
/// Throws ConsistencyError if the two routes disagree.
Rational cnorm2(const Weight& x);
double cnorm2(const AmbientVector<double>& x);

/// Precomputed data of A_r shared by the kernel and spectral modules.
class RootSystem {
 public:
  explicit RootSystem(int rank);

  int rank() const { return rank_; }
  int num_positive_roots() const { return rank_ * (rank_ + 1) / 2; }

  /// W0 lambda_i as weights (i = 1..rank).
  const std::vector<Weight>& minuscule_orbit(int i) const { return orbits_.at(i - 1); }
  /// The same orbit as 0/1 increments of partition coordinates.
  const std::vector<Eigen::VectorXi>& minuscule_increments(int i) const { return increments_.at(i - 1); }

  /// Empty for rank > kMaxEnumeratedRank.
  const std::vector<WeylElement>& weyl_elements() const { return group_; }

  const AmbientMatrix<double>& fundamental_weights() const { return fundamental_; }
  const AmbientMatrix<double>& positive_roots() const { return positive_; }
  /// Orthonormal basis of the trace-zero hyperplane, as columns.
  const AmbientMatrix<double>& hyperplane_basis() const { return basis_; }

  /// Volume of a fundamental cell of P inside the hyperplane, 1/sqrt(r+1).
  double weight_lattice_covolume() const;

 private:
  int rank_;
  std::vector<std::vector<Weight>> orbits_;
  std::vector<std::vector<Eigen::VectorXi>> increments_;
  std::vector<WeylElement> group_;
  AmbientMatrix<double> fundamental_;
  AmbientMatrix<double> positive_;
  AmbientMatrix<double> basis_;
};

}  // namespace chamberwalk
