#include "chamberwalk/root_system.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace chamberwalk {

void RankConfig::validate() const {
  if (rank < 1) throw DomainError("rank must be >= 1, got " + std::to_string(rank));
  if (q < 2) throw DomainError("q must be >= 2, got " + std::to_string(q));
}

Weight::Weight(std::initializer_list<int> coords) : m_(static_cast<Eigen::Index>(coords.size())) {
  int k = 0;
  for (int c : coords) m_[k++] = c;
}

Weight Weight::zero(int rank) { return Weight(Eigen::VectorXi::Zero(rank)); }

Weight Weight::fundamental(int rank, int i) {
  if (i < 1 || i > rank) throw DomainError("fundamental weight index out of range");
  Eigen::VectorXi m = Eigen::VectorXi::Zero(rank);
  m[i - 1] = 1;
  return Weight(std::move(m));
}

Weight Weight::from_partition(const Eigen::VectorXi& a) {
  Eigen::VectorXi m(a.size() - 1);
  for (int k = 0; k + 1 < a.size(); ++k) m[k] = a[k] - a[k + 1];
  return Weight(std::move(m));
}

bool Weight::is_dominant() const { return (m_.array() >= 0).all(); }
bool Weight::is_regular() const { return (m_.array() >= 1).all(); }

Eigen::VectorXi Weight::partition() const {
  const int r = rank();
  Eigen::VectorXi a(r + 1);
  a[r] = 0;
  for (int k = r - 1; k >= 0; --k) a[k] = a[k + 1] + m_[k];
  return a;
}

bool operator==(const Weight& x, const Weight& y) {
  return x.m_.size() == y.m_.size() && x.m_ == y.m_;
}

std::strong_ordering operator<=>(const Weight& x, const Weight& y) {
  if (auto c = x.m_.size() <=> y.m_.size(); c != 0) return c;
  for (int k = 0; k < x.m_.size(); ++k) {
    if (auto c = x.m_[k] <=> y.m_[k]; c != 0) return c;
  }
  return std::strong_ordering::equal;
}

std::size_t WeightHash::operator()(const Weight& w) const noexcept {
  std::size_t h = 0x9e3779b97f4a7c15ULL ^ static_cast<std::size_t>(w.rank());
  for (int k = 0; k < w.rank(); ++k) {
    h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(w[k])) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

std::string to_string(const Weight& w) {
  std::ostringstream os;
  os << '(';
  for (int k = 0; k < w.rank(); ++k) os << (k ? "," : "") << w[k];
  os << ')';
  return os.str();
}

WeylElement::WeylElement(std::vector<int> sigma) : sigma_(std::move(sigma)) {
  for (std::size_t i = 0; i < sigma_.size(); ++i)
    for (std::size_t j = i + 1; j < sigma_.size(); ++j)
      if (sigma_[i] > sigma_[j]) ++length_;
}

WeylElement WeylElement::identity(int rank) {
  std::vector<int> s(rank + 1);
  std::iota(s.begin(), s.end(), 0);
  return WeylElement(std::move(s));
}

WeylElement WeylElement::inverse() const {
  std::vector<int> inv(sigma_.size());
  for (std::size_t k = 0; k < sigma_.size(); ++k) inv[sigma_[k]] = static_cast<int>(k);
  return WeylElement(std::move(inv));
}

WeylElement WeylElement::operator*(const WeylElement& o) const {
  std::vector<int> s(sigma_.size());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = sigma_[o.sigma_[k]];
  return WeylElement(std::move(s));
}

Eigen::VectorXi WeylElement::apply_partition(const Eigen::VectorXi& a) const {
  Eigen::VectorXi b(a.size());
  for (int k = 0; k < a.size(); ++k) b[sigma_[k]] = a[k];
  return b;
}

Weight WeylElement::apply(const Weight& x) const { return Weight::from_partition(apply_partition(x.partition())); }

Rational inner_product(const Weight& x, const Weight& y) {
  const Eigen::VectorXi a = x.partition();
  const Eigen::VectorXi b = y.partition();
  const long n = a.size();
  const long dot = a.cast<long>().dot(b.cast<long>());
  const long sa = a.cast<long>().sum();
  const long sb = b.cast<long>().sum();
  return Rational(dot) - Rational(sa * sb, n);
}

Rational norm2(const Weight& x) { return inner_product(x, x); }

std::vector<Weight> weyl_orbit(const Weight& x) {
  Eigen::VectorXi a = x.partition();
  std::vector<int> v(a.data(), a.data() + a.size());
  std::sort(v.begin(), v.end());
  std::vector<Weight> orbit;
  do {
    orbit.push_back(Weight::from_partition(Eigen::Map<Eigen::VectorXi>(v.data(), static_cast<Eigen::Index>(v.size()))));
  } while (std::next_permutation(v.begin(), v.end()));
  std::sort(orbit.begin(), orbit.end());
  return orbit;
}

std::pair<Weight, WeylElement> dominant_representative(const Weight& x) {
  const Eigen::VectorXi a = x.partition();
  const int n = static_cast<int>(a.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return a[i] > a[j]; });
  std::vector<int> sigma(n);
  Eigen::VectorXi sorted(n);
  for (int j = 0; j < n; ++j) {
    sigma[order[j]] = j;
    sorted[j] = a[order[j]];
  }
  return {Weight::from_partition(sorted), WeylElement(std::move(sigma))};
}

Weight dominant(const Weight& x) {
  Eigen::VectorXi a = x.partition();
  std::sort(a.data(), a.data() + a.size(), std::greater<>());
  return Weight::from_partition(a);
}

std::vector<Weight> dominant_weights(int rank, int window) {
  std::vector<Weight> out;
  if (window < 0) return out;
  Eigen::VectorXi m = Eigen::VectorXi::Zero(rank);
  // odometer over m with sum(m) <= window
  while (true) {
    out.emplace_back(m);
    int k = rank - 1;
    while (k >= 0) {
      ++m[k];
      if (m.sum() <= window) break;
      m[k] = 0;
      --k;
    }
    if (k < 0) break;
  }
  std::stable_sort(out.begin(), out.end(), [](const Weight& x, const Weight& y) {
    if (x.level() != y.level()) return x.level() < y.level();
    return x < y;
  });
  return out;
}

std::vector<WeylElement> weyl_group(int rank) {
  if (rank > kMaxEnumeratedRank) {
    throw DomainError("W0 is only materialized for rank <= " + std::to_string(kMaxEnumeratedRank));
  }
  std::vector<int> s(rank + 1);
  std::iota(s.begin(), s.end(), 0);
  std::vector<WeylElement> group;
  do {
    group.emplace_back(s);
  } while (std::next_permutation(s.begin(), s.end()));
  return group;
}

BigInt pi(const Weight& x) {
  const Eigen::VectorXi a = x.partition();
  BigInt p = 1;
  for (int i = 0; i < a.size(); ++i)
    for (int j = i + 1; j < a.size(); ++j) p *= a[i] - a[j];
  return p;
}

std::int64_t two_rho_pairing(const Weight& x) {
  const int r = x.rank();
  std::int64_t s = 0;
  for (int j = 1; j <= r; ++j) s += static_cast<std::int64_t>(x[j - 1]) * j * (r + 1 - j);
  return s;
}

std::int64_t h_zero(int rank) { return (std::int64_t{1} << (rank + 1)) - 2; }

Rational norm_constant(int rank) {
  return Rational(ipow(2, static_cast<unsigned>(rank)), 4 * (ipow(2, static_cast<unsigned>(rank)) - 1));
}

double norm_constant_double(int rank) { return norm_constant(rank).convert_to<double>(); }

namespace {

// Sum over the minuscule orbits of <lambda, x>^2, with x given by its ambient
// representative scaled by (r+1) so everything is an integer.
template <class Scalar, class Pairing>
Scalar orbit_square_sum(int rank, Pairing&& pairing) {
  Scalar total(0);
  const int n = rank + 1;
  for (int i = 1; i <= rank; ++i) {
    std::vector<int> mask(n, 0);
    std::fill(mask.begin(), mask.begin() + i, 1);
    std::sort(mask.begin(), mask.end());
    do {
      const Scalar v = pairing(mask, i);
      total += v * v;
    } while (std::next_permutation(mask.begin(), mask.end()));
  }
  return total;
}

}  // namespace

Rational cnorm2(const Weight& x) {
  const int r = x.rank();
  const int n = r + 1;
  const Eigen::VectorXi a = x.partition();
  const long sum_a = a.cast<long>().sum();
  // <mu, x> for mu = e_S - |S|/n * 1 equals sum_{k in S} a_k - |S| sum(a) / n.
  auto pairing = [&](const std::vector<int>& mask, int size) {
    long s = 0;
    for (int k = 0; k < n; ++k)
      if (mask[k]) s += a[k];
    return Rational(s) - Rational(size * sum_a, n);
  };
  const Rational by_orbits = orbit_square_sum<Rational>(r, pairing) / Rational(h_zero(r));
  const Rational by_constant = norm_constant(r) * norm2(x);
  if (by_orbits != by_constant) {
    throw ConsistencyError("cnorm2: orbit-sum and c|x|^2 disagree for " + to_string(x));
  }
  return by_orbits;
}

double cnorm2(const AmbientVector<double>& x) {
  const int n = static_cast<int>(x.size());
  const int r = n - 1;
  const double mean = x.mean();
  if (std::abs(x.sum()) > 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff())) {
    throw DomainError("cnorm2: ambient vector does not lie in the trace-zero hyperplane");
  }
  auto pairing = [&](const std::vector<int>& mask, int) {
    double s = 0;
    for (int k = 0; k < n; ++k)
      if (mask[k]) s += x[k] - mean;
    return s;
  };
  const double by_orbits = orbit_square_sum<double>(r, pairing) / static_cast<double>(h_zero(r));
  const double by_constant = norm_constant_double(r) * (x.array() - mean).matrix().squaredNorm();
  if (std::abs(by_orbits - by_constant) > 1e-12 * std::max(1.0, by_constant)) {
    throw ConsistencyError("cnorm2: orbit-sum and c|x|^2 disagree");
  }
  return by_orbits;
}

RootSystem::RootSystem(int rank) : rank_(rank) {
  if (rank < 1) throw DomainError("rank must be >= 1");
  const int n = rank + 1;
  for (int i = 1; i <= rank; ++i) {
    std::vector<int> mask(n, 0);
    std::fill(mask.begin(), mask.begin() + i, 1);
    std::sort(mask.begin(), mask.end());
    std::vector<Eigen::VectorXi> incs;
    std::vector<Weight> orbit;
    do {
      Eigen::VectorXi v = Eigen::Map<Eigen::VectorXi>(mask.data(), n);
      orbit.push_back(Weight::from_partition(v));
      incs.push_back(std::move(v));
    } while (std::next_permutation(mask.begin(), mask.end()));
    orbits_.push_back(std::move(orbit));
    increments_.push_back(std::move(incs));
  }
  if (rank <= kMaxEnumeratedRank) group_ = weyl_group(rank);
  fundamental_ = chamberwalk::fundamental_weights<double>(rank);
  positive_ = chamberwalk::positive_roots<double>(rank);

  // Orthonormal basis of {sum x = 0}: QR of the simple roots.
  Eigen::HouseholderQR<AmbientMatrix<double>> qr(simple_roots<double>(rank));
  basis_ = qr.householderQ() * AmbientMatrix<double>::Identity(n, rank);
}

double RootSystem::weight_lattice_covolume() const { return 1.0 / std::sqrt(static_cast<double>(rank_ + 1)); }

}  // namespace chamberwalk
