#include "chamberwalk/macdonald.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace chamberwalk {

namespace {

AmbientVector<Complex> project(AmbientVector<Complex> z) {
  const Complex mean = z.mean();
  z.array() -= mean;
  return z;
}

double uniform01(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

}  // namespace

SpectralPoint::SpectralPoint(AmbientVector<Complex> z) : z_(project(std::move(z))) {
  generic_ = true;
  for (int i = 0; i < z_.size() && generic_; ++i)
    for (int j = i + 1; j < z_.size(); ++j)
      if (std::abs(1.0 - std::exp(-(z_[i] - z_[j]))) < kPoleProximity) {
        generic_ = false;
        break;
      }
}

Complex c_function(int q, const SpectralPoint& z) { return c_function<Complex>(q, z.z()); }

// h(z) = sum over nonempty proper subsets S of e^{sum_{k in S} z_k}
//      = prod_k (1 + e^{z_k}) - 1 - e^{sum z}, for z in the trace-zero plane.
Complex h_tilde(const SpectralPoint& z) {
  const auto& v = z.z();
  Complex prod(1.0);
  for (int k = 0; k < v.size(); ++k) prod *= 1.0 + std::exp(v[k]);
  const Complex h = prod - 1.0 - std::exp(v.sum());
  return h / static_cast<double>(h_zero(z.rank()));
}

double h_tilde(const AmbientVector<double>& z) {
  return h_tilde(SpectralPoint(z.cast<Complex>())).real();
}

Complex macdonald_p(const Weight& lambda, const SpectralPoint& z, int q) {
  if (!lambda.is_dominant()) throw DomainError("macdonald_p: lambda must be dominant");
  if (z.rank() != lambda.rank()) throw DomainError("macdonald_p: rank mismatch");
  if (!z.generic()) throw NonGenericPointError("macdonald_p: z is not generic, perturb it");
  const auto group = weyl_group(lambda.rank());
  const AmbientVector<double> l = ambient<double>(lambda);
  std::complex<long double> acc = 0;
  for (const auto& w : group) {
    const AmbientVector<Complex> y = w.inverse().apply(z.z());
    Complex pairing = 0;
    for (int k = 0; k < y.size(); ++k) pairing += l[k] * y[k];
    const Complex term = c_function<Complex>(q, y) * std::exp(pairing);
    acc += std::complex<long double>(term.real(), term.imag());
  }
  const double scale = std::pow(static_cast<double>(q), -0.5 * static_cast<double>(two_rho_pairing(lambda))) /
                       weyl_poincare(lambda.rank(), q).convert_to<double>();
  return Complex(static_cast<double>(acc.real()), static_cast<double>(acc.imag())) * scale;
}

BigInt f0_envelope(const Weight& lambda) {
  const Eigen::VectorXi a = lambda.partition();
  BigInt p = 1;
  for (int i = 0; i < a.size(); ++i)
    for (int j = i + 1; j < a.size(); ++j) p *= 1 + a[i] - a[j];
  return p;
}

// ---------------------------------------------------------------------------
// F0

F0Evaluator::F0Evaluator(int rank, int q) : F0Evaluator(rank, q, Options{}) {}

F0Evaluator::F0Evaluator(int rank, int q, Options options)
    : rank_(rank), q_(q), options_(options), roots_(rank) {
  RankConfig{rank, q}.validate();
  if (rank > kMaxEnumeratedRank) throw DomainError("F0Evaluator: rank too large");
  const int n = rank + 1;
  std::mt19937_64 gen(options_.direction_seed);
  const double min_gap = 0.1 / n;
  for (int attempt = 0;; ++attempt) {
    if (attempt > 1000) throw ConsistencyError("F0Evaluator: no generic direction found");
    AmbientVector<double> u(n);
    for (int k = 0; k < n; ++k) u[k] = 2.0 * uniform01(gen) - 1.0;
    u.array() -= u.mean();
    if (u.norm() < 1e-3) continue;
    u /= u.norm();
    double gap = 1e300;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) gap = std::min(gap, std::abs(u[i] - u[j]));
    if (gap >= min_gap) {
      direction_ = u;
      break;
    }
  }

  // Precision budget: the symmetrized sum loses about |R+| log10(1/(eps gap))
  // digits at the finest eps.  Keep at least 20 of the 64.
  double gap = 1e300;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) gap = std::min(gap, std::abs(direction_[i] - direction_[j]));
  const int positive = roots_.num_positive_roots();
  while (options_.max_levels > options_.min_levels) {
    // worst case is the largest level we are likely to see; use level 1 as reference and
    // leave the extra log10(1 + level) to the headroom
    const double eps = options_.base_eps * std::ldexp(1.0, -(options_.max_levels - 1));
    const double lost = positive * std::log10(1.0 / (eps * gap));
    if (lost <= 40.0) break;
    --options_.max_levels;
  }

  for (const auto& w : roots_.weyl_elements()) {
    const AmbientVector<double> y = w.inverse().apply(direction_);
    AmbientVector<HighFloat> yh(n);
    for (int k = 0; k < n; ++k) yh[k] = HighFloat(y[k]);
    yh.array() -= yh.sum() / HighFloat(n);
    rotated_.push_back(std::move(yh));
  }
  const Rational wp = weyl_poincare(rank, q);
  weyl_poincare_ = HighFloat(mp::numerator(wp)) / HighFloat(mp::denominator(wp));
}

const std::vector<HighFloat>& F0Evaluator::c_values(int level) const {
  auto it = c_cache_.find(level);
  if (it != c_cache_.end()) return it->second;
  const std::size_t group = rotated_.size();
  std::vector<HighFloat> values(static_cast<std::size_t>(options_.max_levels) * group);
  const HighFloat base = HighFloat(options_.base_eps) / HighFloat(1 + level);
  for (int k = 0; k < options_.max_levels; ++k) {
    const HighFloat eps = base / HighFloat(mp::pow(HighFloat(2), k));
    for (std::size_t w = 0; w < group; ++w) {
      const AmbientVector<HighFloat> z = rotated_[w] * eps;
      values[k * group + w] = c_function<HighFloat>(q_, z);
    }
  }
  return c_cache_.emplace(level, std::move(values)).first->second;
}

HighFloat F0Evaluator::scaled_p_at(const Weight& lambda, const HighFloat& eps) const {
  const Eigen::VectorXi a = lambda.partition();
  HighFloat sum = 0;
  for (const auto& y : rotated_) {
    AmbientVector<HighFloat> z = y * eps;
    HighFloat pairing = 0;
    for (int k = 0; k < a.size(); ++k) pairing += HighFloat(a[k]) * z[k];
    sum += c_function<HighFloat>(q_, z) * exp(pairing);
  }
  return sum / weyl_poincare_;
}

F0Entry F0Evaluator::evaluate(const Weight& lambda) const {
  if (!lambda.is_dominant()) throw DomainError("f0: lambda must be dominant");
  if (lambda.rank() != rank_) throw DomainError("f0: rank mismatch");
  const int levels = options_.max_levels;
  const int level = lambda.level();
  const auto& cvals = c_values(level);
  const std::size_t group = rotated_.size();
  const Eigen::VectorXi a = lambda.partition();

  const HighFloat base = HighFloat(options_.base_eps) / HighFloat(1 + level);
  std::vector<HighFloat> eps(levels);
  for (int k = 0; k < levels; ++k) eps[k] = base / HighFloat(mp::pow(HighFloat(2), k));

  // e^{eps_k <lambda, y_w>}: one exp at the finest eps, then repeated squaring.
  std::vector<HighFloat> sums(levels, HighFloat(0));
  for (std::size_t w = 0; w < group; ++w) {
    HighFloat pairing = 0;
    for (int k = 0; k < a.size(); ++k) pairing += HighFloat(a[k]) * rotated_[w][k];
    HighFloat e = exp(pairing * eps[levels - 1]);
    for (int k = levels - 1; k >= 0; --k) {
      sums[k] += cvals[k * group + w] * e;
      e *= e;
    }
  }
  for (auto& s : sums) s /= weyl_poincare_;

  // Neville tableau at eps = 0, points added from coarse to fine.
  std::vector<HighFloat> row;  // row[j] = P_{k-j..k}(0)
  std::vector<HighFloat> estimates;
  F0Entry entry;
  double prev_change = 1e300;
  bool converged = false;
  for (int k = 0; k < levels; ++k) {
    std::vector<HighFloat> next(k + 1);
    next[0] = sums[k];
    for (int j = 1; j <= k; ++j) {
      const HighFloat& xi = eps[k - j];
      const HighFloat& xk = eps[k];
      next[j] = (xi * next[j - 1] - xk * row[j - 1]) / (xi - xk);
    }
    row = std::move(next);
    estimates.push_back(row[k]);
    if (k == 0) continue;
    const double change = abs((estimates[k] - estimates[k - 1]) / estimates[k]).convert_to<double>();
    entry.levels = k + 1;
    entry.last_change = change;
    if (k + 1 >= options_.min_levels && change <= options_.stop_tolerance &&
        prev_change <= options_.stop_tolerance) {
      converged = true;
      break;
    }
    prev_change = change;
  }
  if (!converged) {
    const std::size_t n = estimates.size();
    const auto rel = [&](std::size_t i, std::size_t j) {
      return abs((estimates[i] - estimates[j]) / estimates[i]).convert_to<double>();
    };
    if (n < 3 || rel(n - 1, n - 2) > options_.accept_tolerance || rel(n - 2, n - 3) > options_.accept_tolerance) {
      std::ostringstream os;
      os << "f0: extrapolation did not settle for " << to_string(lambda) << "; estimates:";
      for (const auto& e : estimates) os << ' ' << e.convert_to<double>();
      throw ExtrapolationError(os.str());
    }
  }
  const HighFloat value = estimates.back();
  if (value <= 0) throw ExtrapolationError("f0: non-positive value at " + to_string(lambda));
  entry.scaled = value.convert_to<double>();
  entry.log_value = log(value).convert_to<double>() -
                    0.5 * static_cast<double>(two_rho_pairing(lambda)) * std::log(static_cast<double>(q_));
  entry.envelope_ratio = (value / HighFloat(f0_envelope(lambda))).convert_to<double>();
  return entry;
}

double f0(const Weight& lambda, int q) {
  const F0Evaluator evaluator(lambda.rank(), q);
  return std::exp(evaluator.evaluate(lambda).log_value);
}

F0Table::F0Table(int rank, int q, int window) : F0Table(F0Evaluator(rank, q), window) {}

F0Table::F0Table(const F0Evaluator& evaluator, int window)
    : rank_(evaluator.rank()), q_(evaluator.q()), window_(window) {
  for (const auto& lambda : dominant_weights(rank_, window)) entries_.emplace(lambda, evaluator.evaluate(lambda));
  const double origin = entries_.at(Weight::zero(rank_)).scaled;
  if (std::abs(origin - 1.0) > 1e-10) {
    throw ConsistencyError("F0Table: F0(0) = " + std::to_string(origin) + " is not 1");
  }
}

const F0Entry& F0Table::entry(const Weight& lambda) const {
  auto it = entries_.find(lambda);
  if (it == entries_.end()) throw DomainError("F0Table: " + to_string(lambda) + " outside the window");
  return it->second;
}

double F0Table::value(const Weight& lambda) const { return std::exp(entry(lambda).log_value); }

double F0Table::ratio(const Weight& mu, const Weight& lambda) const {
  const double s = entry(mu).scaled / entry(lambda).scaled;
  const double e = 0.5 * static_cast<double>(two_rho_pairing(lambda) - two_rho_pairing(mu));
  return s * std::pow(static_cast<double>(q_), e);
}

// ---------------------------------------------------------------------------
// Plancherel quadrature

PlancherelQuadrature::PlancherelQuadrature(int rank, int q) : PlancherelQuadrature(rank, q, Options{}) {}

PlancherelQuadrature::PlancherelQuadrature(int rank, int q, Options options)
    : rank_(rank), q_(q), options_(options), roots_(rank) {
  RankConfig{rank, q}.validate();
  // rho~ of the simple walk: sum_i p_i q_i^{1/2} |W0 lambda_i| with
  // p_i = q_i^{-1/2} / S, S = sum_j q_j^{-1/2} N_j, so rho~ = h(0) / S.
  double s = 0;
  for (int j = 1; j <= rank; ++j) {
    const Weight lj = Weight::fundamental(rank, j);
    s += std::pow(static_cast<double>(q), -0.5 * static_cast<double>(two_rho_pairing(lj))) *
         n_lambda(lj, q).convert_to<double>();
  }
  rho_ = static_cast<double>(h_zero(rank)) / s;

  const Weight origin = Weight::zero(rank);
  int grid = options_.min_grid;
  Complex previous = integrate(0, origin, grid);
  while (true) {
    if (grid * 2 > options_.max_grid) throw QuadratureError("PlancherelQuadrature: normalization did not stabilize");
    const Complex current = integrate(0, origin, grid * 2);
    if (std::abs(current - previous) <= options_.normalization_tolerance * std::abs(current)) break;
    grid *= 2;
    previous = current;
  }
  build_grid(grid);
  normalization_ = previous.real();
  if (std::abs(previous.imag()) > 1e-10 * std::abs(previous) || normalization_ <= 0) {
    throw QuadratureError("PlancherelQuadrature: bad normalization");
  }
}

namespace {

// 1 / c(-i theta) = prod_{alpha > 0} (1 - e^{i<alpha,theta>}) / (1 - q^{-1} e^{i<alpha,theta>}); no poles.
Complex inverse_c_minus(int q, const AmbientVector<double>& theta) {
  Complex v(1.0);
  const double t = 1.0 / q;
  for (int i = 0; i < theta.size(); ++i)
    for (int j = i + 1; j < theta.size(); ++j) {
      const Complex e = std::polar(1.0, theta[i] - theta[j]);
      v *= (1.0 - e) / (1.0 - t * e);
    }
  return v;
}

double h_tilde_imaginary(const AmbientVector<double>& theta) {
  Complex prod(1.0);
  for (int k = 0; k < theta.size(); ++k) prod *= 1.0 + std::polar(1.0, theta[k]);
  return (prod - 2.0).real() / static_cast<double>(h_zero(static_cast<int>(theta.size()) - 1));
}

// theta = 2 pi sum_k s_k alpha_k at s = j / grid
void grid_theta(const std::vector<int>& j, int grid, AmbientVector<double>& theta) {
  const int r = static_cast<int>(j.size());
  theta.setZero(r + 1);
  for (int k = 0; k < r; ++k) {
    const double s = 2.0 * std::numbers::pi * j[k] / grid;
    theta[k] += s;
    theta[k + 1] -= s;
  }
}

bool advance(std::vector<int>& j, int grid) {
  for (int k = static_cast<int>(j.size()) - 1; k >= 0; --k) {
    if (++j[k] < grid) return true;
    j[k] = 0;
  }
  return false;
}

}  // namespace

// Reduced integrand: the W0-symmetrization of P_lambda / |c|^2 integrates to
// |W0| times the identity term because the grid is W0-stable; the common
// factor |W0| / W0(q^{-1}) cancels against the normalization.
Complex PlancherelQuadrature::integrate(int n, const Weight& lambda, int grid) const {
  std::vector<int> j(rank_, 0);
  AmbientVector<double> theta;
  std::complex<long double> acc = 0;
  do {
    grid_theta(j, grid, theta);
    long phase = 0;
    for (int k = 0; k < rank_; ++k) phase += static_cast<long>(lambda[k]) * j[k];
    const Complex e = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(phase % grid) / grid);
    const Complex v = std::pow(h_tilde_imaginary(theta), n) * e * inverse_c_minus(q_, theta);
    acc += std::complex<long double>(v.real(), v.imag());
  } while (advance(j, grid));
  const long double points = std::pow(static_cast<long double>(grid), rank_);
  return Complex(static_cast<double>(acc.real() / points), static_cast<double>(acc.imag() / points));
}

void PlancherelQuadrature::build_grid(int grid) {
  grid_ = grid;
  h_values_.clear();
  inverse_c_.clear();
  std::vector<int> j(rank_, 0);
  AmbientVector<double> theta;
  do {
    grid_theta(j, grid, theta);
    h_values_.push_back(h_tilde_imaginary(theta));
    inverse_c_.push_back(inverse_c_minus(q_, theta));
  } while (advance(j, grid));
}

double PlancherelQuadrature::p_n(int n, const Weight& lambda) const {
  if (n < 0) throw DomainError("p_n: n must be >= 0");
  if (!lambda.is_dominant() || lambda.rank() != rank_) throw DomainError("p_n: lambda must be dominant of matching rank");
  std::vector<Complex> unity(grid_);
  for (int k = 0; k < grid_; ++k) unity[k] = std::polar(1.0, 2.0 * std::numbers::pi * k / grid_);
  std::vector<int> j(rank_, 0);
  std::complex<long double> acc = 0;
  std::size_t idx = 0;
  do {
    long phase = 0;
    for (int k = 0; k < rank_; ++k) phase += static_cast<long>(lambda[k]) * j[k];
    const Complex v = std::pow(h_values_[idx], n) * unity[phase % grid_] * inverse_c_[idx];
    acc += std::complex<long double>(v.real(), v.imag());
    ++idx;
  } while (advance(j, grid_));
  const long double points = std::pow(static_cast<long double>(grid_), rank_);
  const Complex integral(static_cast<double>(acc.real() / points), static_cast<double>(acc.imag() / points));
  const double scale = std::pow(rho_, n) *
                       std::pow(static_cast<double>(q_), -0.5 * static_cast<double>(two_rho_pairing(lambda))) /
                       normalization_;
  const Complex p = integral * scale;
  if (std::abs(p.imag()) > 1e-8 || p.real() < -1e-8) {
    std::ostringstream os;
    os << "p_n: quadrature residual too large at n=" << n << ", lambda=" << to_string(lambda) << ": " << p;
    throw QuadratureError(os.str());
  }
  return p.real();
}

Complex PlancherelQuadrature::weighted_p(const Weight& lambda, const AmbientVector<double>& theta) const {
  const AmbientVector<double> l = ambient<double>(lambda);
  std::complex<long double> acc = 0;
  for (const auto& w : roots_.weyl_elements()) {
    const AmbientVector<double> y = w.inverse().apply(theta);
    const Complex v = std::polar(1.0, l.dot(y)) * inverse_c_minus(q_, y);
    acc += std::complex<long double>(v.real(), v.imag());
  }
  const double scale = std::pow(static_cast<double>(q_), -0.5 * static_cast<double>(two_rho_pairing(lambda))) /
                       weyl_poincare(rank_, q_).convert_to<double>();
  return Complex(static_cast<double>(acc.real()), static_cast<double>(acc.imag())) * scale;
}

double p_n_quadrature(int n, const Weight& lambda, int q) {
  const PlancherelQuadrature quad(lambda.rank(), q);
  return quad.p_n(n, lambda);
}

}  // namespace chamberwalk
