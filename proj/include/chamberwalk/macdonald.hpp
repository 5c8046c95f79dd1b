#pragma once

// Spherical functions of the building: the c-function, the symbol h~ of the
// simple random walk, Macdonald polynomials P_lambda, the ground-state values
// F0(lambda) = P_lambda(0), and the Plancherel-type integral for the n-step
// return probabilities.

#include "chamberwalk/numeric.hpp"
#include "chamberwalk/q_combinatorics.hpp"
#include "chamberwalk/root_system.hpp"

#include <complex>
#include <string>
#include <unordered_map>
#include <vector>

namespace chamberwalk {

using Complex = std::complex<double>;

class NonGenericPointError : public Error {
 public:
  using Error::Error;
};

class ExtrapolationError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  using Error::Error;
};

inline constexpr double kPoleProximity = 1e-14;

/// A point of a_C in ambient coordinates (projected to the trace-zero plane).
class SpectralPoint {
 public:
  explicit SpectralPoint(AmbientVector<Complex> z);

  const AmbientVector<Complex>& z() const { return z_; }
  int rank() const { return static_cast<int>(z_.size()) - 1; }
  /// No <alpha, z> in 2 pi i Z for any root alpha.
  bool generic() const { return generic_; }

 private:
  AmbientVector<Complex> z_;
  bool generic_ = false;
};

/// c(z) = prod_{alpha > 0} (1 - q^{-1} e^{-<alpha,z>}) / (1 - e^{-<alpha,z>}).
///
/// T is any field type with an ADL-visible exp (double, std::complex<double>,
/// HighFloat).  Throws NonGenericPointError near a pole.
template <class T>
T c_function(int q, const AmbientVector<T>& z) {
  using std::abs;
  using std::exp;
  const T one(1);
  const T inv_q = one / T(q);
  T c = one;
  for (int i = 0; i < z.size(); ++i) {
    for (int j = i + 1; j < z.size(); ++j) {
      const T e = exp(-(z[i] - z[j]));
      if (abs(one - e) < kPoleProximity) {
        throw NonGenericPointError("c_function: <alpha, z> is (numerically) in 2 pi i Z");
      }
      c *= (one - inv_q * e) / (one - e);
    }
  }
  return c;
}

Complex c_function(int q, const SpectralPoint& z);

/// h~(z) = h(z) / h(0) with h(z) = sum_i sum_{mu in W0 lambda_i} e^{<mu, z>}.
Complex h_tilde(const SpectralPoint& z);
double h_tilde(const AmbientVector<double>& z);

/// P_lambda(z) = q_{t_lambda}^{-1/2} / W0(q^{-1}) sum_w c(w^{-1} z) e^{<w lambda, z>}.
Complex macdonald_p(const Weight& lambda, const SpectralPoint& z, int q);

/// prod_{alpha > 0} (1 + <alpha, lambda>).
BigInt f0_envelope(const Weight& lambda);

/// Diagnostics of one F0 extraction.
struct F0Entry {
  double scaled = 0;          // F0(lambda) * q_{t_lambda}^{1/2}
  double log_value = 0;       // log F0(lambda)
  double envelope_ratio = 0;  // scaled / prod(1 + <alpha, lambda>)
  int levels = 0;             // number of eps-levels used
  double last_change = 0;     // relative change of the last extrapolant
};

/// Extracts F0(lambda) = lim_{eps -> 0} P_lambda(eps u) along a fixed
/// pseudo-random generic direction u by polynomial (Richardson/Neville)
/// extrapolation in eps, in HighFloat arithmetic.
class F0Evaluator {
 public:
  struct Options {
    double base_eps = 0.1;     // eps_k = base_eps / (1 + level) * 2^{-k}
    int min_levels = 4;
    int max_levels = 14;
    double stop_tolerance = 1e-15;    // stop once two successive changes are below
    double accept_tolerance = 1e-9;   // three successive extrapolants must agree
    std::uint64_t direction_seed = 0x5eed'f0'd1'2ec7ULL;
  };

  F0Evaluator(int rank, int q);
  F0Evaluator(int rank, int q, Options options);

  int rank() const { return rank_; }
  int q() const { return q_; }
  const AmbientVector<double>& direction() const { return direction_; }

  /// Throws ExtrapolationError when the extrapolants do not settle.
  F0Entry evaluate(const Weight& lambda) const;

  /// sum_w c(w^{-1} eps u) e^{<w lambda, eps u>} / W0(q^{-1}), i.e.
  /// P_lambda(eps u) * q_{t_lambda}^{1/2}, at a single eps.
  HighFloat scaled_p_at(const Weight& lambda, const HighFloat& eps) const;

 private:
  const std::vector<HighFloat>& c_values(int level) const;

  int rank_;
  int q_;
  Options options_;
  RootSystem roots_;
  AmbientVector<double> direction_;
  std::vector<AmbientVector<HighFloat>> rotated_;  // w^{-1} u for every w
  HighFloat weyl_poincare_;
  mutable std::unordered_map<int, std::vector<HighFloat>> c_cache_;  // level -> [k * |W0| + w]
};

/// F0(lambda) (a single extraction).
double f0(const Weight& lambda, int q);

/// F0 on every dominant weight of level <= window.
class F0Table {
 public:
  F0Table() = default;
  F0Table(int rank, int q, int window);
  F0Table(const F0Evaluator& evaluator, int window);

  int rank() const { return rank_; }
  int q() const { return q_; }
  int window() const { return window_; }

  bool contains(const Weight& lambda) const { return entries_.count(lambda) != 0; }
  const F0Entry& entry(const Weight& lambda) const;
  /// F0(lambda) in double; underflows to 0 far out (use ratio()).
  double value(const Weight& lambda) const;
  /// F0(mu) / F0(lambda) computed from the scaled values.
  double ratio(const Weight& mu, const Weight& lambda) const;

  const std::unordered_map<Weight, F0Entry, WeightHash>& entries() const { return entries_; }

 private:
  int rank_ = 0;
  int q_ = 0;
  int window_ = -1;
  std::unordered_map<Weight, F0Entry, WeightHash> entries_;
};

/// Tensor trapezoidal quadrature of the simple-walk transition integral
///   p_n(O, x) = const * rho~^n * int_U h~^n(i theta) P_lambda(i theta) dtheta / |c(i theta)|^2
/// for x in V_lambda(O).  The integrand is periodic under 2 pi Q; the grid
/// covers the fundamental parallelotope theta = 2 pi sum_k s_k alpha_k,
/// s in [0, 1)^r, with `grid` points per dimension.  const is fixed by
/// p_0(O, O) = 1.
class PlancherelQuadrature {
 public:
  struct Options {
    int min_grid = 128;
    int max_grid = 1024;
    double normalization_tolerance = 1e-8;
  };

  PlancherelQuadrature(int rank, int q);
  PlancherelQuadrature(int rank, int q, Options options);

  int grid() const { return grid_; }
  double spectral_gap() const { return rho_; }
  /// int P_0 |c|^{-2} on the final grid (in s-coordinates, unit cell volume).
  double normalization() const { return normalization_; }

  /// Per-vertex probability p_n(O, x), x in V_lambda(O).
  double p_n(int n, const Weight& lambda) const;

  /// The integrand P_lambda(i theta) / |c(i theta)|^2 evaluated through the
  /// pole-free form q_{t_lambda}^{-1/2} / W0(q^{-1}) sum_w e^{i <lambda, w^{-1} theta>} / c(-i w^{-1} theta).
  Complex weighted_p(const Weight& lambda, const AmbientVector<double>& theta) const;

 private:
  Complex integrate(int n, const Weight& lambda, int grid) const;
  void build_grid(int grid);

  int rank_;
  int q_;
  Options options_;
  RootSystem roots_;
  double rho_ = 0;
  int grid_ = 0;
  double normalization_ = 0;
  std::vector<double> h_values_;                 // h~(i theta) per grid point
  std::vector<Complex> inverse_c_;               // 1 / c(-i theta) per grid point
  AmbientMatrix<double> thetas_;                 // columns
};

double p_n_quadrature(int n, const Weight& lambda, int q);

}  // namespace chamberwalk
