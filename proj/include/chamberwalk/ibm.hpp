#pragma once

// Brownian motion of the Weyl chamber started at 0: density, normalization,
// generator, a GUE eigenvalue sampler and goodness-of-fit statistics.
//
// Coordinates are ambient (trace-zero hyperplane of R^{r+1}) with the
// Euclidean metric.  The process has covariance c t per direction, so
//   p_t(0, x) = pi(x)^2 exp(-|x|^2 / (2 c t)) / (Z_1 t^{|R+| + r/2}),
//   D f = c (Delta f / 2 + <grad log pi, grad f>).

#include "chamberwalk/root_system.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace chamberwalk {

/// Tensor Gauss-Hermite rule for weight exp(-y^2 / 2) on R (nodes, weights;
/// weights sum to sqrt(2 pi)).  Golub-Welsch.
std::pair<std::vector<double>, std::vector<double>> gauss_hermite(int n);
/// Gauss-Legendre rule on [-1, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n);

/// int over the hyperplane of f(x) exp(-|x|^2 / (2 v)) dx, tensor Gauss-Hermite
/// with `nodes` points per direction.  Exact for polynomial f of degree < 2 nodes.
double gaussian_hyperplane_integral(int rank, double v, const std::function<double(const AmbientVector<double>&)>& f,
                                    int nodes);

struct IbmParams {
  int rank = 1;
  double c = 0.5;
  int positive_roots = 1;
  /// int_{a+} pi^2 exp(-|x|^2 / (2c)) dx, by quadrature over the whole
  /// hyperplane divided by |W0|.
  double z1 = 0;
  /// Gaussian variance per entry of the traceless GUE matrix at t = 1,
  /// fitted as E|I_1|^2 / (r (r + 2)) with the moment taken by quadrature.
  double gue_variance = 0;

  /// Z_t = Z_1 t^{|R+| + r/2}.
  double normalization(double t) const;
  /// Total degree |R+| * 2 + r of the radial law: |I_t| has density
  /// proportional to rho^{dof - 1} exp(-rho^2 / (2 c t)).
  int radial_dof() const { return rank * (rank + 2); }
};

IbmParams ibm_params(int rank);

/// Closed chamber membership (x_1 >= ... >= x_{r+1}).
bool in_closed_chamber(const AmbientVector<double>& x);
/// Euclidean distance to the nearest wall; negative outside.
double wall_distance(const AmbientVector<double>& x);

/// p_t(0, x); zero outside the closed chamber.  Throws DomainError for t <= 0.
double ibm_density(const IbmParams& p, double t, const AmbientVector<double>& x);

/// P[|I_t| <= rho].
double radial_cdf(const IbmParams& p, double t, double rho);

AmbientVector<double> grad_log_pi(const AmbientVector<double>& x);

using TestFunction = std::function<double(const AmbientVector<double>&)>;

/// D f(x) with central differences of step h along an orthonormal basis of
/// the hyperplane (second order in h).  The drift term is exact.
double generator_fd(const IbmParams& p, const TestFunction& f, const AmbientVector<double>& x, double h);

struct GeneratorCheck {
  double second_order = 0;  // step h
  double fourth_order = 0;  // Richardson from h and h / 2
  double difference = 0;
};

/// Throws DomainError when x is within 10 h of a wall.
GeneratorCheck generator_check(const IbmParams& p, const TestFunction& f, const AmbientVector<double>& x,
                               double h = 1e-3);

/// Ordered eigenvalues of traceless Hermitian matrices with independent
/// Gaussian entries of variance gue_variance * t.  Sample k uses its own
/// generator seeded from seed ^ k.
std::vector<AmbientVector<double>> gue_sampler(const IbmParams& p, double t, std::size_t n, std::uint64_t seed);

/// Independent sampler by rejection from a folded Gaussian proposal.
std::vector<AmbientVector<double>> density_sampler(const IbmParams& p, double t, std::size_t n, std::uint64_t seed);

/// Euler-Maruyama for dX = c grad log pi(X) dt + sqrt(c) dW started at a,
/// folded back into the chamber after each step.  Returns samples at the
/// requested times (sorted), indexed [time][path].
std::vector<std::vector<AmbientVector<double>>> simulate_diffusion(const IbmParams& p, const AmbientVector<double>& a,
                                                                   const std::vector<double>& times, std::size_t n,
                                                                   double dt, std::uint64_t seed);

/// sup_x |F_n(x) - F(x)| for a sample and a continuous CDF.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);
/// Asymptotic Kolmogorov tail P[K > x].
double kolmogorov_tail(double x);

/// Two-sample energy statistic with a permutation p-value.
struct EnergyTest {
  double statistic = 0;  // n m / (n + m) * E
  double p_value = 1;
  int permutations = 0;
};

EnergyTest energy_test(const std::vector<AmbientVector<double>>& x, const std::vector<AmbientVector<double>>& y,
                       int permutations, std::uint64_t seed);

/// Standard normal pair by Box-Muller from two raw 64-bit draws.
std::pair<double, double> normal_pair(std::uint64_t u1, std::uint64_t u2);

}  // namespace chamberwalk
