#include "chamberwalk/ibm.hpp"

#include "chamberwalk/walk.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace chamberwalk {

namespace {

std::pair<std::vector<double>, std::vector<double>> golub_welsch(const Eigen::VectorXd& off, double mass) {
  const int n = static_cast<int>(off.size()) + 1;
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k + 1 < n; ++k) j(k, k + 1) = j(k + 1, k) = off[k];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  std::vector<double> nodes(n), weights(n);
  for (int k = 0; k < n; ++k) {
    nodes[k] = es.eigenvalues()[k];
    weights[k] = mass * es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
  }
  return {nodes, weights};
}

double factorial(int n) {
  double f = 1;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

AmbientVector<double> centered(const AmbientVector<double>& x) {
  AmbientVector<double> y = x;
  y.array() -= y.mean();
  return y;
}

void sort_descending(AmbientVector<double>& x) { std::sort(x.data(), x.data() + x.size(), std::greater<>()); }

AmbientVector<double> hyperplane_normal(int rank, std::mt19937_64& rng) {
  AmbientVector<double> z(rank + 1);
  for (int k = 0; k <= rank; k += 2) {
    const auto [a, b] = normal_pair(rng(), rng());
    z[k] = a;
    if (k + 1 <= rank) z[k + 1] = b;
  }
  z.array() -= z.mean();
  return z;
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> gauss_hermite(int n) {
  if (n < 1) throw DomainError("gauss_hermite: n must be >= 1");
  if (n == 1) return {{0.0}, {std::sqrt(2 * std::numbers::pi)}};
  Eigen::VectorXd off(n - 1);
  for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(double(k));
  return golub_welsch(off, std::sqrt(2 * std::numbers::pi));
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: n must be >= 1");
  if (n == 1) return {{0.0}, {2.0}};
  Eigen::VectorXd off(n - 1);
  for (int k = 1; k < n; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  return golub_welsch(off, 2.0);
}

double gaussian_hyperplane_integral(int rank, double v, const std::function<double(const AmbientVector<double>&)>& f,
                                    int nodes) {
  const auto [y, w] = gauss_hermite(nodes);
  const AmbientMatrix<double> basis = RootSystem(rank).hyperplane_basis();
  const double s = std::sqrt(v);
  std::vector<int> idx(rank, 0);
  double total = 0;
  while (true) {
    AmbientVector<double> x = AmbientVector<double>::Zero(rank + 1);
    double weight = 1;
    for (int d = 0; d < rank; ++d) {
      x += basis.col(d) * (s * y[idx[d]]);
      weight *= w[idx[d]];
    }
    total += weight * f(x);
    int d = 0;
    while (d < rank && ++idx[d] == nodes) idx[d++] = 0;
    if (d == rank) break;
  }
  return total * std::pow(v, 0.5 * rank);
}

double IbmParams::normalization(double t) const { return z1 * std::pow(t, positive_roots + 0.5 * rank); }

IbmParams ibm_params(int rank) {
  if (rank < 1) throw DomainError("ibm: rank must be >= 1");
  IbmParams p;
  p.rank = rank;
  p.c = norm_constant_double(rank);
  p.positive_roots = rank * (rank + 1) / 2;
  const int nodes = p.positive_roots + 4;
  const double w0 = factorial(rank + 1);
  auto pi2 = [](const AmbientVector<double>& x) {
    const double v = pi(x);
    return v * v;
  };
  p.z1 = gaussian_hyperplane_integral(rank, p.c, pi2, nodes) / w0;
  const double m2 =
      gaussian_hyperplane_integral(rank, p.c, [&](const AmbientVector<double>& x) { return pi2(x) * x.squaredNorm(); },
                                   nodes) /
      w0 / p.z1;
  p.gue_variance = m2 / p.radial_dof();
  return p;
}

bool in_closed_chamber(const AmbientVector<double>& x) {
  for (int k = 0; k + 1 < x.size(); ++k)
    if (x[k] < x[k + 1]) return false;
  return true;
}

double wall_distance(const AmbientVector<double>& x) {
  double d = INFINITY;
  for (int k = 0; k + 1 < x.size(); ++k) d = std::min(d, (x[k] - x[k + 1]) / std::numbers::sqrt2);
  return d;
}

double ibm_density(const IbmParams& p, double t, const AmbientVector<double>& x) {
  if (!(t > 0)) throw DomainError("ibm_density: t must be > 0");
  if (!in_closed_chamber(x)) return 0.0;
  const AmbientVector<double> y = centered(x);
  const double v = pi(y);
  return v * v * std::exp(-y.squaredNorm() / (2 * p.c * t)) / p.normalization(t);
}

double radial_cdf(const IbmParams& p, double t, double rho) {
  if (!(t > 0)) throw DomainError("radial_cdf: t must be > 0");
  if (rho <= 0) return 0.0;
  return boost::math::gamma_p(0.5 * p.radial_dof(), rho * rho / (2 * p.c * t));
}

AmbientVector<double> grad_log_pi(const AmbientVector<double>& x) {
  const int n = static_cast<int>(x.size());
  AmbientVector<double> g = AmbientVector<double>::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double inv = 1.0 / (x[i] - x[j]);
      g[i] += inv;
      g[j] -= inv;
    }
  return g;
}

double generator_fd(const IbmParams& p, const TestFunction& f, const AmbientVector<double>& x, double h) {
  const AmbientMatrix<double> basis = RootSystem(p.rank).hyperplane_basis();
  const double f0 = f(x);
  const AmbientVector<double> drift = grad_log_pi(x);
  double laplacian = 0;
  double transport = 0;
  for (int d = 0; d < p.rank; ++d) {
    const AmbientVector<double> e = basis.col(d);
    const double fp = f(x + h * e);
    const double fm = f(x - h * e);
    laplacian += (fp - 2 * f0 + fm) / (h * h);
    transport += drift.dot(e) * (fp - fm) / (2 * h);
  }
  return p.c * (0.5 * laplacian + transport);
}

GeneratorCheck generator_check(const IbmParams& p, const TestFunction& f, const AmbientVector<double>& x, double h) {
  if (!(h > 0)) throw DomainError("generator_check: step must be > 0");
  if (wall_distance(x) < 10 * h) throw DomainError("generator_check: point within 10 steps of a wall");
  GeneratorCheck g;
  g.second_order = generator_fd(p, f, x, h);
  const double half = generator_fd(p, f, x, h / 2);
  g.fourth_order = (4 * half - g.second_order) / 3;
  g.difference = std::abs(g.fourth_order - g.second_order);
  return g;
}

std::pair<double, double> normal_pair(std::uint64_t u1, std::uint64_t u2) {
  const double a = 1.0 - unit_double(u1);  // (0, 1]
  const double b = unit_double(u2);
  const double rad = std::sqrt(-2.0 * std::log(a));
  return {rad * std::cos(2 * std::numbers::pi * b), rad * std::sin(2 * std::numbers::pi * b)};
}

std::vector<AmbientVector<double>> gue_sampler(const IbmParams& p, double t, std::size_t n, std::uint64_t seed) {
  if (!(t > 0)) throw DomainError("gue_sampler: t must be > 0");
  const int dim = p.rank + 1;
  const double sigma = std::sqrt(p.gue_variance * t);
  std::vector<AmbientVector<double>> out;
  out.reserve(n);
  Eigen::MatrixXcd h(dim, dim);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dim);
  for (std::size_t s = 0; s < n; ++s) {
    std::mt19937_64 rng(splitmix64(seed ^ s));
    for (int i = 0; i < dim; ++i) {
      const auto [d, unused] = normal_pair(rng(), rng());
      (void)unused;
      h(i, i) = sigma * d;
      for (int j = i + 1; j < dim; ++j) {
        const auto [re, im] = normal_pair(rng(), rng());
        h(i, j) = std::complex<double>(re, im) * (sigma / std::numbers::sqrt2);
        h(j, i) = std::conj(h(i, j));
      }
    }
    const std::complex<double> mean = h.trace() / double(dim);
    for (int i = 0; i < dim; ++i) h(i, i) -= mean;
    es.compute(h, Eigen::EigenvaluesOnly);
    AmbientVector<double> x = es.eigenvalues();
    sort_descending(x);
    x.array() -= x.mean();
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<AmbientVector<double>> density_sampler(const IbmParams& p, double t, std::size_t n, std::uint64_t seed) {
  if (!(t > 0)) throw DomainError("density_sampler: t must be > 0");
  // proposal variance 2ct; acceptance pi^2 exp(-|x|^2 / 4ct) / M, bounded by AM-GM
  const double ct = p.c * t;
  const int m = p.positive_roots;
  const double a = (p.rank + 1.0) / m;
  const double log_bound = m * std::log(a * 4 * ct * m) - m;
  std::vector<AmbientVector<double>> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::mt19937_64 rng(splitmix64(seed ^ s));
    while (true) {
      AmbientVector<double> x = std::sqrt(2 * ct) * hyperplane_normal(p.rank, rng);
      sort_descending(x);
      const double v = pi(x);
      const double log_accept = (v == 0 ? -INFINITY : 2 * std::log(std::abs(v))) - x.squaredNorm() / (4 * ct) - log_bound;
      if (std::log(1.0 - unit_double(rng())) < log_accept) {
        out.push_back(std::move(x));
        break;
      }
    }
  }
  return out;
}

std::vector<std::vector<AmbientVector<double>>> simulate_diffusion(const IbmParams& p, const AmbientVector<double>& a,
                                                                   const std::vector<double>& times, std::size_t n,
                                                                   double dt, std::uint64_t seed) {
  if (!(dt > 0)) throw DomainError("simulate_diffusion: dt must be > 0");
  if (!std::is_sorted(times.begin(), times.end()) || (!times.empty() && times.front() < 0))
    throw DomainError("simulate_diffusion: times must be sorted and >= 0");
  if (!in_closed_chamber(a) || wall_distance(a) <= 0) throw DomainError("simulate_diffusion: start must be interior");
  std::vector<std::vector<AmbientVector<double>>> out(times.size());
  for (auto& v : out) v.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::mt19937_64 rng(splitmix64(seed ^ s));
    AmbientVector<double> x = centered(a);
    double now = 0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      while (now < times[k] - 1e-15) {
        // the drift blows up at the walls: shrink the step with the gap
        const double gap = wall_distance(x);
        double h = std::min(dt, times[k] - now);
        h = std::max(std::min(h, 0.05 * gap * gap / p.c), 1e-4 * dt);
        x += p.c * h * grad_log_pi(x) + std::sqrt(p.c * h) * hyperplane_normal(p.rank, rng);
        sort_descending(x);
        now += h;
      }
      out[k].push_back(x);
    }
  }
  return out;
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw DomainError("ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double kolmogorov_tail(double x) {
  if (x < 0.2) return 1.0;
  double s = 0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2 * s, 0.0, 1.0);
}

EnergyTest energy_test(const std::vector<AmbientVector<double>>& x, const std::vector<AmbientVector<double>>& y,
                       int permutations, std::uint64_t seed) {
  const std::size_t n = x.size();
  const std::size_t m = y.size();
  if (n < 2 || m < 2) throw DomainError("energy_test: need at least two points per sample");
  const std::size_t total = n + m;
  auto point = [&](std::size_t i) -> const AmbientVector<double>& { return i < n ? x[i] : y[i - n]; };
  std::vector<float> dist(total * (total - 1) / 2);
  for (std::size_t i = 0, e = 0; i < total; ++i)
    for (std::size_t j = i + 1; j < total; ++j, ++e) dist[e] = static_cast<float>((point(i) - point(j)).norm());

  auto statistic = [&](const std::vector<char>& in_x) {
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0, e = 0; i < total; ++i)
      for (std::size_t j = i + 1; j < total; ++j, ++e) {
        const double d = dist[e];
        if (in_x[i] && in_x[j]) {
          sxx += d;
        } else if (!in_x[i] && !in_x[j]) {
          syy += d;
        } else {
          sxy += d;
        }
      }
    const double dn = static_cast<double>(n), dm = static_cast<double>(m);
    const double e = 2 * sxy / (dn * dm) - 2 * sxx / (dn * dn) - 2 * syy / (dm * dm);
    return dn * dm / (dn + dm) * e;
  };

  std::vector<char> labels(total, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n), 1);
  EnergyTest out;
  out.statistic = statistic(labels);
  out.permutations = permutations;
  std::mt19937_64 rng(splitmix64(seed));
  int exceed = 0;
  for (int k = 0; k < permutations; ++k) {
    for (std::size_t i = total - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(unit_double(rng()) * static_cast<double>(i + 1));
      std::swap(labels[i], labels[j]);
    }
    if (statistic(labels) >= out.statistic) ++exceed;
  }
  out.p_value = (1.0 + exceed) / (1.0 + permutations);
  return out;
}

}  // namespace chamberwalk
