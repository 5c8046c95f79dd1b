#include "doctest.h"

#include "chamberwalk/ibm.hpp"

#include <cmath>
#include <numbers>

using namespace chamberwalk;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// Mehta: int_{R^n} prod (x_i - x_j)^2 exp(-|x|^2/2) = (2 pi)^{n/2} prod_{j<=n} j!.
// Splitting off the all-ones direction and scaling by c gives the chamber constant.
double mehta_z1(int r) {
  const int n = r + 1;
  const double c = norm_constant_double(r);
  double prod = 1;
  for (int j = 1; j <= n; ++j) prod *= factorial(j);
  return std::pow(c, r * (r + 1) / 2.0 + r / 2.0) * std::pow(2 * std::numbers::pi, r / 2.0) * prod / factorial(n);
}

// int over the closed chamber in fundamental-weight coordinates m in [0, L]^r.
double chamber_integral(int r, const std::function<double(const AmbientVector<double>&)>& f, double L, int nodes) {
  const auto [y, w] = gauss_legendre(nodes);
  const AmbientMatrix<double> lam = fundamental_weights(r);
  const double jac = 1.0 / std::sqrt(r + 1.0);
  // two panels per direction
  std::vector<double> m_nodes, m_weights;
  for (int panel = 0; panel < 2; ++panel)
    for (int k = 0; k < nodes; ++k) {
      m_nodes.push_back(L / 4 * (y[k] + 1) + panel * L / 2);
      m_weights.push_back(L / 4 * w[k]);
    }
  const int n = static_cast<int>(m_nodes.size());
  std::vector<int> idx(r, 0);
  double total = 0;
  while (true) {
    AmbientVector<double> x = AmbientVector<double>::Zero(r + 1);
    double weight = jac;
    for (int d = 0; d < r; ++d) {
      x += lam.col(d) * m_nodes[idx[d]];
      weight *= m_weights[idx[d]];
    }
    total += weight * f(x);
    int d = 0;
    while (d < r && ++idx[d] == n) idx[d++] = 0;
    if (d == r) break;
  }
  return total;
}

// int_{a+} g p_t for W0-invariant g, through the whole-hyperplane rule.
double expect(const IbmParams& p, double t, const TestFunction& g) {
  const double w0 = factorial(p.rank + 1);
  return gaussian_hyperplane_integral(p.rank, p.c * t,
                                      [&](const AmbientVector<double>& x) {
                                        const double v = pi(x);
                                        // on a wall pi^2 D f extends by 0
                                        return v == 0 ? 0.0 : g(x) * v * v;
                                      },
                                      p.positive_roots + 6) /
         w0 / p.normalization(t);
}

}  // namespace

TEST_CASE("gauss rules") {
  const auto [y, w] = gauss_hermite(8);
  double m0 = 0, m2 = 0, m4 = 0;
  for (int k = 0; k < 8; ++k) {
    m0 += w[k];
    m2 += w[k] * y[k] * y[k];
    m4 += w[k] * std::pow(y[k], 4);
  }
  const double s = std::sqrt(2 * std::numbers::pi);
  CHECK(m0 == doctest::Approx(s).epsilon(1e-13));
  CHECK(m2 == doctest::Approx(s).epsilon(1e-13));
  CHECK(m4 == doctest::Approx(3 * s).epsilon(1e-13));
  const auto [x, v] = gauss_legendre(6);
  double l2 = 0;
  for (int k = 0; k < 6; ++k) l2 += v[k] * x[k] * x[k];
  CHECK(l2 == doctest::Approx(2.0 / 3).epsilon(1e-14));
}

TEST_CASE("normalization constant") {
  for (int r = 1; r <= 4; ++r) {
    const IbmParams p = ibm_params(r);
    CHECK(p.c == doctest::Approx(norm_constant_double(r)));
    CHECK(p.positive_roots == r * (r + 1) / 2);
    CHECK(p.z1 == doctest::Approx(mehta_z1(r)).epsilon(1e-11));
    // E|I_1|^2 = c r (r + 2), so the GUE entry variance comes out as c
    CHECK(p.gue_variance == doctest::Approx(p.c).epsilon(1e-11));
  }
}

TEST_CASE("density integrates to one over the chamber") {
  for (int r = 1; r <= 3; ++r) {
    const IbmParams p = ibm_params(r);
    for (double t : {0.25, 1.0, 4.0}) {
      const double L = 9 * std::sqrt(t);
      const int nodes = r == 3 ? 24 : 40;
      const double mass = chamber_integral(r, [&](const AmbientVector<double>& x) { return ibm_density(p, t, x); }, L,
                                           nodes);
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
  // r = 1: x^2 exp(-x^2 / t) on the half-line in the unit coordinate along the root
  const IbmParams p1 = ibm_params(1);
  const double t = 0.7;
  const double y = 0.9;
  AmbientVector<double> x(2);
  x << y / std::numbers::sqrt2, -y / std::numbers::sqrt2;
  const double expected = 4 / std::sqrt(std::numbers::pi) * std::pow(t, -1.5) * y * y * std::exp(-y * y / t);
  CHECK(ibm_density(p1, t, x) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("density scaling and walls") {
  const IbmParams p = ibm_params(2);
  AmbientVector<double> x(3);
  x << 1.1, 0.2, -1.3;
  for (double t : {0.25, 4.0}) {
    const AmbientVector<double> xs = x / std::sqrt(t);
    CHECK(ibm_density(p, t, x) == doctest::Approx(std::pow(t, -1.0) * ibm_density(p, 1.0, xs)).epsilon(1e-12));
  }
  AmbientVector<double> wall(3);
  wall << 0.5, 0.5, -1.0;
  CHECK(ibm_density(p, 1.0, wall) == 0.0);
  AmbientVector<double> outside(3);
  outside << 0.2, 0.5, -0.7;
  CHECK(ibm_density(p, 1.0, outside) == 0.0);
  CHECK_THROWS_AS(ibm_density(p, 0.0, x), DomainError);

  // quadratic vanishing: fit log p against log distance
  AmbientVector<double> normal(3);
  normal << 1, -1, 0;
  normal /= std::numbers::sqrt2;
  std::vector<double> lx, ly;
  for (double d : {1e-4, 1e-3, 1e-2}) {
    const AmbientVector<double> z = wall + d * normal;
    lx.push_back(std::log(wall_distance(z)));
    ly.push_back(std::log(ibm_density(p, 1.0, z)));
  }
  const double slope = (ly[2] - ly[0]) / (lx[2] - lx[0]);
  CHECK(slope >= 1.95);
}

TEST_CASE("radial marginal") {
  for (int r = 1; r <= 3; ++r) {
    const IbmParams p = ibm_params(r);
    // second and fourth moments of |I_t| against the density quadrature
    const double t = 1.3;
    const double k = p.radial_dof();
    const double m2 = expect(p, t, [](const AmbientVector<double>& x) { return x.squaredNorm(); });
    const double m4 = expect(p, t, [](const AmbientVector<double>& x) { return std::pow(x.squaredNorm(), 2); });
    const double ct = p.c * t;
    CHECK(m2 == doctest::Approx(k * ct).epsilon(1e-10));
    CHECK(m4 == doctest::Approx(k * (k + 2) * ct * ct).epsilon(1e-10));
    // CDF against a one-dimensional quadrature of rho^{k-1} exp(-rho^2 / 2ct)
    const auto [y, w] = gauss_legendre(60);
    auto partial = [&](double hi) {
      double s = 0;
      for (int j = 0; j < 60; ++j) {
        const double rho = hi / 2 * (y[j] + 1);
        s += hi / 2 * w[j] * std::pow(rho, k - 1) * std::exp(-rho * rho / (2 * ct));
      }
      return s;
    };
    const double whole = partial(12 * std::sqrt(ct));
    for (double rho : {0.3, 1.0, 2.0})
      CHECK(radial_cdf(p, t, rho) == doctest::Approx(partial(rho) / whole).epsilon(1e-10));
  }
}

TEST_CASE("gue sampler") {
  for (int r = 1; r <= 3; ++r) {
    const IbmParams p = ibm_params(r);
    const std::size_t n = 100000;
    const double t = 0.8;
    const auto samples = gue_sampler(p, t, n, 77 + r);
    std::vector<double> radii;
    radii.reserve(n);
    for (const auto& x : samples) {
      radii.push_back(x.norm());
    }
    for (std::size_t s = 0; s < 50; ++s) {
      CHECK(std::abs(samples[s].sum()) < 1e-10);
      CHECK(in_closed_chamber(samples[s]));
    }
    const double d = ks_statistic(radii, [&](double rho) { return radial_cdf(p, t, rho); });
    CHECK(d * std::sqrt(double(n)) < 1.358);
  }
  const IbmParams p = ibm_params(2);
  CHECK(gue_sampler(p, 1.0, 3, 5)[2] == gue_sampler(p, 1.0, 3, 5)[2]);
}

TEST_CASE("gue sampler against the density") {
  for (int r = 1; r <= 3; ++r) {
    const IbmParams p = ibm_params(r);
    const auto a = gue_sampler(p, 1.0, 1000, 3);
    const auto b = density_sampler(p, 1.0, 1000, 4);
    const EnergyTest e = energy_test(a, b, 199, 5);
    CHECK(e.p_value > 0.01);
    // and the test has power against a wrong time scale
    const auto wrong = gue_sampler(p, 1.5, 1000, 6);
    CHECK(energy_test(wrong, b, 199, 7).p_value <= 0.01);
  }
}

TEST_CASE("kolmogorov tail") {
  CHECK(kolmogorov_tail(1.358) == doctest::Approx(0.05).epsilon(2e-3));
  CHECK(kolmogorov_tail(1.628) == doctest::Approx(0.01).epsilon(2e-2));
  CHECK(kolmogorov_tail(0.1) == 1.0);
}

TEST_CASE("generator") {
  const IbmParams p1 = ibm_params(1);
  AmbientVector<double> x(2);
  const double y = 0.8;
  x << y / std::numbers::sqrt2, -y / std::numbers::sqrt2;
  const auto constant = generator_check(p1, [](const AmbientVector<double>&) { return 2.5; }, x);
  CHECK(std::abs(constant.fourth_order) < 1e-9);
  // f = y^3 along the root: D f = c (3 y + 3 y^2 / y) = 6 c y
  const TestFunction cube = [](const AmbientVector<double>& z) { return std::pow((z[0] - z[1]) / std::numbers::sqrt2, 3); };
  const auto g = generator_check(p1, cube, x, 1e-3);
  CHECK(g.fourth_order == doctest::Approx(6 * p1.c * y).epsilon(1e-8));
  CHECK(g.difference < 1e-5);
  AmbientVector<double> close(2);
  close << 0.005, -0.005;
  CHECK_THROWS_AS(generator_check(p1, cube, close, 1e-3), DomainError);

  // d/dt int f p_t = int (D f) p_t at t = 1, both sides by quadrature
  for (int r = 1; r <= 3; ++r) {
    const IbmParams p = ibm_params(r);
    const TestFunction f = [](const AmbientVector<double>& z) {
      return std::pow(z.squaredNorm(), 2) + z.array().cube().sum() * z.array().cube().sum();
    };
    const double lhs = expect(p, 1.0, [&](const AmbientVector<double>& z) { return generator_fd(p, f, z, 1e-3); });
    const double dt = 1e-3;
    const double rhs = (expect(p, 1 + dt, f) - expect(p, 1 - dt, f)) / (2 * dt);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-4));
  }
}

TEST_CASE("discretized diffusion") {
  // d/dt E|X_t|^2 = c (r + 2 |R+|) from any start
  for (int r : {1, 2}) {
    const IbmParams p = ibm_params(r);
    AmbientVector<double> a(r + 1);
    if (r == 1) a << 0.5, -0.5;
    else a << 1.0, 0.1, -1.1;
    const std::size_t n = 4000;
    const auto out = simulate_diffusion(p, a, {0.25, 1.0}, n, 1e-3, 8);
    for (std::size_t k = 0; k < 2; ++k) {
      const double t = k == 0 ? 0.25 : 1.0;
      double s = 0, s2 = 0;
      for (const auto& x : out[k]) {
        CHECK(in_closed_chamber(x));
        const double v = x.squaredNorm();
        s += v;
        s2 += v * v;
      }
      const double mean = s / n;
      const double se = std::sqrt((s2 / n - mean * mean) / n);
      const double expected = a.squaredNorm() + p.c * r * (r + 2) * t;
      CHECK(std::abs(mean - expected) < 4 * se);
    }
  }
}
