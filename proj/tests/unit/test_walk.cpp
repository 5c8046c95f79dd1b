#include "doctest.h"

#include "chamberwalk/walk.hpp"

#include <cmath>
#include <map>

using namespace chamberwalk;

namespace {

QuadraticSurd one() { return QuadraticSurd(0, Rational(1)); }

RadialKernel<double> plain_kernel(int r, int q, int window) {
  return assemble_kernel<double>(simple_rw_params(r, q), solve_step_counts(r, q, window));
}

// F0 on the tree, q^{-k/2} (1 + k (q-1)/(q+1)), and rho~ = 2 sqrt(q) / (q+1).
double tree_f0(int q, int k) { return std::pow(q, -0.5 * k) * (1.0 + k * (q - 1.0) / (q + 1.0)); }
double tree_rho(int q) { return 2.0 * std::sqrt(double(q)) / (q + 1.0); }

}  // namespace

TEST_CASE("dp: trivial and two-step laws") {
  const auto k = plain_kernel(1, 2, 6);
  const auto law0 = dp_law(k, Weight{2}, 0);
  CHECK(law0.at(Weight{2}) == 1.0);
  CHECK(law0.support().size() == 1);

  const auto exact = assemble_kernel<QuadraticSurd>(simple_rw_params(1, 2), solve_step_counts(1, 2, 4));
  const auto law2 = dp_law(exact, Weight{0}, 2);
  CHECK(law2.at(Weight{0}) == QuadraticSurd(0, Rational(1, 3)));
  CHECK(law2.at(Weight{2}) == QuadraticSurd(0, Rational(2, 3)));
  CHECK(law2.support().size() == 2);
}

TEST_CASE("dp: exact conservation") {
  for (int r = 1; r <= 3; ++r) {
    const int window = r == 3 ? 5 : 7;
    const auto exact = assemble_kernel<QuadraticSurd>(simple_rw_params(r, 2), solve_step_counts(r, 2, window));
    std::vector<int> times;
    for (int n = 0; n <= window; ++n) times.push_back(n);
    for (const auto& law : dp_laws(exact, Weight::zero(r), times)) {
      CHECK(law.total() == one());
      for (const auto& [w, m] : law.support()) CHECK(m.to_double() > 0);
    }
  }
}

TEST_CASE("dp: window guard") {
  const auto k = plain_kernel(2, 2, 4);
  CHECK_NOTHROW(dp_law(k, Weight::zero(2), 4));
  CHECK_THROWS_AS(dp_law(k, Weight::zero(2), 5), WindowTooSmallError);
  const auto leaky = dp_law(k, Weight::zero(2), 8, LeakPolicy::absorb);
  CHECK(leaky.escaped > 0);
  CHECK(leaky.total() + leaky.escaped == doctest::Approx(1.0).epsilon(1e-13));
  CHECK_THROWS_AS(dp_law(k, Weight{5, 0}, 0), WindowTooSmallError);
}

TEST_CASE("dp agrees with the tree") {
  for (int q : {2, 3}) {
    const int n_max = 10;
    const TreeOracle tree = tree_oracle(q, n_max + 1, n_max);
    const auto k = plain_kernel(1, q, n_max);
    for (int n = 0; n <= n_max; ++n) {
      const auto law = dp_law(k, Weight{0}, n);
      for (int j = 0; j <= n_max; ++j) CHECK(law.at(Weight{j}) == doctest::Approx(tree.laws[n][j]).epsilon(1e-13));
    }
  }
}

TEST_CASE("dp agrees with the Plancherel quadrature") {
  for (int r : {1, 2})
    for (int q : {2, 3}) {
      const PlancherelQuadrature quad(r, q);
      const auto k = plain_kernel(r, q, 8);
      for (int n = 0; n <= 8; ++n) {
        const auto law = dp_law(k, Weight::zero(r), n);
        double deviation = 0;
        for (const Weight& w : dominant_weights(r, n)) {
          const double spectral = n_lambda(w, q).convert_to<double>() * quad.p_n(n, w);
          deviation += std::abs(law.at(w) - spectral);
        }
        CHECK(deviation < 1e-5);
      }
    }
}

TEST_CASE("doob law is the plain law reweighted by F0") {
  for (int r : {1, 2}) {
    const int window = 10;
    const KernelBundle b = build_kernels(r, 2, window, true);
    const auto plain = dp_law(b.plain, Weight::zero(r), window);
    const auto doob = dp_law(*b.doob, Weight::zero(r), window);
    CHECK(doob.kind == KernelKind::doob);
    for (const auto& [w, m] : plain.support()) {
      const double expected = m * b.f0->ratio(w, Weight::zero(r)) * std::pow(b.rho, -window);
      CHECK(doob.at(w) == doctest::Approx(expected).epsilon(1e-8));
    }
    CHECK(doob.total() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("reachable weights") {
  const auto w = reachable_weights(1, 2, 3);
  REQUIRE(w.size() == 2);
  CHECK(w[0] == Weight{1});
  CHECK(w[1] == Weight{3});
  // rank 2: two steps already reach every weight of level <= 2
  CHECK(reachable_weights(2, 2, 1).size() == 2);
  CHECK(reachable_weights(2, 2, 2).size() == dominant_weights(2, 2).size());
}

TEST_CASE("bridge ratios") {
  const BridgeEvaluator e0(1, 2, 200, 4, 4);
  const auto trivial = e0.evaluate(0, Weight{0});
  CHECK(trivial.ratio == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(trivial.target == doctest::Approx(1.0).epsilon(1e-10));

  // one step from O lands on a sphere of equivalent vertices, so the ratio is exactly 1
  const auto one_step = e0.evaluate(1, Weight{1});
  CHECK(one_step.ratio == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(one_step.target == doctest::Approx(tree_f0(2, 1) / tree_rho(2)).epsilon(1e-10));
  CHECK(one_step.target == doctest::Approx(1.0).epsilon(1e-10));

  for (int n = 0; n <= 4; ++n)
    for (int k = n % 2; k <= n; k += 2) {
      const auto v = e0.evaluate(n, Weight{k});
      CHECK(v.target == doctest::Approx(std::pow(tree_rho(2), -n) * tree_f0(2, k)).epsilon(1e-9));
    }

  CHECK_THROWS_AS(BridgeEvaluator(1, 2, 201, 2, 2).evaluate(1, Weight{1}), DomainError);
  CHECK_THROWS_AS(e0.evaluate(5, Weight{1}), DomainError);

  // |ratio - target| shrinks as N doubles
  for (const auto& [n, k] : std::vector<std::pair<int, int>>{{2, 0}, {2, 2}, {3, 1}, {4, 2}}) {
    double previous = INFINITY;
    for (int big_n : {100, 200, 400, 800}) {
      const double err = std::abs(bridge_ratio(1, 2, n, big_n, Weight{k}).rel_err);
      CHECK(err < previous);
      previous = err;
    }
  }
  for (const auto& lambda : reachable_weights(2, 2, 2)) {
    double previous = INFINITY;
    for (int big_n : {64, 128, 256}) {
      const double err = std::abs(bridge_ratio(2, 2, 2, big_n, lambda).rel_err);
      CHECK(err < previous);
      previous = err;
    }
  }
}

TEST_CASE("monte carlo paths") {
  const auto k = plain_kernel(2, 2, 12);
  const PathSampler s(k);
  std::vector<int> a, b, c;
  s.sample(Weight::zero(2), 10, 42, 7, a);
  s.sample(Weight::zero(2), 10, 42, 7, b);
  s.sample(Weight::zero(2), 10, 43, 7, c);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a.size() == 11);
  CHECK(k.index().weight(a[0]) == Weight::zero(2));
  for (std::size_t j = 1; j < a.size(); ++j) CHECK(k(k.index().weight(a[j - 1]), k.index().weight(a[j])) > 0);

  const std::uint64_t n_paths = 100000;
  const auto empirical = mc_endpoint_law(k, Weight::zero(2), 10, n_paths, 2024);
  const auto exact = dp_law(k, Weight::zero(2), 10);
  const double support = static_cast<double>(exact.support().size());
  CHECK(total_variation(empirical, exact) < 4 * std::sqrt(support / n_paths));

  const auto tiny = plain_kernel(2, 2, 2);
  CHECK_THROWS_AS(PathSampler(tiny).sample(Weight::zero(2), 60, 1, 0, a), WindowTooSmallError);
}

TEST_CASE("first doob step from O") {
  const KernelBundle b = build_kernels(2, 3, 4, true);
  const std::uint64_t n_paths = 60000;
  std::map<int, int> hits;
  mc_paths(*b.doob, Weight::zero(2), 1, n_paths, 9, [&](std::uint64_t, std::span<const int> p) { ++hits[p[1]]; });
  CHECK(hits.size() == 2);
  for (const auto& [k, count] : hits) {
    const Weight& w = b.doob->index().weight(k);
    CHECK(w.level() == 1);
    const double p = (*b.doob)(Weight::zero(2), w);
    const double sd = std::sqrt(p * (1 - p) / n_paths);
    CHECK(std::abs(count / double(n_paths) - p) < 4 * sd);
  }
}

TEST_CASE("nearest weight") {
  for (const Weight& w : dominant_weights(3, 6)) CHECK(nearest_weight(ambient<double>(w)) == w);

  // brute force over nearby dominant weights
  std::uint64_t state = 11;
  for (int r = 1; r <= 3; ++r)
    for (int trial = 0; trial < 200; ++trial) {
      AmbientVector<double> x(r + 1);
      for (int k = 0; k <= r; ++k) x[k] = 6.0 * unit_double(state = splitmix64(state));
      std::sort(x.data(), x.data() + x.size(), std::greater<>());
      x.array() -= x.mean();
      const Weight got = nearest_weight(x);
      CHECK(got.is_dominant());
      double best = INFINITY;
      for (const Weight& w : dominant_weights(r, 16)) best = std::min(best, (ambient<double>(w) - x).norm());
      CHECK((ambient<double>(got) - x).norm() == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("rescaling") {
  const auto k = plain_kernel(2, 2, 40);
  std::vector<int> idx;
  PathSampler(k).sample(Weight::zero(2), 40, 5, 0, idx);
  std::vector<Weight> path;
  for (int i : idx) path.push_back(k.index().weight(i));

  const AmbientVector<double> a = AmbientVector<double>::Zero(3);
  const ScaledPath unit = rescale(path, 1, a);
  for (std::size_t j = 0; j < path.size(); ++j) {
    CHECK(unit.times[j] == double(j));
    CHECK((unit.points[j] - ambient<double>(path[j])).norm() < 1e-15);
  }

  const int big_n = 16;
  const ScaledPath sp = rescale(path, big_n, a);
  CHECK(sp.times[0] == 0.0);
  CHECK(sp.points[0].norm() == 0.0);
  double max_step = 0;
  const RootSystem a2(2);
  for (int i = 1; i <= 2; ++i)
    for (const Weight& nu : a2.minuscule_orbit(i)) max_step = std::max(max_step, ambient<double>(nu).norm());
  for (std::size_t j = 1; j < path.size(); ++j) {
    CHECK(sp.times[j] - sp.times[j - 1] == doctest::Approx(1.0 / big_n));
    CHECK((sp.points[j] - sp.points[j - 1]).norm() <= max_step / 4.0 + 1e-12);
  }
}
