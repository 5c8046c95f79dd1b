#include "doctest.h"

#include "chamberwalk/q_combinatorics.hpp"

using namespace chamberwalk;

TEST_CASE("q_t") {
  CHECK(q_t(Weight{1}, 2).exact() == 2);
  CHECK(q_t(Weight{1, 0}, 2).half_units == 4);  // q^2
  CHECK(q_t(Weight{0, 0}, 3).exact() == 1);
  CHECK_THROWS_AS(q_t(Weight{-1}, 2), DomainError);
}

TEST_CASE("q_tilde") {
  CHECK(q_tilde(Weight{-1}, 2).exact() == Rational(1, 2));
  CHECK(q_tilde(Weight{-1, 1}, 2).exact() == 1);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) CHECK(q_tilde(Weight{a, b}, 5) == q_t(Weight{a, b}, 5));
}

TEST_CASE("poincare polynomials") {
  const auto g1 = weyl_group(1);
  CHECK(poincare(g1, 2) == Rational(3, 2));
  CHECK(weyl_poincare(1, 2) == Rational(3, 2));
  for (int q = 2; q <= 5; ++q) {
    const Rational t(1, q);
    CHECK(poincare(weyl_group(2), q) == (1 + t) * (1 + t + t * t));
    CHECK(weyl_poincare(2, q) == (1 + t) * (1 + t + t * t));
    for (int r = 3; r <= 4; ++r) CHECK(poincare(weyl_group(r), q) == weyl_poincare(r, q));
  }
  const std::vector<WeylElement> trivial{WeylElement::identity(3)};
  CHECK(poincare(trivial, 7) == 1);

  // parabolic product formula against explicit filtering
  for (int r = 1; r <= 4; ++r) {
    for (const auto& lambda : std::vector<Weight>{Weight::zero(r), Weight::fundamental(r, 1),
                                                  Weight::fundamental(r, r), Weight::fundamental(r, 1) * 2}) {
      CHECK(stabilizer_poincare(lambda, 3) == poincare(stabilizer(lambda), 3));
    }
  }
}

TEST_CASE("n_lambda") {
  CHECK(n_lambda(Weight{1}, 2) == 3);
  CHECK(n_lambda(Weight{1, 0}, 2) == 7);
  CHECK(n_lambda(Weight{0, 0}, 2) == 1);
  // tree spheres: (q+1) q^{k-1}
  for (int q = 2; q <= 5; ++q)
    for (int k = 1; k <= 10; ++k) CHECK(n_lambda(Weight{k}, q) == (q + 1) * ipow(q, k - 1));
}

TEST_CASE("integrality of sphere sizes") {
  for (int r = 1; r <= 4; ++r) {
    for (int q = 2; q <= 4; ++q) {
      Eigen::VectorXi m = Eigen::VectorXi::Zero(r);
      int k = 0;
      while (k < r) {
        CHECK(n_lambda(Weight(m), q) > 0);  // throws if not integral
        k = 0;
        while (k < r && ++m[k] > 5) m[k++] = 0;
      }
    }
  }
}

TEST_CASE("sphere-sum identity and duality") {
  for (int r = 1; r <= 4; ++r) {
    const RootSystem rs(r);
    for (int q = 2; q <= 5; ++q) {
      for (int i = 1; i <= r; ++i) {
        const Weight li = Weight::fundamental(r, i);
        QuadraticSurd sum(q);
        for (const auto& nu : rs.minuscule_orbit(i)) sum += (q_t(li, q) * q_tilde(nu, q)).sqrt().surd();
        CHECK(sum == QuadraticSurd(q, Rational(n_lambda(li, q))));
        CHECK(q_t(li, q) == q_t(Weight::fundamental(r, r + 1 - i), q));
      }
    }
  }
}

TEST_CASE("regular weights have large q_t") {
  for (int r = 1; r <= 4; ++r) {
    Eigen::VectorXi m = Eigen::VectorXi::Ones(r);
    m[0] = 3;
    const Weight lambda(m);
    CHECK(lambda.is_regular());
    CHECK(q_t(lambda, 2).half_units / 2 >= r * (r + 1) / 2);
  }
}

TEST_CASE("sphere ratio") {
  const Weight a{2, 1};
  const Weight b{1, 0};
  CHECK(sphere_ratio(a, b, 3) == Rational(n_lambda(a, 3)) / Rational(n_lambda(b, 3)));
}

TEST_CASE("quadratic surds") {
  const auto s = QuadraticSurd::half_power(2, 1);  // sqrt 2
  CHECK_FALSE(s.is_rational());
  CHECK(s * s == QuadraticSurd(2, 2));
  CHECK(QuadraticSurd::half_power(4, 1) == QuadraticSurd(4, 2));
  CHECK((QuadraticSurd(2, 1) / s).to_double() == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK_THROWS_AS(s * QuadraticSurd::half_power(3, 1), DomainError);
  CHECK_THROWS_AS(QExponent({2, 1}).exact(), DomainError);
}
