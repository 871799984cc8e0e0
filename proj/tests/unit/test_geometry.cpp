#include <cmath>

#include "doctest.h"
#include "irsmd/error.hpp"
#include "irsmd/geometry.hpp"
#include "irsmd/sampling.hpp"
#include "toys.hpp"

using namespace irsmd;
using irsmd::test::vec;

TEST_CASE("omega value of the euclidean generator") {
  EuclideanGenerator w(3);
  CHECK(omega_value(EuclideanGenerator(2), vec({3, 4})) == doctest::Approx(12.5));
  CHECK(omega_value(w, Vector::Zero(3)) == 0.0);
  CHECK(omega_value(w, vec({1, -1, 1})) == doctest::Approx(1.5));
  CHECK(w.strong_convexity() == 1.0);
  CHECK(w.gradient_lipschitz() == 1.0);
}

TEST_CASE("bregman distance") {
  EuclideanGenerator w(2);
  CHECK(bregman_distance(w, vec({1, 0}), vec({0, 0})) == doctest::Approx(0.5));
  CHECK(bregman_distance(w, vec({0.3, -2}), vec({0.3, -2})) == 0.0);

  SUBCASE("three-point identity by hand") {
    const Vector x = vec({0, 0}), y = vec({1, 1}), z = vec({2, 0});
    const double lhs = bregman_distance(w, x, z);
    const double rhs = bregman_distance(w, x, y) + bregman_distance(w, y, z) +
                       (w.gradient(y) - w.gradient(x)).dot(z - y);
    CHECK(lhs == doctest::Approx(2.0));
    CHECK(bregman_distance(w, x, y) == doctest::Approx(1.0));
    CHECK(bregman_distance(w, y, z) == doctest::Approx(1.0));
    CHECK(lhs == doctest::Approx(rhs));
  }

  CHECK_THROWS_AS(bregman_distance(w, vec({1, 2, 3}), vec({1, 2})), Error);
}

TEST_CASE("generic bregman matches the euclidean override") {
  struct Plain final : DistanceGenerator {
    std::string_view name() const override { return "plain"; }
    std::size_t dimension() const override { return 4; }
    double strong_convexity() const override { return 1.0; }
    double gradient_lipschitz() const override { return 1.0; }
    double value(const Vector& x) const override { return 0.5 * x.squaredNorm(); }
    Vector gradient(const Vector& x) const override { return x; }
    Vector prox(const FeasibleSet& set, const Vector& x, const Vector& y) const override { return set.project(x - y); }
  } plain;
  EuclideanGenerator w(4);
  SampleSource src(3);
  for (int t = 0; t < 50; ++t) {
    Vector x(4), y(4);
    for (int j = 0; j < 4; ++j) {
      x[j] = src.normal();
      y[j] = src.normal();
    }
    CHECK(plain.bregman(x, y) == doctest::Approx(w.bregman(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("sandwich inequalities on random pairs") {
  SampleSource src(11);
  EuclideanGenerator w(5);
  for (int t = 0; t < 200; ++t) {
    Vector x(5), y(5);
    for (int j = 0; j < 5; ++j) {
      x[j] = 10 * src.normal();
      y[j] = 10 * src.normal();
    }
    const double lin = w.value(x) + w.gradient(x).dot(y - x);
    const double sq = 0.5 * (x - y).squaredNorm();
    CHECK(w.value(y) >= lin + w.strong_convexity() * sq - 1e-9);
    CHECK(w.value(y) <= lin + w.gradient_lipschitz() * sq + 1e-9);
  }
}

TEST_CASE("prox mapping") {
  EuclideanGenerator w(2);
  const auto whole = FeasibleSet::whole_space(2);
  const auto box = FeasibleSet::box(2, 0.0, 1.0);
  CHECK(prox_map(w, whole, vec({1, 2}), vec({0.5, -1})).isApprox(vec({0.5, 3})));
  const Vector p = prox_map(w, box, vec({0.2, 0.9}), vec({0.5, -0.5}));
  CHECK(p[0] == 0.0);
  CHECK(p[1] == 1.0);
  CHECK(prox_map(w, box, vec({0.2, 0.9}), Vector::Zero(2)) == vec({0.2, 0.9}));
  CHECK_THROWS_AS(prox_map(w, box, vec({2, 0}), Vector::Zero(2)), Error);
  CHECK_THROWS_AS(prox_map(w, box, vec({0.5, 0.5}), Vector::Zero(3)), Error);
}

TEST_CASE("projection onto the three set kinds") {
  const auto box = FeasibleSet::box(2, 0.0, 1.0);
  CHECK(project(box, vec({2, -1})) == vec({1, 0}));
  const auto ball = FeasibleSet::ball(Vector::Zero(2), 1.0);
  CHECK(project(ball, vec({3, 4})).isApprox(vec({0.6, 0.8})));
  CHECK(project(ball, vec({0.1, 0.2})) == vec({0.1, 0.2}));
  const auto whole = FeasibleSet::whole_space(2);
  CHECK(project(whole, vec({-7, 9})) == vec({-7, 9}));
  CHECK_FALSE(whole.compact());
  CHECK_FALSE(whole.diameter_bound().has_value());
  CHECK(box.diameter_bound().value() == doctest::Approx(std::sqrt(2.0)));
  CHECK(FeasibleSet::ball(vec({3, 4}), 1.0).diameter_bound().value() == doctest::Approx(6.0));
}

TEST_CASE("set construction is validated") {
  CHECK_THROWS_AS(FeasibleSet::box(vec({1, 0}), vec({0, 1})), Error);
  CHECK_THROWS_AS(FeasibleSet::box(vec({0}), vec({1, 2})), Error);
  CHECK_THROWS_AS(FeasibleSet::ball(vec({0, 0}), 0.0), Error);
  CHECK_THROWS_AS(FeasibleSet::ball(vec({0, 0}), -1.0), Error);
  CHECK_THROWS_AS(FeasibleSet::whole_space(0), Error);
}

TEST_CASE("projection is feasible, idempotent and within the diameter bound") {
  SampleSource src(5);
  const FeasibleSet sets[] = {FeasibleSet::box(vec({-1, 0, 2}), vec({1, 0.5, 3})),
                              FeasibleSet::ball(vec({1, -1, 0.5}), 0.7)};
  for (const auto& s : sets) {
    for (int t = 0; t < 300; ++t) {
      Vector x(3);
      for (int j = 0; j < 3; ++j) x[j] = 5 * src.normal();
      const Vector p = s.project(x);
      CHECK(s.contains(p));
      CHECK(s.project(p).isApprox(p, 1e-15));
      CHECK(p.norm() <= *s.diameter_bound() + 1e-12);
    }
  }
}

TEST_CASE("coordinate bounds") {
  const auto box = FeasibleSet::box(vec({-3, 0}), vec({1, 2}));
  CHECK(*box.coordinate_bounds() == vec({3, 2}));
  const auto ball = FeasibleSet::ball(vec({1, -1}), 0.5);
  CHECK(*ball.coordinate_bounds() == vec({1.5, 1.5}));
  CHECK_FALSE(FeasibleSet::whole_space(3).coordinate_bounds().has_value());
}
