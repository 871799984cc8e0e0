#include <cmath>

#include "doctest.h"
#include "irsmd/error.hpp"
#include "irsmd/twostage.hpp"
#include "toys.hpp"

using namespace irsmd;
using irsmd::test::mat;
using irsmd::test::vec;

namespace {

PiecePtr quad(double q, double linear = 0.0) {
  QuadraticPiece::Coefficients c;
  c.hessian = mat(1, 1, {q});
  c.linear = vec({linear});
  return std::make_shared<QuadraticPiece>(c);
}

TwoStageSpec base_spec() {
  TwoStageSpec s;
  s.first_stage_box = FeasibleSet::box(1, -5.0, 5.0);
  s.second_stage_box = FeasibleSet::box(1, -5.0, 5.0);
  s.probabilities = {1.0};
  s.scenarios = {vec({0})};
  s.cost = quad(2.0);
  s.recourse = quad(2.0);
  return s;
}

}  // namespace

TEST_CASE("no constraints gives a zero penalty") {
  const auto c = compile(base_spec());
  const Vector x = vec({1.5, -2});
  CHECK(eval_F(c, x, 0) == 0.0);
  CHECK(subgrad_F(c, x, 0).isZero(0.0));
  CHECK(eval_H(c, x, 0) == doctest::Approx(1.5 * 1.5 + 4));
  CHECK(c.layout.dimension() == 2);
}

TEST_CASE("first-stage constraint penalty") {
  auto s = base_spec();
  s.first_stage_constraints.push_back(QuadraticPiece::affine(vec({1}), -1.0));
  const auto c = compile(s);
  CHECK(eval_F(c, vec({3, 0}), 0) == doctest::Approx(2.0));
  CHECK(eval_F(c, vec({1, 0}), 0) == 0.0);
  CHECK(subgrad_F(c, vec({1, 0}), 0).isZero(0.0));
  CHECK(subgrad_F(c, vec({3, 0}), 0) == vec({1, 0}));
}

TEST_CASE("scenario-dependent cost") {
  TwoStageSpec s;
  s.probabilities = {0.5, 0.5};
  s.scenarios = {vec({3}), vec({1})};
  QuadraticPiece::Coefficients cz;
  cz.hessian = mat(1, 1, {2});
  cz.linear = vec({0});
  s.cost = std::make_shared<QuadraticPiece>(cz);
  QuadraticPiece::Coefficients cy;
  cy.hessian = mat(1, 1, {0});
  cy.linear = vec({0});
  cy.linear_xi = mat(1, 1, {1});
  s.recourse = std::make_shared<QuadraticPiece>(cy);
  s.outer_modulus = 1.0;
  const auto c = compile(s);
  // z = 1, y_1 = 2, xi_1 = 3: H = 1 + 6
  CHECK(eval_H(c, vec({1, 2, 5}), 0) == doctest::Approx(7.0));
  CHECK(eval_H(c, vec({1, 2, 5}), 1) == doctest::Approx(1.0 + 5.0));
  CHECK(c.problem.outer().value(vec({1, 2, 5})) == doctest::Approx(1.0 + 0.5 * 6 + 0.5 * 5));
  CHECK(subgrad_H(c, vec({1, 2, 5}), 1) == vec({2, 0, 1}));
  CHECK_THROWS_AS(eval_H(c, vec({1, 2, 5}), 2), Error);
  CHECK_THROWS_AS(eval_H(c, vec({1, 2}), 0), Error);
}

TEST_CASE("linking constraints touch only their scenario block") {
  auto s = base_spec();
  s.probabilities = {0.5, 0.5};
  s.scenarios = {vec({1}), vec({2})};
  QuadraticPiece::Coefficients w;
  w.hessian = mat(1, 1, {0});
  w.linear = vec({-1});
  w.constant_xi = vec({0.3});
  s.linking_constraints.push_back({QuadraticPiece::affine(vec({-1}), 0.0), std::make_shared<QuadraticPiece>(w)});
  const auto c = compile(s);
  const Vector x = vec({0, 0, 0});
  CHECK(eval_F(c, x, 0) == doctest::Approx(0.3));
  CHECK(eval_F(c, x, 1) == doctest::Approx(0.6));
  CHECK(subgrad_F(c, x, 1) == vec({-1, 0, -1}));
  // exactly active term contributes nothing
  CHECK(subgrad_F(c, vec({0.1, 0.2, 0.0}), 0).isZero(0.0));
  CHECK(c.problem.inner().value(x) == doctest::Approx(0.45));
  const Vector feasible = vec({0.225, 0.075, 0.375});
  CHECK(c.problem.inner().value(feasible) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("penalty is nonnegative and its enumeration is unbiased") {
  auto s = base_spec();
  s.probabilities = {0.2, 0.3, 0.5};
  s.scenarios = {vec({1}), vec({-1}), vec({2})};
  QuadraticPiece::Coefficients w;
  w.hessian = mat(1, 1, {1});
  w.linear = vec({0});
  w.center_xi = mat(1, 1, {1});
  w.constant = -0.5;
  s.linking_constraints.push_back({QuadraticPiece::affine(vec({1}), 0.0), std::make_shared<QuadraticPiece>(w)});
  const auto c = compile(s);
  SampleSource src(3);
  for (int t = 0; t < 100; ++t) {
    Vector x(4);
    for (int j = 0; j < 4; ++j) x[j] = 2 * src.normal();
    for (std::size_t i = 0; i < 3; ++i) CHECK(eval_F(c, x, i) >= 0.0);
    Vector exact = Vector::Zero(4);
    c.problem.inner().add_subgradient(x, 1.0, exact);
    CHECK((enumerate_scenario_subgradient(c.problem.inner(), x) - exact).norm() <= 1e-12);
    Vector eh = Vector::Zero(4);
    c.problem.outer().add_subgradient(x, 1.0, eh);
    CHECK((enumerate_scenario_subgradient(c.problem.outer(), x) - eh).norm() <= 1e-12);
  }
}

TEST_CASE("outer modulus is the smallest block modulus") {
  auto s = base_spec();
  s.probabilities = {0.25, 0.75};
  s.scenarios = {vec({0}), vec({0})};
  s.cost = quad(3.0);
  s.recourse = quad(2.0);
  CHECK(compile(s).problem.mu_h() == doctest::Approx(0.5));
  s.outer_modulus = 0.1;
  CHECK(compile(s).problem.mu_h() == doctest::Approx(0.1));
  s.outer_modulus.reset();
  s.recourse = quad(0.0, 1.0);
  CHECK_THROWS_AS(compile(s), Error);
}

TEST_CASE("compile rejects inconsistent problem data") {
  auto s = base_spec();
  s.probabilities = {0.5};
  CHECK_THROWS_AS(compile(s), Error);
  s = base_spec();
  s.scenarios.clear();
  s.probabilities.clear();
  CHECK_THROWS_AS(compile(s), Error);
  s = base_spec();
  s.second_stage_box.reset();
  CHECK_THROWS_AS(compile(s), Error);
  s = base_spec();
  s.cost = nullptr;
  CHECK_THROWS_AS(compile(s), Error);
  QuadraticPiece::Coefficients bad;
  bad.hessian = mat(1, 1, {-1});
  bad.linear = vec({0});
  CHECK_THROWS_AS(QuadraticPiece{bad}, Error);
}

TEST_CASE("constants come from the stacked box") {
  const auto c = compile(base_spec());
  const auto k = c.problem.constants();
  REQUIRE(k.outer_bound.has_value());
  CHECK(*k.outer_bound == doctest::Approx(std::hypot(10.0, 10.0)));
  CHECK(*k.diameter == doctest::Approx(std::hypot(5.0, 5.0)));
}

TEST_CASE("two-stage file format") {
  const auto spec = parse_two_stage(R"(
[dimensions]
first_stage = 1
second_stage = 1
xi = 1
[first_stage_box]
lower = 0
upper = 1
[second_stage_box]
lower = 0
upper = 1
[scenarios]
0.5 1
0.5 2
[cost]
type = quadratic
hessian = 2
[recourse]
type = quadratic
hessian = 2
[linking_constraint]
first_type = affine
first_linear = -1
second_type = affine
second_linear = -1
second_constant_xi = 0.3
)");
  const auto c = compile(spec);
  CHECK(c.layout.dimension() == 3);
  CHECK(c.problem.mu_h() == doctest::Approx(1.0));
  CHECK(c.problem.inner().value(vec({0, 0, 0})) == doctest::Approx(0.45));
  CHECK(c.problem.outer().value(vec({0.225, 0.075, 0.375})) == doctest::Approx(0.12375));

  CHECK_THROWS_AS(parse_two_stage("[dimensions]\nfirst_stage = 1\n"), Error);
  CHECK_THROWS_AS(parse_two_stage("x = 1\n[dimensions]\n"), Error);
  CHECK_THROWS_AS(parse_two_stage("[dimensions]\nfirst_stage = 1\nsecond_stage = 1\n[scenarios]\n0.4\n0.4\n"
                                  "[cost]\nhessian = 1\n[recourse]\nhessian = 1\n"),
                  Error);
  CHECK_THROWS_AS(parse_two_stage("[dimensions]\nfirst_stage = 1\nsecond_stage = 1\n[bogus]\n"), Error);
}
