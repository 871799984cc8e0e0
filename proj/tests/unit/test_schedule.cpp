#include <cmath>

#include "doctest.h"
#include "irsmd/error.hpp"
#include "irsmd/schedule.hpp"

using namespace irsmd;

TEST_CASE("schedule evaluation") {
  CHECK(Schedule::power_law(1.0, 1.0, 0.5, 0.0).gamma(3) == doctest::Approx(0.5));
  CHECK(Schedule::power_law(1.0, 2.0, 0.5, 1.0).lambda(0) == 2.0);
  const auto s = Schedule::power_law(1.0, 1.0, 0.55, 0.4);
  // 100^-0.55 and 100^-0.4
  CHECK(s.gamma(99) == doctest::Approx(0.07943282347242814).epsilon(1e-14));
  CHECK(s.lambda(99) == doctest::Approx(0.15848931924611134).epsilon(1e-14));
  CHECK(s.at(99).gamma == s.gamma(99));
}

TEST_CASE("schedules are non-increasing") {
  const auto s = Schedule::power_law(2.0, 3.0, 0.7, 0.2);
  for (std::uint64_t k = 1; k < 2000; ++k) {
    CHECK(s.gamma(k) <= s.gamma(k - 1));
    CHECK(s.lambda(k) <= s.lambda(k - 1));
  }
}

TEST_CASE("averaging weight is gamma^r") {
  const auto s = Schedule::power_law(2.0, 1.0, 0.6, 0.2, 0.5);
  CHECK(s.weight(0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(s.weight(7) == doctest::Approx(std::pow(s.gamma(7), 0.5)));
  CHECK(Schedule::power_law(2.0, 1.0, 0.6, 0.2, 0.0).weight(9) == 1.0);
}

TEST_CASE("schedule parameters are validated") {
  CHECK_THROWS_AS(Schedule::power_law(0.0, 1.0, 0.6, 0.2), Error);
  CHECK_THROWS_AS(Schedule::power_law(1.0, -1.0, 0.6, 0.2), Error);
  CHECK_THROWS_AS(Schedule::power_law(1.0, 1.0, 0.6, 0.2, 1.0), Error);
  CHECK_THROWS_AS(Schedule::rate(0.0, 1.0, 1.0), Error);
  CHECK_THROWS_AS(Schedule::rate(0.5, 1.0, 1.0), Error);
}

TEST_CASE("rate schedule exponents") {
  const auto s = Schedule::rate(0.1, 1.0, 1.0);
  CHECK(s.a() == doctest::Approx(0.55));
  CHECK(s.b() == doctest::Approx(0.4));
  CHECK(s.delta().value() == 0.1);
  const auto q = Schedule::rate(0.25, 1.0, 1.0);
  CHECK(q.a() == doctest::Approx(0.625));
  CHECK(q.b() == doctest::Approx(0.25));
  CHECK(q.a() + q.b() == doctest::Approx(0.875));
  const auto edge = Schedule::rate(0.4999999, 1.0, 1.0);
  CHECK(edge.a() == doctest::Approx(0.75).epsilon(1e-6));
  CHECK(edge.b() == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("convergence conditions") {
  CHECK(validate_convergence_conditions(Schedule::power_law(1, 1, 0.6, 0.2)).passed());
  CHECK_FALSE(validate_convergence_conditions(Schedule::power_law(1, 1, 0.4, 0.2)).passed());
  CHECK(validate_convergence_conditions(Schedule::power_law(1, 1, 0.55, 0.4)).passed());
  CHECK_FALSE(validate_convergence_conditions(Schedule::power_law(1, 1, 0.6, 0.45)).passed());
  const auto rep = validate_convergence_conditions(Schedule::power_law(1, 1, 0.4, 0.2));
  CHECK(rep.to_string().find("FAIL") != std::string::npos);
}

TEST_CASE("rate-bound conditions") {
  CHECK(validate_rate_bound_conditions(Schedule::power_law(1, 1, 0.55, 0.1)).passed());
  CHECK_FALSE(validate_rate_bound_conditions(Schedule::power_law(1, 1, 0.55, 0.4)).passed());
  CHECK_FALSE(validate_rate_bound_conditions(Schedule::power_law(1, 1, 0.5, 0.5)).passed());
  for (double d : {0.05, 0.1, 0.25, 0.45}) {
    const auto s = Schedule::rate(d, 1.0, 1.0);
    CHECK(validate_convergence_conditions(s).passed());
    CHECK_FALSE(validate_rate_bound_conditions(s).passed());
  }
}

TEST_CASE("average conditions add a r <= 1") {
  CHECK(validate_average_conditions(Schedule::power_law(1, 1, 0.6, 0.2, 0.9)).passed());
  CHECK(validate_average_conditions(Schedule::power_law(1, 1, 0.6, 0.2, -1.0)).passed());
  CHECK_FALSE(validate_average_conditions(Schedule::power_law(1, 1, 0.4, 0.2, 0.0)).passed());
}

TEST_CASE("initial product check") {
  CHECK(check_initial_product(Schedule::power_law(1, 1, 0.55, 0.4), 1.0, 0.5));
  CHECK_FALSE(check_initial_product(Schedule::power_law(10, 1, 0.55, 0.4), 1.0, 1.0));
  CHECK(check_initial_product(Schedule::power_law(2, 1, 0.55, 0.4), 1.0, 0.5));
  CHECK_THROWS_AS(check_initial_product(Schedule::power_law(1, 1, 0.55, 0.4), 1.0, 0.0), Error);
}

TEST_CASE("series probes behave as the conditions predict") {
  const auto s = Schedule::power_law(1, 1, 0.6, 0.2);
  const auto p1 = probe_series(s, 1000);
  const auto p2 = probe_series(s, 100000);
  CHECK(p2.sum_gamma_lambda > 2 * p1.sum_gamma_lambda);
  CHECK(p2.sum_gamma_sq - p1.sum_gamma_sq < 1.0);
  CHECK(p2.tail_gamma_over_lambda < p1.tail_gamma_over_lambda);
  CHECK(p2.tail_drift_ratio < p1.tail_drift_ratio);
  CHECK(p2.sum_regularization_drift >= p1.sum_regularization_drift);
}
