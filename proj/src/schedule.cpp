#include "irsmd/schedule.hpp"

#include <cmath>
#include <sstream>

#include "irsmd/error.hpp"

namespace irsmd {

Schedule Schedule::power_law(double gamma0, double lambda0, double a, double b, double r) {
  if (!(gamma0 > 0.0) || !std::isfinite(gamma0)) fail(ErrorCode::invalid_argument, "gamma0 must be positive");
  if (!(lambda0 > 0.0) || !std::isfinite(lambda0)) fail(ErrorCode::invalid_argument, "lambda0 must be positive");
  if (!(r < 1.0)) fail(ErrorCode::invalid_argument, "averaging exponent r must be < 1");
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(r)) {
    fail(ErrorCode::invalid_argument, "schedule exponents must be finite");
  }
  Schedule s;
  s.gamma0_ = gamma0;
  s.lambda0_ = lambda0;
  s.a_ = a;
  s.b_ = b;
  s.r_ = r;
  return s;
}

Schedule Schedule::rate(double delta, double gamma0, double lambda0, double r) {
  if (!(delta > 0.0 && delta < 0.5)) fail(ErrorCode::invalid_argument, "delta must lie in (0, 0.5)");
  Schedule s = power_law(gamma0, lambda0, 0.5 + 0.5 * delta, 0.5 - delta, r);
  s.delta_ = delta;
  return s;
}

double Schedule::gamma(std::uint64_t k) const {
  return gamma0_ / std::pow(static_cast<double>(k) + 1.0, a_);
}

double Schedule::lambda(std::uint64_t k) const {
  return lambda0_ / std::pow(static_cast<double>(k) + 1.0, b_);
}

double Schedule::weight(std::uint64_t k) const {
  if (r_ == 0.0) return 1.0;
  return std::pow(gamma(k), r_);
}

bool ValidationReport::passed() const {
  for (const auto& c : conditions) {
    if (!c.holds) return false;
  }
  return true;
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  os << name << ": " << (passed() ? "pass" : "fail");
  for (const auto& c : conditions) os << "\n  [" << (c.holds ? "ok" : "FAIL") << "] " << c.inequality;
  return os.str();
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void add(ValidationReport& rep, std::string text, bool holds) {
  rep.conditions.push_back({std::move(text), holds});
}

}  // namespace

ValidationReport validate_convergence_conditions(const Schedule& s) {
  const double a = s.a(), b = s.b();
  ValidationReport rep{"convergence (a,b>0, a>b, a>0.5, a+b<1)", {}};
  add(rep, "a > 0 (a = " + num(a) + ")", a > 0.0);
  add(rep, "b > 0 (b = " + num(b) + ")", b > 0.0);
  add(rep, "a > b", a > b);
  add(rep, "a > 0.5", a > 0.5);
  add(rep, "a + b < 1 (a + b = " + num(a + b) + ")", a + b < 1.0);
  return rep;
}

ValidationReport validate_rate_bound_conditions(const Schedule& s) {
  const double a = s.a(), b = s.b();
  ValidationReport rep{"rate bound (a,b>0, a>b, a+b<1, 3a+b<2)", {}};
  add(rep, "a > 0 (a = " + num(a) + ")", a > 0.0);
  add(rep, "b > 0 (b = " + num(b) + ")", b > 0.0);
  add(rep, "a > b", a > b);
  add(rep, "a + b < 1 (a + b = " + num(a + b) + ")", a + b < 1.0);
  add(rep, "3a + b < 2 (3a + b = " + num(3.0 * a + b) + ")", 3.0 * a + b < 2.0);
  return rep;
}

ValidationReport validate_average_conditions(const Schedule& s) {
  ValidationReport rep = validate_convergence_conditions(s);
  rep.name = "averaging (convergence conditions, a r <= 1)";
  add(rep, "a r <= 1 (a r = " + num(s.a() * s.r()) + ")", s.a() * s.r() <= 1.0);
  return rep;
}

bool check_initial_product(const Schedule& s, double l_omega, double mu_h) {
  if (!(l_omega > 0.0) || !(mu_h > 0.0)) fail(ErrorCode::invalid_argument, "initial product: L_omega and mu_h must be positive");
  return s.gamma0() * s.lambda0() <= l_omega / mu_h;
}

SeriesProbe probe_series(const Schedule& s, std::uint64_t horizon) {
  SeriesProbe p{horizon, 0.0, 0.0, 0.0, 0.0, 0.0};
  double prev_lambda = s.lambda(0);
  for (std::uint64_t k = 0; k <= horizon; ++k) {
    const double g = s.gamma(k), l = s.lambda(k);
    p.sum_gamma_lambda += g * l;
    p.sum_gamma_sq += g * g;
    if (k >= 1) {
      const double drift = prev_lambda / l - 1.0;
      p.sum_regularization_drift += drift * drift / (g * l);
      p.tail_drift_ratio = drift * drift / (g * l * g * l);
    }
    p.tail_gamma_over_lambda = g / l;
    prev_lambda = l;
  }
  return p;
}

}  // namespace irsmd
