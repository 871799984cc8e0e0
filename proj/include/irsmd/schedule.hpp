#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace irsmd {

struct StepParams {
  double gamma;
  double lambda;
};

/// Coupled power-law sequences gamma_k = gamma0/(k+1)^a, lambda_k = lambda0/(k+1)^b
/// together with the averaging exponent r (weights proportional to gamma_t^r).
class Schedule {
 public:
  static Schedule power_law(double gamma0, double lambda0, double a, double b, double r = 0.0);
  /// a = 0.5 + 0.5 delta, b = 0.5 - delta, which gives the O(1/N^{0.5-delta}) rate in f.
  static Schedule rate(double delta, double gamma0, double lambda0, double r = 0.0);

  double gamma0() const { return gamma0_; }
  double lambda0() const { return lambda0_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double r() const { return r_; }
  std::optional<double> delta() const { return delta_; }

  double gamma(std::uint64_t k) const;
  double lambda(std::uint64_t k) const;
  StepParams at(std::uint64_t k) const { return {gamma(k), lambda(k)}; }
  /// gamma_k^r, the unnormalised averaging weight of x_k.
  double weight(std::uint64_t k) const;

 private:
  Schedule() = default;

  double gamma0_ = 1.0, lambda0_ = 1.0, a_ = 0.0, b_ = 0.0, r_ = 0.0;
  std::optional<double> delta_;
};

struct Condition {
  std::string inequality;
  bool holds;
};

struct ValidationReport {
  std::string name;
  std::vector<Condition> conditions;

  bool passed() const;
  std::string to_string() const;
};

/// a,b > 0, a > b, a > 0.5, a + b < 1: sufficient for almost-sure convergence of the iterates.
ValidationReport validate_convergence_conditions(const Schedule& s);
/// a,b > 0, a > b, a + b < 1, 3a + b < 2: sufficient for the E[D] <= (gamma_k/lambda_k) tau bound.
ValidationReport validate_rate_bound_conditions(const Schedule& s);
/// Conditions for convergence of the weighted average: convergence conditions plus a r <= 1.
ValidationReport validate_average_conditions(const Schedule& s);

/// gamma0 * lambda0 <= L_omega / mu_h (non-strict).
bool check_initial_product(const Schedule& s, double l_omega, double mu_h);

/// Partial-sum probes of the raw series conditions, evaluated up to index K.
struct SeriesProbe {
  std::uint64_t horizon;
  double sum_gamma_lambda;        // diverges
  double sum_gamma_sq;            // converges
  double sum_regularization_drift; // sum (1/(gamma lambda)) (lambda_{k-1}/lambda_k - 1)^2, converges
  double tail_gamma_over_lambda;  // -> 0
  double tail_drift_ratio;        // (1/(gamma lambda)^2)(lambda_{k-1}/lambda_k - 1)^2 -> 0
};

SeriesProbe probe_series(const Schedule& s, std::uint64_t horizon);

}  // namespace irsmd
