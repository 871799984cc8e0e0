#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "irsmd/geometry.hpp"
#include "irsmd/oracles.hpp"
#include "irsmd/sampling.hpp"
#include "irsmd/schedule.hpp"

namespace irsmd {

struct SolverState {
  std::uint64_t k = 0;
  Vector x;      // x_k
  Vector x_avg;  // weighted average of x_0..x_k
  double weight_sum = 0.0;  // S_k = sum_{t<=k} gamma_t^r
  double weight_compensation = 0.0;
  std::uint64_t samples = 0;
};

struct InitOptions {
  double l_omega = 1.0;
  double mu_h = 1.0;
  bool override_validation = false;
};

/// Starts the iteration at x0 (projected onto the set when outside, with a
/// warning). Throws Error(validation) when gamma0 lambda0 > L_omega / mu_h
/// unless overridden.
SolverState init(const Vector& x0, const FeasibleSet& set, const Schedule& s,
                 const InitOptions& opts = {}, std::vector<std::string>* warnings = nullptr);

/// One iteration: prox step with gamma_k (g_F + lambda_k g_H), then the
/// S / x_avg recursions.
SolverState step(SolverState state, const BilevelProblem& p, const DistanceGenerator& dgf,
                 const Schedule& s, SampleSource& src);

struct TraceRow {
  std::uint64_t k;
  double gamma;
  double lambda;
  double f;  // exact f(x_avg_k), NaN when not evaluated
  double h;  // exact h(x_avg_k), NaN when not evaluated
  double elapsed_ms;
};

enum class CheckpointPolicy { geometric, explicit_list, every };

struct RunOptions {
  std::optional<std::uint64_t> iterations;
  std::optional<double> time_budget_seconds;
  CheckpointPolicy checkpoints = CheckpointPolicy::geometric;
  std::vector<std::uint64_t> checkpoint_list;  // for explicit_list, sorted on use
  bool evaluate_objectives = true;
  bool capture_history = false;
  bool check_feasibility = false;
  bool override_validation = false;
  /// Replaces the exact (f, h) evaluation at checkpoints, e.g. with a subsample estimate.
  std::function<std::pair<double, double>(const Vector&)> evaluator;
};

struct RunReport {
  Vector x_avg;
  Vector x_last;
  std::uint64_t iterations = 0;
  std::uint64_t seed = 0;
  double gamma0 = 0, lambda0 = 0, a = 0, b = 0, r = 0;
  std::vector<TraceRow> trace;
  std::vector<Vector> history;  // x_0..x_N when capture_history is set
  std::vector<std::string> warnings;
  double elapsed_ms = 0.0;
};

bool is_checkpoint(std::uint64_t k, const RunOptions& opts);

/// Iteration driver that owns workspace; repeated steps do not reallocate.
class IrSmdSolver {
 public:
  IrSmdSolver(const BilevelProblem& problem, const DistanceGenerator& dgf, const Schedule& schedule);

  SolverState init(const Vector& x0, const InitOptions& opts,
                   std::vector<std::string>* warnings = nullptr) const;
  void step(SolverState& state, SampleSource& src);
  RunReport run(const Vector& x0, const RunOptions& opts, SampleSource& src);

 private:
  const BilevelProblem& problem_;
  const DistanceGenerator& dgf_;
  const Schedule& schedule_;
  Vector direction_;
};

RunReport run(const BilevelProblem& p, const DistanceGenerator& dgf, const Schedule& s,
              const Vector& x0, const RunOptions& opts, SampleSource& src);

/// sum_t eta_{t,k} x_t with eta_{t,k} = gamma_t^r / sum_{i<=k} gamma_i^r,
/// accumulated in long double. Test-support routine.
Vector closed_form_average(std::span<const Vector> history, const Schedule& s, std::uint64_t k);

}  // namespace irsmd
