#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "irsmd/geometry.hpp"
#include "irsmd/oracles.hpp"
#include "irsmd/schedule.hpp"

namespace irsmd {

struct RegularizedOptions {
  std::uint64_t budget = 200000;
  double tol = 1e-8;  // objective scale
  std::optional<Vector> warm_start;
};

/// x*_lambda = argmin_X f + lambda h together with a lower bound on the optimum.
struct RegularizedSolution {
  double lambda = 0.0;
  Vector x;
  double objective = 0.0;    // f_lambda(x)
  double lower_bound = 0.0;  // certified lower bound on min f_lambda
  bool certified = false;    // objective - lower_bound <= tol
  std::uint64_t iterations = 0;
  /// sqrt(2 (objective - lower_bound) / (mu_h lambda)) >= ||x - x*_lambda||.
  double solution_tolerance = 0.0;
};

/// Projected subgradient descent on the (mu_h lambda)-strongly convex f_lambda with
/// step 2/(mu_h lambda (k+2)). The lower bound is the best of the per-iterate and
/// (k+1)-weighted aggregated strongly convex models minimized over X.
RegularizedSolution solve_regularized(const BilevelProblem& p, double lambda, const RegularizedOptions& opts = {});

struct InnerOptions {
  std::uint64_t budget = 200000;
  double tol = 1e-8;
};

struct InnerSolution {
  double f_star = 0.0;  // best value found
  Vector x;
  double lower_bound = 0.0;
  bool certified = false;
  std::uint64_t iterations = 0;
  std::string method;
};

/// f* = min_X f. Least squares uses the normal equations (whole space) or
/// accelerated projected gradient; other objectives use projected subgradient
/// descent with linear lower models.
InnerSolution solve_inner(const BilevelProblem& p, const InnerOptions& opts = {});

struct BruteForceSolution {
  Vector x_h;
  double h_star = 0.0;
  double f_min = 0.0;
  double slack = 0.0;  // largest f - f_min among the points treated as inner-optimal
  double cell = 0.0;   // grid spacing (largest over axes)
  std::uint64_t grid_points = 0;
};

/// Grid enumeration for dimension <= 3 over a compact set, `resolution` points
/// per axis. A point counts as inner-optimal when f - ||g_f|| d/2 <= f_min (d the
/// cell diagonal), or when f <= f_min + slack if a slack is given.
BruteForceSolution solve_bilevel_bruteforce(const BilevelProblem& p, std::size_t resolution,
                                            std::optional<double> slack = std::nullopt);

struct ReferenceSolution {
  std::vector<RegularizedSolution> path;  // one per requested lambda
  InnerSolution inner;                    // f*
  std::optional<BruteForceSolution> bilevel;  // x*_h, h* when the problem is grid-sized
};

ReferenceSolution reference_solution(const BilevelProblem& p, const std::vector<double>& lambdas,
                                     std::size_t grid_resolution = 0, std::size_t threads = 0);

struct BoundRow {
  std::uint64_t k = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  double margin = 0.0;  // rhs + slack - lhs
  bool pass = false;
};

struct BoundReport {
  std::vector<BoundRow> rows;
  bool certified = true;  // every reference solve met its tolerance
  std::vector<std::string> notes;

  bool passed() const;
  double pass_fraction() const;
};

/// CSV with header "k,lhs,rhs,margin,pass".
void write_bound_csv(std::ostream& out, const BoundReport& report);

struct PathBoundOptions {
  RegularizedOptions solve;
  std::size_t threads = 0;
};

/// ||x*_{lambda_k} - x*_{lambda_{k-1}}|| <= C_H/mu_h |1 - lambda_{k-1}/lambda_k| for k = 1..K.
BoundReport path_bound_check(const BilevelProblem& p, const Schedule& s, std::uint64_t K,
                             const PathBoundOptions& opts = {});

/// Constants of the E[D(x_{k+1}, x*_{lambda_k})] <= (gamma_k/lambda_k) tau bound.
struct TheoreticalBound {
  double tau = 0.0;
  double B1 = 0.0;
  double rho = 0.5;
  std::uint64_t k1 = 1;
  std::uint64_t k2 = 1;
  std::uint64_t kbar = 1;
  double M = 0.0;
  std::optional<double> M_h;
  double C_F = 0.0, C_H = 0.0, mu_h = 0.0, L_omega = 1.0, mu_omega = 1.0;
};

/// B1 is the maximum of (1/(gamma_k^3 lambda_k))(lambda_{k-1}/lambda_k - 1)^2 over
/// k1 <= k <= horizon, and k2 is one past the last k <= horizon where the
/// gamma/lambda drift condition fails for the given rho.
TheoreticalBound theoretical_bound(const BilevelProblem& p, const DistanceGenerator& dgf, const Schedule& s,
                                   std::uint64_t horizon, double rho = 0.5);

struct RecursionOptions {
  std::size_t paths = 1;
  std::uint64_t seed = 1;
  double rho = 0.5;
  std::uint64_t scan_horizon = 1000000;
  /// Checked indices; empty means kbar * 2^j up to K plus K itself.
  std::vector<std::uint64_t> checkpoints;
  RegularizedOptions solve{20000, 1e-8, std::nullopt};
  std::size_t threads = 0;
  std::optional<Vector> x0;  // defaults to the projection of 0
};

struct RecursionReport {
  TheoreticalBound bound;
  BoundReport tau_bound;    // mean D(x_{k+1}, x*_{lambda_k}) vs (gamma_k/lambda_k) tau
  BoundReport one_step;     // mean D_{k+1} vs (1 - alpha_k) mean D_k + beta_k
};

/// Monte-Carlo check of the expected-distance bound over `paths` seeded runs
/// (seeds seed+i) for checkpoints k >= kbar, k <= K.
RecursionReport recursion_bound_check(const BilevelProblem& p, const DistanceGenerator& dgf, const Schedule& s,
                                      std::uint64_t K, const RecursionOptions& opts = {});

}  // namespace irsmd
