#include "irsmd/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <tuple>

#include "irsmd/error.hpp"

namespace irsmd {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Neumaier summation for S_k.
void compensated_add(double& sum, double& comp, double v) {
  const double t = sum + v;
  if (std::abs(sum) >= std::abs(v)) {
    comp += (sum - t) + v;
  } else {
    comp += (v - t) + sum;
  }
  sum = t;
}

bool is_power_of_two(std::uint64_t k) { return k != 0 && (k & (k - 1)) == 0; }

}  // namespace

SolverState init(const Vector& x0, const FeasibleSet& set, const Schedule& s, const InitOptions& opts,
                 std::vector<std::string>* warnings) {
  require_dimension(static_cast<std::size_t>(x0.size()), set.dimension(), "initial point");
  if (!check_initial_product(s, opts.l_omega, opts.mu_h)) {
    const std::string msg = "gamma0*lambda0 = " + std::to_string(s.gamma0() * s.lambda0()) +
                            " exceeds L_omega/mu_h = " + std::to_string(opts.l_omega / opts.mu_h);
    if (!opts.override_validation) fail(ErrorCode::validation, msg);
    if (warnings) warnings->push_back(msg + " (overridden)");
  }
  SolverState st;
  st.x = x0;
  if (!set.contains(x0, 0.0)) {
    set.project_in_place(st.x);
    if (warnings) warnings->push_back("initial point outside the feasible set; projected");
  }
  st.x_avg = st.x;
  st.weight_sum = s.weight(0);
  return st;
}

IrSmdSolver::IrSmdSolver(const BilevelProblem& problem, const DistanceGenerator& dgf, const Schedule& schedule)
    : problem_(problem), dgf_(dgf), schedule_(schedule),
      direction_(Vector::Zero(static_cast<Eigen::Index>(problem.dimension()))) {
  require_dimension(dgf.dimension(), problem.dimension(), "distance generator");
}

SolverState IrSmdSolver::init(const Vector& x0, const InitOptions& opts,
                              std::vector<std::string>* warnings) const {
  return irsmd::init(x0, problem_.set(), schedule_, opts, warnings);
}

void IrSmdSolver::step(SolverState& st, SampleSource& src) {
  const StepParams sp = schedule_.at(st.k);
  direction_.setZero();
  const std::uint64_t draws_before = src.draws();
  problem_.add_step_direction(st.x, sp.gamma, sp.lambda, src, direction_);
  if (problem_.deterministic()) {
    st.samples += problem_.inner().support_size() + problem_.outer().support_size();
  } else {
    st.samples += src.draws() - draws_before;
  }
  st.x = dgf_.prox(problem_.set(), st.x, direction_);

  const double w = schedule_.weight(st.k + 1);
  const double prev = st.weight_sum + st.weight_compensation;
  compensated_add(st.weight_sum, st.weight_compensation, w);
  const double next = st.weight_sum + st.weight_compensation;
  st.x_avg = (prev * st.x_avg + w * st.x) / next;
  ++st.k;
}

bool is_checkpoint(std::uint64_t k, const RunOptions& opts) {
  switch (opts.checkpoints) {
    case CheckpointPolicy::every:
      return true;
    case CheckpointPolicy::geometric:
      return is_power_of_two(k);
    case CheckpointPolicy::explicit_list:
      return std::find(opts.checkpoint_list.begin(), opts.checkpoint_list.end(), k) != opts.checkpoint_list.end();
  }
  return false;
}

RunReport IrSmdSolver::run(const Vector& x0, const RunOptions& in_opts, SampleSource& src) {
  if (in_opts.iterations.has_value() == in_opts.time_budget_seconds.has_value()) {
    fail(ErrorCode::invalid_argument, "run: exactly one of iterations or time budget must be set");
  }
  if (in_opts.iterations && *in_opts.iterations < 1) fail(ErrorCode::invalid_argument, "run: need N >= 1");
  if (in_opts.time_budget_seconds && !(*in_opts.time_budget_seconds > 0.0)) {
    fail(ErrorCode::invalid_argument, "run: time budget must be positive");
  }
  RunOptions opts = in_opts;
  std::sort(opts.checkpoint_list.begin(), opts.checkpoint_list.end());

  RunReport rep;
  rep.seed = src.seed();
  rep.gamma0 = schedule_.gamma0();
  rep.lambda0 = schedule_.lambda0();
  rep.a = schedule_.a();
  rep.b = schedule_.b();
  rep.r = schedule_.r();

  InitOptions io;
  io.l_omega = dgf_.gradient_lipschitz();
  io.mu_h = problem_.mu_h();
  io.override_validation = opts.override_validation;
  SolverState st = init(x0, io, &rep.warnings);
  if (opts.capture_history) rep.history.push_back(st.x);

  const auto start = Clock::now();
  const double budget_ms = opts.time_budget_seconds ? *opts.time_budget_seconds * 1000.0 : 0.0;
  const std::uint64_t limit = opts.iterations.value_or(std::numeric_limits<std::uint64_t>::max());
#ifndef NDEBUG
  const bool check = true;
#else
  const bool check = opts.check_feasibility;
#endif

  auto record = [&](std::uint64_t k) {
    TraceRow row{k, schedule_.gamma(k), schedule_.lambda(k), std::numeric_limits<double>::quiet_NaN(),
                 std::numeric_limits<double>::quiet_NaN(), ms_since(start)};
    if (opts.evaluate_objectives && opts.evaluator) {
      std::tie(row.f, row.h) = opts.evaluator(st.x_avg);
    } else if (opts.evaluate_objectives) {
      if (problem_.inner().has_exact_expectation()) row.f = problem_.inner().value(st.x_avg);
      if (problem_.outer().has_exact_expectation()) row.h = problem_.outer().value(st.x_avg);
    }
    rep.trace.push_back(row);
  };

  while (st.k < limit) {
    if (opts.time_budget_seconds && ms_since(start) >= budget_ms) break;
    step(st, src);
    if (opts.capture_history) rep.history.push_back(st.x);
    if (check && (!problem_.set().contains(st.x) || !problem_.set().contains(st.x_avg))) {
      fail(ErrorCode::infeasible_point, "iterate left the feasible set at k = " + std::to_string(st.k));
    }
    if (is_checkpoint(st.k, opts)) record(st.k);
  }
  if (rep.trace.empty() || rep.trace.back().k != st.k) {
    if (st.k > 0 || rep.trace.empty()) record(st.k);
  }

  rep.iterations = st.k;
  rep.x_avg = st.x_avg;
  rep.x_last = st.x;
  rep.elapsed_ms = ms_since(start);
  return rep;
}

SolverState step(SolverState state, const BilevelProblem& p, const DistanceGenerator& dgf,
                 const Schedule& s, SampleSource& src) {
  IrSmdSolver solver(p, dgf, s);
  solver.step(state, src);
  return state;
}

RunReport run(const BilevelProblem& p, const DistanceGenerator& dgf, const Schedule& s, const Vector& x0,
              const RunOptions& opts, SampleSource& src) {
  IrSmdSolver solver(p, dgf, s);
  return solver.run(x0, opts, src);
}

Vector closed_form_average(std::span<const Vector> history, const Schedule& s, std::uint64_t k) {
  if (history.size() <= k) fail(ErrorCode::invalid_argument, "closed_form_average: history shorter than k+1");
  const Eigen::Index n = history[0].size();
  Eigen::Matrix<long double, Eigen::Dynamic, 1> acc = Eigen::Matrix<long double, Eigen::Dynamic, 1>::Zero(n);
  long double total = 0.0L;
  for (std::uint64_t t = 0; t <= k; ++t) {
    const long double w = s.r() == 0.0 ? 1.0L : std::pow(static_cast<long double>(s.gamma(t)), static_cast<long double>(s.r()));
    total += w;
    acc += w * history[t].cast<long double>();
  }
  return (acc / total).cast<double>();
}

}  // namespace irsmd
