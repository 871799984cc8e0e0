#include "irsmd/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>

#include "irsmd/error.hpp"
#include "irsmd/io.hpp"
#include "irsmd/parallel.hpp"
#include "irsmd/solver.hpp"

namespace irsmd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector start_point(const FeasibleSet& set, const std::optional<Vector>& warm) {
  if (warm) {
    require_dimension(static_cast<std::size_t>(warm->size()), set.dimension(), "warm start");
    return set.project(*warm);
  }
  return set.project(Vector::Zero(static_cast<Eigen::Index>(set.dimension())));
}

// min over the set of <g, y>; -inf on the whole space unless g = 0.
double min_linear(const FeasibleSet& set, const Vector& g) {
  switch (set.kind()) {
    case SetKind::box:
      return (g.array() < 0.0).select(g.array() * set.upper().array(), g.array() * set.lower().array()).sum();
    case SetKind::ball:
      return g.dot(set.center()) - set.radius() * g.norm();
    case SetKind::whole_space:
      return g.isZero(0.0) ? 0.0 : -kInf;
  }
  return -kInf;
}

// Power iteration on A'A; returns an upper estimate of ||A||_2^2.
template <typename Matrix>
double spectral_sq(const Matrix& a) {
  Vector v = Vector::Ones(a.cols()) / std::sqrt(static_cast<double>(a.cols()));
  double est = 0.0;
  for (int it = 0; it < 200; ++it) {
    Vector w = a.transpose() * (a * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    const double next = v.dot(w);
    v = w / nw;
    if (std::abs(next - est) <= 1e-12 * next) {
      est = next;
      break;
    }
    est = next;
  }
  // Rayleigh quotients approach from below; pad generously.
  return est * 1.05 + 1e-12;
}

template <typename Matrix>
InnerSolution least_squares_inner(const BilevelProblem& p, const Matrix& a, const Vector& b, const InnerOptions& opts) {
  InnerSolution out;
  const FeasibleSet& set = p.set();
  if (set.kind() == SetKind::whole_space) {
    DenseMatrix dense = DenseMatrix(a);
    Eigen::CompleteOrthogonalDecomposition<DenseMatrix> cod(dense);
    out.x = cod.solve(b);
    const Vector r = dense * out.x - b;
    out.f_star = r.squaredNorm();
    out.lower_bound = out.f_star;
    const double grad = (2.0 * dense.transpose() * r).norm();
    const double scale = 1.0 + dense.norm() * (dense.norm() * out.x.norm() + b.norm());
    out.certified = grad <= 1e-9 * scale;
    out.method = "normal-equations";
    return out;
  }
  // Accelerated projected gradient with step 1/L, L = 2 ||A||^2.
  const double lip = 2.0 * spectral_sq(a);
  out.method = "accelerated-projected-gradient";
  Vector x = start_point(set, std::nullopt);
  if (lip == 0.0) {
    out.x = x;
    out.f_star = out.lower_bound = b.squaredNorm();
    out.certified = true;
    return out;
  }
  Vector y = x, x_prev = x;
  double t = 1.0;
  double best = kInf, lower = 0.0;
  for (std::uint64_t k = 0; k < opts.budget; ++k) {
    out.iterations = k + 1;
    const Vector rx = a * x - b;
    const double fx = rx.squaredNorm();
    const Vector gx = 2.0 * (a.transpose() * rx);
    if (fx < best) {
      best = fx;
      out.x = x;
    }
    lower = std::max(lower, fx - gx.dot(x) + min_linear(set, gx));
    if (best - lower <= opts.tol) break;
    const Vector ry = a * y - b;
    x_prev = x;
    x = set.project(y - (2.0 / lip) * (a.transpose() * ry));
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x + ((t - 1.0) / t_next) * (x - x_prev);
    t = t_next;
  }
  out.f_star = best;
  out.lower_bound = lower;
  out.certified = best - lower <= opts.tol;
  return out;
}

InnerSolution subgradient_inner(const BilevelProblem& p, const InnerOptions& opts) {
  InnerSolution out;
  out.method = "projected-subgradient";
  const FeasibleSet& set = p.set();
  const auto& f = p.inner();
  Vector x = start_point(set, std::nullopt);
  const double radius = set.diameter_bound().value_or(std::max(1.0, x.norm()));
  double g_scale = f.subgradient_bound(set).value_or(0.0);
  double best = kInf;
  double lower = f.lower_bound();
  const auto n = static_cast<Eigen::Index>(set.dimension());
  Vector agg_linear = Vector::Zero(n);
  double agg_const = 0.0;
  Vector g(n);
  for (std::uint64_t k = 0; k < opts.budget; ++k) {
    out.iterations = k + 1;
    const double v = f.value(x);
    g.setZero();
    f.add_subgradient(x, 1.0, g);
    if (v < best) {
      best = v;
      out.x = x;
    }
    agg_linear += g;
    agg_const += v - g.dot(x);
    const double w = static_cast<double>(k + 1);
    lower = std::max(lower, (agg_const + min_linear(set, agg_linear)) / w);
    if (best - lower <= opts.tol) break;
    const double gn = g.norm();
    if (gn == 0.0) {
      lower = std::max(lower, v);  // a zero subgradient certifies optimality
      break;
    }
    g_scale = std::max(g_scale, gn);
    x = set.project(x - (radius / (g_scale * std::sqrt(w))) * g);
  }
  out.f_star = best;
  out.lower_bound = lower;
  out.certified = best - lower <= opts.tol;
  return out;
}

// f + lambda h for least squares f and elastic-net h on the whole space or a box:
// accelerated proximal gradient on the smooth part ||Ax - b||^2 + (lambda mu_h / 2)||x||^2
// with the separable prox of lambda ||x||_1 plus the box indicator.
template <typename Matrix>
RegularizedSolution regularized_least_squares(const BilevelProblem& p, const Matrix& a, const Vector& b, double mu_h,
                                              double lambda, const RegularizedOptions& opts) {
  const FeasibleSet& set = p.set();
  const double mu = lambda * mu_h;
  const double lip = 2.0 * spectral_sq(a) + mu;
  const double step = 1.0 / lip;
  const double momentum = (std::sqrt(lip) - std::sqrt(mu)) / (std::sqrt(lip) + std::sqrt(mu));
  auto prox = [&](const Vector& v) {
    Vector z = (v.array().abs() - step * lambda).max(0.0) * v.array().sign();
    return set.project(z);
  };
  RegularizedSolution out;
  out.lambda = lambda;
  Vector x = start_point(set, opts.warm_start);
  Vector y = x;
  double best = kInf, lower = -kInf;
  for (std::uint64_t k = 0; k < opts.budget; ++k) {
    out.iterations = k + 1;
    const Vector grad = 2.0 * (a.transpose() * (a * y - b)) + mu * y;
    const Vector next = prox(y - step * grad);
    const double v = p.regularized_value(next, lambda);
    if (v < best) {
      best = v;
      out.x = next;
    }
    // F(z) >= F(x+) + <G, z - y> + ||G||^2 / (2L) + (mu/2)||z - y||^2 with G = L (y - x+).
    const double gm = (lip * (y - next)).squaredNorm();
    const double cand = v + gm * (0.5 / lip - 0.5 / mu);
    if (std::isfinite(cand) && cand <= best) lower = std::max(lower, cand);
    if (best - lower <= opts.tol) break;
    y = next + momentum * (next - x);
    x = next;
  }
  out.objective = best;
  out.lower_bound = lower;
  const double gap = std::max(0.0, best - lower);
  out.certified = gap <= opts.tol;
  out.solution_tolerance = std::sqrt(2.0 * gap / mu);
  return out;
}

}  // namespace

RegularizedSolution solve_regularized(const BilevelProblem& p, double lambda, const RegularizedOptions& opts) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) fail(ErrorCode::invalid_argument, "solve_regularized: lambda must be positive");
  if (!p.inner().has_exact_expectation() || !p.outer().has_exact_expectation()) {
    fail(ErrorCode::unsupported, "solve_regularized: objectives need exact subgradients");
  }
  const FeasibleSet& set = p.set();
  if (const auto* en = dynamic_cast<const ElasticNetObjective*>(&p.outer());
      en && set.kind() != SetKind::ball) {
    if (const auto* ls = dynamic_cast<const DenseLeastSquares*>(&p.inner())) {
      return regularized_least_squares(p, ls->matrix(), ls->rhs(), en->mu(), lambda, opts);
    }
    if (const auto* ls = dynamic_cast<const SparseLeastSquares*>(&p.inner())) {
      return regularized_least_squares(p, ls->matrix(), ls->rhs(), en->mu(), lambda, opts);
    }
  }
  const double mu = p.mu_h() * lambda + p.inner().strong_convexity();
  const auto n = static_cast<Eigen::Index>(set.dimension());

  RegularizedSolution out;
  out.lambda = lambda;
  Vector x = start_point(set, opts.warm_start);
  double best = kInf, lower = -kInf;
  double agg_weight = 0.0, agg_const = 0.0;
  Vector agg_linear = Vector::Zero(n);
  Vector g(n);
  auto model_min = [&](const Vector& anchor, const Vector& slope, double value) {
    // min over the set of value + <slope, y - anchor> + (mu/2)||y - anchor||^2
    const Vector y = set.project(anchor - slope / mu);
    return value + slope.dot(y - anchor) + 0.5 * mu * (y - anchor).squaredNorm();
  };
  for (std::uint64_t k = 0; k < opts.budget; ++k) {
    out.iterations = k + 1;
    const double v = p.regularized_value(x, lambda);
    g.setZero();
    p.inner().add_subgradient(x, 1.0, g);
    p.outer().add_subgradient(x, lambda, g);
    if (v < best) {
      best = v;
      out.x = x;
    }
    // Candidates above the best value can only come from rounding on huge iterates.
    auto offer = [&](double cand) {
      if (std::isfinite(cand) && cand <= best) lower = std::max(lower, cand);
    };
    offer(model_min(x, g, v));
    const double w = static_cast<double>(k + 1);
    agg_weight += w;
    agg_const += w * (v - g.dot(x) + 0.5 * mu * x.squaredNorm());
    agg_linear += w * (g - mu * x);
    {
      // sum_k w_k model_k(y) / W = C + <L, y> + (mu/2)||y||^2
      const Vector lin = agg_linear / agg_weight;
      const Vector y = set.project(-lin / mu);
      offer(agg_const / agg_weight + lin.dot(y) + 0.5 * mu * y.squaredNorm());
    }
    if (best - lower <= opts.tol) break;
    x = set.project(x - (2.0 / (mu * static_cast<double>(k + 2))) * g);
  }
  out.objective = best;
  out.lower_bound = lower;
  const double gap = std::max(0.0, best - lower);
  out.certified = gap <= opts.tol;
  out.solution_tolerance = std::sqrt(2.0 * gap / mu);
  return out;
}

InnerSolution solve_inner(const BilevelProblem& p, const InnerOptions& opts) {
  if (!p.inner().has_exact_expectation()) fail(ErrorCode::unsupported, "solve_inner: inner objective needs exact subgradients");
  if (const auto* ls = dynamic_cast<const DenseLeastSquares*>(&p.inner())) {
    return least_squares_inner(p, ls->matrix(), ls->rhs(), opts);
  }
  if (const auto* ls = dynamic_cast<const SparseLeastSquares*>(&p.inner())) {
    if (p.set().kind() == SetKind::whole_space && ls->matrix().cols() > 4000) {
      InnerSolution out;
      Eigen::LeastSquaresConjugateGradient<SparseMatrix> cg;
      cg.setTolerance(1e-12);
      cg.compute(ls->matrix());
      out.x = cg.solve(ls->rhs());
      const Vector r = ls->matrix() * out.x - ls->rhs();
      out.f_star = out.lower_bound = r.squaredNorm();
      out.certified = cg.info() == Eigen::Success;
      out.iterations = static_cast<std::uint64_t>(cg.iterations());
      out.method = "least-squares-cg";
      return out;
    }
    return least_squares_inner(p, ls->matrix(), ls->rhs(), opts);
  }
  return subgradient_inner(p, opts);
}

BruteForceSolution solve_bilevel_bruteforce(const BilevelProblem& p, std::size_t resolution, std::optional<double> slack) {
  const FeasibleSet& set = p.set();
  const std::size_t n = set.dimension();
  if (n > 3) fail(ErrorCode::unsupported, "solve_bilevel_bruteforce: dimension " + std::to_string(n) + " exceeds 3");
  if (!set.compact()) fail(ErrorCode::unsupported, "solve_bilevel_bruteforce: the feasible set must be compact");
  if (resolution < 2) fail(ErrorCode::invalid_argument, "solve_bilevel_bruteforce: need at least 2 points per axis");
  if (!p.inner().has_exact_expectation() || !p.outer().has_exact_expectation()) {
    fail(ErrorCode::unsupported, "solve_bilevel_bruteforce: objectives need exact values");
  }
  Vector lo(static_cast<Eigen::Index>(n)), hi(static_cast<Eigen::Index>(n));
  if (set.kind() == SetKind::box) {
    lo = set.lower();
    hi = set.upper();
  } else {
    lo = set.center().array() - set.radius();
    hi = set.center().array() + set.radius();
  }
  const Vector step = (hi - lo) / static_cast<double>(resolution - 1);

  std::uint64_t total = 1;
  for (std::size_t j = 0; j < n; ++j) total *= resolution;
  Vector x(static_cast<Eigen::Index>(n)), g(static_cast<Eigen::Index>(n));
  auto point = [&](std::uint64_t idx) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto e = static_cast<Eigen::Index>(j);
      const std::uint64_t i = idx % resolution;
      idx /= resolution;
      x[e] = i + 1 == resolution ? hi[e] : lo[e] + static_cast<double>(i) * step[e];
    }
    return set.kind() == SetKind::box || set.contains(x, 0.0);
  };

  BruteForceSolution out;
  out.cell = step.maxCoeff();
  const double reach = 0.5 * step.norm();
  double f_min = kInf;
  // With an explicit slack, f_values holds f; otherwise f - ||g_f|| reach, a lower
  // bound on f within half a cell diagonal. Every inner minimizer has a grid point
  // within that reach whose reduced value is at most f*, so no candidate is lost.
  std::vector<double> f_values(total, kInf), reduced(slack ? 0 : total, kInf);
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    if (!point(idx)) continue;
    ++out.grid_points;
    const double f = p.inner().value(x);
    f_values[idx] = f;
    f_min = std::min(f_min, f);
    if (!slack) {
      g.setZero();
      p.inner().add_subgradient(x, 1.0, g);
      reduced[idx] = f - g.norm() * reach;
    }
  }
  out.f_min = f_min;
  const double cut = f_min + (slack ? *slack : 1e-12 * (1.0 + std::abs(f_min)));
  out.h_star = kInf;
  out.slack = slack.value_or(0.0);
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    if (!((slack ? f_values[idx] : reduced[idx]) <= cut)) continue;
    if (!slack) out.slack = std::max(out.slack, f_values[idx] - f_min);
    point(idx);
    const double h = p.outer().value(x);
    if (h < out.h_star) {
      out.h_star = h;
      out.x_h = x;
    }
  }
  return out;
}

ReferenceSolution reference_solution(const BilevelProblem& p, const std::vector<double>& lambdas,
                                     std::size_t grid_resolution, std::size_t threads) {
  ReferenceSolution out;
  out.path.resize(lambdas.size());
  parallel_for(lambdas.size(), threads, [&](std::size_t i) { out.path[i] = solve_regularized(p, lambdas[i]); });
  out.inner = solve_inner(p);
  if (grid_resolution > 0 && p.dimension() <= 3 && p.set().compact()) {
    out.bilevel = solve_bilevel_bruteforce(p, grid_resolution);
  }
  return out;
}

// ---------------------------------------------------------------------------

bool BoundReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const BoundRow& r) { return r.pass; });
}

double BoundReport::pass_fraction() const {
  if (rows.empty()) return 1.0;
  const auto n = std::count_if(rows.begin(), rows.end(), [](const BoundRow& r) { return r.pass; });
  return static_cast<double>(n) / static_cast<double>(rows.size());
}

void write_bound_csv(std::ostream& out, const BoundReport& report) {
  out << "k,lhs,rhs,margin,pass\n";
  for (const auto& r : report.rows) {
    out << r.k << ',' << format_double(r.lhs) << ',' << format_double(r.rhs) << ',' << format_double(r.margin) << ','
        << (r.pass ? 1 : 0) << '\n';
  }
}

BoundReport path_bound_check(const BilevelProblem& p, const Schedule& s, std::uint64_t K, const PathBoundOptions& opts) {
  BoundReport report;
  if (K == 0) return report;
  const auto c_h = p.outer().subgradient_bound(p.set());
  if (!c_h) fail(ErrorCode::certificate, "path_bound_check: C_H is not certified on this feasible set");
  const double mu_h = p.mu_h();
  std::vector<RegularizedSolution> sol(K + 1);
  parallel_for(K + 1, opts.threads, [&](std::size_t k) { sol[k] = solve_regularized(p, s.lambda(k), opts.solve); });
  for (std::uint64_t k = 0; k <= K; ++k) {
    if (!sol[k].certified) {
      report.certified = false;
      report.notes.push_back("lambda_" + std::to_string(k) + " solve missed tolerance (gap " +
                             format_double(sol[k].objective - sol[k].lower_bound) + ")");
    }
  }
  for (std::uint64_t k = 1; k <= K; ++k) {
    BoundRow row;
    row.k = k;
    row.lhs = (sol[k].x - sol[k - 1].x).norm();
    row.rhs = *c_h / mu_h * std::abs(1.0 - s.lambda(k - 1) / s.lambda(k));
    row.slack = 2.0 * (sol[k].solution_tolerance + sol[k - 1].solution_tolerance);
    row.margin = row.rhs + row.slack - row.lhs;
    row.pass = row.margin >= 0.0;
    report.rows.push_back(row);
  }
  return report;
}

namespace {

// lambda_{k-1}/lambda_k - 1 for the power law, computed without cancellation.
double lambda_drift(const Schedule& s, std::uint64_t k) {
  return std::expm1(s.b() * std::log1p(1.0 / static_cast<double>(k)));
}

}  // namespace

TheoreticalBound theoretical_bound(const BilevelProblem& p, const DistanceGenerator& dgf, const Schedule& s,
                                   std::uint64_t horizon, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) fail(ErrorCode::invalid_argument, "theoretical_bound: rho must lie in (0, 1)");
  if (horizon < 1) fail(ErrorCode::invalid_argument, "theoretical_bound: horizon must be positive");
  const auto report = validate_rate_bound_conditions(s);
  if (!report.passed()) fail(ErrorCode::validation, "theoretical_bound: " + report.to_string());
  const auto c = p.constants();
  if (!c.diameter) fail(ErrorCode::unsupported, "theoretical_bound: tau needs a compact feasible set (bound M)");
  if (!c.inner_bound || !c.outer_bound) fail(ErrorCode::certificate, "theoretical_bound: C_F and C_H must be certified");

  TheoreticalBound tb;
  tb.rho = rho;
  tb.M = *c.diameter;
  tb.M_h = c.outer_value_bound;
  tb.C_F = *c.inner_bound;
  tb.C_H = *c.outer_bound;
  tb.mu_h = c.outer_modulus;
  tb.L_omega = dgf.gradient_lipschitz();
  tb.mu_omega = dgf.strong_convexity();

  tb.k1 = 1;
  std::uint64_t last_fail = 0;
  const double coef = rho * tb.mu_h / (2.0 * tb.L_omega);
  for (std::uint64_t k = 1; k <= horizon; ++k) {
    const double g = s.gamma(k), l = s.lambda(k);
    const double drift = lambda_drift(s, k);
    tb.B1 = std::max(tb.B1, drift * drift / (g * g * g * l));
    // gamma_{k-1} lambda_k / (lambda_{k-1} gamma_k) - 1 = ((k+1)/k)^(a-b) - 1
    const double term = std::expm1((s.a() - s.b()) * std::log1p(1.0 / static_cast<double>(k)));
    if (term > coef * g * l) last_fail = k;
  }
  if (last_fail == horizon) {
    fail(ErrorCode::validation, "theoretical_bound: the gamma/lambda drift condition still fails at k = " +
                                    std::to_string(horizon) + "; increase the scan horizon");
  }
  tb.k2 = last_fail + 1;
  tb.kbar = std::max(tb.k1, tb.k2);

  const double g = s.gamma(tb.kbar - 1), l = s.lambda(tb.kbar - 1);
  const double L = tb.L_omega, mh = tb.mu_h;
  const double first = 2.0 * L * tb.M * tb.M * l / g;
  const double second = 2.0 * L *
                        (2.0 * tb.C_H * tb.C_H * L * L * L * tb.B1 + 4.0 * tb.C_F * tb.C_F * mh * mh * mh +
                         4.0 * tb.C_H * tb.C_H * mh * mh * mh * l * l) /
                        (tb.mu_omega * mh * mh * mh * mh * (1.0 - rho));
  tb.tau = std::max(first, second);
  return tb;
}

RecursionReport recursion_bound_check(const BilevelProblem& p, const DistanceGenerator& dgf, const Schedule& s,
                                      std::uint64_t K, const RecursionOptions& opts) {
  if (opts.paths < 1) fail(ErrorCode::invalid_argument, "recursion_bound_check: need at least one path");
  RecursionReport out;
  out.bound = theoretical_bound(p, dgf, s, opts.scan_horizon, opts.rho);
  const TheoreticalBound& tb = out.bound;
  if (K < tb.kbar) {
    const std::string note = "K = " + std::to_string(K) + " < kbar = " + std::to_string(tb.kbar) + ": no assertion made";
    out.tau_bound.notes.push_back(note);
    out.one_step.notes.push_back(note);
    return out;
  }

  std::vector<std::uint64_t> checks;
  if (opts.checkpoints.empty()) {
    for (std::uint64_t k = tb.kbar; k <= K; k *= 2) checks.push_back(k);
    checks.push_back(K);
  } else {
    for (auto k : opts.checkpoints) {
      if (k >= tb.kbar && k <= K) checks.push_back(k);
    }
  }
  std::sort(checks.begin(), checks.end());
  checks.erase(std::unique(checks.begin(), checks.end()), checks.end());

  // x*_{lambda_{k-1}} and x*_{lambda_k} for every checked k.
  std::vector<std::uint64_t> idx;
  for (auto k : checks) {
    idx.push_back(k - 1);
    idx.push_back(k);
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  std::vector<RegularizedSolution> refs(idx.size());
  parallel_for(idx.size(), opts.threads, [&](std::size_t i) { refs[i] = solve_regularized(p, s.lambda(idx[i]), opts.solve); });
  auto ref = [&](std::uint64_t j) -> const Vector& {
    return refs[static_cast<std::size_t>(std::lower_bound(idx.begin(), idx.end(), j) - idx.begin())].x;
  };
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (!refs[i].certified) {
      out.tau_bound.certified = out.one_step.certified = false;
      out.tau_bound.notes.push_back("lambda_" + std::to_string(idx[i]) + " solve missed tolerance (solution tolerance " +
                                    format_double(refs[i].solution_tolerance) + ")");
    }
  }

  // d_now[path][c] = D(x_k, x*_{lambda_{k-1}}), d_next[path][c] = D(x_{k+1}, x*_{lambda_k})
  std::vector<std::vector<double>> d_now(opts.paths, std::vector<double>(checks.size()));
  std::vector<std::vector<double>> d_next = d_now;
  const Vector x0 = start_point(p.set(), opts.x0);
  parallel_for(opts.paths, opts.threads, [&](std::size_t path) {
    SampleSource src(opts.seed + path);
    IrSmdSolver solver(p, dgf, s);
    InitOptions init_opts;
    init_opts.l_omega = dgf.gradient_lipschitz();
    init_opts.mu_h = p.mu_h();
    SolverState st = solver.init(x0, init_opts);
    std::size_t c = 0;
    while (c < checks.size()) {
      if (st.k == checks[c]) d_now[path][c] = dgf.bregman(st.x, ref(checks[c] - 1));
      solver.step(st, src);
      if (st.k == checks[c] + 1) {
        d_next[path][c] = dgf.bregman(st.x, ref(checks[c]));
        ++c;
      }
    }
  });

  const double inv_paths = 1.0 / static_cast<double>(opts.paths);
  for (std::size_t c = 0; c < checks.size(); ++c) {
    const std::uint64_t k = checks[c];
    double now = 0.0, next = 0.0;
    for (std::size_t path = 0; path < opts.paths; ++path) {
      now += d_now[path][c];
      next += d_next[path][c];
    }
    now *= inv_paths;
    next *= inv_paths;
    const double g = s.gamma(k), l = s.lambda(k);

    BoundRow tau_row;
    tau_row.k = k;
    tau_row.lhs = next;
    tau_row.rhs = g / l * tb.tau;
    tau_row.margin = tau_row.rhs - tau_row.lhs;
    tau_row.pass = tau_row.margin >= 0.0;
    out.tau_bound.rows.push_back(tau_row);

    const double L = tb.L_omega, mh = tb.mu_h, drift = lambda_drift(s, k);
    const double alpha = mh / (2.0 * L) * g * l;
    const double beta = 2.0 * tb.C_H * tb.C_H * L * L * L / (mh * mh * mh * tb.mu_omega * g * l) * drift * drift +
                        4.0 * tb.C_F * tb.C_F / tb.mu_omega * g * g + 4.0 * tb.C_H * tb.C_H / tb.mu_omega * g * g * l * l;
    BoundRow step_row;
    step_row.k = k;
    step_row.lhs = next;
    step_row.rhs = (1.0 - alpha) * now + beta;
    step_row.margin = step_row.rhs - step_row.lhs;
    step_row.pass = step_row.margin >= 0.0;
    out.one_step.rows.push_back(step_row);
  }
  return out;
}

}  // namespace irsmd
