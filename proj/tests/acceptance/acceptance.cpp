// One line per acceptance criterion; exit status is nonzero when any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "irsmd/experiment.hpp"
#include "irsmd/reference.hpp"
#include "irsmd/solver.hpp"
#include "irsmd/twostage.hpp"

using namespace irsmd;

namespace {

int failures = 0;

struct Outcome {
  bool pass;
  std::string detail;
};

void criterion(const char* id, const char* title, double time_limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o{false, ""};
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < time_limit_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s %s: %s | %s | %.2f s (limit %.0f s)\n", pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs,
              time_limit_s);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

DenseMatrix mat(Eigen::Index r, Eigen::Index c, std::initializer_list<double> rowmajor) {
  DenseMatrix m(r, c);
  auto it = rowmajor.begin();
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = *it++;
  return m;
}

Vector gaussian(SampleSource& src, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index j = 0; j < n; ++j) v[j] = src.normal();
  return v;
}

DenseMatrix gaussian_matrix(SampleSource& src, Eigen::Index r, Eigen::Index c) {
  DenseMatrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = src.normal();
  return m;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "irsmd-acceptance" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome geometry_suite() {
  SampleSource src(2024);
  double worst_identity = 0.0, worst_sandwich = 0.0;
  for (Eigen::Index n : {2, 10, 100}) {
    EuclideanGenerator w(static_cast<std::size_t>(n));
    for (int t = 0; t < 1000; ++t) {
      const Vector x = gaussian(src, n), y = gaussian(src, n), z = gaussian(src, n);
      const double lhs = w.bregman(x, z);
      const double rhs = w.bregman(x, y) + w.bregman(y, z) + (w.gradient(y) - w.gradient(x)).dot(z - y);
      worst_identity = std::max(worst_identity, std::abs(lhs - rhs));
      const double lower = 0.5 * w.strong_convexity() * (x - y).squaredNorm();
      worst_sandwich = std::max(worst_sandwich, std::abs(w.bregman(x, y) - lower));
    }
  }
  const bool ok = worst_identity <= 1e-9 && worst_sandwich <= 1e-9;
  return {ok, fmt("max three-point residual %.2e, max |D - mu/2 ||x-y||^2| %.2e (tol 1e-9)", worst_identity, worst_sandwich)};
}

Outcome averaging_equivalence() {
  SampleSource data(7);
  const DenseMatrix a = gaussian_matrix(data, 20, 4);
  const Vector b = gaussian(data, 20);
  const BilevelProblem p(make_least_squares(a, b), make_elastic_net(0.5, 4), FeasibleSet::whole_space(4));
  EuclideanGenerator w(4);
  double worst = 0.0;
  for (double r : {-1.0, 0.0, 0.5, 0.9}) {
    const auto s = Schedule::power_law(0.01, 1.0, 0.6, 0.3, r);
    RunOptions o;
    o.iterations = 10000;
    o.capture_history = true;
    o.evaluate_objectives = false;
    SampleSource src(99);
    const auto rep = run(p, w, s, Vector::Ones(4), o, src);
    const Vector cf = closed_form_average(rep.history, s, rep.iterations);
    worst = std::max(worst, (rep.x_avg - cf).norm() / cf.norm());
  }
  return {worst <= 1e-10, fmt("max relative error %.2e over r in {-1, 0, 0.5, 0.9} (tol 1e-10)", worst)};
}

Outcome schedule_validators() {
  bool ok = true;
  std::string detail;
  for (double d : {0.05, 0.1, 0.25, 0.45}) {
    const auto s = Schedule::rate(d, 1.0, 1.0);
    const bool conv = validate_convergence_conditions(s).passed();
    const bool rate = validate_rate_bound_conditions(s).passed();
    ok = ok && conv && !rate;
    detail += fmt("delta=%.2f: ", d) + (conv ? "conv pass" : "conv FAIL") + (rate ? "/rate pass, " : "/rate fail, ");
  }
  const bool alt = validate_rate_bound_conditions(Schedule::power_law(1.0, 1.0, 0.55, 0.1)).passed();
  ok = ok && alt;
  detail += std::string("(0.55,0.1) rate ") + (alt ? "pass" : "FAIL");
  return {ok, detail};
}

Outcome rate_reproduction() {
  SyntheticParams sp;
  sp.rows = 5;
  sp.cols = 5;
  sp.rank = 3;
  sp.noise = 0.1;
  auto [a, b] = make_synthetic_least_squares(sp);
  BilevelProblem p(make_least_squares(a, b), make_elastic_net(0.5, 5), FeasibleSet::whole_space(5));
  p.set_deterministic(true);
  const double f_star = solve_inner(p).f_star;
  EuclideanGenerator w(5);
  const auto s = Schedule::rate(0.1, 1.0, 1.0);
  RunOptions o;
  o.iterations = 1000000;
  o.checkpoints = CheckpointPolicy::explicit_list;
  o.checkpoint_list = {1000, 10000, 100000, 1000000};
  SampleSource src(1);
  const auto rep = run(p, w, s, Vector::Zero(5), o, src);
  std::vector<std::pair<double, double>> pts;
  for (const auto& row : rep.trace) pts.emplace_back(static_cast<double>(row.k), row.f - f_star);
  const auto fit = fit_rate(pts, 1.0);
  const double last = rep.trace.back().f - f_star;
  return {fit.slope <= -0.25 && last <= 1e-3,
          fmt("slope %.3f over N=1e3..1e6 (need <= -0.25), ", fit.slope) + fmt("f-gap at 1e6 %.2e (need <= 1e-3)", last)};
}

Outcome bilevel_optimality() {
  const BilevelProblem p(make_quadratic(mat(2, 2, {2, 0, 0, 0}), vec({0, 0})), make_elastic_net(0.5, 2),
                         FeasibleSet::box(2, -1.0, 1.0));
  const auto bf = solve_bilevel_bruteforce(p, 201);
  EuclideanGenerator w(2);
  const auto s = Schedule::rate(0.1, 1.0, 1.0);
  RunOptions o;
  o.iterations = 1000000;
  o.evaluate_objectives = false;
  SampleSource src(1);
  const auto rep = run(p, w, s, vec({0.9, -0.7}), o, src);
  const double dist = (rep.x_avg - bf.x_h).norm();
  const double hgap = std::abs(exact_h(p, rep.x_avg) - bf.h_star);
  return {dist <= 0.05 && hgap <= 0.05,
          fmt("||x_N - x*_h|| %.2e (tol 0.05), ", dist) + fmt("|h - h*| %.2e (tol 0.05)", hgap)};
}

Outcome path_bound() {
  const BilevelProblem p(make_quadratic(mat(1, 1, {2}), vec({-2}), 1.0), make_quadratic(mat(1, 1, {1}), vec({0})),
                         FeasibleSet::box(1, -2.0, 2.0));
  const auto rep = path_bound_check(p, Schedule::power_law(0.1, 2.0, 0.6, 0.4), 10);
  double worst_closed = 0.0;
  for (const auto& r : rep.rows) {
    const double l0 = 2.0 / std::pow(static_cast<double>(r.k), 0.4), l1 = 2.0 / std::pow(static_cast<double>(r.k + 1), 0.4);
    worst_closed = std::max(worst_closed, std::abs(r.lhs - std::abs(2.0 / (2.0 + l1) - 2.0 / (2.0 + l0))));
  }
  const auto flat = path_bound_check(p, Schedule::power_law(0.1, 1.0, 0.6, 0.0), 10);
  double flat_lhs = 0.0, flat_rhs = 0.0;
  for (const auto& r : flat.rows) {
    flat_lhs = std::max(flat_lhs, r.lhs);
    flat_rhs = std::max(flat_rhs, r.rhs);
  }
  const bool ok = rep.rows.size() == 10 && rep.passed() && rep.certified && flat.passed() && flat_rhs == 0.0 &&
                  flat_lhs <= 1e-6 && worst_closed <= 1e-6;
  return {ok, fmt("%.0f/10 rows hold, ", static_cast<double>(std::count_if(rep.rows.begin(), rep.rows.end(), [](const BoundRow& r) { return r.pass; }))) +
                  fmt("max deviation from closed form %.1e, ", worst_closed) +
                  fmt("constant lambda: max lhs %.1e, max rhs %.1e", flat_lhs, flat_rhs)};
}

Outcome recursion_bound() {
  const auto box = FeasibleSet::box(2, -1.0, 1.0);
  const auto s = Schedule::power_law(0.2, 1.0, 0.55, 0.1);
  EuclideanGenerator w(2);
  BilevelProblem det(make_least_squares(mat(1, 2, {1, 1}), vec({1})), make_elastic_net(0.5, 2), box);
  det.set_deterministic(true);
  RecursionOptions o;
  o.paths = 1;
  const std::uint64_t K = 100000;
  const auto d = recursion_bound_check(det, w, s, K, o);
  const BilevelProblem sto(make_least_squares(mat(2, 2, {1, 1, 1, 1}), vec({0, 2})), make_elastic_net(0.5, 2), box);
  o.paths = 15;
  const auto r = recursion_bound_check(sto, w, s, K, o);
  const bool ok = !d.tau_bound.rows.empty() && d.tau_bound.passed() && !r.tau_bound.rows.empty() &&
                  r.tau_bound.pass_fraction() >= 0.95;
  return {ok, fmt("deterministic: kbar %.0f, ", static_cast<double>(d.bound.kbar)) +
                  fmt("%.0f checkpoints all pass=", static_cast<double>(d.tau_bound.rows.size())) +
                  (d.tau_bound.passed() ? "yes" : "no") +
                  fmt("; 15 paths: %.0f%% of %.0f checkpoints pass (need >= 95%%)", 100.0 * r.tau_bound.pass_fraction(),
                      static_cast<double>(r.tau_bound.rows.size()))};
}

Outcome two_stage(const std::filesystem::path& data) {
  const auto compiled = compile(load_two_stage(data / "two_stage_toy.txt"));
  const BilevelProblem& p = compiled.problem;
  const auto grid = solve_bilevel_bruteforce(p, 101);
  EuclideanGenerator w(p.dimension());
  const auto s = Schedule::rate(0.1, 1.0, 1.0);
  RunOptions o;
  o.iterations = 2000000;
  o.evaluate_objectives = false;
  SampleSource src(1);
  const auto rep = run(p, w, s, Vector::Zero(static_cast<Eigen::Index>(p.dimension())), o, src);
  const double h = exact_h(p, rep.x_avg);
  const double f = exact_f(p, rep.x_avg);
  const double gap = std::abs(h - grid.h_star);
  return {gap <= 1e-2 && f <= 1e-4,
          fmt("objective %.5f vs grid %.5f (exact 0.12375), ", h, grid.h_star) + fmt("|gap| %.1e (tol 1e-2), E[F] %.1e (tol 1e-4)", gap, f)};
}

Outcome hinge_experiment() {
  const auto dir = scratch("hinge");
  auto cfg = parse_config_text(R"(
[problem]
kind = synthetic-hinge
rows = 5000
cols = 1000
nnz = 10
mu_h = 0.1
margin = 0.05
[schedule]
gamma0 = 5
lambda0 = 0.01
delta = 0.1
[run]
iterations = 100000
paths = 15
checkpoints = geometric
[reference]
f_star = 0
h_star = 0
)",
                               dir, {{"output.dir", dir.string()}});
  const auto ex = build_experiment(cfg);
  const auto res = run_experiment(cfg, ex, true);
  if (res.failed_paths() > 0) return {false, "a sample path failed"};
  const double mean_loss = res.aggregate.back().f_gap_mean;
  // Trend after burn-in: each path's loss must fall across the post-burn-in checkpoints
  // in at least 80% of consecutive pairs and end below its value at burn-in.
  const std::uint64_t burn_in = 1024;
  std::size_t trending = 0;
  for (const auto& rep : res.reports) {
    std::vector<double> tail;
    for (const auto& row : rep.trace)
      if (row.k >= burn_in) tail.push_back(row.f);
    std::size_t down = 0;
    for (std::size_t i = 1; i < tail.size(); ++i) down += tail[i] <= tail[i - 1] ? 1 : 0;
    if (tail.size() >= 2 && tail.back() < tail.front() && down >= 0.8 * static_cast<double>(tail.size() - 1)) ++trending;
  }
  const bool ok = mean_loss <= 0.1 && trending == res.reports.size();
  return {ok, fmt("mean hinge loss %.4f over 15 paths (need <= 0.1), ", mean_loss) +
                  fmt("%.0f/15 paths trend downward after k=1024", static_cast<double>(trending))};
}

Outcome determinism(const std::filesystem::path& data) {
  const auto dir = scratch("determinism");
  const std::string text = R"(
[problem]
kind = synthetic-least-squares
rows = 30
cols = 10
rank = 6
noise = 0.1
mu_h = 0.5
[schedule]
delta = 0.1
gamma0 = 0.5
lambda0 = 1
[run]
iterations = 20000
paths = 4
seed = 17
)";
  bool identical = true;
  auto c1 = parse_config_text(text, dir, {{"output.dir", (dir / "a").string()}});
  auto c2 = parse_config_text(text, dir, {{"output.dir", (dir / "b").string()}, {"run.threads", "1"}});
  run_experiment(c1);
  run_experiment(c2);
  for (int i = 0; i < 4; ++i) {
    const std::string name = "trace_path" + std::to_string(i) + ".csv";
    // elapsed_ms differs between runs; compare every other column bit for bit
    const auto ra = read_trace_csv(dir / "a" / name), rb = read_trace_csv(dir / "b" / name);
    identical = identical && ra.size() == rb.size();
    for (std::size_t j = 0; identical && j < ra.size(); ++j) {
      identical = ra[j].k == rb[j].k && ra[j].gamma == rb[j].gamma && ra[j].lambda == rb[j].lambda &&
                  ra[j].f_gap == rb[j].f_gap && ra[j].h_gap == rb[j].h_gap;
    }
  }
  SampleSource src(5);
  double worst = 0.0;
  const DenseMatrix a = gaussian_matrix(src, 12, 4);
  SparseMatrix hs = gaussian_matrix(src, 9, 4).sparseView();
  const auto compiled = compile(load_two_stage(data / "two_stage_toy.txt"));
  std::vector<std::pair<ObjectivePtr, std::size_t>> objs = {
      {make_least_squares(a, gaussian(src, 12)), 4},
      {make_least_squares(SparseMatrix(a.sparseView()), gaussian(src, 12)), 4},
      {make_hinge_elm(hs, vec({1, -1, 1, 1, -1, -1, 1, -1, 1})), 4},
      {compiled.problem.inner_ptr(), 3},
      {compiled.problem.outer_ptr(), 3}};
  for (const auto& [obj, n] : objs) {
    for (int t = 0; t < 200; ++t) {
      const Vector x = gaussian(src, static_cast<Eigen::Index>(n));
      Vector exact = Vector::Zero(static_cast<Eigen::Index>(n));
      obj->add_subgradient(x, 1.0, exact);
      worst = std::max(worst, (enumerate_scenario_subgradient(*obj, x) - exact).lpNorm<Eigen::Infinity>());
    }
  }
  return {identical && worst <= 1e-12, std::string("traces bit-identical: ") + (identical ? "yes" : "no") +
                                           fmt(", max |enumerated - exact| %.1e (tol 1e-12)", worst)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path data = argc > 1 ? argv[1] : "tests/data";
  criterion("ACC1", "geometry identities", 1, geometry_suite);
  criterion("ACC2", "averaging recursion vs closed form", 5, averaging_equivalence);
  criterion("ACC3", "schedule validators", 1, schedule_validators);
  criterion("ACC4", "feasibility-gap rate on rank-deficient least squares", 60, rate_reproduction);
  criterion("ACC5", "bilevel optimum on the n=2 toy", 30, bilevel_optimality);
  criterion("ACC6", "regularization-path bound", 5, path_bound);
  criterion("ACC7", "recursive expected-distance bound", 120, recursion_bound);
  criterion("ACC8", "two-stage program vs grid enumeration", 60, [&] { return two_stage(data); });
  criterion("ACC9", "hinge-loss experiment on synthetic sparse data", 120, hinge_experiment);
  criterion("ACC10", "determinism and unbiased enumeration", 30, [&] { return determinism(data); });
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
