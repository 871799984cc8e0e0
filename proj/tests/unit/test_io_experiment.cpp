#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

#include <Eigen/SVD>

#include "doctest.h"
#include "irsmd/error.hpp"
#include "irsmd/experiment.hpp"
#include "irsmd/io.hpp"
#include "toys.hpp"

using namespace irsmd;
using irsmd::test::vec;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "irsmd-unit" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::invalid_argument;
}

const char* kToy = R"(
[problem]
kind = synthetic-least-squares
rows = 8
cols = 5
rank = 3
mu_h = 0.5
[schedule]
delta = 0.1
gamma0 = 1
lambda0 = 1
[run]
iterations = 2000
paths = 3
deterministic = true
)";

}  // namespace

TEST_CASE("ini parsing") {
  const auto secs = parse_ini("# c\n[a]\nx = 1 # trailing\ny=two words\n[b]\n1 2 3\n");
  REQUIRE(secs.size() == 3);
  CHECK(secs[1].name == "a");
  CHECK(*secs[1].find("x") == "1");
  CHECK(*secs[1].find("y") == "two words");
  CHECK(secs[1].find("z") == nullptr);
  CHECK(secs[2].rows == std::vector<std::string>{"1 2 3"});
  CHECK_THROWS_AS(parse_ini("[a]\nx = 1\nx = 2\n"), Error);
  CHECK_THROWS_AS(parse_ini("[a\n"), Error);
}

TEST_CASE("scalar parsing") {
  CHECK(parse_double(" 1.5e-3 ", "v") == 1.5e-3);
  CHECK(parse_double("+2", "v") == 2.0);
  CHECK_THROWS_AS(parse_double("1.5x", "v"), Error);
  CHECK(parse_integer("1e6", "n") == 1000000);
  CHECK_THROWS_AS(parse_integer("1.5", "n"), Error);
  CHECK(parse_bool("yes", "b"));
  CHECK_FALSE(parse_bool("off", "b"));
  CHECK_THROWS_AS(parse_bool("maybe", "b"), Error);
  CHECK(parse_number_list("1, 2 3", "l") == std::vector<double>{1, 2, 3});
  const DenseMatrix m = parse_matrix("1 2; 3 4", "m");
  CHECK(m(1, 0) == 3.0);
  CHECK_THROWS_AS(parse_matrix("1 2; 3", "m"), Error);
}

TEST_CASE("format_double round-trips") {
  SampleSource src(2);
  for (int i = 0; i < 1000; ++i) {
    const double v = src.normal() * std::pow(10.0, static_cast<int>(src.uniform_index(40)) - 20);
    CHECK(parse_double(format_double(v), "v") == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(std::nan("")) == "nan");
}

TEST_CASE("dense csv") {
  const auto dir = scratch("csv");
  DenseMatrix m(2, 3);
  m << 1, 2.5, -3, 0.1, 1e-30, 7;
  write_dense_csv(dir / "m.csv", m);
  CHECK(read_dense_csv(dir / "m.csv") == m);
  write(dir / "v.csv", "1\n2\n3\n");
  CHECK(read_vector_csv(dir / "v.csv") == vec({1, 2, 3}));
  write(dir / "bad.csv", "1,2\n3\n");
  CHECK(code_of([&] { read_dense_csv(dir / "bad.csv"); }) == ErrorCode::parse);
  CHECK(code_of([&] { read_dense_csv(dir / "missing.csv"); }) == ErrorCode::io);
  CHECK_THROWS_AS(read_vector_csv(dir / "m.csv"), Error);
}

TEST_CASE("sparse datasets") {
  const auto d = parse_sparse_dataset("+1 1:0.5 3:2\n-1 2:1\n", 4);
  CHECK(d.features.rows() == 2);
  CHECK(d.features.cols() == 4);
  CHECK(d.features.coeff(0, 2) == 2.0);
  CHECK(d.labels == vec({1, -1}));
  CHECK_THROWS_AS(parse_sparse_dataset("1 3:1 2:1\n"), Error);
  CHECK_THROWS_AS(parse_sparse_dataset("1 0:1\n"), Error);
  CHECK_THROWS_AS(parse_sparse_dataset("0.5 1:1\n"), Error);
  CHECK(parse_sparse_dataset("0.5 1:1\n", 0, false).labels[0] == 0.5);
  const auto dir = scratch("sparse");
  write_sparse_dataset(dir / "d.txt", d);
  const auto back = read_sparse_dataset(dir / "d.txt", 4);
  CHECK(DenseMatrix(back.features) == DenseMatrix(d.features));
  CHECK(back.labels == d.labels);
}

TEST_CASE("config parsing") {
  const auto dir = scratch("cfg");
  const auto cfg = parse_config_text(kToy, dir);
  CHECK(cfg.kind == ProblemKind::synthetic_least_squares);
  CHECK(cfg.a == doctest::Approx(0.55));
  CHECK(cfg.b == doctest::Approx(0.4));
  CHECK(cfg.initial_product_ok);
  CHECK(cfg.convergence.passed());
  CHECK_FALSE(cfg.rate_bound.passed());

  CHECK(code_of([&] { parse_config_text(std::string(kToy) + "time_budget = 5\n", dir); }) == ErrorCode::parse);
  CHECK(code_of([&] { parse_config_text(kToy, dir, {{"schedule.a", "0.6"}}); }) == ErrorCode::parse);
  CHECK(code_of([&] { parse_config_text(kToy, dir, {{"run.bogus", "1"}}); }) == ErrorCode::parse);
  CHECK(code_of([&] { parse_config_text(kToy, dir, {{"run.paths", "0"}}); }) == ErrorCode::parse);
  CHECK(code_of([&] { parse_config_text(kToy, dir, {{"schedule.gamma0", "10"}, {"problem.mu_h", "1"}}); }) ==
        ErrorCode::validation);
  const auto forced =
      parse_config_text(kToy, dir, {{"schedule.gamma0", "10"}, {"problem.mu_h", "1"}, {"run.override_validation", "true"}});
  CHECK_FALSE(forced.initial_product_ok);
  CHECK_FALSE(forced.warnings.empty());
  CHECK(parse_config_text(kToy, dir, {{"run.paths", "15"}}).paths == 15);
  CHECK(code_of([&] { parse_config_text("[problem]\nkind = least-squares\nmatrix = a.csv\nrhs = b.csv\n[schedule]\ndelta = 0.1\n[run]\niterations = 5\n", dir); }) ==
        ErrorCode::io);
  CHECK(code_of([&] { parse_config(dir / "nope.ini"); }) == ErrorCode::io);
}

TEST_CASE("experiment artifacts and determinism") {
  const auto dir = scratch("exp");
  auto cfg = parse_config_text(kToy, dir, {{"output.dir", (dir / "a").string()}});
  const auto r1 = run_experiment(cfg);
  CHECK(r1.failed_paths() == 0);
  for (const char* f : {"trace_path0.csv", "trace_path2.csv", "aggregate.csv", "summary.txt", "f_gap.dat"}) {
    CHECK(std::filesystem::exists(dir / "a" / f));
  }
  auto cfg2 = parse_config_text(kToy, dir, {{"output.dir", (dir / "b").string()}});
  const auto r2 = run_experiment(cfg2);
  REQUIRE(r1.aggregate.size() == r2.aggregate.size());
  for (std::size_t i = 0; i < r1.aggregate.size(); ++i) {
    CHECK(r1.aggregate[i].f_gap_mean == r2.aggregate[i].f_gap_mean);
    CHECK(r1.aggregate[i].h_gap_se == r2.aggregate[i].h_gap_se);
  }
  const auto rows = read_trace_csv(dir / "a" / "trace_path1.csv");
  write_trace_csv(dir / "copy.csv", rows);
  const auto again = read_trace_csv(dir / "copy.csv");
  REQUIRE(rows.size() == again.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].k == again[i].k);
    CHECK(rows[i].f_gap == again[i].f_gap);
    CHECK(rows[i].elapsed_ms == again[i].elapsed_ms);
  }
  std::ifstream in(dir / "a" / "trace_path0.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == kTraceHeader);
  CHECK(r1.summary.count("final.f_gap_mean") == 1);
}

TEST_CASE("adding paths leaves existing paths unchanged") {
  const auto dir = scratch("paths");
  auto few = parse_config_text(kToy, dir, {{"run.deterministic", "false"}, {"run.paths", "2"}});
  auto many = parse_config_text(kToy, dir, {{"run.deterministic", "false"}, {"run.paths", "4"}});
  const auto ex1 = build_experiment(few);
  const auto ex2 = build_experiment(many);
  const auto r1 = run_experiment(few, ex1, false);
  const auto r2 = run_experiment(many, ex2, false);
  for (std::size_t i = 0; i < 2; ++i) CHECK(r1.reports[i].x_avg == r2.reports[i].x_avg);
}

TEST_CASE("time budget mode") {
  const auto dir = scratch("budget");
  auto cfg = parse_config_text(
      "[problem]\nkind = synthetic-least-squares\nrows = 20\ncols = 10\nmu_h = 0.5\n[schedule]\ndelta = 0.1\n"
      "[run]\ntime_budget = 0.3\npaths = 2\nthreads = 1\n[reference]\nh_star = 0\n",
      dir);
  const auto ex = build_experiment(cfg);
  const auto r = run_experiment(cfg, ex, false);
  for (const auto& rep : r.reports) CHECK(rep.elapsed_ms < 300.0 + 50.0);
}

TEST_CASE("rate fit") {
  std::vector<std::pair<double, double>> pts;
  for (double k : {1e1, 1e2, 1e3, 1e4, 1e5, 1e6}) pts.emplace_back(k, std::pow(k, -0.4));
  CHECK(fit_rate(pts).slope == doctest::Approx(-0.4).epsilon(1e-9));
  CHECK(fit_rate(pts, 1.0).points == 6);
  CHECK(fit_rate(pts, 0.5).points == 3);
  std::vector<std::pair<double, double>> flat;
  for (double k : {1.0, 2.0, 4.0, 8.0}) flat.emplace_back(k, 0.3);
  CHECK(fit_rate(flat).slope == doctest::Approx(0.0));
  flat[1].second = 0.0;
  CHECK_THROWS_AS(fit_rate(flat), Error);

  const auto dir = scratch("fit");
  std::vector<AggregateRow> agg;
  for (std::uint64_t k : {10u, 100u, 1000u, 10000u}) agg.push_back({k, std::pow(k, -0.4), 0.0, 1.0, 0.0, 1});
  write_aggregate_csv(dir / "aggregate.csv", agg);
  CHECK(emit_rate_fit(dir / "aggregate.csv", "f_gap_mean", 1.0).slope == doctest::Approx(-0.4).epsilon(1e-9));
  CHECK_THROWS_AS(emit_rate_fit(dir / "aggregate.csv", "nope"), Error);
}

TEST_CASE("synthetic generators") {
  SyntheticParams p;
  p.rows = 10;
  p.cols = 5;
  p.rank = 3;
  const auto [a, b] = make_synthetic_least_squares(p);
  Eigen::JacobiSVD<DenseMatrix> svd(a);
  CHECK(svd.singularValues()[0] == doctest::Approx(1.0));
  CHECK(svd.singularValues()[3] <= 1e-12);
  SyntheticParams h;
  h.rows = 200;
  h.cols = 50;
  h.nnz = 5;
  const auto d = make_synthetic_hinge(h);
  CHECK(d.features.rows() == 200);
  for (Eigen::Index i = 0; i < d.features.rows(); ++i) {
    CHECK(d.features.row(i).norm() == doctest::Approx(1.0));
    CHECK(d.features.row(i).nonZeros() == 5);
  }
}
