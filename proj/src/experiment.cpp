#include "irsmd/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <Eigen/QR>

#include "irsmd/error.hpp"
#include "irsmd/parallel.hpp"
#include "irsmd/reference.hpp"

namespace irsmd {

namespace {

using Clock = std::chrono::steady_clock;

// Section -> key -> value, with a record of which keys were consumed.
class KeyTable {
 public:
  void set(const std::string& section, const std::string& key, const std::string& value) {
    values_[section][key] = value;
  }

  const std::string* get(const std::string& section, const std::string& key) {
    auto s = values_.find(section);
    if (s == values_.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    used_.insert(section + "." + key);
    return &k->second;
  }

  bool has(const std::string& section, const std::string& key) const {
    auto s = values_.find(section);
    return s != values_.end() && s->second.count(key) > 0;
  }

  bool has_section(const std::string& section) const { return values_.count(section) > 0; }

  void reject_unused() const {
    for (const auto& [section, keys] : values_) {
      for (const auto& [key, value] : keys) {
        if (!used_.count(section + "." + key)) fail(ErrorCode::parse, "config: unknown key [" + section + "] " + key);
      }
    }
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> values_;
  std::set<std::string> used_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  return p.is_absolute() ? p : base / p;
}

void require_file(const std::filesystem::path& p, const std::string& what) {
  if (!std::filesystem::exists(p)) fail(ErrorCode::io, "config: " + what + " file not found: " + p.string());
}

ProblemKind parse_kind(const std::string& v) {
  if (v == "least-squares") return ProblemKind::least_squares;
  if (v == "hinge") return ProblemKind::hinge;
  if (v == "two-stage") return ProblemKind::two_stage;
  if (v == "synthetic-least-squares") return ProblemKind::synthetic_least_squares;
  if (v == "synthetic-hinge") return ProblemKind::synthetic_hinge;
  fail(ErrorCode::parse, "config: unknown problem kind '" + v + "'");
}

std::size_t parse_count(const std::string& v, const std::string& what) {
  const long long n = parse_integer(v, what);
  if (n < 0) fail(ErrorCode::parse, what + " must be nonnegative");
  return static_cast<std::size_t>(n);
}

Vector broadcast(const std::vector<double>& v, std::size_t n, const std::string& what) {
  if (v.size() == 1) return Vector::Constant(static_cast<Eigen::Index>(n), v[0]);
  if (v.size() != n) {
    fail(ErrorCode::dimension_mismatch, "config: " + what + " has " + std::to_string(v.size()) + " entries, expected " +
                                            std::to_string(n));
  }
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(n));
}

FeasibleSet make_set(const RunConfig& cfg, std::size_t n) {
  if (cfg.set == "whole") return FeasibleSet::whole_space(n);
  if (cfg.set == "box") return FeasibleSet::box(broadcast(cfg.lower, n, "lower"), broadcast(cfg.upper, n, "upper"));
  if (cfg.set == "ball") {
    const Vector c = cfg.center.empty() ? Vector::Zero(static_cast<Eigen::Index>(n)) : broadcast(cfg.center, n, "center");
    return FeasibleSet::ball(c, cfg.radius);
  }
  fail(ErrorCode::parse, "config: unknown set '" + cfg.set + "'");
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double standard_error(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string bool_text(bool v) { return v ? "true" : "false"; }

}  // namespace

Schedule RunConfig::schedule() const {
  if (delta) return Schedule::rate(*delta, gamma0, lambda0, r);
  return Schedule::power_law(gamma0, lambda0, a, b, r);
}

RunConfig parse_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  require_file(path, "configuration");
  return parse_config_text(read_text_file(path), path.parent_path(), overrides);
}

RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir,
                            const ConfigOverrides& overrides) {
  KeyTable t;
  std::set<std::string> seen;
  for (const auto& sec : parse_ini(text)) {
    if (sec.name.empty()) {
      if (!sec.entries.empty() || !sec.rows.empty()) fail(ErrorCode::parse, "config: keys before the first section");
      continue;
    }
    if (!seen.insert(sec.name).second) fail(ErrorCode::parse, "config: section [" + sec.name + "] given twice");
    if (!sec.rows.empty()) fail(ErrorCode::parse, "config: [" + sec.name + "] line without '=': " + sec.rows.front());
    for (const auto& [k, v] : sec.entries) t.set(sec.name, k, v);
  }
  for (const auto& [dotted, value] : overrides) {
    const auto dot = dotted.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == dotted.size()) {
      fail(ErrorCode::parse, "config override '" + dotted + "' must look like section.key");
    }
    t.set(dotted.substr(0, dot), dotted.substr(dot + 1), value);
  }

  RunConfig cfg;
  const std::filesystem::path base = base_dir.empty() ? std::filesystem::path(".") : base_dir;

  // [problem]
  const std::string* kind = t.get("problem", "kind");
  if (!kind) fail(ErrorCode::parse, "config: [problem] kind is required");
  cfg.kind = parse_kind(*kind);
  if (auto v = t.get("problem", "matrix")) cfg.matrix = resolve(base, *v);
  if (auto v = t.get("problem", "rhs")) cfg.rhs = resolve(base, *v);
  if (auto v = t.get("problem", "data")) cfg.data = resolve(base, *v);
  if (auto v = t.get("problem", "twostage")) cfg.twostage = resolve(base, *v);
  if (auto v = t.get("problem", "features")) cfg.features = parse_count(*v, "[problem] features");
  if (auto v = t.get("problem", "mu_h")) {
    if (cfg.kind == ProblemKind::two_stage) fail(ErrorCode::parse, "config: mu_h is derived from the two-stage file");
    cfg.mu_h = parse_double(*v, "[problem] mu_h");
    if (!(cfg.mu_h > 0.0)) fail(ErrorCode::parse, "config: mu_h must be positive");
  }
  if (auto v = t.get("problem", "rows")) cfg.synthetic.rows = parse_count(*v, "[problem] rows");
  if (auto v = t.get("problem", "cols")) cfg.synthetic.cols = parse_count(*v, "[problem] cols");
  if (auto v = t.get("problem", "rank")) cfg.synthetic.rank = parse_count(*v, "[problem] rank");
  if (auto v = t.get("problem", "nnz")) cfg.synthetic.nnz = parse_count(*v, "[problem] nnz");
  if (auto v = t.get("problem", "noise")) cfg.synthetic.noise = parse_double(*v, "[problem] noise");
  if (auto v = t.get("problem", "margin")) cfg.synthetic.margin = parse_double(*v, "[problem] margin");
  if (auto v = t.get("problem", "generator_seed")) {
    cfg.synthetic.seed = static_cast<std::uint64_t>(parse_integer(*v, "[problem] generator_seed"));
  }

  switch (cfg.kind) {
    case ProblemKind::least_squares:
      if (!cfg.data.empty()) {
        require_file(cfg.data, "data");
      } else {
        if (cfg.matrix.empty() || cfg.rhs.empty()) {
          fail(ErrorCode::parse, "config: least-squares needs matrix and rhs (dense CSV) or data (sparse)");
        }
        require_file(cfg.matrix, "matrix");
        require_file(cfg.rhs, "rhs");
      }
      break;
    case ProblemKind::hinge:
      if (cfg.data.empty()) fail(ErrorCode::parse, "config: hinge needs a data file");
      require_file(cfg.data, "data");
      break;
    case ProblemKind::two_stage:
      if (cfg.twostage.empty()) fail(ErrorCode::parse, "config: two-stage needs a twostage file");
      require_file(cfg.twostage, "twostage");
      break;
    case ProblemKind::synthetic_least_squares:
    case ProblemKind::synthetic_hinge:
      if (cfg.synthetic.rows == 0 || cfg.synthetic.cols == 0) {
        fail(ErrorCode::parse, "config: synthetic problems need rows and cols");
      }
      break;
  }

  // [schedule]
  const bool has_ab = t.has("schedule", "a") || t.has("schedule", "b");
  if (t.has("schedule", "delta") && has_ab) fail(ErrorCode::parse, "config: give delta or a/b, not both");
  if (auto v = t.get("schedule", "gamma0")) cfg.gamma0 = parse_double(*v, "[schedule] gamma0");
  if (auto v = t.get("schedule", "lambda0")) cfg.lambda0 = parse_double(*v, "[schedule] lambda0");
  if (auto v = t.get("schedule", "r")) cfg.r = parse_double(*v, "[schedule] r");
  if (auto v = t.get("schedule", "delta")) {
    cfg.delta = parse_double(*v, "[schedule] delta");
  } else {
    if (!t.has("schedule", "a") || !t.has("schedule", "b")) fail(ErrorCode::parse, "config: [schedule] needs delta or both a and b");
    cfg.a = parse_double(*t.get("schedule", "a"), "[schedule] a");
    cfg.b = parse_double(*t.get("schedule", "b"), "[schedule] b");
  }
  const Schedule sched = cfg.schedule();
  cfg.a = sched.a();
  cfg.b = sched.b();

  // [domain]
  if (auto v = t.get("domain", "set")) cfg.set = *v;
  if (auto v = t.get("domain", "lower")) cfg.lower = parse_number_list(*v, "[domain] lower");
  if (auto v = t.get("domain", "upper")) cfg.upper = parse_number_list(*v, "[domain] upper");
  if (auto v = t.get("domain", "center")) cfg.center = parse_number_list(*v, "[domain] center");
  if (auto v = t.get("domain", "radius")) cfg.radius = parse_double(*v, "[domain] radius");
  if (cfg.kind == ProblemKind::two_stage && t.has_section("domain")) {
    fail(ErrorCode::parse, "config: the two-stage file defines the domain; remove [domain]");
  }
  if (cfg.set != "whole" && cfg.set != "box" && cfg.set != "ball") fail(ErrorCode::parse, "config: unknown set '" + cfg.set + "'");
  if (cfg.set == "box" && (cfg.lower.empty() || cfg.upper.empty())) fail(ErrorCode::parse, "config: box needs lower and upper");

  // [run]
  if (auto v = t.get("run", "x0")) cfg.x0 = *v;
  if (cfg.x0 != "zero" && cfg.x0.rfind("const:", 0) != 0) {
    cfg.x0 = resolve(base, cfg.x0).string();
    require_file(cfg.x0, "x0");
  } else if (cfg.x0.rfind("const:", 0) == 0) {
    parse_double(cfg.x0.substr(6), "[run] x0");
  }
  if (auto v = t.get("run", "iterations")) {
    const long long n = parse_integer(*v, "[run] iterations");
    if (n < 1) fail(ErrorCode::parse, "config: iterations must be at least 1");
    cfg.iterations = static_cast<std::uint64_t>(n);
  }
  if (auto v = t.get("run", "time_budget")) {
    cfg.time_budget_seconds = parse_double(*v, "[run] time_budget");
    if (!(*cfg.time_budget_seconds > 0.0)) fail(ErrorCode::parse, "config: time_budget must be positive");
  }
  if (cfg.iterations.has_value() == cfg.time_budget_seconds.has_value()) {
    fail(ErrorCode::parse, "config: give exactly one of [run] iterations and time_budget");
  }
  if (auto v = t.get("run", "paths")) {
    const long long n = parse_integer(*v, "[run] paths");
    if (n < 1) fail(ErrorCode::parse, "config: paths must be at least 1");
    cfg.paths = static_cast<std::size_t>(n);
  }
  if (auto v = t.get("run", "seed")) cfg.seed = static_cast<std::uint64_t>(parse_integer(*v, "[run] seed"));
  if (auto v = t.get("run", "checkpoints")) {
    if (*v == "geometric") {
      cfg.checkpoints = CheckpointPolicy::geometric;
    } else if (*v == "every") {
      cfg.checkpoints = CheckpointPolicy::every;
    } else {
      cfg.checkpoints = CheckpointPolicy::explicit_list;
      for (double d : parse_number_list(*v, "[run] checkpoints")) {
        if (d < 0 || d != std::floor(d)) fail(ErrorCode::parse, "config: checkpoints must be nonnegative integers");
        cfg.checkpoint_list.push_back(static_cast<std::uint64_t>(d));
      }
      std::sort(cfg.checkpoint_list.begin(), cfg.checkpoint_list.end());
    }
  }
  if (auto v = t.get("run", "threads")) cfg.threads = parse_count(*v, "[run] threads");
  if (auto v = t.get("run", "deterministic")) cfg.deterministic = parse_bool(*v, "[run] deterministic");
  if (auto v = t.get("run", "override_validation")) cfg.override_validation = parse_bool(*v, "[run] override_validation");
  if (auto v = t.get("run", "eval_subsample")) cfg.eval_subsample = parse_count(*v, "[run] eval_subsample");

  // [reference]
  if (auto v = t.get("reference", "f_star")) cfg.f_star = parse_double(*v, "[reference] f_star");
  if (auto v = t.get("reference", "h_star")) cfg.h_star = parse_double(*v, "[reference] h_star");
  if (auto v = t.get("reference", "grid_resolution")) cfg.grid_resolution = parse_count(*v, "[reference] grid_resolution");
  if (auto v = t.get("reference", "budget")) cfg.reference_budget = parse_count(*v, "[reference] budget");
  if (auto v = t.get("reference", "tol")) cfg.reference_tol = parse_double(*v, "[reference] tol");

  // [output]
  if (auto v = t.get("output", "dir")) cfg.output_dir = resolve(base, *v);
  if (auto v = t.get("output", "plot")) cfg.plot_data = parse_bool(*v, "[output] plot");
  t.reject_unused();

  double mu_h = cfg.mu_h;
  if (cfg.kind == ProblemKind::two_stage) mu_h = compile(load_two_stage(cfg.twostage)).problem.mu_h();
  cfg.convergence = validate_convergence_conditions(sched);
  cfg.rate_bound = validate_rate_bound_conditions(sched);
  cfg.initial_product_ok = check_initial_product(sched, 1.0, mu_h);
  if (!cfg.initial_product_ok) {
    const std::string msg = "gamma0 * lambda0 = " + format_double(cfg.gamma0 * cfg.lambda0) + " exceeds L_omega / mu_h = " +
                            format_double(1.0 / mu_h);
    if (!cfg.override_validation) fail(ErrorCode::validation, "config: " + msg + " (use override_validation)");
    cfg.warnings.push_back(msg + "; continuing because validation is overridden");
  }
  if (!cfg.convergence.passed()) cfg.warnings.push_back("schedule: " + cfg.convergence.to_string());
  return cfg;
}

// ---------------------------------------------------------------------------

Experiment build_experiment(const RunConfig& cfg) {
  const Schedule sched = cfg.schedule();
  std::shared_ptr<BilevelProblem> problem;
  std::shared_ptr<CompiledBilevel> two_stage;
  ObjectivePtr inner;
  switch (cfg.kind) {
    case ProblemKind::least_squares:
      if (!cfg.data.empty()) {
        auto ds = read_sparse_dataset(cfg.data, cfg.features, false);
        inner = make_least_squares(std::move(ds.features), std::move(ds.labels));
      } else {
        DenseMatrix a = read_dense_csv(cfg.matrix);
        Vector b = read_vector_csv(cfg.rhs);
        inner = make_least_squares(std::move(a), std::move(b));
      }
      break;
    case ProblemKind::hinge: {
      auto ds = read_sparse_dataset(cfg.data, cfg.features, true);
      inner = make_hinge_elm(std::move(ds.features), std::move(ds.labels));
      break;
    }
    case ProblemKind::synthetic_least_squares: {
      auto [a, b] = make_synthetic_least_squares(cfg.synthetic);
      inner = make_least_squares(std::move(a), std::move(b));
      break;
    }
    case ProblemKind::synthetic_hinge: {
      auto ds = make_synthetic_hinge(cfg.synthetic);
      inner = make_hinge_elm(std::move(ds.features), std::move(ds.labels));
      break;
    }
    case ProblemKind::two_stage:
      two_stage = std::make_shared<CompiledBilevel>(compile(load_two_stage(cfg.twostage)));
      break;
  }
  if (two_stage) {
    problem = std::shared_ptr<BilevelProblem>(two_stage, &two_stage->problem);
  } else {
    const std::size_t n = inner->dimension();
    problem = std::make_shared<BilevelProblem>(inner, make_elastic_net(cfg.mu_h, n), make_set(cfg, n));
  }
  problem->set_deterministic(cfg.deterministic);
  const std::size_t n = problem->dimension();

  Vector x0;
  if (cfg.x0 == "zero") {
    x0 = Vector::Zero(static_cast<Eigen::Index>(n));
  } else if (cfg.x0.rfind("const:", 0) == 0) {
    x0 = Vector::Constant(static_cast<Eigen::Index>(n), parse_double(cfg.x0.substr(6), "[run] x0"));
  } else {
    x0 = read_vector_csv(cfg.x0);
    require_dimension(static_cast<std::size_t>(x0.size()), n, "x0 file");
  }
  return Experiment{problem, two_stage, std::make_shared<EuclideanGenerator>(n), sched, std::move(x0)};
}

// ---------------------------------------------------------------------------

std::size_t ExperimentResult::failed_paths() const {
  return static_cast<std::size_t>(std::count_if(path_errors.begin(), path_errors.end(), [](const std::string& e) { return !e.empty(); }));
}

std::vector<TraceCsvRow> trace_rows(const RunReport& rep, double f_star, double h_star) {
  std::vector<TraceCsvRow> rows;
  rows.reserve(rep.trace.size());
  for (const auto& t : rep.trace) {
    rows.push_back({t.k, t.gamma, t.lambda, std::abs(t.f - f_star), std::abs(t.h - h_star), t.elapsed_ms});
  }
  return rows;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceCsvRow>& rows) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write file: " + path.string());
  out << kTraceHeader << '\n';
  for (const auto& r : rows) {
    out << r.k << ',' << format_double(r.gamma) << ',' << format_double(r.lambda) << ',' << format_double(r.f_gap) << ','
        << format_double(r.h_gap) << ',' << format_double(r.elapsed_ms) << '\n';
  }
}

std::vector<TraceCsvRow> read_trace_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || trim(line) != kTraceHeader) {
    fail(ErrorCode::parse, path.string() + ": expected header '" + kTraceHeader + "'");
  }
  std::vector<TraceCsvRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 6) fail(ErrorCode::parse, path.string() + ": expected 6 columns");
    const auto num = [&](std::size_t i) {
      if (c[i] == "nan") return std::numeric_limits<double>::quiet_NaN();
      if (c[i] == "inf") return std::numeric_limits<double>::infinity();
      return parse_double(c[i], path.string());
    };
    rows.push_back({static_cast<std::uint64_t>(parse_integer(c[0], path.string())), num(1), num(2), num(3), num(4), num(5)});
  }
  return rows;
}

void write_aggregate_csv(const std::filesystem::path& path, const std::vector<AggregateRow>& rows) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write file: " + path.string());
  out << "k,f_gap_mean,f_gap_se,h_gap_mean,h_gap_se,paths\n";
  for (const auto& r : rows) {
    out << r.k << ',' << format_double(r.f_gap_mean) << ',' << format_double(r.f_gap_se) << ','
        << format_double(r.h_gap_mean) << ',' << format_double(r.h_gap_se) << ',' << r.paths << '\n';
  }
}

std::vector<AggregateRow> read_aggregate_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || trim(line) != "k,f_gap_mean,f_gap_se,h_gap_mean,h_gap_se,paths") {
    fail(ErrorCode::parse, path.string() + ": not an aggregate CSV");
  }
  std::vector<AggregateRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 6) fail(ErrorCode::parse, path.string() + ": expected 6 columns");
    const auto num = [&](std::size_t i) {
      return c[i] == "nan" ? std::numeric_limits<double>::quiet_NaN() : parse_double(c[i], path.string());
    };
    rows.push_back({static_cast<std::uint64_t>(parse_integer(c[0], path.string())), num(1), num(2), num(3), num(4),
                    static_cast<std::size_t>(parse_integer(c[5], path.string()))});
  }
  return rows;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& k_gap, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) fail(ErrorCode::invalid_argument, "rate fit: tail fraction must lie in (0, 1]");
  std::vector<std::pair<double, double>> pts;
  for (const auto& [k, gap] : k_gap) {
    if (k > 0.0 && gap > 0.0 && std::isfinite(gap)) pts.emplace_back(std::log(k), std::log(gap));
  }
  if (pts.size() < 4) {
    fail(ErrorCode::invalid_argument, "rate fit: need at least 4 checkpoints with positive gaps, have " + std::to_string(pts.size()));
  }
  std::sort(pts.begin(), pts.end());
  const auto keep = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(pts.size()))));
  pts.erase(pts.begin(), pts.end() - static_cast<std::ptrdiff_t>(keep));
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0) fail(ErrorCode::invalid_argument, "rate fit: checkpoints must be distinct");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.points = pts.size();
  return fit;
}

RateFit emit_rate_fit(const std::filesystem::path& aggregate_csv, const std::string& column, double tail_fraction) {
  if (column != "f_gap_mean" && column != "h_gap_mean") fail(ErrorCode::invalid_argument, "rate fit: unknown column '" + column + "'");
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : read_aggregate_csv(aggregate_csv)) {
    pts.emplace_back(static_cast<double>(r.k), column == "f_gap_mean" ? r.f_gap_mean : r.h_gap_mean);
  }
  return fit_rate(pts, tail_fraction);
}

// ---------------------------------------------------------------------------

std::pair<DenseMatrix, Vector> make_synthetic_least_squares(const SyntheticParams& p) {
  if (p.rows == 0 || p.cols == 0) fail(ErrorCode::invalid_argument, "synthetic least squares: rows and cols must be positive");
  const std::size_t full = std::min(p.rows, p.cols);
  const std::size_t rank = p.rank == 0 ? full : p.rank;
  if (rank > full) fail(ErrorCode::invalid_argument, "synthetic least squares: rank exceeds min(rows, cols)");
  SampleSource src(p.seed);
  auto gaussian = [&](std::size_t r, std::size_t c) {
    DenseMatrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = src.normal();
    }
    return m;
  };
  const auto rk = static_cast<Eigen::Index>(rank);
  const DenseMatrix u = Eigen::HouseholderQR<DenseMatrix>(gaussian(p.rows, rank)).householderQ() *
                        DenseMatrix::Identity(static_cast<Eigen::Index>(p.rows), rk);
  const DenseMatrix v = Eigen::HouseholderQR<DenseMatrix>(gaussian(p.cols, rank)).householderQ() *
                        DenseMatrix::Identity(static_cast<Eigen::Index>(p.cols), rk);
  Vector sigma(rk);
  for (Eigen::Index j = 0; j < rk; ++j) sigma[j] = 1.0 / static_cast<double>(j + 1);
  DenseMatrix a = u * sigma.asDiagonal() * v.transpose();
  const Vector x_true = gaussian(p.cols, 1).col(0);
  Vector b = a * x_true;
  if (p.noise != 0.0) b += p.noise * gaussian(p.rows, 1).col(0);
  return {std::move(a), std::move(b)};
}

SparseDataset make_synthetic_hinge(const SyntheticParams& p) {
  if (p.rows == 0 || p.cols == 0) fail(ErrorCode::invalid_argument, "synthetic hinge: rows and cols must be positive");
  if (p.nnz == 0 || p.nnz > p.cols) fail(ErrorCode::invalid_argument, "synthetic hinge: nnz must lie in [1, cols]");
  if (!(p.margin >= 0.0 && p.margin < 1.0)) fail(ErrorCode::invalid_argument, "synthetic hinge: margin must lie in [0, 1)");
  SampleSource src(p.seed);
  Vector w(static_cast<Eigen::Index>(p.cols));
  for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = src.normal();
  w.normalize();

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(p.rows * p.nnz);
  Vector labels(static_cast<Eigen::Index>(p.rows));
  std::vector<std::size_t> perm(p.cols);
  std::vector<double> vals(p.nnz);
  const std::uint64_t max_attempts = 1000000;
  for (std::size_t i = 0; i < p.rows; ++i) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (attempt == max_attempts) fail(ErrorCode::invalid_argument, "synthetic hinge: margin filter rejects every draw");
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      for (std::size_t t = 0; t < p.nnz; ++t) std::swap(perm[t], perm[t + src.uniform_index(p.cols - t)]);
      double norm = 0.0, dot = 0.0;
      for (std::size_t t = 0; t < p.nnz; ++t) {
        vals[t] = src.normal();
        norm += vals[t] * vals[t];
      }
      norm = std::sqrt(norm);
      for (std::size_t t = 0; t < p.nnz; ++t) dot += vals[t] / norm * w[static_cast<Eigen::Index>(perm[t])];
      if (std::abs(dot) < p.margin || dot == 0.0) continue;
      std::vector<std::pair<std::size_t, double>> row;
      for (std::size_t t = 0; t < p.nnz; ++t) row.emplace_back(perm[t], vals[t] / norm);
      std::sort(row.begin(), row.end());
      for (const auto& [j, v] : row) triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
      labels[static_cast<Eigen::Index>(i)] = dot > 0.0 ? 1.0 : -1.0;
      break;
    }
  }
  SparseDataset ds;
  ds.features.resize(static_cast<Eigen::Index>(p.rows), static_cast<Eigen::Index>(p.cols));
  ds.features.setFromTriplets(triplets.begin(), triplets.end());
  ds.features.makeCompressed();
  ds.labels = std::move(labels);
  return ds;
}

// ---------------------------------------------------------------------------

ExperimentResult run_experiment(const RunConfig& cfg) {
  const Experiment ex = build_experiment(cfg);
  return run_experiment(cfg, ex, true);
}

ExperimentResult run_experiment(const RunConfig& cfg, const Experiment& ex, bool write) {
  const auto start = Clock::now();
  const BilevelProblem& p = *ex.problem;
  ExperimentResult res;

  // Reference values for the gaps.
  if (cfg.f_star) {
    res.f_star = *cfg.f_star;
    res.f_star_source = "configured";
  } else {
    InnerOptions io;
    io.budget = cfg.reference_budget;
    io.tol = cfg.reference_tol;
    const InnerSolution inner = solve_inner(p, io);
    res.f_star = inner.f_star;
    res.f_star_source = inner.certified ? "reference:" + inner.method : "best-known:" + inner.method;
  }
  if (cfg.h_star) {
    res.h_star = *cfg.h_star;
    res.h_star_source = "configured";
  } else if (p.dimension() <= 3 && p.set().compact() && cfg.grid_resolution >= 2) {
    const auto bf = solve_bilevel_bruteforce(p, cfg.grid_resolution);
    res.h_star = bf.h_star;
    res.h_star_source = "grid:" + std::to_string(cfg.grid_resolution);
  } else {
    const double lam = ex.schedule.lambda(cfg.iterations.value_or(1000000));
    RegularizedOptions ro;
    ro.budget = cfg.reference_budget;
    ro.tol = cfg.reference_tol;
    const auto sol = solve_regularized(p, lam, ro);
    res.h_star = p.outer().value(sol.x);
    res.h_star_source = "regularized-proxy:lambda=" + format_double(lam);
  }

  RunOptions ro;
  ro.iterations = cfg.iterations;
  ro.time_budget_seconds = cfg.time_budget_seconds;
  ro.checkpoints = cfg.checkpoints;
  ro.checkpoint_list = cfg.checkpoint_list;
  ro.override_validation = cfg.override_validation;
  const auto& f = p.inner();
  std::vector<std::size_t> subsample;
  if (cfg.eval_subsample > 0 && cfg.eval_subsample < f.support_size()) {
    // One fixed evaluation subsample shared by every path.
    SampleSource pick(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> all(f.support_size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (std::size_t t = 0; t < cfg.eval_subsample; ++t) std::swap(all[t], all[t + pick.uniform_index(all.size() - t)]);
    subsample.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(cfg.eval_subsample));
    std::sort(subsample.begin(), subsample.end());
    ro.evaluator = [&p, &subsample](const Vector& x) {
      const auto& dist = p.inner().distribution();
      double acc = 0.0, mass = 0.0;
      for (std::size_t i : subsample) {
        acc += dist.probability(i) * p.inner().scenario_value(x, i);
        mass += dist.probability(i);
      }
      return std::make_pair(acc / mass, p.outer().value(x));
    };
  }

  res.reports.resize(cfg.paths);
  res.path_errors.assign(cfg.paths, std::string());
  parallel_for(cfg.paths, cfg.threads, [&](std::size_t i) {
    try {
      SampleSource src(cfg.seed + i);
      IrSmdSolver solver(p, *ex.dgf, ex.schedule);
      res.reports[i] = solver.run(ex.x0, ro, src);
    } catch (const std::exception& e) {
      res.path_errors[i] = e.what();
      res.reports[i] = RunReport{};
    }
  });

  std::map<std::uint64_t, std::pair<std::vector<double>, std::vector<double>>> by_k;
  for (std::size_t i = 0; i < cfg.paths; ++i) {
    if (!res.path_errors[i].empty()) continue;
    for (const auto& row : trace_rows(res.reports[i], res.f_star, res.h_star)) {
      by_k[row.k].first.push_back(row.f_gap);
      by_k[row.k].second.push_back(row.h_gap);
    }
  }
  for (const auto& [k, gaps] : by_k) {
    AggregateRow row;
    row.k = k;
    row.paths = gaps.first.size();
    row.f_gap_mean = mean_of(gaps.first);
    row.f_gap_se = standard_error(gaps.first, row.f_gap_mean);
    row.h_gap_mean = mean_of(gaps.second);
    row.h_gap_se = standard_error(gaps.second, row.h_gap_mean);
    res.aggregate.push_back(row);
  }

  auto& s = res.summary;
  static const char* kinds[] = {"least-squares", "hinge", "two-stage", "synthetic-least-squares", "synthetic-hinge"};
  s["problem.kind"] = kinds[static_cast<int>(cfg.kind)];
  s["problem.dimension"] = std::to_string(p.dimension());
  s["problem.mu_h"] = format_double(p.mu_h());
  s["schedule.gamma0"] = format_double(ex.schedule.gamma0());
  s["schedule.lambda0"] = format_double(ex.schedule.lambda0());
  s["schedule.a"] = format_double(ex.schedule.a());
  s["schedule.b"] = format_double(ex.schedule.b());
  s["schedule.r"] = format_double(ex.schedule.r());
  s["schedule.convergence_conditions"] = bool_text(cfg.convergence.passed());
  s["schedule.rate_bound_conditions"] = bool_text(cfg.rate_bound.passed());
  s["schedule.initial_product"] = bool_text(cfg.initial_product_ok);
  s["run.paths"] = std::to_string(cfg.paths);
  s["run.seed"] = std::to_string(cfg.seed);
  s["run.deterministic"] = bool_text(cfg.deterministic);
  s["run.failed_paths"] = std::to_string(res.failed_paths());
  s["run.eval_subsample"] = std::to_string(subsample.size());
  s["reference.f_star"] = format_double(res.f_star);
  s["reference.f_star_source"] = res.f_star_source;
  s["reference.h_star"] = format_double(res.h_star);
  s["reference.h_star_source"] = res.h_star_source;
  std::uint64_t max_iters = 0;
  for (std::size_t i = 0; i < cfg.paths; ++i) {
    if (!res.path_errors[i].empty()) s["path." + std::to_string(i) + ".error"] = res.path_errors[i];
    max_iters = std::max(max_iters, res.reports[i].iterations);
  }
  s["run.iterations_max"] = std::to_string(max_iters);
  if (!res.aggregate.empty()) {
    s["final.k"] = std::to_string(res.aggregate.back().k);
    s["final.f_gap_mean"] = format_double(res.aggregate.back().f_gap_mean);
    s["final.h_gap_mean"] = format_double(res.aggregate.back().h_gap_mean);
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : res.aggregate) pts.emplace_back(static_cast<double>(r.k), r.f_gap_mean);
    try {
      const RateFit fit = fit_rate(pts);
      s["rate_fit.f_gap_slope"] = format_double(fit.slope);
      s["rate_fit.f_gap_intercept"] = format_double(fit.intercept);
    } catch (const Error& e) {
      s["rate_fit.f_gap_slope"] = "nan";
    }
  }
  for (std::size_t w = 0; w < cfg.warnings.size(); ++w) s["warning." + std::to_string(w)] = cfg.warnings[w];
  res.elapsed_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  s["run.elapsed_ms"] = format_double(res.elapsed_ms);

  if (write) {
    std::filesystem::create_directories(cfg.output_dir);
    for (std::size_t i = 0; i < cfg.paths; ++i) {
      if (!res.path_errors[i].empty() && res.reports[i].trace.empty()) continue;
      write_trace_csv(cfg.output_dir / ("trace_path" + std::to_string(i) + ".csv"),
                      trace_rows(res.reports[i], res.f_star, res.h_star));
    }
    write_aggregate_csv(cfg.output_dir / "aggregate.csv", res.aggregate);
    std::ofstream sum(cfg.output_dir / "summary.txt");
    if (!sum) fail(ErrorCode::io, "cannot write summary in " + cfg.output_dir.string());
    for (const auto& [k, v] : s) sum << k << " = " << v << '\n';
    if (cfg.plot_data) {
      std::ofstream fdat(cfg.output_dir / "f_gap.dat"), hdat(cfg.output_dir / "h_gap.dat");
      for (const auto& r : res.aggregate) {
        fdat << r.k << ' ' << format_double(r.f_gap_mean) << '\n';
        hdat << r.k << ' ' << format_double(r.h_gap_mean) << '\n';
      }
    }
  }
  return res;
}

}  // namespace irsmd
