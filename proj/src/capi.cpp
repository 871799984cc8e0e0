#include "irsmd/irsmd.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "irsmd/error.hpp"
#include "irsmd/experiment.hpp"
#include "irsmd/reference.hpp"

struct irsmd_schedule {
  irsmd::Schedule value;
};

struct irsmd_domain {
  irsmd::FeasibleSet value;
};

struct irsmd_problem {
  std::shared_ptr<irsmd::BilevelProblem> problem;
  std::shared_ptr<const irsmd::CompiledBilevel> two_stage;
  std::optional<irsmd::Vector> x0;
};

struct irsmd_report {
  irsmd::RunReport value;
};

struct irsmd_config {
  irsmd::RunConfig value;
};

namespace {

thread_local std::string g_last_error;

irsmd_status to_status(irsmd::ErrorCode c) {
  switch (c) {
    case irsmd::ErrorCode::invalid_argument:
      return IRSMD_ERR_INVALID_ARGUMENT;
    case irsmd::ErrorCode::dimension_mismatch:
      return IRSMD_ERR_DIMENSION;
    case irsmd::ErrorCode::infeasible_point:
      return IRSMD_ERR_INFEASIBLE;
    case irsmd::ErrorCode::io:
      return IRSMD_ERR_IO;
    case irsmd::ErrorCode::parse:
      return IRSMD_ERR_PARSE;
    case irsmd::ErrorCode::validation:
      return IRSMD_ERR_VALIDATION;
    case irsmd::ErrorCode::unsupported:
      return IRSMD_ERR_UNSUPPORTED;
    case irsmd::ErrorCode::certificate:
      return IRSMD_ERR_CERTIFICATE;
  }
  return IRSMD_ERR_INTERNAL;
}

// Runs fn and maps exceptions to status codes.
template <typename Fn>
irsmd_status guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return IRSMD_OK;
  } catch (const irsmd::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return IRSMD_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return IRSMD_ERR_INTERNAL;
  }
}

template <typename T>
void need(const T* p, const char* what) {
  if (!p) irsmd::fail(irsmd::ErrorCode::invalid_argument, std::string(what) + " must not be null");
}

void copy_string(const std::string& s, char* buf, std::size_t buflen, std::size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (buf && buflen > 0) {
    const std::size_t n = std::min(buflen - 1, s.size());
    std::memcpy(buf, s.data(), n);
    buf[n] = '\0';
  }
}

irsmd::Vector view(const double* x, std::size_t n) {
  need(x, "vector");
  return Eigen::Map<const irsmd::Vector>(x, static_cast<Eigen::Index>(n));
}

void store(const irsmd::Vector& v, double* out) {
  if (out) std::memcpy(out, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
}

irsmd_bound_summary summarize(const irsmd::BoundReport& r) {
  irsmd_bound_summary s{};
  s.rows = r.rows.size();
  for (const auto& row : r.rows) s.passed_rows += row.pass ? 1 : 0;
  s.certified = r.certified ? 1 : 0;
  return s;
}

void write_csv(const char* path, const irsmd::BoundReport& r) {
  if (!path) return;
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p);
  if (!out) irsmd::fail(irsmd::ErrorCode::io, std::string("cannot write file: ") + path);
  irsmd::write_bound_csv(out, r);
}

}  // namespace

extern "C" {

const char* irsmd_version(void) { return "1.0.0"; }

const char* irsmd_status_name(irsmd_status status) {
  switch (status) {
    case IRSMD_OK:
      return "ok";
    case IRSMD_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case IRSMD_ERR_DIMENSION:
      return "dimension mismatch";
    case IRSMD_ERR_INFEASIBLE:
      return "infeasible point";
    case IRSMD_ERR_IO:
      return "i/o error";
    case IRSMD_ERR_PARSE:
      return "parse error";
    case IRSMD_ERR_VALIDATION:
      return "validation failed";
    case IRSMD_ERR_UNSUPPORTED:
      return "unsupported";
    case IRSMD_ERR_CERTIFICATE:
      return "certificate failure";
    case IRSMD_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* irsmd_last_error(void) { return g_last_error.c_str(); }

// ---- schedules

irsmd_status irsmd_schedule_power_law(double gamma0, double lambda0, double a, double b, double r, irsmd_schedule** out) {
  return guard([&] {
    need(out, "out");
    *out = new irsmd_schedule{irsmd::Schedule::power_law(gamma0, lambda0, a, b, r)};
  });
}

irsmd_status irsmd_schedule_rate(double delta, double gamma0, double lambda0, double r, irsmd_schedule** out) {
  return guard([&] {
    need(out, "out");
    *out = new irsmd_schedule{irsmd::Schedule::rate(delta, gamma0, lambda0, r)};
  });
}

void irsmd_schedule_free(irsmd_schedule* s) { delete s; }

irsmd_status irsmd_schedule_at(const irsmd_schedule* s, uint64_t k, double* gamma, double* lambda) {
  return guard([&] {
    need(s, "schedule");
    if (gamma) *gamma = s->value.gamma(k);
    if (lambda) *lambda = s->value.lambda(k);
  });
}

irsmd_status irsmd_schedule_exponents(const irsmd_schedule* s, double* a, double* b, double* r) {
  return guard([&] {
    need(s, "schedule");
    if (a) *a = s->value.a();
    if (b) *b = s->value.b();
    if (r) *r = s->value.r();
  });
}

irsmd_status irsmd_schedule_validate(const irsmd_schedule* s, irsmd_conditions which, int* passed, char* buf,
                                     size_t buflen, size_t* needed) {
  return guard([&] {
    need(s, "schedule");
    irsmd::ValidationReport rep;
    switch (which) {
      case IRSMD_CONDITIONS_CONVERGENCE:
        rep = irsmd::validate_convergence_conditions(s->value);
        break;
      case IRSMD_CONDITIONS_RATE_BOUND:
        rep = irsmd::validate_rate_bound_conditions(s->value);
        break;
      case IRSMD_CONDITIONS_AVERAGE:
        rep = irsmd::validate_average_conditions(s->value);
        break;
      default:
        irsmd::fail(irsmd::ErrorCode::invalid_argument, "unknown condition set");
    }
    if (passed) *passed = rep.passed() ? 1 : 0;
    copy_string(rep.to_string(), buf, buflen, needed);
  });
}

irsmd_status irsmd_schedule_initial_product(const irsmd_schedule* s, double l_omega, double mu_h, int* ok) {
  return guard([&] {
    need(s, "schedule");
    need(ok, "ok");
    *ok = irsmd::check_initial_product(s->value, l_omega, mu_h) ? 1 : 0;
  });
}

// ---- domains

irsmd_status irsmd_domain_whole(size_t n, irsmd_domain** out) {
  return guard([&] {
    need(out, "out");
    *out = new irsmd_domain{irsmd::FeasibleSet::whole_space(n)};
  });
}

irsmd_status irsmd_domain_box(size_t n, const double* lower, const double* upper, irsmd_domain** out) {
  return guard([&] {
    need(out, "out");
    *out = new irsmd_domain{irsmd::FeasibleSet::box(view(lower, n), view(upper, n))};
  });
}

irsmd_status irsmd_domain_ball(size_t n, const double* center, double radius, irsmd_domain** out) {
  return guard([&] {
    need(out, "out");
    *out = new irsmd_domain{irsmd::FeasibleSet::ball(view(center, n), radius)};
  });
}

void irsmd_domain_free(irsmd_domain* d) { delete d; }

size_t irsmd_domain_dimension(const irsmd_domain* d) { return d ? d->value.dimension() : 0; }

irsmd_status irsmd_domain_project(const irsmd_domain* d, const double* x, double* out) {
  return guard([&] {
    need(d, "domain");
    need(out, "out");
    store(d->value.project(view(x, d->value.dimension())), out);
  });
}

// ---- problems

irsmd_status irsmd_problem_least_squares(size_t rows, size_t cols, const double* a, const double* b, double mu_h,
                                         const irsmd_domain* domain, irsmd_problem** out) {
  return guard([&] {
    need(out, "out");
    need(domain, "domain");
    need(a, "matrix");
    if (rows == 0 || cols == 0) irsmd::fail(irsmd::ErrorCode::invalid_argument, "least squares: empty matrix");
    irsmd::DenseMatrix m = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        a, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    auto inner = irsmd::make_least_squares(std::move(m), view(b, rows));
    auto p = std::make_shared<irsmd::BilevelProblem>(inner, irsmd::make_elastic_net(mu_h, cols), domain->value);
    *out = new irsmd_problem{std::move(p), nullptr, std::nullopt};
  });
}

irsmd_status irsmd_problem_hinge(size_t rows, size_t cols, const int64_t* row_ptr, const int64_t* col_idx,
                                 const double* values, const double* labels, double mu_h, const irsmd_domain* domain,
                                 irsmd_problem** out) {
  return guard([&] {
    need(out, "out");
    need(domain, "domain");
    need(row_ptr, "row_ptr");
    if (rows == 0 || cols == 0) irsmd::fail(irsmd::ErrorCode::invalid_argument, "hinge: empty data");
    std::vector<Eigen::Triplet<double>> trip;
    for (size_t i = 0; i < rows; ++i) {
      if (row_ptr[i + 1] < row_ptr[i]) irsmd::fail(irsmd::ErrorCode::invalid_argument, "hinge: row_ptr must be nondecreasing");
      for (int64_t t = row_ptr[i]; t < row_ptr[i + 1]; ++t) {
        need(col_idx, "col_idx");
        need(values, "values");
        if (col_idx[t] < 0 || static_cast<size_t>(col_idx[t]) >= cols) {
          irsmd::fail(irsmd::ErrorCode::invalid_argument, "hinge: column index out of range");
        }
        trip.emplace_back(static_cast<int>(i), static_cast<int>(col_idx[t]), values[t]);
      }
    }
    irsmd::SparseMatrix a(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();
    auto inner = irsmd::make_hinge_elm(std::move(a), view(labels, rows));
    auto p = std::make_shared<irsmd::BilevelProblem>(inner, irsmd::make_elastic_net(mu_h, cols), domain->value);
    *out = new irsmd_problem{std::move(p), nullptr, std::nullopt};
  });
}

irsmd_status irsmd_problem_two_stage_file(const char* path, irsmd_problem** out) {
  return guard([&] {
    need(out, "out");
    need(path, "path");
    auto compiled = std::make_shared<irsmd::CompiledBilevel>(irsmd::compile(irsmd::load_two_stage(path)));
    auto p = std::shared_ptr<irsmd::BilevelProblem>(compiled, &compiled->problem);
    *out = new irsmd_problem{std::move(p), compiled, std::nullopt};
  });
}

void irsmd_problem_free(irsmd_problem* p) { delete p; }

size_t irsmd_problem_dimension(const irsmd_problem* p) { return p ? p->problem->dimension() : 0; }

double irsmd_problem_mu_h(const irsmd_problem* p) { return p ? p->problem->mu_h() : 0.0; }

irsmd_status irsmd_problem_set_deterministic(irsmd_problem* p, int on) {
  return guard([&] {
    need(p, "problem");
    p->problem->set_deterministic(on != 0);
  });
}

irsmd_status irsmd_problem_eval(const irsmd_problem* p, const double* x, double* f, double* h) {
  return guard([&] {
    need(p, "problem");
    const irsmd::Vector v = view(x, p->problem->dimension());
    if (f) *f = irsmd::exact_f(*p->problem, v);
    if (h) *h = irsmd::exact_h(*p->problem, v);
  });
}

irsmd_status irsmd_problem_constants(const irsmd_problem* p, irsmd_constants* out) {
  return guard([&] {
    need(p, "problem");
    need(out, "out");
    const auto c = p->problem->constants();
    *out = irsmd_constants{};
    out->has_inner_bound = c.inner_bound.has_value();
    out->inner_bound = c.inner_bound.value_or(0.0);
    out->has_outer_bound = c.outer_bound.has_value();
    out->outer_bound = c.outer_bound.value_or(0.0);
    out->has_outer_value_bound = c.outer_value_bound.has_value();
    out->outer_value_bound = c.outer_value_bound.value_or(0.0);
    out->has_diameter = c.diameter.has_value();
    out->diameter = c.diameter.value_or(0.0);
    out->outer_modulus = c.outer_modulus;
  });
}

// ---- solver

void irsmd_run_options_init(irsmd_run_options* opts) {
  if (!opts) return;
  opts->iterations = 1000;
  opts->time_budget_seconds = 0.0;
  opts->checkpoints = IRSMD_CHECKPOINTS_GEOMETRIC;
  opts->override_validation = 0;
  opts->evaluate_objectives = 1;
}

irsmd_status irsmd_run(const irsmd_problem* p, const irsmd_schedule* s, const double* x0, const irsmd_run_options* opts,
                       uint64_t seed, irsmd_report** out) {
  return guard([&] {
    need(p, "problem");
    need(s, "schedule");
    need(out, "out");
    irsmd_run_options o;
    irsmd_run_options_init(&o);
    if (opts) o = *opts;
    irsmd::RunOptions ro;
    if (o.iterations > 0) {
      ro.iterations = o.iterations;
    } else {
      ro.time_budget_seconds = o.time_budget_seconds;
    }
    ro.checkpoints = o.checkpoints == IRSMD_CHECKPOINTS_EVERY ? irsmd::CheckpointPolicy::every : irsmd::CheckpointPolicy::geometric;
    ro.override_validation = o.override_validation != 0;
    ro.evaluate_objectives = o.evaluate_objectives != 0;
    const std::size_t n = p->problem->dimension();
    irsmd::Vector start = x0 ? view(x0, n) : p->x0.value_or(irsmd::Vector::Zero(static_cast<Eigen::Index>(n)));
    irsmd::EuclideanGenerator dgf(n);
    irsmd::SampleSource src(seed);
    *out = new irsmd_report{irsmd::run(*p->problem, dgf, s->value, start, ro, src)};
  });
}

void irsmd_report_free(irsmd_report* r) { delete r; }

uint64_t irsmd_report_iterations(const irsmd_report* r) { return r ? r->value.iterations : 0; }

size_t irsmd_report_dimension(const irsmd_report* r) { return r ? static_cast<size_t>(r->value.x_avg.size()) : 0; }

irsmd_status irsmd_report_x_avg(const irsmd_report* r, double* out) {
  return guard([&] {
    need(r, "report");
    need(out, "out");
    store(r->value.x_avg, out);
  });
}

irsmd_status irsmd_report_x_last(const irsmd_report* r, double* out) {
  return guard([&] {
    need(r, "report");
    need(out, "out");
    store(r->value.x_last, out);
  });
}

size_t irsmd_report_trace_length(const irsmd_report* r) { return r ? r->value.trace.size() : 0; }

irsmd_status irsmd_report_trace_row(const irsmd_report* r, size_t i, uint64_t* k, double* gamma, double* lambda,
                                    double* f, double* h, double* elapsed_ms) {
  return guard([&] {
    need(r, "report");
    if (i >= r->value.trace.size()) irsmd::fail(irsmd::ErrorCode::invalid_argument, "trace row out of range");
    const auto& row = r->value.trace[i];
    if (k) *k = row.k;
    if (gamma) *gamma = row.gamma;
    if (lambda) *lambda = row.lambda;
    if (f) *f = row.f;
    if (h) *h = row.h;
    if (elapsed_ms) *elapsed_ms = row.elapsed_ms;
  });
}

size_t irsmd_report_warning_count(const irsmd_report* r) { return r ? r->value.warnings.size() : 0; }

irsmd_status irsmd_report_warning(const irsmd_report* r, size_t i, char* buf, size_t buflen, size_t* needed) {
  return guard([&] {
    need(r, "report");
    if (i >= r->value.warnings.size()) irsmd::fail(irsmd::ErrorCode::invalid_argument, "warning index out of range");
    copy_string(r->value.warnings[i], buf, buflen, needed);
  });
}

// ---- reference

irsmd_status irsmd_solve_regularized(const irsmd_problem* p, double lambda, uint64_t budget, double tol, double* x_out,
                                     double* objective, double* lower_bound, int* certified) {
  return guard([&] {
    need(p, "problem");
    irsmd::RegularizedOptions o;
    if (budget) o.budget = budget;
    if (tol > 0.0) o.tol = tol;
    const auto sol = irsmd::solve_regularized(*p->problem, lambda, o);
    store(sol.x, x_out);
    if (objective) *objective = sol.objective;
    if (lower_bound) *lower_bound = sol.lower_bound;
    if (certified) *certified = sol.certified ? 1 : 0;
  });
}

irsmd_status irsmd_solve_inner(const irsmd_problem* p, uint64_t budget, double tol, double* x_out, double* f_star,
                               int* certified) {
  return guard([&] {
    need(p, "problem");
    irsmd::InnerOptions o;
    if (budget) o.budget = budget;
    if (tol > 0.0) o.tol = tol;
    const auto sol = irsmd::solve_inner(*p->problem, o);
    store(sol.x, x_out);
    if (f_star) *f_star = sol.f_star;
    if (certified) *certified = sol.certified ? 1 : 0;
  });
}

irsmd_status irsmd_solve_bilevel_bruteforce(const irsmd_problem* p, size_t resolution, double* x_out, double* h_star,
                                            double* f_min, double* slack) {
  return guard([&] {
    need(p, "problem");
    const auto sol = irsmd::solve_bilevel_bruteforce(*p->problem, resolution);
    store(sol.x_h, x_out);
    if (h_star) *h_star = sol.h_star;
    if (f_min) *f_min = sol.f_min;
    if (slack) *slack = sol.slack;
  });
}

irsmd_status irsmd_path_bound_check(const irsmd_problem* p, const irsmd_schedule* s, uint64_t K, const char* csv_path,
                                    irsmd_bound_summary* out) {
  return guard([&] {
    need(p, "problem");
    need(s, "schedule");
    const auto rep = irsmd::path_bound_check(*p->problem, s->value, K);
    write_csv(csv_path, rep);
    if (out) *out = summarize(rep);
  });
}

irsmd_status irsmd_recursion_bound_check(const irsmd_problem* p, const irsmd_schedule* s, uint64_t K, size_t paths,
                                         uint64_t seed, double rho, size_t threads, const char* csv_path,
                                         const char* one_step_csv_path, irsmd_bound_summary* out) {
  return guard([&] {
    need(p, "problem");
    need(s, "schedule");
    irsmd::RecursionOptions o;
    o.paths = paths;
    o.seed = seed;
    if (rho > 0.0) o.rho = rho;
    o.threads = threads;
    o.x0 = p->x0;
    irsmd::EuclideanGenerator dgf(p->problem->dimension());
    const auto rep = irsmd::recursion_bound_check(*p->problem, dgf, s->value, K, o);
    write_csv(csv_path, rep.tau_bound);
    write_csv(one_step_csv_path, rep.one_step);
    if (out) {
      *out = summarize(rep.tau_bound);
      out->tau = rep.bound.tau;
      out->b1 = rep.bound.B1;
      out->rho = rep.bound.rho;
      out->k1 = rep.bound.k1;
      out->k2 = rep.bound.k2;
      out->kbar = rep.bound.kbar;
    }
  });
}

// ---- experiments

irsmd_status irsmd_config_load(const char* path, const char* const* override_keys, const char* const* override_values,
                               size_t n_overrides, irsmd_config** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    irsmd::ConfigOverrides ov;
    for (size_t i = 0; i < n_overrides; ++i) {
      need(override_keys, "override_keys");
      need(override_values, "override_values");
      ov.emplace_back(override_keys[i], override_values[i]);
    }
    *out = new irsmd_config{irsmd::parse_config(path, ov)};
  });
}

void irsmd_config_free(irsmd_config* c) { delete c; }

irsmd_status irsmd_config_describe(const irsmd_config* c, char* buf, size_t buflen, size_t* needed) {
  return guard([&] {
    need(c, "config");
    std::ostringstream os;
    os << c->value.convergence.to_string() << '\n' << c->value.rate_bound.to_string() << '\n';
    os << "initial product gamma0 * lambda0 <= L_omega / mu_h: " << (c->value.initial_product_ok ? "holds" : "fails") << '\n';
    for (const auto& w : c->value.warnings) os << "warning: " << w << '\n';
    copy_string(os.str(), buf, buflen, needed);
  });
}

irsmd_status irsmd_config_output_dir(const irsmd_config* c, char* buf, size_t buflen, size_t* needed) {
  return guard([&] {
    need(c, "config");
    copy_string(c->value.output_dir.string(), buf, buflen, needed);
  });
}

irsmd_status irsmd_config_problem(const irsmd_config* c, irsmd_problem** problem, irsmd_schedule** schedule) {
  return guard([&] {
    need(c, "config");
    irsmd::Experiment ex = irsmd::build_experiment(c->value);
    if (problem) {
      auto p = std::make_shared<irsmd::BilevelProblem>(*ex.problem);
      *problem = new irsmd_problem{std::move(p), ex.two_stage, ex.x0};
    }
    if (schedule) *schedule = new irsmd_schedule{ex.schedule};
  });
}

irsmd_status irsmd_experiment_run(const irsmd_config* c, irsmd_experiment_summary* out) {
  return guard([&] {
    need(c, "config");
    const auto res = irsmd::run_experiment(c->value);
    if (out) {
      *out = irsmd_experiment_summary{};
      out->f_star = res.f_star;
      out->h_star = res.h_star;
      if (!res.aggregate.empty()) {
        out->final_f_gap = res.aggregate.back().f_gap_mean;
        out->final_h_gap = res.aggregate.back().h_gap_mean;
        out->final_k = res.aggregate.back().k;
      }
      out->paths = c->value.paths;
      out->failed_paths = res.failed_paths();
      out->elapsed_ms = res.elapsed_ms;
    }
  });
}

irsmd_status irsmd_rate_fit(const char* aggregate_csv, const char* column, double tail_fraction, double* slope,
                            double* intercept, size_t* points) {
  return guard([&] {
    need(aggregate_csv, "aggregate_csv");
    const auto fit = irsmd::emit_rate_fit(aggregate_csv, column ? column : "f_gap_mean", tail_fraction > 0.0 ? tail_fraction : 0.5);
    if (slope) *slope = fit.slope;
    if (intercept) *intercept = fit.intercept;
    if (points) *points = fit.points;
  });
}

}  // extern "C"
