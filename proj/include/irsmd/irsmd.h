/* C interface to the IR-SMD toolkit.
 *
 * Objects are opaque handles created by irsmd_*_create-style calls and
 * released with the matching *_free. Every fallible call returns an
 * irsmd_status; on failure irsmd_last_error() describes the problem for the
 * calling thread. Vectors are plain double arrays of the problem dimension.
 * Strings are copied into caller buffers: the required size (including the
 * terminating NUL) is written to *needed when it is non-null. */
#ifndef IRSMD_IRSMD_H
#define IRSMD_IRSMD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(IRSMD_BUILDING_LIBRARY)
#    define IRSMD_API __declspec(dllexport)
#  else
#    define IRSMD_API __declspec(dllimport)
#  endif
#else
#  define IRSMD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum irsmd_status {
  IRSMD_OK = 0,
  IRSMD_ERR_INVALID_ARGUMENT = 1,
  IRSMD_ERR_DIMENSION = 2,
  IRSMD_ERR_INFEASIBLE = 3,
  IRSMD_ERR_IO = 4,
  IRSMD_ERR_PARSE = 5,
  IRSMD_ERR_VALIDATION = 6,
  IRSMD_ERR_UNSUPPORTED = 7,
  IRSMD_ERR_CERTIFICATE = 8,
  IRSMD_ERR_INTERNAL = 9
} irsmd_status;

typedef enum irsmd_conditions {
  IRSMD_CONDITIONS_CONVERGENCE = 0,
  IRSMD_CONDITIONS_RATE_BOUND = 1,
  IRSMD_CONDITIONS_AVERAGE = 2
} irsmd_conditions;

typedef enum irsmd_checkpoints {
  IRSMD_CHECKPOINTS_GEOMETRIC = 0,
  IRSMD_CHECKPOINTS_EVERY = 1
} irsmd_checkpoints;

typedef struct irsmd_schedule irsmd_schedule;
typedef struct irsmd_domain irsmd_domain;
typedef struct irsmd_problem irsmd_problem;
typedef struct irsmd_report irsmd_report;
typedef struct irsmd_config irsmd_config;

IRSMD_API const char* irsmd_version(void);
IRSMD_API const char* irsmd_status_name(irsmd_status status);
/* Message of the last failed call on this thread ("" when none). */
IRSMD_API const char* irsmd_last_error(void);

/* ---- schedules ---------------------------------------------------------- */

IRSMD_API irsmd_status irsmd_schedule_power_law(double gamma0, double lambda0, double a, double b, double r,
                                                irsmd_schedule** out);
/* a = 0.5 + 0.5 delta, b = 0.5 - delta with delta in (0, 0.5). */
IRSMD_API irsmd_status irsmd_schedule_rate(double delta, double gamma0, double lambda0, double r, irsmd_schedule** out);
IRSMD_API void irsmd_schedule_free(irsmd_schedule* s);
IRSMD_API irsmd_status irsmd_schedule_at(const irsmd_schedule* s, uint64_t k, double* gamma, double* lambda);
IRSMD_API irsmd_status irsmd_schedule_exponents(const irsmd_schedule* s, double* a, double* b, double* r);
/* *passed is 1 when every inequality holds; the readable report goes to buf. */
IRSMD_API irsmd_status irsmd_schedule_validate(const irsmd_schedule* s, irsmd_conditions which, int* passed, char* buf,
                                               size_t buflen, size_t* needed);
IRSMD_API irsmd_status irsmd_schedule_initial_product(const irsmd_schedule* s, double l_omega, double mu_h, int* ok);

/* ---- feasible sets ------------------------------------------------------ */

IRSMD_API irsmd_status irsmd_domain_whole(size_t n, irsmd_domain** out);
IRSMD_API irsmd_status irsmd_domain_box(size_t n, const double* lower, const double* upper, irsmd_domain** out);
IRSMD_API irsmd_status irsmd_domain_ball(size_t n, const double* center, double radius, irsmd_domain** out);
IRSMD_API void irsmd_domain_free(irsmd_domain* d);
IRSMD_API size_t irsmd_domain_dimension(const irsmd_domain* d);
IRSMD_API irsmd_status irsmd_domain_project(const irsmd_domain* d, const double* x, double* out);

/* ---- problems ----------------------------------------------------------- */

/* Inner f = ||Ax - b||^2 (A row-major rows x cols), outer elastic net with modulus mu_h. */
IRSMD_API irsmd_status irsmd_problem_least_squares(size_t rows, size_t cols, const double* a, const double* b,
                                                   double mu_h, const irsmd_domain* domain, irsmd_problem** out);
/* Inner average hinge loss over CSR examples (0-based columns, labels +-1), outer elastic net. */
IRSMD_API irsmd_status irsmd_problem_hinge(size_t rows, size_t cols, const int64_t* row_ptr, const int64_t* col_idx,
                                           const double* values, const double* labels, double mu_h,
                                           const irsmd_domain* domain, irsmd_problem** out);
/* Two-stage program compiled to penalty form; the domain comes from the file. */
IRSMD_API irsmd_status irsmd_problem_two_stage_file(const char* path, irsmd_problem** out);
IRSMD_API void irsmd_problem_free(irsmd_problem* p);
IRSMD_API size_t irsmd_problem_dimension(const irsmd_problem* p);
IRSMD_API double irsmd_problem_mu_h(const irsmd_problem* p);
/* Exact subgradients in place of sampled ones, for both levels. */
IRSMD_API irsmd_status irsmd_problem_set_deterministic(irsmd_problem* p, int on);
IRSMD_API irsmd_status irsmd_problem_eval(const irsmd_problem* p, const double* x, double* f, double* h);

typedef struct irsmd_constants {
  int has_inner_bound;
  double inner_bound; /* C_F */
  int has_outer_bound;
  double outer_bound; /* C_H */
  int has_outer_value_bound;
  double outer_value_bound; /* M_h */
  int has_diameter;
  double diameter; /* M */
  double outer_modulus; /* mu_h */
} irsmd_constants;

IRSMD_API irsmd_status irsmd_problem_constants(const irsmd_problem* p, irsmd_constants* out);

/* ---- solver ------------------------------------------------------------- */

typedef struct irsmd_run_options {
  uint64_t iterations;        /* N; 0 selects the time budget */
  double time_budget_seconds; /* used when iterations == 0 */
  irsmd_checkpoints checkpoints;
  int override_validation;
  int evaluate_objectives;
} irsmd_run_options;

IRSMD_API void irsmd_run_options_init(irsmd_run_options* opts);
/* x0 may be null: problems built from a config start at the configured x0,
 * others at the projection of 0. */
IRSMD_API irsmd_status irsmd_run(const irsmd_problem* p, const irsmd_schedule* s, const double* x0,
                                 const irsmd_run_options* opts, uint64_t seed, irsmd_report** out);
IRSMD_API void irsmd_report_free(irsmd_report* r);
IRSMD_API uint64_t irsmd_report_iterations(const irsmd_report* r);
IRSMD_API size_t irsmd_report_dimension(const irsmd_report* r);
IRSMD_API irsmd_status irsmd_report_x_avg(const irsmd_report* r, double* out);
IRSMD_API irsmd_status irsmd_report_x_last(const irsmd_report* r, double* out);
IRSMD_API size_t irsmd_report_trace_length(const irsmd_report* r);
/* f and h are NaN when objectives were not evaluated. */
IRSMD_API irsmd_status irsmd_report_trace_row(const irsmd_report* r, size_t i, uint64_t* k, double* gamma,
                                              double* lambda, double* f, double* h, double* elapsed_ms);
IRSMD_API size_t irsmd_report_warning_count(const irsmd_report* r);
IRSMD_API irsmd_status irsmd_report_warning(const irsmd_report* r, size_t i, char* buf, size_t buflen, size_t* needed);

/* ---- reference solutions ------------------------------------------------ */

IRSMD_API irsmd_status irsmd_solve_regularized(const irsmd_problem* p, double lambda, uint64_t budget, double tol,
                                               double* x_out, double* objective, double* lower_bound,
                                               int* certified);
IRSMD_API irsmd_status irsmd_solve_inner(const irsmd_problem* p, uint64_t budget, double tol, double* x_out,
                                         double* f_star, int* certified);
IRSMD_API irsmd_status irsmd_solve_bilevel_bruteforce(const irsmd_problem* p, size_t resolution, double* x_out,
                                                      double* h_star, double* f_min, double* slack);

typedef struct irsmd_bound_summary {
  size_t rows;
  size_t passed_rows;
  int certified;
  double tau; /* recursion checks only */
  double b1;
  double rho;
  uint64_t k1, k2, kbar;
} irsmd_bound_summary;

/* Writes "k,lhs,rhs,margin,pass" rows to csv_path (may be null). */
IRSMD_API irsmd_status irsmd_path_bound_check(const irsmd_problem* p, const irsmd_schedule* s, uint64_t K,
                                              const char* csv_path, irsmd_bound_summary* out);
/* tau-bound rows go to csv_path, one-step recursion rows to one_step_csv_path (either may be null). */
IRSMD_API irsmd_status irsmd_recursion_bound_check(const irsmd_problem* p, const irsmd_schedule* s, uint64_t K,
                                                   size_t paths, uint64_t seed, double rho, size_t threads,
                                                   const char* csv_path, const char* one_step_csv_path,
                                                   irsmd_bound_summary* out);

/* ---- experiments -------------------------------------------------------- */

/* overrides are "section.key" / value pairs applied on top of the file. */
IRSMD_API irsmd_status irsmd_config_load(const char* path, const char* const* override_keys,
                                         const char* const* override_values, size_t n_overrides,
                                         irsmd_config** out);
IRSMD_API void irsmd_config_free(irsmd_config* c);
/* Validation reports and warnings as text. */
IRSMD_API irsmd_status irsmd_config_describe(const irsmd_config* c, char* buf, size_t buflen, size_t* needed);
IRSMD_API irsmd_status irsmd_config_output_dir(const irsmd_config* c, char* buf, size_t buflen, size_t* needed);
/* Materializes the configured problem (deterministic flag included), schedule and start point. */
IRSMD_API irsmd_status irsmd_config_problem(const irsmd_config* c, irsmd_problem** problem, irsmd_schedule** schedule);

typedef struct irsmd_experiment_summary {
  double f_star;
  double h_star;
  double final_f_gap;
  double final_h_gap;
  uint64_t final_k;
  size_t paths;
  size_t failed_paths;
  double elapsed_ms;
} irsmd_experiment_summary;

/* Runs all sample paths and writes traces, aggregate.csv and summary.txt. */
IRSMD_API irsmd_status irsmd_experiment_run(const irsmd_config* c, irsmd_experiment_summary* out);

/* Log-log fit of a gap column ("f_gap_mean" or "h_gap_mean") of an aggregate CSV. */
IRSMD_API irsmd_status irsmd_rate_fit(const char* aggregate_csv, const char* column, double tail_fraction,
                                      double* slope, double* intercept, size_t* points);

#ifdef __cplusplus
}
#endif

#endif /* IRSMD_IRSMD_H */
