/* Exercises the C interface from plain C. */
#include <math.h>
#include <stdio.h>
#include <string.h>

#include "irsmd/irsmd.h"

static int failures = 0;

#define EXPECT(cond)                                              \
  do {                                                            \
    if (!(cond)) {                                                \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                 \
    }                                                             \
  } while (0)

static void test_schedule(void) {
  irsmd_schedule* s = NULL;
  EXPECT(irsmd_schedule_rate(0.1, 1.0, 1.0, 0.0, &s) == IRSMD_OK);
  double a = 0, b = 0, r = 1;
  EXPECT(irsmd_schedule_exponents(s, &a, &b, &r) == IRSMD_OK);
  EXPECT(fabs(a - 0.55) < 1e-15 && fabs(b - 0.4) < 1e-15 && r == 0.0);
  int passed = 1;
  size_t needed = 0;
  EXPECT(irsmd_schedule_validate(s, IRSMD_CONDITIONS_RATE_BOUND, &passed, NULL, 0, &needed) == IRSMD_OK);
  EXPECT(passed == 0);
  EXPECT(needed > 1);
  char small[8];
  EXPECT(irsmd_schedule_validate(s, IRSMD_CONDITIONS_CONVERGENCE, &passed, small, sizeof small, NULL) == IRSMD_OK);
  EXPECT(passed == 1);
  EXPECT(strlen(small) == 7);
  int ok = 0;
  EXPECT(irsmd_schedule_initial_product(s, 1.0, 0.5, &ok) == IRSMD_OK && ok == 1);
  irsmd_schedule_free(s);

  EXPECT(irsmd_schedule_rate(0.7, 1.0, 1.0, 0.0, &s) == IRSMD_ERR_INVALID_ARGUMENT);
  EXPECT(strlen(irsmd_last_error()) > 0);
  EXPECT(irsmd_schedule_at(NULL, 0, &a, &b) == IRSMD_ERR_INVALID_ARGUMENT);
}

static void test_problem(void) {
  const double lo[2] = {-1, -1}, hi[2] = {1, 1};
  irsmd_domain* box = NULL;
  EXPECT(irsmd_domain_box(2, lo, hi, &box) == IRSMD_OK);
  EXPECT(irsmd_domain_dimension(box) == 2);
  const double far[2] = {3, -0.5};
  double proj[2];
  EXPECT(irsmd_domain_project(box, far, proj) == IRSMD_OK);
  EXPECT(proj[0] == 1.0 && proj[1] == -0.5);

  const double a[4] = {1, 1, 1, 1};
  const double b[2] = {0, 2};
  irsmd_problem* p = NULL;
  EXPECT(irsmd_problem_least_squares(2, 2, a, b, 0.5, box, &p) == IRSMD_OK);
  EXPECT(irsmd_problem_dimension(p) == 2);
  EXPECT(irsmd_problem_mu_h(p) == 0.5);
  const double x[2] = {0.5, 0.5};
  double f = -1, h = -1;
  EXPECT(irsmd_problem_eval(p, x, &f, &h) == IRSMD_OK);
  EXPECT(fabs(f - 2.0) < 1e-12);
  EXPECT(fabs(h - 1.125) < 1e-12);
  irsmd_constants c;
  EXPECT(irsmd_problem_constants(p, &c) == IRSMD_OK);
  EXPECT(c.has_diameter && fabs(c.diameter - sqrt(2.0)) < 1e-12);

  irsmd_schedule* s = NULL;
  EXPECT(irsmd_schedule_power_law(0.2, 1.0, 0.6, 0.35, 0.0, &s) == IRSMD_OK);
  EXPECT(irsmd_problem_set_deterministic(p, 1) == IRSMD_OK);
  irsmd_run_options opts;
  irsmd_run_options_init(&opts);
  opts.iterations = 5000;
  irsmd_report* rep = NULL;
  EXPECT(irsmd_run(p, s, NULL, &opts, 1, &rep) == IRSMD_OK);
  EXPECT(irsmd_report_iterations(rep) == 5000);
  EXPECT(irsmd_report_dimension(rep) == 2);
  double xbar[2];
  EXPECT(irsmd_report_x_avg(rep, xbar) == IRSMD_OK);
  EXPECT(fabs(xbar[0] + xbar[1] - 1.0) < 0.1);
  EXPECT(fabs(xbar[0] - xbar[1]) < 1e-9);
  const size_t n = irsmd_report_trace_length(rep);
  EXPECT(n > 5);
  uint64_t k = 0;
  EXPECT(irsmd_report_trace_row(rep, n - 1, &k, NULL, NULL, &f, &h, NULL) == IRSMD_OK);
  EXPECT(k == 5000);
  EXPECT(irsmd_report_trace_row(rep, n, &k, NULL, NULL, NULL, NULL, NULL) == IRSMD_ERR_INVALID_ARGUMENT);
  irsmd_report_free(rep);

  const double bad[3] = {9, 9, 9};
  double xs[2], fs = 0;
  int cert = 0;
  EXPECT(irsmd_solve_inner(p, 0, 0, xs, &fs, &cert) == IRSMD_OK);
  EXPECT(fabs(fs - 2.0) < 1e-6);
  double obj = 0, lower = 0;
  EXPECT(irsmd_solve_regularized(p, 0.1, 0, 1e-10, xs, &obj, &lower, &cert) == IRSMD_OK);
  EXPECT(cert == 1 && lower <= obj);
  double hs = 0, fmin = 0, slack = 0;
  EXPECT(irsmd_solve_bilevel_bruteforce(p, 201, xs, &hs, &fmin, &slack) == IRSMD_OK);
  EXPECT(fabs(xs[0] - 0.5) < 0.02 && fabs(xs[1] - 0.5) < 0.02);
  (void)bad;

  irsmd_bound_summary sum;
  EXPECT(irsmd_path_bound_check(p, s, 5, NULL, &sum) == IRSMD_OK);
  EXPECT(sum.rows == 5 && sum.passed_rows == 5);

  irsmd_schedule_free(s);
  irsmd_problem_free(p);
  irsmd_domain_free(box);

  irsmd_domain* whole = NULL;
  EXPECT(irsmd_domain_whole(2, &whole) == IRSMD_OK);
  EXPECT(irsmd_problem_least_squares(2, 2, a, b, 0.0, whole, &p) == IRSMD_ERR_INVALID_ARGUMENT);
  irsmd_domain_free(whole);
}

static void test_hinge(void) {
  const int64_t row_ptr[3] = {0, 1, 2};
  const int64_t col_idx[2] = {0, 1};
  const double values[2] = {1.0, 1.0};
  const double labels[2] = {1.0, -1.0};
  irsmd_domain* d = NULL;
  EXPECT(irsmd_domain_whole(2, &d) == IRSMD_OK);
  irsmd_problem* p = NULL;
  EXPECT(irsmd_problem_hinge(2, 2, row_ptr, col_idx, values, labels, 0.1, d, &p) == IRSMD_OK);
  const double x[2] = {0, 0};
  double f = 0;
  EXPECT(irsmd_problem_eval(p, x, &f, NULL) == IRSMD_OK);
  EXPECT(f == 1.0);
  irsmd_problem_free(p);
  const int64_t bad_cols[2] = {0, 5};
  EXPECT(irsmd_problem_hinge(2, 2, row_ptr, bad_cols, values, labels, 0.1, d, &p) == IRSMD_ERR_INVALID_ARGUMENT);
  irsmd_domain_free(d);
}

static void test_errors(void) {
  irsmd_config* c = NULL;
  EXPECT(irsmd_config_load("/nonexistent/config.ini", NULL, NULL, 0, &c) == IRSMD_ERR_IO);
  EXPECT(strstr(irsmd_last_error(), "nonexistent") != NULL);
  irsmd_problem* p = NULL;
  EXPECT(irsmd_problem_two_stage_file("/nonexistent/file.txt", &p) == IRSMD_ERR_IO);
  EXPECT(strcmp(irsmd_status_name(IRSMD_ERR_PARSE), "parse error") == 0);
  EXPECT(irsmd_version()[0] != '\0');
  irsmd_config_free(NULL);
  irsmd_problem_free(NULL);
}

int main(int argc, char** argv) {
  test_schedule();
  test_problem();
  test_hinge();
  test_errors();
  if (argc > 1) {
    irsmd_problem* p = NULL;
    EXPECT(irsmd_problem_two_stage_file(argv[1], &p) == IRSMD_OK);
    EXPECT(irsmd_problem_dimension(p) == 3);
    EXPECT(fabs(irsmd_problem_mu_h(p) - 1.0) < 1e-12);
    irsmd_problem_free(p);
  }
  if (failures) {
    fprintf(stderr, "%d C API checks failed\n", failures);
    return 1;
  }
  printf("C API checks passed\n");
  return 0;
}
