#include <math.h>
#include <stdio.h>
#include <string.h>

#include "ratcheb.h"

#define CHECK(cond)                                                     \
  do {                                                                  \
    if (!(cond)) {                                                      \
      fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,            \
              rc_last_error_message());                                 \
      return 1;                                                         \
    }                                                                   \
  } while (0)

int main(void) {
  RcProblem *p = NULL;
  CHECK(rc_problem_parse("[-1,1]", "2:1", "2", &p) == RC_STATUS_OK);
  RcSolution *s = NULL;
  RcSolveOptions o = rc_solve_options_default();
  CHECK(rc_solve(p, &o, &s) == RC_STATUS_OK);
  double m = 0.0;
  CHECK(rc_solution_m(s, &m) == RC_STATUS_OK);
  CHECK(fabs(m - 3.0) < 1e-10);
  double v = 0.0;
  CHECK(rc_solution_eval(s, 0.5, &v) == RC_STATUS_OK);
  CHECK(fabs(v - 0.0) < 1e-10);
  int pass = 0;
  CHECK(rc_solution_verify(s, 100, 0, &pass) == RC_STATUS_OK && pass == 1);
  char *json = NULL;
  CHECK(rc_solution_to_json(s, &json) == RC_STATUS_OK);
  CHECK(strstr(json, "\"schema\": 1") != NULL);
  rc_string_free(json);
  rc_solution_free(s);
  rc_problem_free(p);

  RcProblem *bad = NULL;
  CHECK(rc_problem_parse("[1,-1]", "inf:1", "inf", &bad) ==
        RC_STATUS_INVALID_ARGUMENT);
  CHECK(bad == NULL && strlen(rc_last_error_message()) > 0);

  RcGreen *g = NULL;
  CHECK(rc_green_new("[-1,1]", "inf", &g) == RC_STATUS_OK);
  double gv = 0.0;
  CHECK(rc_green_eval(g, 2.0, 0.0, &gv) == RC_STATUS_OK);
  CHECK(fabs(gv - acosh(2.0)) < 1e-9);
  rc_green_free(g);
  printf("ok %s\n", rc_version());
  return 0;
}
