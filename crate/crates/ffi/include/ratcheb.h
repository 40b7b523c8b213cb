#ifndef RATCHEB_H
#define RATCHEB_H

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum RcStatus {
  RC_STATUS_OK = 0,
  RC_STATUS_INVALID_ARGUMENT = 1,
  RC_STATUS_DOMAIN = 2,
  RC_STATUS_NON_CONVERGENCE = 3,
  RC_STATUS_NUMERIC = 4,
  RC_STATUS_NULL_POINTER = 5,
  RC_STATUS_PANIC = 6,
  RC_STATUS_INTEGRITY = 7,
} RcStatus;

// Green function of the complement of a set with a fixed pole.
typedef struct RcGreen RcGreen;

// Problem data: set, pole divisor, reference point.
typedef struct RcProblem RcProblem;

// A solved problem.
typedef struct RcSolution RcSolution;

// Exchange-iteration tunables.
typedef struct RcSolveOptions {
  double tol;
  size_t max_iter;
  double eps_pole;
} RcSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// Valid until the next call into the library on the same thread.
const char *rc_last_error_message(void);

// Library version, a static NUL-terminated string.
const char *rc_version(void);

// Default tolerances.
struct RcSolveOptions rc_solve_options_default(void);

// Parses the set, divisor and reference point literals, e.g.
// `"[-1,1]"`, `"inf:3,2:1"`, `"inf"`.
//
// # Safety
// String arguments must be NUL-terminated; `out_problem` must be writable.
enum RcStatus rc_problem_parse(const char *set,
                               const char *poles,
                               const char *x_star,
                               struct RcProblem **out_problem);

// Releases a problem; null is ignored.
//
// # Safety
// `problem` must come from [`rc_problem_parse`] and not be used afterwards.
void rc_problem_free(struct RcProblem *problem);

// Number of poles counted with multiplicity.
//
// # Safety
// `problem` must be a live handle; `out_n` must be writable.
enum RcStatus rc_problem_degree(const struct RcProblem *problem, size_t *out_n);

// Solves `problem`; `options` may be null for the defaults.
//
// # Safety
// `problem` must be a live handle; `options` null or readable; `out_solution` writable.
enum RcStatus rc_solve(const struct RcProblem *problem,
                       const struct RcSolveOptions *options,
                       struct RcSolution **out_solution);

// Releases a solution; null is ignored.
//
// # Safety
// `solution` must come from [`rc_solve`] and not be used afterwards.
void rc_solution_free(struct RcSolution *solution);

// The extremal value `m`.
//
// # Safety
// `solution` must be a live handle; `out_m` writable.
enum RcStatus rc_solution_m(const struct RcSolution *solution, double *out_m);

// Final equioscillation defect and iteration count.
//
// # Safety
// `solution` must be a live handle; outputs writable.
enum RcStatus rc_solution_diagnostics(const struct RcSolution *solution,
                                      double *out_defect,
                                      size_t *out_iterations);

// `F(x)` at a real point; infinite at poles.
//
// # Safety
// `solution` must be a live handle; `out_value` writable.
enum RcStatus rc_solution_eval(const struct RcSolution *solution, double x, double *out_value);

// `F(z)` at a complex point.
//
// # Safety
// `solution` must be a live handle; outputs writable.
enum RcStatus rc_solution_eval_complex(const struct RcSolution *solution,
                                       double re,
                                       double im,
                                       double *out_re,
                                       double *out_im);

// Number of points in the alternation set.
//
// # Safety
// `solution` must be a live handle; `out_len` writable.
enum RcStatus rc_solution_alternation_len(const struct RcSolution *solution, size_t *out_len);

// Alternation point `index`: its abscissa (`INFINITY` for the point at
// infinity) and the sign `±1` of `F` there.
//
// # Safety
// `solution` must be a live handle; outputs writable.
enum RcStatus rc_solution_alternation_point(const struct RcSolution *solution,
                                            size_t index,
                                            double *out_x,
                                            int32_t *out_sign);

// Runs every structural check; `out_pass` receives 1 if all pass, else 0.
//
// # Safety
// `solution` must be a live handle; `out_pass` writable.
enum RcStatus rc_solution_verify(const struct RcSolution *solution,
                                 size_t samples,
                                 uint64_t seed,
                                 int32_t *out_pass);

// The solution as the JSON document written by the CLI; release with
// [`rc_string_free`].
//
// # Safety
// `solution` must be a live handle; `out_json` writable.
enum RcStatus rc_solution_to_json(const struct RcSolution *solution, char **out_json);

// Releases a string returned by this library; null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void rc_string_free(char *s);

// Green function of the complement of `set` with pole `pole` (`"inf"` or a decimal).
//
// # Safety
// String arguments must be NUL-terminated; `out_green` writable.
enum RcStatus rc_green_new(const char *set, const char *pole, struct RcGreen **out_green);

// Releases a Green function; null is ignored.
//
// # Safety
// `green` must come from [`rc_green_new`] and not be used afterwards.
void rc_green_free(struct RcGreen *green);

// `G(z)` at a complex point.
//
// # Safety
// `green` must be a live handle; `out_value` writable.
enum RcStatus rc_green_eval(const struct RcGreen *green, double re, double im, double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RATCHEB_H */
