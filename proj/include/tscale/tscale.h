/* C interface to the tscale library. All functions return a tsc_status;
 * on failure tsc_last_error() holds a one-line diagnostic for the calling
 * thread. Handles are opaque and owned by the caller. */
#ifndef TSCALE_TSCALE_H
#define TSCALE_TSCALE_H

#include <stddef.h>

#if defined(__GNUC__)
#define TSC_API __attribute__((visibility("default")))
#else
#define TSC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tsc_status {
  TSC_OK = 0,
  TSC_E_EMPTY_SCALE,
  TSC_E_NON_FINITE,
  TSC_E_NOT_MEMBER,
  TSC_E_DEGENERATE_SCALE,
  TSC_E_BAD_WINDOW,
  TSC_E_SYNTAX,
  TSC_E_UNKNOWN_FUNCTION,
  TSC_E_UNBOUND_VARIABLE,
  TSC_E_DOMAIN,
  TSC_E_NOT_DIFFERENTIABLE,
  TSC_E_OUTSIDE_KAPPA,
  TSC_E_MISSING_SAMPLE,
  TSC_E_INFEASIBLE_CONTROL,
  TSC_E_NO_FEASIBLE_CONTROL,
  TSC_E_BLOW_UP,
  TSC_E_IMPLICIT_SOLVE_FAILED,
  TSC_E_NON_REGRESSIVE,
  TSC_E_NO_EGRESS_CERTIFICATE,
  TSC_E_PARSE,
  TSC_E_VALIDATION,
  TSC_E_INVALID_ARGUMENT,
  TSC_E_IO,
  TSC_E_INTERNAL
} tsc_status;

typedef enum tsc_route { TSC_ROUTE_DIRECT = 0, TSC_ROUTE_DUALITY = 1 } tsc_route;

typedef struct tsc_scenario tsc_scenario;
typedef struct tsc_trajectory tsc_trajectory;

TSC_API const char* tsc_version(void);
TSC_API const char* tsc_status_name(tsc_status status);
TSC_API const char* tsc_last_error(void);

/* Scenarios */
TSC_API tsc_status tsc_scenario_load(const char* path, tsc_scenario** out);
TSC_API tsc_status tsc_scenario_parse(const char* json_text, tsc_scenario** out);
TSC_API tsc_status tsc_scenario_save(const tsc_scenario* s, const char* path);
TSC_API tsc_status tsc_scenario_dualize(const tsc_scenario* s, tsc_scenario** out);
TSC_API tsc_status tsc_scenario_dims(const tsc_scenario* s, size_t* n, size_t* m);
TSC_API tsc_status tsc_scenario_window(const tsc_scenario* s, double* t0, double* t1);
/* 0 for delta, 1 for nabla. */
TSC_API tsc_status tsc_scenario_mode(const tsc_scenario* s, int* nabla);
TSC_API void tsc_scenario_free(tsc_scenario* s);

/* Trajectories */
TSC_API tsc_status tsc_solve(const tsc_scenario* s, const double* y0, size_t n, tsc_route route,
                             tsc_trajectory** out);
TSC_API size_t tsc_trajectory_size(const tsc_trajectory* traj);
TSC_API size_t tsc_trajectory_dim(const tsc_trajectory* traj);
/* Writes grid point k to *t and its state to y[0..dim). */
TSC_API tsc_status tsc_trajectory_point(const tsc_trajectory* traj, size_t k, double* t, double* y);
TSC_API tsc_status tsc_trajectory_write_csv(const tsc_trajectory* traj, const char* path);
/* Reads a trajectory CSV in the scenario's calculus mode. */
TSC_API tsc_status tsc_trajectory_read_csv(const tsc_scenario* s, const char* path, tsc_trajectory** out);
TSC_API void tsc_trajectory_free(tsc_trajectory* traj);

/* Strict egress check */
typedef struct tsc_egress_summary {
  int all_strict_egress;
  size_t samples;
  size_t worst_face; /* 1-based coordinate */
  int worst_upper;   /* 0 lower face, 1 upper face */
  double worst_t;
  double worst_margin;
} tsc_egress_summary;

/* csv_path may be NULL. */
TSC_API tsc_status tsc_check_egress(const tsc_scenario* s, const char* csv_path, tsc_egress_summary* out);

/* Viability search */
typedef struct tsc_search_summary {
  int found;
  double min_tube_margin;
  size_t evaluations;
  size_t levels;
} tsc_search_summary;

/* y_bar (length n), traj and json_path may each be NULL. */
TSC_API tsc_status tsc_search_viable(const tsc_scenario* s, int override_egress, tsc_search_summary* out,
                                     double* y_bar, tsc_trajectory** traj, const char* json_path);

/* Control recovery */
typedef struct tsc_recovery_summary {
  size_t points;
  double max_residual;
  double fail_t;        /* set on TSC_E_NO_FEASIBLE_CONTROL */
  double fail_residual; /* set on TSC_E_NO_FEASIBLE_CONTROL */
} tsc_recovery_summary;

TSC_API tsc_status tsc_recover_control(const tsc_scenario* s, const tsc_trajectory* traj, double tol,
                                       const char* csv_path, tsc_recovery_summary* out);

/* Derivative duality residuals of expr(t) at the window grid points. */
TSC_API tsc_status tsc_derivative_duality(const tsc_scenario* s, const char* expr, int nabla, const char* csv_path,
                                          double* max_residual);

/* Built-in checks */
typedef void (*tsc_selftest_callback)(const char* name, int passed, const char* detail, void* user);
TSC_API tsc_status tsc_selftest(tsc_selftest_callback cb, void* user, size_t* passed, size_t* failed);

#ifdef __cplusplus
}
#endif

#endif
