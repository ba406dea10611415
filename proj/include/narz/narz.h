#ifndef NARZ_NARZ_H
#define NARZ_NARZ_H

#include <stddef.h>

#if defined(_WIN32)
#define NARZ_API __declspec(dllexport)
#else
#define NARZ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes returned by every fallible call. Details of the most recent
 * failure on the calling thread are available from narz_last_error(). */
typedef enum narz_status {
  NARZ_OK = 0,
  NARZ_INVALID_ARGUMENT = 1,
  NARZ_UNKNOWN_FAMILY = 2,
  NARZ_NONPOSITIVE_SUPPORT = 3,
  NARZ_QUADRATURE_FAILURE = 4,
  NARZ_NON_ADJACENT_MERGE = 5,
  NARZ_STEP_SIZE_UNDERFLOW = 6,
  NARZ_GRID_MISMATCH = 7,
  NARZ_BAD_MASS_RULE = 8,
  NARZ_INSUFFICIENT_SNAPSHOTS = 9,
  NARZ_PARSE_ERROR = 10,
  NARZ_VALIDATION_ERROR = 11,
  NARZ_IO_ERROR = 12,
  NARZ_INTERNAL = 13
} narz_status;

typedef enum narz_event_kind {
  NARZ_EVENT_COLLISION = 0,
  NARZ_EVENT_SNAPSHOT = 1,
  NARZ_EVENT_HORIZON = 2
} narz_event_kind;

typedef struct narz_kernel narz_kernel;
typedef struct narz_system narz_system;
typedef struct narz_trajectory narz_trajectory;

typedef struct narz_kernel_info {
  double support_lo;
  double support_hi;
  double sup_omega;
  double sup_phi;
  double l1_phi;
} narz_kernel_info;

typedef struct narz_tolerances {
  double substep;    /* <= 0: horizon / 1e4 */
  double event_time; /* collision-time localization */
  double gap;        /* <= 0: 1e-12 (1 + R0) */
} narz_tolerances;

typedef struct narz_bounds {
  double psi_lo;
  double psi_hi;
  double vel_lo;
  double vel_hi;
  double m_tilde;
  double r0;
} narz_bounds;

NARZ_API const char* narz_version(void);
NARZ_API const char* narz_status_name(narz_status status);
/* Message of the last failure on this thread; empty after a success. */
NARZ_API const char* narz_last_error(void);

/* Kernels */
NARZ_API narz_status narz_kernel_create(const char* family, const double* params, size_t nparams,
                                        narz_kernel** out);
NARZ_API void narz_kernel_destroy(narz_kernel* k);
NARZ_API narz_status narz_kernel_eval(const narz_kernel* k, double x, double* omega, double* phi);
NARZ_API narz_status narz_kernel_get_info(const narz_kernel* k, narz_kernel_info* info);
/* Sets *passed to 1 when all admissibility checks pass. */
NARZ_API narz_status narz_kernel_validate(const narz_kernel* k, double quad_tol, int* passed);

/* Particle systems: positions sorted, positive masses summing to 1. */
NARZ_API narz_status narz_system_create(const double* x, const double* v, const double* m, size_t n,
                                        narz_system** out);
NARZ_API void narz_system_destroy(narz_system* s);
NARZ_API narz_status narz_system_size(const narz_system* s, size_t* particles, size_t* clusters);
/* psi must hold one entry per particle. */
NARZ_API narz_status narz_system_psi(const narz_system* s, const narz_kernel* k, double* psi);
NARZ_API narz_status narz_system_bounds(const narz_system* s, const narz_kernel* k, narz_bounds* out);

/* Simulation. tol may be NULL for defaults; snapshot times are absolute. */
NARZ_API narz_status narz_simulate(const narz_system* s0, const narz_kernel* k, double horizon,
                                   const double* snapshots, size_t nsnapshots,
                                   const narz_tolerances* tol, narz_trajectory** out);
NARZ_API void narz_trajectory_destroy(narz_trajectory* t);
NARZ_API narz_status narz_trajectory_state_count(const narz_trajectory* t, size_t* count);
/* Copies state `index`; x, v and psi (each may be NULL) hold one entry per
 * particle, cluster receives the first particle index of each particle's
 * cluster. */
NARZ_API narz_status narz_trajectory_state(const narz_trajectory* t, size_t index, double* time,
                                           narz_event_kind* kind, double* x, double* v, double* psi,
                                           size_t* cluster);
NARZ_API narz_status narz_trajectory_collision_count(const narz_trajectory* t, size_t* count);
/* Writes trajectory.csv and events.json into dir. */
NARZ_API narz_status narz_trajectory_write(const narz_trajectory* t, const char* dir);

/* Distances between atomic measures given as (position, mass) lists. */
NARZ_API narz_status narz_wasserstein1(const double* x1, const double* m1, size_t n1, const double* x2,
                                       const double* m2, size_t n2, double* out);
NARZ_API narz_status narz_stability_bounds(double t, double w1_0, double lip_diff, double sup_phi,
                                           double sup_omega, double* exp_bound, double* linear_bound,
                                           double* min_bound);

/* Commands. Each returns an exit code: 0 success, 1 assertion failure,
 * 2 input error; diagnostics go to standard error. NULL or non-positive
 * optional arguments select defaults. */
NARZ_API int narz_cmd_simulate(const char* scenario, const char* out_dir, double substep);
NARZ_API int narz_cmd_certify(const char* scenario, const char* trajectory, const char* alphas,
                              const char* out_dir);
NARZ_API int narz_cmd_converge(const char* scenario, const size_t* ns, size_t nns, size_t n_ref,
                               const char* out_dir);
NARZ_API int narz_cmd_stability(const char* a, const char* b, const char* out_dir);
NARZ_API int narz_cmd_kernels(void);

#ifdef __cplusplus
}
#endif

#endif /* NARZ_NARZ_H */
