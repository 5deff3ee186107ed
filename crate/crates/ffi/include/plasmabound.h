#ifndef PLASMABOUND_H
#define PLASMABOUND_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PbStatus {
  PB_STATUS_OK = 0,
  PB_STATUS_NULL_POINTER = 1,
  PB_STATUS_INVALID_ARGUMENT = 2,
  PB_STATUS_INVALID_DOMAIN = 3,
  PB_STATUS_NO_SOLUTION = 4,
  PB_STATUS_NOT_CONVERGED = 5,
  PB_STATUS_IO = 6,
  PB_STATUS_PANIC = 7,
  PB_STATUS_BUFFER_TOO_SMALL = 8,
} PbStatus;

typedef enum PbShape {
  PB_SHAPE_DISK = 0,
  /*
   `aspect × 1` rectangle; aspect 1 is the square.
   */
  PB_SHAPE_RECTANGLE = 1,
} PbShape;

/*
 A normalized domain with its factorized operator.
 */
typedef struct PbDomain PbDomain;

typedef struct PbSolution PbSolution;

/*
 Scalar summary of a solution. Radial solutions report `pde_residual` as NaN.
 */
typedef struct PbHeader {
  double lambda;
  double p;
  double alpha;
  double theta;
  double energy;
  double mass_residual;
  double pde_residual;
} PbHeader;

/*
 Counts of estimate entries by status.
 */
typedef struct PbCheckCounts {
  size_t pass;
  size_t fail;
  size_t not_applicable;
} PbCheckCounts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the last error message of this thread into `buf` (NUL terminated, truncated
 to fit) and returns the full message length in bytes.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
size_t pb_last_error(char *buf, size_t len);

/*
 Builds a unit-area disk or rectangle at resolution `n`.

 # Safety
 `out` must be a valid pointer to a handle slot.
 */
enum PbStatus pb_domain_new(enum PbShape shape, double aspect, size_t n, struct PbDomain **out);

/*
 Builds a domain from its JSON description, e.g. `{"shape": "square", "n": 64}`.

 # Safety
 `json` must be a NUL-terminated string and `out` a valid handle slot.
 */
enum PbStatus pb_domain_from_json(const char *json, struct PbDomain **out);

/*
 # Safety
 `domain` must be null or a handle from `pb_domain_new`/`pb_domain_from_json`,
 not freed before.
 */
void pb_domain_free(struct PbDomain *domain);

/*
 Number of grid nodes, which is the length of every field.

 # Safety
 `domain` must be a live handle and `out` writable.
 */
enum PbStatus pb_domain_node_count(const struct PbDomain *domain, size_t *out);

/*
 `|∂Ω|²/2π − 1` of the normalized domain.

 # Safety
 `domain` must be a live handle and `out` writable.
 */
enum PbStatus pb_domain_ell(const struct PbDomain *domain, double *out);

/*
 `λ_*(Ω, p)` from the grid Sobolev constant.

 # Safety
 `domain` must be a live handle and `out` writable.
 */
enum PbStatus pb_lambda_star(const struct PbDomain *domain, double p, double *out);

/*
 Solves the plasma problem at `(λ, p)`. Returns `NoSolution` past the positivity
 threshold.

 # Safety
 `domain` must be a live handle and `out` a valid handle slot.
 */
enum PbStatus pb_solve(const struct PbDomain *domain,
                       double lambda,
                       double p,
                       struct PbSolution **out);

/*
 # Safety
 `sol` must be null or a handle from `pb_solve`, not freed before.
 */
void pb_solution_free(struct PbSolution *sol);

/*
 # Safety
 `sol` must be a live handle and `out` writable.
 */
enum PbStatus pb_solution_header(const struct PbSolution *sol, struct PbHeader *out);

/*
 Copies `ψ` into `buf`, which must hold the domain's node count.

 # Safety
 `sol` must be a live handle and `buf` point to `len` writable doubles.
 */
enum PbStatus pb_solution_psi(const struct PbSolution *sol, double *buf, size_t len);

/*
 Evaluates the energy, L∞ and threshold estimates of a solution with relative
 `slack`.

 # Safety
 `domain` and `sol` must be live handles, `sol` solved on `domain`; `out` writable.
 */
enum PbStatus pb_check_estimates(const struct PbDomain *domain,
                                 const struct PbSolution *sol,
                                 double slack,
                                 struct PbCheckCounts *out);

/*
 Radial solution on the unit-area disk.

 # Safety
 `out` must be writable.
 */
enum PbStatus pb_radial_solve(double lambda, double p, struct PbHeader *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLASMABOUND_H */
