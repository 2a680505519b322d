#ifndef ISOVAR_H
#define ISOVAR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum IsovarStatus {
  IsovarStatus_Ok = 0,
  IsovarStatus_NullPointer = 1,
  IsovarStatus_InvalidString = 2,
  IsovarStatus_Parse = 3,
  IsovarStatus_Validation = 4,
  IsovarStatus_InvalidInput = 5,
  IsovarStatus_Numeric = 6,
  IsovarStatus_Unsupported = 7,
  IsovarStatus_Flow = 8,
  IsovarStatus_Io = 9,
  IsovarStatus_Panic = 10,
} IsovarStatus;

/*
 Verdict of an inequality check.
 */
typedef enum IsovarVerdict {
  IsovarVerdict_Holds = 0,
  IsovarVerdict_Violated = 1,
  IsovarVerdict_Inconclusive = 2,
} IsovarVerdict;

/*
 Riemannian ambient surface or Euclidean space.
 */
typedef struct IsovarAmbient IsovarAmbient;

/*
 Compact domain with boundary.
 */
typedef struct IsovarDomain IsovarDomain;

/*
 Polyline or triangle mesh.
 */
typedef struct IsovarMesh IsovarMesh;

typedef struct IsovarCheck {
  double lhs;
  double rhs;
  double ratio;
  double constant;
  double normalized;
  /*
   `α` of the nonlinear check; NaN otherwise.
   */
  double alpha;
  /*
   Gap of an inconclusive verdict; NaN otherwise.
   */
  double gap;
  enum IsovarVerdict verdict;
} IsovarCheck;

/*
 Dichotomy result. Fields that do not apply to the outcome are NaN.
 */
typedef struct IsovarDichotomy {
  /*
   1 when the flow went extinct, 0 when it converged.
   */
  int32_t extinct;
  double t_ext;
  double length;
  double residual;
  double eigenvalue;
  uintptr_t curve_count;
  uint64_t steps;
} IsovarDichotomy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failing call on this thread. Valid until the next
 failing call; never null.
 */
const char *isovar_last_error(void);

/*
 Release a string returned by this library.

 # Safety
 `s` must come from this library or be null.
 */
void isovar_string_free(char *s);

/*
 Euclidean plane.

 # Safety
 `out` must be valid for writes.
 */
enum IsovarStatus isovar_ambient_plane(struct IsovarAmbient **out);

/*
 Euclidean 3-space.

 # Safety
 `out` must be valid for writes.
 */
enum IsovarStatus isovar_ambient_space(struct IsovarAmbient **out);

/*
 Round sphere of the given radius, chart `(theta, phi)`.

 # Safety
 `out` must be valid for writes.
 */
enum IsovarStatus isovar_ambient_round_sphere(double radius, struct IsovarAmbient **out);

/*
 Surface of revolution with profile `r(z)` over `[z_lo, z_hi]`.

 # Safety
 `profile` must be a NUL-terminated string; `out` valid for writes.
 */
enum IsovarStatus isovar_ambient_revolution(const char *profile,
                                            double z_lo,
                                            double z_hi,
                                            struct IsovarAmbient **out);

/*
 # Safety
 `a` must come from this library or be null.
 */
void isovar_ambient_free(struct IsovarAmbient *a);

/*
 Plane circle with `n` segments.

 # Safety
 `out` must be valid for writes.
 */
enum IsovarStatus isovar_mesh_circle(double cx,
                                     double cy,
                                     double radius,
                                     uintptr_t n,
                                     struct IsovarMesh **out);

/*
 Coordinate circle `x⁰ = c` with `n` segments.

 # Safety
 `ambient` must be a live handle; `out` valid for writes.
 */
enum IsovarStatus isovar_mesh_latitude(const struct IsovarAmbient *ambient,
                                       double c,
                                       uintptr_t n,
                                       struct IsovarMesh **out);

/*
 Unit disk in E³ at the given refinement level.

 # Safety
 `out` must be valid for writes.
 */
enum IsovarStatus isovar_mesh_unit_disk(uintptr_t level, struct IsovarMesh **out);

/*
 Unit icosphere at the given subdivision level.

 # Safety
 `out` must be valid for writes.
 */
enum IsovarStatus isovar_mesh_icosphere(uintptr_t level, struct IsovarMesh **out);

/*
 Parse the mesh text format in `ambient`.

 # Safety
 `text` must be NUL-terminated; `ambient` a live handle; `out` valid for
 writes.
 */
enum IsovarStatus isovar_mesh_parse(const char *text,
                                    const struct IsovarAmbient *ambient,
                                    struct IsovarMesh **out);

/*
 Serialise in the mesh text format. Free the result with
 [`isovar_string_free`].

 # Safety
 `mesh` must be a live handle; `out` valid for writes.
 */
enum IsovarStatus isovar_mesh_to_text(const struct IsovarMesh *mesh, char **out);

/*
 Mesh statistics written to non-null out-pointers.

 # Safety
 `mesh` must be a live handle; each non-null pointer valid for writes.
 */
enum IsovarStatus isovar_mesh_measures(const struct IsovarMesh *mesh,
                                       double *measure,
                                       double *boundary,
                                       double *curvature);

/*
 # Safety
 `mesh` must be a live handle or null.
 */
uintptr_t isovar_mesh_dimension(const struct IsovarMesh *mesh);

/*
 # Safety
 `m` must come from this library or be null.
 */
void isovar_mesh_free(struct IsovarMesh *m);

/*
 Smallest-enclosing-ball bound in a Euclidean ambient.

 # Safety
 `mesh` must be a live handle; `out` valid for writes.
 */
enum IsovarStatus isovar_check_ball_bound(const struct IsovarMesh *mesh, struct IsovarCheck *out);

/*
 Linear inequality with constant `c`; `domain` may be null.

 # Safety
 `mesh` must be a live handle, `domain` live or null, `out` valid for
 writes.
 */
enum IsovarStatus isovar_check_linear(const struct IsovarMesh *mesh,
                                      double c,
                                      const struct IsovarDomain *domain,
                                      struct IsovarCheck *out);

/*
 Nonlinear inequality with Euclidean constant `c` and curvature bound `k`.
 Pass NaN for `linear_constant` when none is known.

 # Safety
 `mesh` must be a live handle; `out` valid for writes.
 */
enum IsovarStatus isovar_check_nonlinear(const struct IsovarMesh *mesh,
                                         double c,
                                         double k,
                                         double linear_constant,
                                         struct IsovarCheck *out);

/*
 Smallest eigenvalue of the Jacobi operator of a closed curve.

 # Safety
 `mesh` must be a live handle; `out` valid for writes.
 */
enum IsovarStatus isovar_stability_eigenvalue(const struct IsovarMesh *mesh,
                                              uintptr_t grid,
                                              double *out);

/*
 Disk in the plane.

 # Safety
 `out` must be valid for writes.
 */
enum IsovarStatus isovar_domain_disk(double cx,
                                     double cy,
                                     double radius,
                                     struct IsovarDomain **out);

/*
 Band `|z| ≤ h` on a surface of revolution.

 # Safety
 `ambient` must be a live handle; `out` valid for writes.
 */
enum IsovarStatus isovar_domain_band(const struct IsovarAmbient *ambient,
                                     double h,
                                     struct IsovarDomain **out);

/*
 Cap `θ ≤ θ₀` on a round sphere.

 # Safety
 `ambient` must be a live handle; `out` valid for writes.
 */
enum IsovarStatus isovar_domain_cap(const struct IsovarAmbient *ambient,
                                    double theta0,
                                    struct IsovarDomain **out);

/*
 # Safety
 `d` must come from this library or be null.
 */
void isovar_domain_free(struct IsovarDomain *d);

/*
 Flow the domain boundary with default parameters until extinction or
 convergence.

 # Safety
 `domain` must be a live handle; `out` valid for writes.
 */
enum IsovarStatus isovar_dichotomy(const struct IsovarDomain *domain, struct IsovarDichotomy *out);

/*
 Run a TOML scenario config and write its report files into `out_dir`.
 File inputs resolve against `base_dir` (may be null for the current
 directory). `seed` overrides the config seed when non-null. The run's exit
 code (0 all pass, 1 failed assertion, ≥ 2 error) goes to `exit_code`.

 # Safety
 Strings must be NUL-terminated; `seed` null or readable; `exit_code`
 valid for writes.
 */
enum IsovarStatus isovar_run_config(const char *text,
                                    const char *base_dir,
                                    const char *out_dir,
                                    const uint64_t *seed,
                                    int32_t *exit_code);

/*
 Library version, static storage.
 */
const char *isovar_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISOVAR_H */
