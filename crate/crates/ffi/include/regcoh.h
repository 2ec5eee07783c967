/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef REGCOH_H
#define REGCOH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RegcohStatus {
  REGCOH_STATUS_OK = 0,
  REGCOH_STATUS_NULL_POINTER = 1,
  REGCOH_STATUS_INVALID_PARAMETER = 2,
  REGCOH_STATUS_NON_CONVERGENCE = 3,
  REGCOH_STATUS_NON_FINITE = 4,
  REGCOH_STATUS_DOMAIN_ERROR = 5,
  REGCOH_STATUS_OUT_OF_RANGE = 6,
  REGCOH_STATUS_BELOW_GROUND_ACTION = 7,
  REGCOH_STATUS_POLE = 8,
  REGCOH_STATUS_BUFFER_TOO_SMALL = 9,
  REGCOH_STATUS_PANIC = 10,
} RegcohStatus;

typedef enum RegcohScheme {
  REGCOH_SCHEME_WINDOW = 0,
  REGCOH_SCHEME_GAUSSIAN = 1,
  REGCOH_SCHEME_BUMP = 2,
} RegcohScheme;

typedef enum RegcohAxiom {
  REGCOH_AXIOM_NORMALIZATION = 0,
  REGCOH_AXIOM_CONTINUITY = 1,
  REGCOH_AXIOM_IDENTITY_RESOLUTION = 2,
  REGCOH_AXIOM_TEMPORAL_STABILITY = 3,
  REGCOH_AXIOM_ACTION_IDENTITY = 4,
} RegcohAxiom;

/**
 * A coherent-state family.
 */
typedef struct RegcohFamily RegcohFamily;

/**
 * A wavefunction x → ψ(x).
 */
typedef struct RegcohState RegcohState;

/**
 * Verdict of one axiom check; the full report is available as JSON.
 */
typedef struct RegcohReport {
  double measured;
  double predicted;
  double tolerance;
  /**
   * 1 if |measured − predicted| <= tolerance.
   */
  uint8_t pass;
} RegcohReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `cap`). Returns the full length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
uintptr_t regcoh_last_error(char *buf, uintptr_t cap);

/**
 * Free-particle fiducial. `a, b` are (k0, k1) for the window and bump
 * schemes and (kbar, A) for the Gaussian one.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RegcohStatus regcoh_free_fiducial(enum RegcohScheme scheme,
                                       double a,
                                       double b,
                                       struct RegcohState **out);

/**
 * e^{−iτH/ℏ}|q,p⟩ for a free-particle family; τ = 0 gives |q,p⟩.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RegcohStatus regcoh_free_coherent(enum RegcohScheme scheme,
                                       double a,
                                       double b,
                                       double hbar,
                                       double mass,
                                       double q,
                                       double p,
                                       double tau,
                                       struct RegcohState **out);

/**
 * e^{−itH}Ψ for the Gaussian-regularized inverted-oscillator fiducial
 * (ℏ = m = ω = 1); t = 0 gives the fiducial itself.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RegcohStatus regcoh_iho_fiducial(double ebar, double a, double t, struct RegcohState **out);

/**
 * Inverted-oscillator coherent state |q,p⟩.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RegcohStatus regcoh_iho_coherent(double ebar,
                                      double a,
                                      double q,
                                      double p,
                                      struct RegcohState **out);

/**
 * # Safety
 * `state` must come from a regcoh constructor and not be used afterwards.
 */
void regcoh_state_free(struct RegcohState *state);

/**
 * ψ(x) into (re, im).
 *
 * # Safety
 * All pointers must be valid.
 */
enum RegcohStatus regcoh_state_eval(const struct RegcohState *state,
                                    double x,
                                    double *re,
                                    double *im);

/**
 * ψ on `n` points.
 *
 * # Safety
 * `xs`, `re`, `im` must each hold `n` elements.
 */
enum RegcohStatus regcoh_state_eval_grid(const struct RegcohState *state,
                                         const double *xs,
                                         uintptr_t n,
                                         double *re,
                                         double *im);

/**
 * ‖ψ‖ by adaptive quadrature.
 *
 * # Safety
 * All pointers must be valid.
 */
enum RegcohStatus regcoh_state_norm(const struct RegcohState *state, double tol, double *out);

/**
 * ⟨φ|ψ⟩.
 *
 * # Safety
 * All pointers must be valid.
 */
enum RegcohStatus regcoh_state_inner(const struct RegcohState *phi,
                                     const struct RegcohState *psi,
                                     double tol,
                                     double *re,
                                     double *im);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum RegcohStatus regcoh_family_free_particle(enum RegcohScheme scheme,
                                              double a,
                                              double b,
                                              double hbar,
                                              double mass,
                                              struct RegcohFamily **out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum RegcohStatus regcoh_family_iho(double ebar, double a, double t_max, struct RegcohFamily **out);

/**
 * # Safety
 * `family` must come from a regcoh constructor and not be used afterwards.
 */
void regcoh_family_free(struct RegcohFamily *family);

/**
 * Runs one axiom with the suite defaults at label (q, p) and time τ.
 * If `json` is non-null the full report is written there as JSON
 * (NUL-terminated); `json_len` receives the length it needs.
 *
 * # Safety
 * `family` and `report` must be valid; `json` must hold `json_cap` bytes.
 */
enum RegcohStatus regcoh_verify(const struct RegcohFamily *family,
                                enum RegcohAxiom axiom,
                                double q,
                                double p,
                                double tau,
                                uint64_t seed,
                                struct RegcohReport *report,
                                char *json,
                                uintptr_t json_cap,
                                uintptr_t *json_len);

/**
 * Axiom from its snake_case name, e.g. "identity_resolution".
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` valid.
 */
enum RegcohStatus regcoh_axiom_from_name(const char *name, enum RegcohAxiom *out);

/**
 * W(E, x) and its x-derivative.
 *
 * # Safety
 * Output pointers must be valid.
 */
enum RegcohStatus regcoh_weber_w(double e, double x, double *w, double *dw);

/**
 * κ(E), φ(E) = arg Γ(½ − iE) and the normalization C₀(E).
 *
 * # Safety
 * Output pointers must be valid.
 */
enum RegcohStatus regcoh_energy_constants(double e, double *kappa, double *phi, double *c0);

/**
 * w(z) = e^{−z²} erfc(−iz).
 *
 * # Safety
 * Output pointers must be valid.
 */
enum RegcohStatus regcoh_faddeeva(double re, double im, double *out_re, double *out_im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REGCOH_H */
