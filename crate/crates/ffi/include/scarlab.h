#ifndef SCARLAB_H
#define SCARLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum ScarStatus {
  SCAR_STATUS_OK = 0,
  SCAR_STATUS_NULL_POINTER = 1,
  SCAR_STATUS_INVALID_ARGUMENT = 2,
  SCAR_STATUS_DIMENSION_LIMIT = 3,
  SCAR_STATUS_NUMERICAL = 4,
  SCAR_STATUS_PANIC = 5,
} ScarStatus;

typedef struct ScarBasis ScarBasis;

typedef struct ScarGraph ScarGraph;

typedef struct ScarOperator ScarOperator;

typedef struct ScarPairing ScarPairing;

typedef struct ScarState ScarState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t scar_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *scar_version(void);

/**
 * Graph on `n` vertices from `n_edges` pairs stored flat in `edges`.
 *
 * # Safety
 * `edges` must point to `2 * n_edges` values.
 */
enum ScarStatus scar_graph_new(size_t n,
                               const size_t *edges,
                               size_t n_edges,
                               struct ScarGraph **out);

/**
 * Builds a named geometry (`ring`, `dangler`, `chain-obc`, `grid`, ...)
 * with `L` pairs. `height` of 0 means the default; `variant` may be null.
 * `out_pairing` receives null for geometries without a pairing.
 *
 * # Safety
 * `name` and a non-null `variant` must be NUL-terminated strings.
 */
enum ScarStatus scar_geometry_build(const char *name,
                                    size_t l,
                                    size_t height,
                                    const char *variant,
                                    struct ScarGraph **out_graph,
                                    struct ScarPairing **out_pairing);

/**
 * # Safety
 * `graph` must be a live handle.
 */
size_t scar_graph_n_vertices(const struct ScarGraph *graph);

/**
 * # Safety
 * `graph` must be null or a handle not yet freed.
 */
void scar_graph_free(struct ScarGraph *graph);

/**
 * Pairing from `n_pairs` pairs `(a, ā)` stored flat in `pairs`.
 *
 * # Safety
 * `pairs` must point to `2 * n_pairs` values.
 */
enum ScarStatus scar_pairing_new(const size_t *pairs, size_t n_pairs, struct ScarPairing **out);

/**
 * # Safety
 * `pairing` must be a live handle.
 */
size_t scar_pairing_len(const struct ScarPairing *pairing);

/**
 * # Safety
 * `pairing` must be null or a handle not yet freed.
 */
void scar_pairing_free(struct ScarPairing *pairing);

/**
 * Blockaded basis of `graph`.
 *
 * # Safety
 * `graph` must be a live handle.
 */
enum ScarStatus scar_basis_new(const struct ScarGraph *graph, struct ScarBasis **out);

/**
 * # Safety
 * `basis` must be a live handle.
 */
size_t scar_basis_dim(const struct ScarBasis *basis);

/**
 * Bitstring of basis state `k` (bit `v` is vertex `v`).
 *
 * # Safety
 * `basis` must be a live handle.
 */
enum ScarStatus scar_basis_state(const struct ScarBasis *basis, size_t k, uint64_t *out);

/**
 * # Safety
 * `basis` must be null or a handle not yet freed.
 */
void scar_basis_free(struct ScarBasis *basis);

/**
 * PXP Hamiltonian of the basis graph.
 *
 * # Safety
 * `basis` must be a live handle.
 */
enum ScarStatus scar_pxp_new(const struct ScarBasis *basis, struct ScarOperator **out);

/**
 * # Safety
 * `op` must be null or a handle not yet freed.
 */
void scar_operator_free(struct ScarOperator *op);

/**
 * Doubled state of `pairing` on `basis`; the pairing must certify the graph.
 *
 * # Safety
 * Both handles must be live.
 */
enum ScarStatus scar_lambda_new(const struct ScarBasis *basis,
                                const struct ScarPairing *pairing,
                                struct ScarState **out);

/**
 * Basis state `bits` on `basis`.
 *
 * # Safety
 * `basis` must be a live handle.
 */
enum ScarStatus scar_state_product(const struct ScarBasis *basis,
                                   uint64_t bits,
                                   struct ScarState **out);

/**
 * # Safety
 * `state` must be a live handle.
 */
size_t scar_state_dim(const struct ScarState *state);

/**
 * Copies the amplitudes into `re` and `im`, each of length `len = dim`.
 *
 * # Safety
 * `re` and `im` must point to `len` writable doubles.
 */
enum ScarStatus scar_state_amplitudes(const struct ScarState *state,
                                      double *re,
                                      double *im,
                                      size_t len);

/**
 * `‖(H − E)ψ‖`.
 *
 * # Safety
 * Handles must be live.
 */
enum ScarStatus scar_residual(const struct ScarOperator *op,
                              const struct ScarState *state,
                              double energy,
                              double *out);

/**
 * `e^{−iHt} ψ` with the default propagator settings.
 *
 * # Safety
 * Handles must be live.
 */
enum ScarStatus scar_evolve(const struct ScarOperator *op,
                            const struct ScarState *state,
                            double t,
                            struct ScarState **out);

/**
 * Von Neumann entropy of the vertices listed in `subset`.
 *
 * # Safety
 * `subset` must point to `len` values.
 */
enum ScarStatus scar_entropy(const struct ScarState *state,
                             const size_t *subset,
                             size_t len,
                             double *out);

/**
 * # Safety
 * `state` must be null or a handle not yet freed.
 */
void scar_state_free(struct ScarState *state);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCARLAB_H */
