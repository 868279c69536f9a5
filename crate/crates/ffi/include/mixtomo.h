#ifndef MIXTOMO_H
#define MIXTOMO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum MtStatus {
  MT_OK = 0,
  MT_NULL_POINTER = 1,
  MT_INVALID_ARGUMENT = 2,
  MT_NUMERICAL = 3,
  MT_IO = 4,
  MT_SCHEME_MISMATCH = 5,
  MT_PANIC = 6,
} MtStatus;

/**
 * Measurement scheme of a dataset.
 */
typedef enum MtScheme {
  /**
   * Every Pauli product basis.
   */
  MT_PROJECTIVE = 0,
  /**
   * The tensor-product Pauli-4 POVM.
   */
  MT_POVM4 = 1,
} MtScheme;

typedef enum MtModelKind {
  MT_NDO = 0,
  MT_POVMNQS = 1,
} MtModelKind;

typedef struct MtDataset MtDataset;

typedef struct MtDensityMatrix MtDensityMatrix;

typedef struct MtHamiltonian MtHamiltonian;

typedef struct MtModel MtModel;

/**
 * Reconstruction metrics of a model against an exact target.
 */
typedef struct MtMetrics {
  double kl;
  double energy_error;
  double infidelity;
  double infidelity_swapped;
  double classical_infidelity;
  double trace_distance;
} MtMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next `mt_*` call on the same thread.
 */
const char *mt_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mt_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void mt_string_free(char *s);

/**
 * Open-chain transverse-field Ising Hamiltonian `-sum Z Z - h sum X`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MtStatus mt_hamiltonian_tfim(uintptr_t n, double h, struct MtHamiltonian **out);

/**
 * Parses a Hamiltonian with one `coefficient PAULIS` term per line.
 *
 * # Safety
 * `src` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MtStatus mt_hamiltonian_parse(const char *src, struct MtHamiltonian **out);

/**
 * # Safety
 * `h` must be a live handle or null.
 */
uintptr_t mt_hamiltonian_n_qubits(const struct MtHamiltonian *h);

/**
 * # Safety
 * `h` must come from this library and not be freed twice.
 */
void mt_hamiltonian_free(struct MtHamiltonian *h);

/**
 * Gibbs state `exp(-beta H) / Z`.
 *
 * # Safety
 * `h` must be a live handle and `out` a valid pointer.
 */
enum MtStatus mt_thermal_state(const struct MtHamiltonian *h,
                               double beta,
                               struct MtDensityMatrix **out);

/**
 * Ground state mixed with the maximally mixed state at strength `depol`.
 *
 * # Safety
 * `h` must be a live handle and `out` a valid pointer.
 */
enum MtStatus mt_ground_state(const struct MtHamiltonian *h,
                              double depol,
                              struct MtDensityMatrix **out);

/**
 * # Safety
 * `rho` must be a live handle or null.
 */
uintptr_t mt_density_dim(const struct MtDensityMatrix *rho);

/**
 * Copies the matrix in row-major order into `re` and `im`, each of length
 * `len = dim * dim`.
 *
 * # Safety
 * `re` and `im` must point to `len` writable doubles.
 */
enum MtStatus mt_density_entries(const struct MtDensityMatrix *rho,
                                 double *re,
                                 double *im,
                                 uintptr_t len);

/**
 * # Safety
 * `rho` must come from this library and not be freed twice.
 */
void mt_density_free(struct MtDensityMatrix *rho);

/**
 * `1 - F(rho, sigma)` with `F = (tr sqrt(sqrt(sigma) rho sqrt(sigma)))^2`.
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
enum MtStatus mt_infidelity(const struct MtDensityMatrix *rho,
                            const struct MtDensityMatrix *sigma,
                            double *out);

/**
 * # Safety
 * Handles must be live and `out` valid.
 */
enum MtStatus mt_trace_distance(const struct MtDensityMatrix *rho,
                                const struct MtDensityMatrix *sigma,
                                double *out);

/**
 * # Safety
 * Handles must be live and `out` valid.
 */
enum MtStatus mt_energy(const struct MtDensityMatrix *rho,
                        const struct MtHamiltonian *h,
                        double *out);

/**
 * Samples `shots` outcomes per basis (projective) or in total (POVM).
 *
 * # Safety
 * `rho` must be a live handle and `out` a valid pointer.
 */
enum MtStatus mt_dataset_sample(const struct MtDensityMatrix *rho,
                                enum MtScheme scheme,
                                uintptr_t shots,
                                uint64_t seed,
                                struct MtDataset **out);

/**
 * Parses a dataset in the JSON-lines format.
 *
 * # Safety
 * `src` must be NUL-terminated and `out` valid.
 */
enum MtStatus mt_dataset_parse(const char *src, struct MtDataset **out);

/**
 * Serializes a dataset as JSON lines; release with [`mt_string_free`].
 *
 * # Safety
 * `ds` must be a live handle and `out` valid.
 */
enum MtStatus mt_dataset_to_jsonl(const struct MtDataset *ds, char **out);

/**
 * Number of recorded shots.
 *
 * # Safety
 * `ds` must be a live handle or null.
 */
uintptr_t mt_dataset_len(const struct MtDataset *ds);

/**
 * # Safety
 * `ds` must come from this library and not be freed twice.
 */
void mt_dataset_free(struct MtDataset *ds);

/**
 * Trains a model on `ds`. `config` is an optional TOML training config
 * (null for defaults); `seed` always overrides its seed.
 *
 * # Safety
 * `ds` must be a live handle, `config` null or NUL-terminated, `out` valid.
 */
enum MtStatus mt_model_train(enum MtModelKind kind,
                             const struct MtDataset *ds,
                             const char *config,
                             uint64_t seed,
                             struct MtModel **out);

/**
 * Parses a model saved as JSON.
 *
 * # Safety
 * `src` must be NUL-terminated and `out` valid.
 */
enum MtStatus mt_model_parse(const char *src, struct MtModel **out);

/**
 * Serializes a model as JSON; release with [`mt_string_free`].
 *
 * # Safety
 * `model` must be a live handle and `out` valid.
 */
enum MtStatus mt_model_to_json(const struct MtModel *model, char **out);

/**
 * Density matrix represented by a model.
 *
 * # Safety
 * `model` must be a live handle and `out` valid.
 */
enum MtStatus mt_model_state(const struct MtModel *model, struct MtDensityMatrix **out);

/**
 * Metrics of `model` against the exact target `rho` with Hamiltonian `h`.
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
enum MtStatus mt_model_evaluate(const struct MtModel *model,
                                const struct MtDensityMatrix *rho,
                                const struct MtHamiltonian *h,
                                struct MtMetrics *out);

/**
 * # Safety
 * `model` must come from this library and not be freed twice.
 */
void mt_model_free(struct MtModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIXTOMO_H */
