#ifndef HYPERRATE_H
#define HYPERRATE_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HrStatus {
  HR_STATUS_OK = 0,
  HR_STATUS_NULL_POINTER = 1,
  HR_STATUS_INVALID_ARGUMENT = 2,
  HR_STATUS_IO = 3,
  HR_STATUS_CORRUPT = 4,
  HR_STATUS_PANIC = 5,
} HrStatus;

typedef struct HrBuffer HrBuffer;

typedef struct HrCube HrCube;

typedef struct HrLut HrLut;

typedef struct HrEncodeOptions {
  /**
   * Bits per sample.
   */
  double target_rate;
  uint16_t q_max;
  uint16_t q_init;
  uint32_t tau;
  uint32_t subset_len;
} HrEncodeOptions;

/**
 * Cube shape and sample format.
 */
typedef struct HrGeometry {
  uint32_t cols;
  uint32_t rows;
  uint32_t bands;
  uint8_t bit_depth;
  bool is_signed;
  bool big_endian;
} HrGeometry;

typedef struct HrEncodeStats {
  uint64_t samples;
  uint64_t payload_bytes;
  uint64_t container_bytes;
  uint64_t lookups;
  double payload_bpp;
  double container_bpp;
  bool lossless;
} HrEncodeStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *hr_last_error_message(void);

struct HrEncodeOptions hr_encode_options_default(void);

/**
 * Builds the rate table.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum HrStatus hr_lut_new(struct HrLut **out);

/**
 * Loads a rate table blob written by `hyperrate lut-dump`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HrStatus hr_lut_load(const char *path, struct HrLut **out);

/**
 * # Safety
 * `lut` must be null or a handle from `hr_lut_new`/`hr_lut_load` not yet freed.
 */
void hr_lut_free(struct HrLut *lut);

/**
 * Creates a cube from `len` samples in band-interleaved-by-line order.
 *
 * # Safety
 * `geometry` and `out` must be valid; `samples` must point to `len` values.
 */
enum HrStatus hr_cube_from_samples(const struct HrGeometry *geometry,
                                   const int32_t *samples,
                                   size_t len,
                                   struct HrCube **out);

/**
 * Creates a cube from headerless raw bytes laid out as `geometry` describes.
 *
 * # Safety
 * `geometry` and `out` must be valid; `bytes` must point to `len` bytes.
 */
enum HrStatus hr_cube_from_raw(const struct HrGeometry *geometry,
                               const uint8_t *bytes,
                               size_t len,
                               struct HrCube **out);

/**
 * # Safety
 * `cube` must be a live handle and `out` valid.
 */
enum HrStatus hr_cube_geometry(const struct HrCube *cube, struct HrGeometry *out);

/**
 * Borrows the cube's samples; valid while the handle lives.
 *
 * # Safety
 * `cube` must be a live handle; `data` and `len` must be valid.
 */
enum HrStatus hr_cube_samples(const struct HrCube *cube, const int32_t **data, size_t *len);

/**
 * # Safety
 * `cube` must be null or a live handle.
 */
void hr_cube_free(struct HrCube *cube);

/**
 * Compresses `cube`. `lut` may be null, in which case a table is built
 * for this call. `stats` may be null.
 *
 * # Safety
 * `cube`, `options` and `out` must be valid; `lut` and `stats` valid or null.
 */
enum HrStatus hr_compress(const struct HrCube *cube,
                          const struct HrEncodeOptions *options,
                          const struct HrLut *lut,
                          struct HrBuffer **out,
                          struct HrEncodeStats *stats);

/**
 * Borrows the buffer contents; valid while the handle lives.
 *
 * # Safety
 * `buffer` must be a live handle; `data` and `len` must be valid.
 */
enum HrStatus hr_buffer_data(const struct HrBuffer *buffer, const uint8_t **data, size_t *len);

/**
 * # Safety
 * `buffer` must be null or a live handle.
 */
void hr_buffer_free(struct HrBuffer *buffer);

/**
 * Decodes a container produced by `hr_compress`.
 *
 * # Safety
 * `bytes` must point to `len` bytes and `out` must be valid.
 */
enum HrStatus hr_decompress(const uint8_t *bytes, size_t len, struct HrCube **out);

/**
 * SNR in dB (infinite when identical) and maximum absolute difference.
 *
 * # Safety
 * Both cubes must be live handles; `snr_db` and `mad` must be valid.
 */
enum HrStatus hr_metrics(const struct HrCube *original,
                         const struct HrCube *reconstructed,
                         double *snr_db,
                         uint32_t *mad);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPERRATE_H */
