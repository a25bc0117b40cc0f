#ifndef HOLOVLC_H
#define HOLOVLC_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HvStatus {
  HV_STATUS_OK = 0,
  HV_STATUS_NULL_POINTER = 1,
  HV_STATUS_INVALID_ARGUMENT = 2,
  HV_STATUS_CONFIG = 3,
  HV_STATUS_DOMAIN = 4,
  HV_STATUS_NUMERIC = 5,
  HV_STATUS_IO = 6,
  HV_STATUS_PANIC = 7,
} HvStatus;

// Opaque impulse-response handle.
typedef struct HvImpulseResponse HvImpulseResponse;

// Opaque scene handle.
typedef struct HvScene HvScene;

typedef struct HvMetrics {
  double mean_delay_s;
  double delay_spread_s;
  double bandwidth_hz;
  // 1 when no 3 dB crossing exists below Nyquist.
  int32_t bandwidth_saturated;
  double path_loss_db;
  double received_power_w;
  double data_rate_bps;
} HvMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length in bytes.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
uintptr_t hv_last_error(char *buf, uintptr_t len);

// Builds the empty reference room.
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum HvStatus hv_scene_room_a(struct HvScene **out);

// Builds the furnished room with its default layout.
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum HvStatus hv_scene_room_b(struct HvScene **out);

// Loads a scene from a JSON file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` a valid handle slot.
enum HvStatus hv_scene_load(const char *path, struct HvScene **out);

// # Safety
// `scene` must be null or a handle from this library not yet freed.
void hv_scene_free(struct HvScene *scene);

// # Safety
// `scene` must be a live handle; `out` writable.
enum HvStatus hv_scene_luminaire_count(const struct HvScene *scene, uintptr_t *out);

// Traces one luminaire-to-receiver link. The receiver sits at (x, y) on the
// communication plane with default optics. A positive `beam_fraction` adds a
// flat-top beam carrying that share of the luminaire power onto the 2 m cell
// below it.
//
// # Safety
// `scene` must be a live handle; `out` a valid handle slot.
enum HvStatus hv_impulse_response(const struct HvScene *scene,
                                  uint32_t luminaire_id,
                                  double x,
                                  double y,
                                  uint8_t max_order,
                                  double dt,
                                  double beam_fraction,
                                  struct HvImpulseResponse **out);

// # Safety
// `ir` must be null or a live handle.
void hv_ir_free(struct HvImpulseResponse *ir);

// Number of bins and bin width in seconds.
//
// # Safety
// `ir` must be a live handle; `len` and `dt` writable.
enum HvStatus hv_ir_shape(const struct HvImpulseResponse *ir, uintptr_t *len, double *dt);

// Copies up to `len` bins (watts) into `buf`.
//
// # Safety
// `ir` must be a live handle; `buf` must hold `len` doubles.
enum HvStatus hv_ir_bins(const struct HvImpulseResponse *ir, double *buf, uintptr_t len);

// # Safety
// `ir` must be a live handle; `out` writable.
enum HvStatus hv_ir_received_power(const struct HvImpulseResponse *ir, double *out);

// Channel figures for a response, with `transmitted_w` as the path-loss
// reference.
//
// # Safety
// `ir` must be a live handle; `out` writable.
enum HvStatus hv_ir_metrics(const struct HvImpulseResponse *ir,
                            double transmitted_w,
                            struct HvMetrics *out);

// OOK bit rate supported by a bandwidth, bit/s.
double hv_ook_data_rate(double bandwidth_hz);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOLOVLC_H */
