#ifndef EPPNET_C_H
#define EPPNET_C_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Opaque session handle. All functions return 0 on success, 1 on a
 * validation error (bad config, missing stage dependency), 2 on a runtime
 * error. A human-readable message for the last failure is available via
 * eppnet_last_error until the next call on the same session. */
typedef struct eppnet_session eppnet_session;

eppnet_session* eppnet_session_new(void);
void eppnet_session_free(eppnet_session* s);

/* Message for the most recent failing call, or "" if none. The pointer is
 * owned by the session and valid until the next API call on it. */
const char* eppnet_last_error(const eppnet_session* s);

/* Generates a synthetic dataset plus a ready-to-run config.json under
 * out_dir. mode: 0 = motion-separable classes, 1 = complementary
 * (skeleton and image each carry half of a 4-class label). */
int eppnet_synth(eppnet_session* s, const char* out_dir, int classes,
                 int samples_per_class, uint64_t seed, int mode);

/* Runs one stage (prepare|derive|parsemap|train|eval|fuse|report) or
 * "all". Optional overrides may be NULL / 0-length:
 *   workspace     replaces the configured workspace directory
 *   seed_override non-zero pointer -> use *seed_override
 *   modalities    array of modality labels (J B JM BM P)
 *   weights       per-modality fusion weights aligned with modalities
 */
int eppnet_run(eppnet_session* s, const char* config_path, const char* stage,
               const char* workspace, const uint64_t* seed_override,
               const char* const* modalities, size_t modality_count,
               const float* weights, size_t weight_count);

/* Rebuilds the report from evaluation outputs already in the workspace.
 * modalities may be NULL to use every modality with scores present. */
int eppnet_report(eppnet_session* s, const char* workspace,
                  const char* const* modalities, size_t modality_count);

#ifdef __cplusplus
}
#endif

#endif /* EPPNET_C_H */
