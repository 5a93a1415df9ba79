#ifndef UAVSEC_H
#define UAVSEC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum {
  UAVSEC_STATUS_OK = 0,
  UAVSEC_STATUS_NULL_POINTER = 1,
  UAVSEC_STATUS_INVALID_ARGUMENT = 2,
  UAVSEC_STATUS_CONFIG = 3,
  // The action broke a hard constraint (scheduling, roles, shapes).
  UAVSEC_STATUS_CONSTRAINT = 4,
  // Non-finite values, a singular kernel or diverged training.
  UAVSEC_STATUS_NUMERICAL = 5,
  UAVSEC_STATUS_NOT_FITTED = 6,
  UAVSEC_STATUS_IO = 7,
  // A Rust panic was caught at the boundary.
  UAVSEC_STATUS_PANIC = 8,
} UavsecStatus;

// Opaque configuration handle.
typedef struct UavsecConfig UavsecConfig;

// Opaque handle on one real environment with its own RNG stream.
typedef struct UavsecEnv UavsecEnv;

// Opaque handle on a fitted Gaussian-process estimator.
typedef struct UavsecGpr UavsecGpr;

// One joint action. Lengths: `le_moves` 2Z (x, y per UAV), `ea_move` 2,
// `modes` Z, `schedule` Q*Z (row q, column z), `formation` Z*(Z+1)
// (row z, column f, f = 0 is the BS).
typedef struct {
  const double *le_moves;
  const double *ea_move;
  const uint8_t *modes;
  const uint8_t *schedule;
  const uint8_t *formation;
} UavsecAction;

// Outcome of one slot.
typedef struct {
  double secure;
  double bs_throughput;
  double eave;
  uint64_t collected_bits;
  uint64_t arrived_bits;
  uint64_t discarded_bits;
  double collisions;
  double speed_violations;
  uint64_t slot;
  bool done;
} UavsecStepResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *uavsec_version(void);

// Message of the last failing call on this thread (empty if none). The
// pointer stays valid until the next failing call on the same thread.
const char *uavsec_last_error_message(void);

// Default configuration.
UavsecStatus uavsec_config_new(UavsecConfig **out);

// Loads a flat `key = value` file.
UavsecStatus uavsec_config_load(const char *path, UavsecConfig **out);

// Sets one key; `value` uses the file syntax (`3`, `0.5`, `true`, `"predicted"`).
UavsecStatus uavsec_config_set(UavsecConfig *cfg, const char *key, const char *value);

void uavsec_config_free(UavsecConfig *cfg);

// Builds the world for `seed` (GU layout and shadowing) and spawns the
// first episode.
UavsecStatus uavsec_env_new(const UavsecConfig *cfg, uint64_t seed, UavsecEnv **out);

void uavsec_env_free(UavsecEnv *env);

UavsecStatus uavsec_env_reset(UavsecEnv *env);

// Writes Q, Z and the horizon T.
UavsecStatus uavsec_env_dims(const UavsecEnv *env,
                             size_t *num_gu,
                             size_t *num_uav,
                             size_t *horizon);

// Copies LE-UAV positions (2Z values) and the EA position (2 values).
UavsecStatus uavsec_env_positions(const UavsecEnv *env,
                                  double *le_xy,
                                  size_t le_len,
                                  double *ea_xy,
                                  size_t ea_len);

// Copies GU queue lengths (Q values) and UAV buffer levels (Z values), in bits.
UavsecStatus uavsec_env_queues(const UavsecEnv *env,
                               uint64_t *gu,
                               size_t gu_len,
                               uint64_t *uav,
                               size_t uav_len);

// Advances one slot. Malformed or infeasible actions leave the state untouched.
UavsecStatus uavsec_env_step(UavsecEnv *env, const UavsecAction *action, UavsecStepResult *out);

// Fits a zero-mean squared-exponential GP to `n` points of dimension
// `dim` (row-major `x`) with hyperparameters chosen by marginal likelihood.
UavsecStatus uavsec_gpr_fit(const double *x,
                            size_t n,
                            size_t dim,
                            const double *y,
                            double sigma_obs,
                            uint64_t seed,
                            UavsecGpr **out);

// Conditions a GP with fixed hyperparameters; `n` may be 0 (prior only).
UavsecStatus uavsec_gpr_new(const double *x,
                            size_t n,
                            size_t dim,
                            const double *y,
                            double alpha,
                            double length,
                            double sigma_obs,
                            UavsecGpr **out);

// Posterior mean and latent variance at one query point of length `dim`.
UavsecStatus uavsec_gpr_predict(const UavsecGpr *gpr,
                                const double *q,
                                size_t dim,
                                double *mean,
                                double *var);

UavsecStatus uavsec_gpr_hyperparams(const UavsecGpr *gpr, double *alpha, double *length);

void uavsec_gpr_free(UavsecGpr *gpr);

// Runs one training cell and writes `metrics.csv` and `timing.csv` into
// `out_dir` (created if missing). `scheme` is mode_switching,
// fixed_jamming or no_jamming; `regime` is ideal_ppo, dt_ppo or dt_rppo.
UavsecStatus uavsec_run_scenario(const UavsecConfig *cfg,
                                 const char *scheme,
                                 const char *regime,
                                 uint64_t seed,
                                 size_t episodes,
                                 const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UAVSEC_H */
