/* C interface for the rotorlab experiment library. */

#ifndef ROTORLAB_H
#define ROTORLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes returned by all fallible functions. */
enum {
    RL_OK = 0,
    RL_ERR_NULL_ARG = 1,
    RL_ERR_UTF8 = 2,
    RL_ERR_CONFIG = 3,
    RL_ERR_RESONANCE = 4,
    RL_ERR_NUMERIC = 5,
    RL_ERR_IO = 6,
    RL_ERR_PANIC = 7,
};

/* Opaque experiment config; obtain via rl_config_parse / rl_config_load,
 * release with rl_config_free. */
typedef struct RlConfig RlConfig;

/* Copies the last error message on this thread into buf (NUL-terminated,
 * truncated to len bytes). Returns the full message length. */
size_t rl_last_error(char *buf, size_t len);

/* Static version string; do not free. */
const char *rl_version(void);

/* Golden mean frequency, the default diophantine test angle. */
double rl_golden_mean(void);

/* Parse and validate a config from TOML text. */
int rl_config_parse(const char *toml, RlConfig **out);

/* Parse and validate a config from a file. */
int rl_config_load(const char *path, RlConfig **out);

void rl_config_free(RlConfig *cfg);

uint64_t rl_config_seed(const RlConfig *cfg);
int rl_config_set_seed(RlConfig *cfg, uint64_t seed);

/* Run the experiment, writing manifest.toml, data files and summary.txt
 * under out_dir. threads <= 0 uses all cores; the thread count never
 * changes output bytes. On success *passed is 1 if all summary checks
 * passed, 0 otherwise. */
int rl_run(const RlConfig *cfg, const char *out_dir, int threads, int *passed);

#ifdef __cplusplus
}
#endif

#endif /* ROTORLAB_H */
