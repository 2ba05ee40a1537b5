/* Copyright 2026 The EEGTCAV Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C API of the eegtcav shared library.
 *
 * All functions return an eegtcav_status; on failure the thread-local
 * message from eegtcav_last_error() describes what went wrong. Handles are
 * opaque and must be released with the matching _free function. Unexpected
 * internal failures are reported as EEGTCAV_NUMERIC.
 */

#ifndef EEGTCAV_H_
#define EEGTCAV_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Mirrors the CLI exit codes. */
typedef enum eegtcav_status {
  EEGTCAV_OK = 0,
  EEGTCAV_CONFIG = 1, /* bad configuration or missing referenced path */
  EEGTCAV_DATA = 2,   /* malformed or insufficient input data */
  EEGTCAV_NUMERIC = 3 /* numerical failure (divergence, degeneracy) */
} eegtcav_status;

const char* eegtcav_version(void);

/* Message of the most recent failing call on this thread; never NULL. */
const char* eegtcav_last_error(void);

/* ----------------------------------------------------------- configuration */

typedef struct eegtcav_config eegtcav_config;

eegtcav_status eegtcav_config_load(const char* path, eegtcav_config** out);
eegtcav_status eegtcav_config_parse(const char* text, eegtcav_config** out);
void eegtcav_config_free(eegtcav_config* cfg);

/* ---------------------------------------------------------------- commands */

/* Optional per-line progress sink. `line` has no trailing newline. */
typedef void (*eegtcav_log_fn)(const char* line, void* user);

typedef struct eegtcav_run_options {
  int has_seed;       /* nonzero: `seed` overrides the config seed */
  uint64_t seed;
  int threads;        /* 0 picks the hardware concurrency */
  int no_timestamp;   /* nonzero: omit the generation time from SVG output */
} eegtcav_run_options;

/* Pipeline commands; `options` and `log` may be NULL. */
eegtcav_status eegtcav_run_preprocess(const eegtcav_config* cfg,
                                      const eegtcav_run_options* options,
                                      eegtcav_log_fn log, void* user);
eegtcav_status eegtcav_run_build_concepts(const eegtcav_config* cfg,
                                          const eegtcav_run_options* options,
                                          eegtcav_log_fn log, void* user);
eegtcav_status eegtcav_run_finetune(const eegtcav_config* cfg,
                                    const eegtcav_run_options* options,
                                    eegtcav_log_fn log, void* user);
eegtcav_status eegtcav_run_tcav(const eegtcav_config* cfg,
                                const eegtcav_run_options* options,
                                eegtcav_log_fn log, void* user);
eegtcav_status eegtcav_run_report(const eegtcav_config* cfg,
                                  const eegtcav_run_options* options,
                                  eegtcav_log_fn log, void* user);

/* ------------------------------------------------------------------- model */

typedef struct eegtcav_model eegtcav_model;

eegtcav_status eegtcav_model_load(const char* path, eegtcav_model** out);
void eegtcav_model_free(eegtcav_model* model);

eegtcav_status eegtcav_model_num_classes(const eegtcav_model* model, int* out);

/* Bottleneck indices: 0 encoder, 1 encoding_augment, 2 summarizer,
 * 3 extended_classifier, 4 classifier. */
eegtcav_status eegtcav_model_activation_dim(const eegtcav_model* model, int bottleneck,
                                            int input_len, int* out);

/* `window` is row-major [channels][samples]. `logits` receives num_classes
 * values; `logits_cap` is its capacity. */
eegtcav_status eegtcav_model_logits(const eegtcav_model* model, const float* window,
                                    int channels, int samples, float* logits,
                                    int logits_cap);

/* ----------------------------------------------------------------- windows */

/* Reads an EEGW container header and reports its dimensions. */
eegtcav_status eegtcav_windows_info(const char* path, uint32_t* num_windows,
                                    uint32_t* num_channels, uint32_t* num_samples);

/* ------------------------------------------------------------------- stats */

/* Two-sided Mann-Whitney U p-value (exact for small tie-free samples). */
eegtcav_status eegtcav_mann_whitney_p(const double* a, size_t n_a, const double* b,
                                      size_t n_b, double* p_two_sided);

/* Bonferroni correction: min(1, p * m). */
eegtcav_status eegtcav_bonferroni(double p, int m, double* corrected);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* EEGTCAV_H_ */
