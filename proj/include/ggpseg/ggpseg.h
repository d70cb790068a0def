// Copyright 2026 The ggpseg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the ggpseg segmentation library.
 *
 * Every function returns a ggp_status. On failure, ggp_last_error() gives a
 * message for the calling thread until its next call into the library.
 * Objects are opaque and owned by the caller, who releases them with the
 * matching *_free function. Strings returned through char** are allocated
 * by the library and released with ggp_string_free. Structured inputs and
 * results are JSON documents.
 */

#ifndef GGPSEG_GGPSEG_H_
#define GGPSEG_GGPSEG_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define GGP_API __declspec(dllexport)
#else
#define GGP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ggp_status {
  GGP_OK = 0,
  GGP_ERR_DIMENSION = 1,
  GGP_ERR_USAGE = 2,
  GGP_ERR_NUMERIC = 3,
  GGP_ERR_IO = 4,
  GGP_ERR_FORMAT = 5,
  GGP_ERR_NOT_FOUND = 6,
  GGP_ERR_CONFLICT = 7,
  GGP_ERR_INTERNAL = 99
} ggp_status;

typedef struct ggp_volume ggp_volume;
typedef struct ggp_model ggp_model;
typedef struct ggp_interactive ggp_interactive;
typedef struct ggp_service ggp_service;

GGP_API const char* ggp_version(void);
GGP_API const char* ggp_last_error(void);
GGP_API const char* ggp_status_name(ggp_status status);
GGP_API void ggp_string_free(char* s);

/* Phantom data. */

/* Writes `count` phantoms drawn from `seed` into `dir`. `options_json` may
 * be NULL or an object overriding phantom fields (e.g. decoyProbability). */
GGP_API ggp_status ggp_generate_corpus(const char* dir, size_t count, uint64_t seed,
                                       const char* options_json);
/* Member `index` of the corpus drawn from `seed`, generated in memory. */
GGP_API ggp_status ggp_volume_generate(uint64_t seed, size_t index, ggp_volume** out);
GGP_API ggp_status ggp_volume_load(const char* header_path, ggp_volume** out);
GGP_API ggp_status ggp_volume_save(const ggp_volume* volume, const char* dir);
GGP_API ggp_status ggp_volume_shape(const ggp_volume* volume, size_t* depth, size_t* height,
                                    size_t* width);
/* Reference mask of one slice (`target` is "gtv", "ctv" or "ptv"); `out`
 * holds height*width bytes. */
GGP_API ggp_status ggp_volume_mask(const ggp_volume* volume, const char* target, size_t slice,
                                   uint8_t* out, size_t out_len);
GGP_API void ggp_volume_free(ggp_volume* volume);

/* Training and evaluation. Configs use the keys of the train log's
 * "config" line; missing keys take their defaults. */

GGP_API ggp_status ggp_train(const char* config_json, const char* log_path, char** result_json);
GGP_API ggp_status ggp_cross_validate(const char* config_json, const char* log_path,
                                      char** result_json);
/* Scores a checkpoint on a fold of the corpus in `data_dir`; fold < 0 uses
 * the held-out fold recorded in the checkpoint. */
GGP_API ggp_status ggp_evaluate(const char* checkpoint_dir, const char* data_dir, int fold,
                                char** report_json);

/* Models. */

GGP_API ggp_status ggp_model_load(const char* checkpoint_dir, ggp_model** out);
GGP_API ggp_status ggp_model_info(const ggp_model* model, char** manifest_json);
/* Target-class probabilities for one slice, from the sequence centred on
 * it; `out` holds height*width floats. */
GGP_API ggp_status ggp_model_predict(const ggp_model* model, const ggp_volume* volume,
                                     size_t slice, float* out, size_t out_len);
GGP_API void ggp_model_free(ggp_model* model);

/* Interactive refinement. */

GGP_API ggp_status ggp_interactive_train(const char* config_json, const char* log_path,
                                         char** result_json);
GGP_API ggp_status ggp_interactive_load(const char* checkpoint_dir, ggp_interactive** out);
GGP_API void ggp_interactive_free(ggp_interactive* interactive);
/* Reconstructs the latent of `slice` toward `mask` (height*width bytes of
 * 0/1) and refines the other slices of its sequence. `refined` receives
 * sequence_length*height*width bytes, one mask per sequence position.
 * `options_json` may be NULL or hold reconstruction overrides and a
 * "center". The JSON result carries the trace and per-slice metrics. */
GGP_API ggp_status ggp_refine(const ggp_model* model, const ggp_interactive* interactive,
                              const ggp_volume* volume, size_t slice, const uint8_t* mask,
                              size_t mask_len, const char* options_json, uint8_t* refined,
                              size_t refined_len, char** result_json);
/* Worst-sequence edit experiment on a fold of `data_dir`. */
GGP_API ggp_status ggp_interactive_evaluate(const ggp_model* model,
                                            const ggp_interactive* interactive,
                                            const char* data_dir, int fold,
                                            const char* options_json, char** result_json);

/* HTTP service. */

GGP_API ggp_status ggp_service_create(const char* const* checkpoints, size_t checkpoint_count,
                                      const char* const* interactive, size_t interactive_count,
                                      ggp_service** out);
/* Blocks until ggp_service_stop. Port 0 picks a free port, reported
 * through `on_bound` (may be NULL) before serving starts. */
GGP_API ggp_status ggp_service_listen(ggp_service* service, const char* host, int port,
                                      void (*on_bound)(int port, void* user), void* user);
GGP_API ggp_status ggp_service_stop(ggp_service* service);
GGP_API void ggp_service_free(ggp_service* service);

#ifdef __cplusplus
}
#endif

#endif /* GGPSEG_GGPSEG_H_ */
