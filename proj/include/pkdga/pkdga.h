#ifndef PKDGA_PKDGA_H
#define PKDGA_PKDGA_H

/* C interface to the PKDGA lab. Every object is an opaque handle owned by
 * the caller and released with its _free function. Functions return a
 * pkdga_status; on failure pkdga_last_error() describes the cause for the
 * calling thread until its next failing call. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(PKDGA_BUILDING)
#define PKDGA_API __declspec(dllexport)
#else
#define PKDGA_API __declspec(dllimport)
#endif
#else
#define PKDGA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pkdga_status {
  PKDGA_OK = 0,
  PKDGA_E_USAGE = 1,
  PKDGA_E_DATA = 2,
  PKDGA_E_NUMERIC = 3,
  PKDGA_E_RANGE = 4,
  PKDGA_E_ASSEMBLY = 5,
  PKDGA_E_CONTRACT = 6,
  PKDGA_E_TRAINING = 7,
  PKDGA_E_UNSUPPORTED = 8,
  PKDGA_E_BUDGET = 9,
  PKDGA_E_IO = 10,
  PKDGA_E_ROUND_FAILURE = 11,
  PKDGA_E_INTERNAL = 12
} pkdga_status;

typedef struct pkdga_config pkdga_config;
typedef struct pkdga_strings pkdga_strings;
typedef struct pkdga_policy pkdga_policy;
typedef struct pkdga_detector pkdga_detector;
typedef struct pkdga_env pkdga_env;

typedef void (*pkdga_log_fn)(const char* message, void* user);

PKDGA_API const char* pkdga_version(void);
PKDGA_API const char* pkdga_status_name(pkdga_status status);
PKDGA_API const char* pkdga_last_error(void);

/* Progress messages from long-running workflows; NULL disables. */
PKDGA_API void pkdga_set_log_callback(pkdga_log_fn fn, void* user);

/* Worker thread cap; 0 means all available cores. */
PKDGA_API void pkdga_set_threads(size_t count);

/* ---- configuration ---- */

PKDGA_API pkdga_status pkdga_config_new(pkdga_config** out);
PKDGA_API pkdga_status pkdga_config_load(const char* path, pkdga_config** out);
PKDGA_API pkdga_status pkdga_config_set(pkdga_config* cfg, const char* key, const char* value);
/* Copies the effective value into buf (NUL-terminated, truncated to cap);
 * *len receives the full length. */
PKDGA_API pkdga_status pkdga_config_get(const pkdga_config* cfg, const char* key, char* buf,
                                        size_t cap, size_t* len);
PKDGA_API void pkdga_config_free(pkdga_config* cfg);

/* ---- string lists ---- */

PKDGA_API size_t pkdga_strings_size(const pkdga_strings* list);
/* NULL when index is out of range. Valid until the list is freed. */
PKDGA_API const char* pkdga_strings_at(const pkdga_strings* list, size_t index);
PKDGA_API void pkdga_strings_free(pkdga_strings* list);

/* ---- domain names ---- */

/* 1 when every label is LDH, 1-63 chars, no edge hyphen, total <= 253. */
PKDGA_API int pkdga_validate_domain(const char* name);
/* Seed encoding of an ISO date (YYYY-MM-DD) within [start, end]. */
PKDGA_API pkdga_status pkdga_encode_seed(const char* date, const char* start, const char* end,
                                         size_t* hot_index, uint64_t* rng_seed);

/* ---- generators ---- */

/* dga is kraken, gozi or suppobox; words_path may be NULL for kraken. */
PKDGA_API pkdga_status pkdga_generate_baseline(const char* dga, const char* words_path,
                                               uint64_t seed, size_t count, pkdga_strings** out);

PKDGA_API pkdga_status pkdga_policy_init(size_t layers, size_t embed_dim, size_t hidden_dim,
                                         uint64_t seed, pkdga_policy** out);
PKDGA_API pkdga_status pkdga_policy_load(const char* path, pkdga_policy** out);
PKDGA_API pkdga_status pkdga_policy_save(const pkdga_policy* policy, const char* path);
PKDGA_API size_t pkdga_policy_parameter_count(const pkdga_policy* policy);
/* The ordered candidate list for one date of the default seed space. */
PKDGA_API pkdga_status pkdga_policy_candidates(const pkdga_policy* policy, const char* date,
                                               size_t count, size_t length, pkdga_strings** out);
PKDGA_API void pkdga_policy_free(pkdga_policy* policy);

/* ---- detectors ---- */

PKDGA_API pkdga_status pkdga_detector_load(const char* path, pkdga_detector** out);
PKDGA_API pkdga_status pkdga_detector_save(const pkdga_detector* det, const char* path);
/* P(benign) in [0, 1]. */
PKDGA_API pkdga_status pkdga_detector_score(const pkdga_detector* det, const char* name,
                                            double* score);
PKDGA_API const char* pkdga_detector_kind(const pkdga_detector* det);
PKDGA_API void pkdga_detector_free(pkdga_detector* det);

/* ---- registration environment ---- */

/* Registry pre-seeded from the benign corpus file. */
PKDGA_API pkdga_status pkdga_env_new(const pkdga_detector* det, const char* benign_path,
                                     uint64_t query_budget, pkdga_env** out);
PKDGA_API pkdga_status pkdga_env_register(pkdga_env* env, const char* fqdn, int* outcome,
                                          int* d_factor, int* n_factor);
/* *found is 1 and buf holds the bound address when the name is ours. */
PKDGA_API pkdga_status pkdga_env_resolve(const pkdga_env* env, const char* fqdn, char* buf,
                                         size_t cap, int* found);
PKDGA_API uint64_t pkdga_env_query_count(const pkdga_env* env);
PKDGA_API void pkdga_env_free(pkdga_env* env);

/* ---- workflows; results and manifest.txt go under out_dir ---- */

PKDGA_API pkdga_status pkdga_run_prep(const pkdga_config* cfg, const char* out_dir);
PKDGA_API pkdga_status pkdga_run_detector_train(const pkdga_config* cfg, const char* out_dir);
PKDGA_API pkdga_status pkdga_run_train(const pkdga_config* cfg, const char* out_dir);
PKDGA_API pkdga_status pkdga_run_generate(const pkdga_config* cfg, const char* dga, size_t count,
                                          pkdga_strings** out);
PKDGA_API pkdga_status pkdga_run_eval(const pkdga_config* cfg, const char* out_dir);
PKDGA_API pkdga_status pkdga_run_matrix(const pkdga_config* cfg, const char* out_dir);
PKDGA_API pkdga_status pkdga_run_game(const pkdga_config* cfg, const char* out_dir);
PKDGA_API pkdga_status pkdga_run_bench(const pkdga_config* cfg, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif
