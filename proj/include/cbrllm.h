/* C API for the CBR-LLM evasive-maneuver decision toolkit.
 *
 * All entry points return a status code; 0 is success. On failure the
 * per-context error message is available via cbr_last_error(). Output
 * strings are heap-allocated and must be released with cbr_string_free().
 */
#ifndef CBRLLM_H
#define CBRLLM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define CBR_OK 0
#define CBR_ERR_USAGE 1   /* bad arguments or configuration */
#define CBR_ERR_DATA 2    /* malformed files, invariant violations */
#define CBR_ERR_GATEWAY 3 /* transport / remote service failures */

typedef struct cbr_context cbr_context;

/* config_json (may be NULL for defaults) keys:
 *   base_url, timeout_ms, max_retries, backoff_base_ms,
 *   chat_path, embed_path, chat_text_field, embed_vector_field,
 *   chat_model, embed_model,
 *   mock_embed_dim   (> 0 switches to the deterministic mock embedder),
 *   chat_script_path (switches to the scripted mock chat model)
 */
cbr_context* cbr_context_create(const char* config_json);
void cbr_context_destroy(cbr_context* ctx);
const char* cbr_last_error(const cbr_context* ctx);
void cbr_string_free(char* s);
const char* cbr_version(void);

/* Validates a line-delimited dataset file. summary_json reports event and
 * per-risk-type counts plus any caption-length warnings. */
int cbr_ingest(cbr_context* ctx, const char* dataset_path, char** summary_json);

/* Stratified test/casebank split, written as two dataset files. */
int cbr_split(cbr_context* ctx, const char* dataset_path, size_t test_size, uint64_t seed,
              const char* test_out_path, const char* casebank_out_path, char** summary_json);

/* Embeds every casebank event and persists the case store. Resumable. */
int cbr_build_case_base(cbr_context* ctx, const char* casebank_path,
                        const char* store_out_path, char** summary_json);

/* Single batch run. params_json keys: test_path, out_dir, model_id,
 * prompt_mode ("risk-aware"/"risk-unaware"), sampling
 * ("similarity"/"random"/"none"), shots, seed, concurrency, and optionally
 * store_path, cross_type_random, examples_as_messages, template_dir,
 * retry_malformed. Writes records.jsonl, manifest.json, report.json. */
int cbr_run(cbr_context* ctx, const char* params_json, char** summary_json);

/* Sweep over {model_ids} x {modes} x {samplings} x {shot_counts} with an
 * optional 0-shot baseline, content-addressed cell caching. params_json
 * keys: test_path, store_path, out_dir, model_ids[], modes[], samplings[],
 * shot_counts[], include_zero_shot_baseline, seed, concurrency. */
int cbr_sweep(cbr_context* ctx, const char* params_json, char** summary_json);

/* Scores a records.jsonl file against the gold dataset. */
int cbr_evaluate(cbr_context* ctx, const char* records_path, const char* dataset_path,
                 char** report_json);

/* Renders overall / per-scenario / shot-curve tables from a sweep or run
 * directory. Missing cells are listed but do not fail the report. */
int cbr_report(cbr_context* ctx, const char* run_dir, char** tables_text);

/* Appends qualifying decisions from a run to the store. policy is
 * "correct-only" or "all". */
int cbr_retain(cbr_context* ctx, const char* records_path, const char* dataset_path,
               const char* store_path, const char* policy, char** summary_json);

#ifdef __cplusplus
}
#endif

#endif /* CBRLLM_H */
