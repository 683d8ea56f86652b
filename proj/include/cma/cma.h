/*
 * C interface to the cma allocator library and benchmark harness.
 *
 * Every object is an opaque handle created by a *_create / *_load function
 * and released by the matching *_destroy. Functions that can fail return a
 * cma_status; on failure cma_last_error() describes the most recent error on
 * the calling thread. Handles are not thread safe.
 */
#ifndef CMA_CMA_H
#define CMA_CMA_H

#include <stddef.h>
#include <stdint.h>

#if defined(CMA_BUILDING_LIBRARY)
#define CMA_API __attribute__((visibility("default")))
#else
#define CMA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cma_status {
  CMA_OK = 0,
  CMA_E_INVALID_ARGUMENT = 1,
  CMA_E_ALLOCATION_FAILURE = 2,
  CMA_E_INVALID_MARK = 3,
  CMA_E_INVALID_FREE = 4,
  CMA_E_ACCOUNTING = 5,
  CMA_E_PARSE = 6,
  CMA_E_VALIDATION = 7,
  CMA_E_SAMPLING = 8,
  CMA_E_ANALYSIS = 9,
  CMA_E_PRECONDITION = 10,
  CMA_E_WORKLOAD = 11,
  CMA_E_PROFILE_MISSING = 12,
  CMA_E_COMPARISON = 13,
  CMA_E_IO = 14,
  CMA_E_INTERNAL = 15
} cma_status;

typedef enum cma_mode { CMA_MODE_CUSTOM = 0, CMA_MODE_NAIVE = 1 } cma_mode;
typedef enum cma_format { CMA_FORMAT_CSV = 0, CMA_FORMAT_JSON = 1 } cma_format;

CMA_API const char* cma_last_error(void);
CMA_API const char* cma_status_name(cma_status status);
/* Releases strings returned through char** out-parameters. */
CMA_API void cma_string_free(char* s);

/* ---- backing allocator ------------------------------------------------- */

typedef struct cma_backing cma_backing;

typedef struct cma_backing_counts {
  uint64_t allocations;
  uint64_t frees;
  uint64_t bytes;
  uint64_t failures;
} cma_backing_counts;

/* Counting shim over the process allocator. max_bytes == 0 means unlimited;
 * otherwise requests fail once max_bytes have been handed out. */
CMA_API cma_status cma_backing_create(size_t max_bytes, cma_backing** out);
CMA_API void cma_backing_destroy(cma_backing* backing);
CMA_API void cma_backing_counts_get(const cma_backing* backing, cma_backing_counts* out);
CMA_API void cma_backing_counts_reset(cma_backing* backing);

/* ---- region ------------------------------------------------------------ */

typedef struct cma_region cma_region;

typedef struct cma_region_options {
  size_t chunk_size;      /* 0 selects 65536 */
  size_t alignment;       /* 0 selects 16 */
  int doubling_growth;    /* nonzero: chunk sizes double up to 1 MiB */
  cma_mode mode;
} cma_region_options;

CMA_API cma_status cma_region_create(cma_backing* backing, const cma_region_options* options,
                                     cma_region** out);
CMA_API void cma_region_destroy(cma_region* region);
CMA_API cma_status cma_region_allocate(cma_region* region, size_t size, void** out);
CMA_API void cma_region_reset(cma_region* region);
/* mark == NULL frees everything. */
CMA_API cma_status cma_region_free_to(cma_region* region, void* mark);
CMA_API size_t cma_region_chunk_count(const cma_region* region);

/* ---- per-class pool ---------------------------------------------------- */

typedef struct cma_class_pool cma_class_pool;

CMA_API cma_status cma_class_pool_create(cma_backing* backing, size_t object_size, cma_mode mode,
                                         int debug_accounting, cma_class_pool** out);
CMA_API void cma_class_pool_destroy(cma_class_pool* pool);
CMA_API cma_status cma_class_pool_allocate(cma_class_pool* pool, void** out);
CMA_API cma_status cma_class_pool_free(cma_class_pool* pool, void* obj);
CMA_API size_t cma_class_pool_freelist_length(const cma_class_pool* pool);

/* ---- stack heap -------------------------------------------------------- */

typedef struct cma_stack_heap cma_stack_heap;

/* capacity == 0 selects 64 MiB. */
CMA_API cma_status cma_stack_heap_create(cma_backing* backing, size_t capacity, cma_mode mode,
                                         cma_stack_heap** out);
CMA_API void cma_stack_heap_destroy(cma_stack_heap* heap);
CMA_API cma_status cma_stack_heap_allocate(cma_stack_heap* heap, size_t size, void** out);
CMA_API cma_status cma_stack_heap_free(cma_stack_heap* heap, void* obj);
/* Bump cursor as a byte offset from the buffer base. */
CMA_API size_t cma_stack_heap_top(const cma_stack_heap* heap);

/* ---- mem pool ---------------------------------------------------------- */

typedef struct cma_mem_pool cma_mem_pool;
typedef void (*cma_visit_fn)(void* obj, void* user);

CMA_API cma_status cma_mem_pool_create(cma_backing* backing, size_t object_size,
                                       size_t objects_per_chunk, cma_mode mode,
                                       cma_mem_pool** out);
CMA_API void cma_mem_pool_destroy(cma_mem_pool* pool);
CMA_API cma_status cma_mem_pool_allocate(cma_mem_pool* pool, void** out);
CMA_API cma_status cma_mem_pool_free(cma_mem_pool* pool, void* obj);
/* The visitor may allocate from and free into the pool. */
CMA_API size_t cma_mem_pool_iterate(cma_mem_pool* pool, cma_visit_fn visit, void* user);
CMA_API size_t cma_mem_pool_live_count(const cma_mem_pool* pool);

/* ---- allocation profile ------------------------------------------------ */

typedef struct cma_profile cma_profile;

CMA_API cma_status cma_profile_create(size_t cutoff, cma_profile** out); /* 0 selects 4096 */
CMA_API void cma_profile_destroy(cma_profile* profile);
CMA_API cma_status cma_profile_record_allocation(cma_profile* profile, size_t size);
CMA_API cma_status cma_profile_record_free(cma_profile* profile);
CMA_API cma_status cma_profile_load(const char* path, cma_profile** out);
CMA_API cma_status cma_profile_save(const cma_profile* profile, const char* path);
CMA_API uint64_t cma_profile_peak_live(const cma_profile* profile);
CMA_API uint64_t cma_profile_total_recorded(const cma_profile* profile);
/* Number of distinct sizes; entries are indexed in increasing size order. */
CMA_API size_t cma_profile_entry_count(const cma_profile* profile);
CMA_API cma_status cma_profile_entry(const cma_profile* profile, size_t index, size_t* size,
                                     uint64_t* count);

/* ---- adversarial allocation -------------------------------------------- */

typedef struct cma_adv_config {
  double multiplier;
  double occupancy;
  uint64_t seed;
} cma_adv_config;

/* "adv0", "adv1", "adv3" or "adv10". */
CMA_API cma_status cma_adv_preset(const char* name, cma_adv_config* out);

typedef struct cma_ledger cma_ledger;

CMA_API cma_status cma_precondition(const cma_adv_config* config, const cma_profile* profile,
                                    cma_backing* backing, cma_ledger** out);
CMA_API uint64_t cma_ledger_allocations(const cma_ledger* ledger);
CMA_API uint64_t cma_ledger_frees(const cma_ledger* ledger);
CMA_API size_t cma_ledger_live_count(const cma_ledger* ledger);
/* Frees the surviving objects through `backing` and destroys the ledger.
 * Without this call the objects stay live for the life of the process. */
CMA_API void cma_ledger_release(cma_ledger* ledger, cma_backing* backing);
CMA_API void cma_ledger_destroy(cma_ledger* ledger);

/* ---- workloads --------------------------------------------------------- */

typedef enum cma_size_kind { CMA_SIZE_FIXED = 0, CMA_SIZE_UNIFORM = 1, CMA_SIZE_PROFILE = 2 } cma_size_kind;

typedef struct cma_workload_spec {
  char name[32];
  uint64_t object_count;
  cma_size_kind size_kind;
  size_t size_min; /* fixed size, or lower bound */
  size_t size_max;
  const cma_profile* size_profile; /* CMA_SIZE_PROFILE only; borrowed */
  uint32_t traversal_passes;
  double churn_ratio;
  uint64_t seed;
  uint32_t phases;
  uint32_t depth;
} cma_workload_spec;

typedef struct cma_allocator_settings {
  size_t chunk_size;        /* 0 selects 65536 */
  size_t objects_per_chunk; /* 0 selects 256 */
  size_t stack_capacity;    /* 0 selects 64 MiB */
} cma_allocator_settings;

typedef struct cma_workload_result {
  uint64_t checksum;
  uint64_t objects_allocated;
  uint64_t aligned_bytes;
  uint64_t visits;
  size_t final_stack_top;
  size_t trace_length;
  size_t trace_object_size;
} cma_workload_result;

CMA_API size_t cma_workload_count(void);
CMA_API const char* cma_workload_name(size_t index);
CMA_API cma_status cma_workload_default(const char* name, cma_workload_spec* out);
CMA_API cma_status cma_workload_load(const char* path, cma_workload_spec* out, cma_profile** profile_out);
/* trace may be NULL; otherwise it receives up to trace_capacity addresses. */
CMA_API cma_status cma_workload_run(const cma_workload_spec* spec, cma_mode mode,
                                    cma_backing* backing, const cma_allocator_settings* settings,
                                    cma_workload_result* result, uintptr_t* trace,
                                    size_t trace_capacity);

/* ---- locality ---------------------------------------------------------- */

typedef struct cma_locality {
  uint64_t objects;
  uint64_t unique_lines;
  double lines_per_object;
  double mean_traversal_gap;
  uint64_t span;
} cma_locality;

CMA_API cma_status cma_analyze_trace(const uintptr_t* trace, size_t length, size_t object_size,
                                     size_t line_size, cma_locality* out);
CMA_API double cma_spearman(const double* x, const double* y, size_t n);

/* ---- harness ----------------------------------------------------------- */

typedef struct cma_report cma_report; /* one or more run reports */

typedef struct cma_run_options {
  cma_workload_spec workload;
  cma_mode mode;
  char adversary_name[16]; /* label recorded in the report */
  cma_adv_config adversary;
  const cma_profile* profile; /* required when adversary.multiplier > 0; borrowed */
  uint32_t reps;              /* 0 selects 7 */
  size_t line_size;           /* 0 selects 64 */
  cma_allocator_settings allocator;
} cma_run_options;

CMA_API cma_status cma_run_options_default(const char* workload, cma_run_options* out);

/* Runs the workload once in naive mode with a recorder attached. */
CMA_API cma_status cma_bench_profile(const cma_workload_spec* spec, size_t cutoff,
                                     cma_profile** out);
/* Preconditions this process's heap, then measures. */
CMA_API cma_status cma_bench_run(const cma_run_options* options, cma_report** out);
/* One forked measurement per (occupancy, seed). */
CMA_API cma_status cma_bench_sweep(const cma_run_options* options, double multiplier,
                                   const double* occupancies, size_t occupancy_count,
                                   const uint64_t* seeds, size_t seed_count, cma_report** out);

CMA_API void cma_report_destroy(cma_report* report);
CMA_API size_t cma_report_count(const cma_report* report);
CMA_API cma_status cma_report_render(const cma_report* report, cma_format format, char** out);
CMA_API cma_status cma_report_write(const cma_report* report, cma_format format, const char* path);
CMA_API cma_status cma_report_read(const char* path, cma_report** out);
CMA_API cma_status cma_report_append(cma_report* into, const cma_report* from);
CMA_API uint64_t cma_report_median_ns(const cma_report* report, size_t index);
CMA_API uint64_t cma_report_checksum(const cma_report* report, size_t index);
CMA_API cma_status cma_report_locality(const cma_report* report, size_t index, cma_locality* out);
CMA_API cma_status cma_report_backing(const cma_report* report, size_t index, cma_backing_counts* out);
/* Non-empty for sweep cells that failed. Valid until the report is destroyed. */
CMA_API const char* cma_report_error(const cma_report* report, size_t index);

/* CSV of median ratios against reports[baseline]. */
CMA_API cma_status cma_compare(const cma_report* reports, size_t baseline, char** out_csv);

#ifdef __cplusplus
}
#endif

#endif /* CMA_CMA_H */
