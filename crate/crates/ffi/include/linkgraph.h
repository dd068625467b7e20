#ifndef LINKGRAPH_H
#define LINKGRAPH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  LG_CATEGORY_RELATION = 0,
  LG_CATEGORY_DUPLICATION = 1,
  LG_CATEGORY_COMPOSITION = 2,
  LG_CATEGORY_TEMPORAL_CAUSAL = 3,
  LG_CATEGORY_WORKFLOW = 4,
} LgCategory;

typedef enum {
  LG_STATUS_OK = 0,
  LG_STATUS_NULL_ARGUMENT = 1,
  LG_STATUS_INVALID_UTF8 = 2,
  LG_STATUS_IO = 3,
  LG_STATUS_PARSE = 4,
  LG_STATUS_INTEGRITY = 5,
  LG_STATUS_UNKNOWN_TYPE = 6,
  LG_STATUS_INVALID_SLICE = 7,
  LG_STATUS_UNDEFINED = 8,
  LG_STATUS_CONFIG = 9,
  LG_STATUS_INSUFFICIENT_DATA = 10,
  /**
   * A pipeline stage failed; the partial manifest was still written.
   */
  LG_STATUS_STAGE_FAILED = 11,
  LG_STATUS_OTHER = 12,
  LG_STATUS_PANIC = 13,
} LgStatus;

typedef struct LgGraph LgGraph;

typedef struct LgRepository LgRepository;

typedef struct LgTaxonomy LgTaxonomy;

/**
 * Graph metrics. A `has_*` flag of `false` means the metric is undefined
 * and the value field is NaN.
 */
typedef struct {
  double pct_isolated;
  bool has_pct_isolated;
  double pct_2comp;
  bool has_pct_2comp;
  double pct_3comp_plus;
  bool has_pct_3comp_plus;
  double avg_density;
  bool has_avg_density;
  double pct_trees;
  bool has_pct_trees;
  double pct_stars;
  bool has_pct_stars;
  double assortativity;
  bool has_assortativity;
  double transitivity;
} LgMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *lg_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lg_version(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void lg_string_free(char *s);

/**
 * Loads a repository export without cleaning it.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
LgStatus lg_repository_load(const char *path, LgRepository **out);

/**
 * Parses a repository export held in memory.
 *
 * # Safety
 * `json` and `name` must be NUL-terminated strings; `out` must be writable.
 */
LgStatus lg_repository_from_json(const char *json, const char *name, LgRepository **out);

/**
 * Applies the cleaning rules in place.
 *
 * # Safety
 * `repo` must be a live handle.
 */
LgStatus lg_repository_clean(LgRepository *repo);

/**
 * # Safety
 * `repo` must be a live handle; the out pointers must be writable.
 */
LgStatus lg_repository_counts(const LgRepository *repo, size_t *issues, size_t *links);

/**
 * Share of issues incident to at least one link.
 *
 * # Safety
 * `repo` must be a live handle; `out` must be writable.
 */
LgStatus lg_repository_coverage(const LgRepository *repo, double *out);

/**
 * Cleaning report as JSON; free the string with [`lg_string_free`].
 *
 * # Safety
 * `repo` must be a live handle; `out` must be writable.
 */
LgStatus lg_repository_cleaning_report_json(const LgRepository *repo, char **out);

/**
 * # Safety
 * `repo` must be NULL or a handle not yet freed.
 */
void lg_repository_free(LgRepository *repo);

/**
 * The bundled 30-type taxonomy. Unknown types are errors.
 *
 * # Safety
 * `out` must be writable.
 */
LgStatus lg_taxonomy_bundled(LgTaxonomy **out);

/**
 * Loads a taxonomy file, or the bundled one when `path` is NULL. With
 * `fallback_relation`, unknown types map to the Relation category.
 *
 * # Safety
 * `path` must be NULL or a NUL-terminated string; `out` must be writable.
 */
LgStatus lg_taxonomy_load(const char *path, bool fallback_relation, LgTaxonomy **out);

/**
 * Canonical type name of a raw link type; free it with [`lg_string_free`].
 *
 * # Safety
 * `taxonomy` must be a live handle, `raw` a NUL-terminated string and `out`
 * writable.
 */
LgStatus lg_taxonomy_normalize(const LgTaxonomy *taxonomy, const char *raw, char **out);

/**
 * Category of a raw link type.
 *
 * # Safety
 * `taxonomy` must be a live handle, `raw` a NUL-terminated string and `out`
 * writable.
 */
LgStatus lg_taxonomy_categorize(const LgTaxonomy *taxonomy, const char *raw, LgCategory *out);

/**
 * # Safety
 * `taxonomy` must be NULL or a handle not yet freed.
 */
void lg_taxonomy_free(LgTaxonomy *taxonomy);

/**
 * Builds the issue graph of a slice: `all`, `type:<name>` or
 * `category:<name>`.
 *
 * # Safety
 * `repo` and `taxonomy` must be live handles, `slice` a NUL-terminated
 * string and `out` writable.
 */
LgStatus lg_graph_build(const LgRepository *repo,
                        const LgTaxonomy *taxonomy,
                        const char *slice,
                        LgGraph **out);

/**
 * # Safety
 * `graph` must be a live handle; the out pointers must be writable.
 */
LgStatus lg_graph_size(const LgGraph *graph, size_t *vertices, size_t *edges);

/**
 * # Safety
 * `graph` must be a live handle; `out` must be writable.
 */
LgStatus lg_graph_metrics(const LgGraph *graph, LgMetrics *out);

/**
 * Metrics as a JSON object, undefined values as `null`; free it with
 * [`lg_string_free`].
 *
 * # Safety
 * `graph` must be a live handle; `out` must be writable.
 */
LgStatus lg_graph_metrics_json(const LgGraph *graph, char **out);

/**
 * # Safety
 * `graph` must be NULL or a handle not yet freed.
 */
void lg_graph_free(LgGraph *graph);

/**
 * Runs the whole pipeline for a JSON config file. On success or stage
 * failure `manifest_path` (if not NULL) receives the manifest location; free
 * it with [`lg_string_free`]. A stage failure returns
 * [`LgStatus::StageFailed`] and keeps the partial manifest.
 *
 * # Safety
 * `config_path` must be a NUL-terminated string; `manifest_path` must be
 * NULL or writable.
 */
LgStatus lg_pipeline_run(const char *config_path, char **manifest_path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LINKGRAPH_H */
