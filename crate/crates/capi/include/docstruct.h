/* C interface for the docstruct document-structure toolkit. */

#ifndef DOCSTRUCT_H
#define DOCSTRUCT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum DocstructStatus {
  DOCSTRUCT_STATUS_OK = 0,
  // A pointer argument was null or not valid UTF-8.
  DOCSTRUCT_STATUS_INVALID_ARGUMENT = 1,
  // Input text failed to parse (JSON, hOCR, or query syntax).
  DOCSTRUCT_STATUS_PARSE_ERROR = 2,
  // The input parsed but violates a structural invariant.
  DOCSTRUCT_STATUS_VALIDATION_ERROR = 3,
  // Internal failure.
  DOCSTRUCT_STATUS_INTERNAL = 4,
} DocstructStatus;

// Opaque page graph handle.
typedef struct DocstructGraph DocstructGraph;

// Opaque parsed hOCR document handle.
typedef struct DocstructHocr DocstructHocr;

// Opaque relation-model handle.
typedef struct DocstructModel DocstructModel;

// Opaque valid-tree handle.
typedef struct DocstructTree DocstructTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread. The pointer stays
// valid until the next failing call on the same thread; do not free it.
const char *docstruct_last_error(void);

// Library version as a static string; do not free it.
const char *docstruct_version(void);

// Frees a string previously returned by this library.
//
// # Safety
// `s` must be a pointer returned by a docstruct function documented as
// caller-freed, not yet freed, or null.
void docstruct_string_free(char *s);

// Parses an interchange JSON page into a graph handle.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be a valid pointer.
enum DocstructStatus docstruct_graph_parse_json(const char *json, struct DocstructGraph **out);

// Canonical interchange JSON for a graph; caller frees the string.
//
// # Safety
// `graph` must be a live handle from this library.
char *docstruct_graph_to_json(const struct DocstructGraph *graph);

// # Safety
// `graph` must be a live handle or null; it is consumed.
void docstruct_graph_free(struct DocstructGraph *graph);

// Validation report for a graph as JSON (`{"violations": [...]}`, empty
// list when the graph is a valid tree); caller frees the string.
//
// # Safety
// `graph` must be a live handle.
char *docstruct_graph_validate_json(const struct DocstructGraph *graph);

// Repairs a graph into a valid tree. `model` is optional (may be null):
// when present its pair scores guide the parent completion. When
// `trace_json_out` is non-null it receives the repair trace as JSON (caller
// frees).
//
// # Safety
// Handles must be live; output pointers must be valid.
enum DocstructStatus docstruct_postprocess(const struct DocstructGraph *graph,
                                           const struct DocstructModel *model,
                                           bool strict_unordered_group,
                                           struct DocstructTree **out,
                                           char **trace_json_out);

// Tree as interchange JSON (graph fields plus `root`); caller frees.
//
// # Safety
// `tree` must be a live handle.
char *docstruct_tree_to_json(const struct DocstructTree *tree);

// # Safety
// `tree` must be a live handle or null; it is consumed.
void docstruct_tree_free(struct DocstructTree *tree);

// Loads a serialized relation model.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be valid.
enum DocstructStatus docstruct_model_load_json(const char *json, struct DocstructModel **out);

// # Safety
// `model` must be a live handle or null; it is consumed.
void docstruct_model_free(struct DocstructModel *model);

// Runs category refinement and relation prediction on a page, producing a
// new graph handle.
//
// # Safety
// Handles must be live; `out` must be valid.
enum DocstructStatus docstruct_infer(const struct DocstructModel *model,
                                     const struct DocstructGraph *graph,
                                     struct DocstructGraph **out);

// Converts a tree plus an optional JSON word list (`[{"text", "bbox"}]`,
// may be null) into hOCR; caller frees the returned string.
//
// # Safety
// `tree` must be a live handle; `words_json` null or NUL-terminated.
enum DocstructStatus docstruct_tree_to_hocr(const struct DocstructTree *tree,
                                            const char *words_json,
                                            char **out);

// Parses an hOCR document for querying.
//
// # Safety
// `xml` must be a NUL-terminated string; `out` must be valid.
enum DocstructStatus docstruct_hocr_parse(const char *xml, struct DocstructHocr **out);

// # Safety
// `doc` must be a live handle or null; it is consumed.
void docstruct_hocr_free(struct DocstructHocr *doc);

// Evaluates a structure query; on success `out` receives the matched nodes
// as a JSON array of `{id, category, bbox, text}` (caller frees).
//
// # Safety
// `doc` must be a live handle; `expr` NUL-terminated; `out` valid.
enum DocstructStatus docstruct_hocr_query(const struct DocstructHocr *doc,
                                          const char *expr,
                                          bool direct_followedby,
                                          char **out);

// Intersection-over-union of two boxes given as corner coordinates.
double docstruct_iou(double ax0,
                     double ay0,
                     double ax1,
                     double ay1,
                     double bx0,
                     double by0,
                     double bx1,
                     double by1);

// Scores one prediction/ground-truth page pair; `out` receives the
// evaluation report JSON (caller frees).
//
// # Safety
// Inputs must be NUL-terminated strings; `out` must be valid.
enum DocstructStatus docstruct_evaluate_pair(const char *pred_json,
                                             const char *gt_json,
                                             double iou_threshold,
                                             char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DOCSTRUCT_H */
