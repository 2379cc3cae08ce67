/* C interface for the simbelief model checker.
 *
 * Handles are created and released by this library; release them only with
 * the matching sb_*_free function. Returned char* strings are owned by the
 * caller and must be released with sb_string_free, except sb_version and
 * sb_last_error, which return borrowed pointers.
 *
 * Functions returning int use 1/0 for true/false and negative SbStatus
 * codes for failure; functions returning pointers return NULL on failure.
 * sb_last_error() describes the most recent failure on the calling thread.
 */

#ifndef SIMBELIEF_H
#define SIMBELIEF_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum SbStatus {
  SB_OK = 0,
  SB_ERR_NULL_ARGUMENT = -1,
  SB_ERR_INVALID_UTF8 = -2,
  SB_ERR_PARSE = -3,
  SB_ERR_LOAD = -4,
  SB_ERR_INVALID_MODEL = -5,
  SB_ERR_UNKNOWN_WORLD = -6,
  SB_ERR_UNKNOWN_AGENT = -7,
  SB_ERR_EMPTY_GROUP = -8,
  SB_ERR_MORPHISM = -9,
} SbStatus;

/* Opaque handles. */
typedef struct SbModel SbModel;
typedef struct SbFormula SbFormula;

/* Library version; borrowed, do not free. */
const char *sb_version(void);

/* Message for the most recent failure on this thread; borrowed, valid until
 * the next failing call on the same thread. */
const char *sb_last_error(void);

/* Models. */
SbModel *sb_model_load_json(const char *json);
SbModel *sb_model_load_file(const char *path);
void sb_model_free(SbModel *model);

/* 1 valid, 0 invalid, negative SbStatus on failure. */
int sb_model_is_valid(const SbModel *model);

/* JSON report {"ok": bool, "violations": [...]}. */
char *sb_model_validation_json(const SbModel *model);

/* JSON list of worlds with their vertex sets. */
char *sb_model_worlds_json(const SbModel *model);

/* JSON relations of one agent: multiplicities, indistinguishable pairs,
 * strictly-more-plausible pairs, most plausible worlds. */
char *sb_model_relations_json(const SbModel *model, const char *agent);

/* Graphviz DOT text of the 1-skeleton. */
char *sb_model_export_dot(const SbModel *model);

/* Formulas. Pass experimental != 0 to admit Sb{G} / B{G}. */
SbFormula *sb_formula_parse(const char *text, int experimental);
void sb_formula_free(SbFormula *formula);
char *sb_formula_print(const SbFormula *formula);

/* 1 positive, 0 not, negative SbStatus on failure. */
int sb_formula_is_positive(const SbFormula *formula);

/* Truth at a named world: 1 true, 0 false, negative SbStatus on failure.
 * The model must pass validation. */
int sb_eval(const SbModel *model, const char *world, const SbFormula *formula);

/* JSON array of world names where the formula holds. */
char *sb_extension_json(const SbModel *model, const SbFormula *formula);

/* Morphism conditions for a vertex map given as JSON (either a bare
 * {"v": "u", ...} object or a full map file with a "map" field). On SB_OK,
 * *report_json_out holds a JSON report; free it with sb_string_free. */
int sb_check_morphism_json(const SbModel *source, const SbModel *target,
                           const char *map_json, char **report_json_out);

/* Release a string returned by this library; NULL is ignored. */
void sb_string_free(char *s);

#ifdef __cplusplus
}
#endif

#endif /* SIMBELIEF_H */
