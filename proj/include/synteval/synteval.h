/* synteval: synthetic-test-data model evaluation library (C API).
 *
 * All functions return sv_status; on failure sv_last_error() holds a
 * message for the calling thread. Objects returned through out-parameters
 * are owned by the caller and released with the matching *_free function.
 * Handles are immutable after creation and safe to share across threads.
 */
#ifndef SYNTEVAL_H
#define SYNTEVAL_H

#include <stdint.h>

#ifndef SYNTEVAL_API
#if defined(_WIN32)
#define SYNTEVAL_API __declspec(dllimport)
#else
#define SYNTEVAL_API __attribute__((visibility("default")))
#endif
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Error classes; values double as the CLI exit codes. */
typedef enum sv_status {
    SV_OK = 0,
    SV_ERROR_CONFIG = 2,  /* bad arguments, malformed specs, missing files */
    SV_ERROR_DATA = 3,    /* data violates a declared contract             */
    SV_ERROR_NUMERIC = 4  /* numeric failure: stall, singularity, support  */
} sv_status;

typedef struct sv_schema sv_schema;
typedef struct sv_dataset sv_dataset;
typedef struct sv_predictor sv_predictor;
typedef struct sv_generator sv_generator;
typedef struct sv_ensemble sv_ensemble;

/* Message for the most recent failure on this thread (never NULL). */
SYNTEVAL_API const char* sv_last_error(void);

/* ---- schema ----------------------------------------------------------- */
/* Schema JSON:
 * {"features":[{"name":..,"kind":"continuous"|"binary"|"categorical",
 *               "categories":[...]?}],"label":"name"} */
SYNTEVAL_API sv_status sv_schema_load(const char* path, sv_schema** out);
SYNTEVAL_API sv_status sv_schema_parse(const char* json, sv_schema** out);
SYNTEVAL_API void sv_schema_free(sv_schema* schema);

/* ---- datasets ---------------------------------------------------------- */
SYNTEVAL_API sv_status sv_dataset_load_csv(const char* path, const sv_schema* schema,
                                           sv_dataset** out);
SYNTEVAL_API sv_status sv_dataset_save_csv(const sv_dataset* data, const char* path);
SYNTEVAL_API void sv_dataset_free(sv_dataset* data);
SYNTEVAL_API int64_t sv_dataset_rows(const sv_dataset* data);

/* Disjoint random partition with sizes round(fraction * n). */
SYNTEVAL_API sv_status sv_dataset_split(const sv_dataset* data, double f_train, double f_test,
                                        double f_oracle, uint64_t seed, sv_dataset** train,
                                        sv_dataset** test, sv_dataset** oracle);

/* Subgroup JSON: {"atoms":[{"type":"category_equals","feature":..,"value":..} |
 * {"type":"interval","feature":..,"low":..,"high":..,
 *  "low_closed":..,"high_closed":..} |
 * {"type":"neighborhood","center":{..},"radius":..,"scales":{..}}]} */
SYNTEVAL_API sv_status sv_dataset_filter(const sv_dataset* data, const char* subgroup_json,
                                         sv_dataset** out);

/* Type-7 empirical quantile of a continuous feature. */
SYNTEVAL_API sv_status sv_dataset_quantile(const sv_dataset* data, const char* feature, double q,
                                           double* out);

/* ---- predictors -------------------------------------------------------- */
/* kind: "logistic" | "tree" | "knn" | "naive_bayes"; hyper_json may be NULL. */
SYNTEVAL_API sv_status sv_predictor_fit(const char* kind, const sv_dataset* train,
                                        const char* hyper_json, uint64_t seed,
                                        sv_predictor** out);

/* Predictions CSV: header row, then row_index,label,confidence. */
SYNTEVAL_API sv_status sv_predictor_load_external(const char* path, sv_predictor** out);
SYNTEVAL_API void sv_predictor_free(sv_predictor* predictor);

/* Metric JSON: "accuracy" | "f1" | {"kind":"di_ratio","sensitive":..} |
 * {"kind":"eo_ratio","sensitive":..}. subgroup_json NULL means all rows. */
SYNTEVAL_API sv_status sv_predictor_estimate(const sv_predictor* predictor,
                                             const sv_dataset* data, const char* subgroup_json,
                                             const char* metric_json, double* value,
                                             int64_t* n_eval);

/* ---- generators -------------------------------------------------------- */
SYNTEVAL_API sv_status sv_generator_fit(const sv_dataset* data, double shrinkage, uint64_t seed,
                                        sv_generator** out);
SYNTEVAL_API sv_status sv_generator_save(const sv_generator* gen, const char* path);
SYNTEVAL_API sv_status sv_generator_load(const char* path, sv_generator** out);
SYNTEVAL_API void sv_generator_free(sv_generator* gen);

SYNTEVAL_API sv_status sv_generator_sample(const sv_generator* gen, int64_t n, uint64_t seed,
                                           sv_dataset** out);

/* Condition JSON: [{"feature":..,"value":..}, ...] */
SYNTEVAL_API sv_status sv_generator_sample_conditional(const sv_generator* gen,
                                                       const char* condition_json, int64_t n,
                                                       uint64_t seed, sv_dataset** out);

/* Shift JSON: {"kind":"mean_shift","feature":..,"s":..} |
 * {"kind":"logit_shift","feature":..,"s":..} |
 * {"kind":"reweight","feature":..,"target":..,"q":..} */
SYNTEVAL_API sv_status sv_generator_sample_shifted(const sv_generator* gen,
                                                   const char* shift_json, int64_t n,
                                                   uint64_t seed, sv_dataset** out);

/* ---- generator ensembles ------------------------------------------------ */
SYNTEVAL_API sv_status sv_ensemble_fit(const sv_dataset* data, uint64_t k, double shrinkage,
                                       uint64_t seed, sv_ensemble** out);
SYNTEVAL_API void sv_ensemble_free(sv_ensemble* ensemble);

/* Mean, sd and mean +- 2 sd interval (clipped to [0,1]) over member
 * estimates; each member generates n_per_member subgroup-conditional rows. */
SYNTEVAL_API sv_status sv_ensemble_estimate(const sv_ensemble* ensemble,
                                            const sv_predictor* predictor,
                                            const char* subgroup_json, const char* metric_json,
                                            int64_t n_per_member, uint64_t seed, double* mean,
                                            double* sd, double* lo, double* hi);

/* ---- quality ------------------------------------------------------------ */
/* Unbiased RBF-kernel MMD^2; bandwidth <= 0 selects the median heuristic. */
SYNTEVAL_API sv_status sv_mmd(const sv_dataset* a, const sv_dataset* b, double bandwidth,
                              double* out);

/* ---- command front end --------------------------------------------------- */
/* Runs one named command with a JSON options object; the CLI subcommands
 * (simulate, fit-gen, eval-subgroups, shift-sweep, shift-prior,
 * oracle-compare, report) are thin wrappers over this. */
SYNTEVAL_API sv_status sv_command(const char* name, const char* options_json);

#ifdef __cplusplus
}
#endif

#endif /* SYNTEVAL_H */
