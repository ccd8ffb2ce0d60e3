/* C interface to the popdiag population-diagnostics library.
 *
 * Conventions: functions return 0 on success or a nonzero error code
 * (2 = configuration error, 3 = data error, 4 = internal error). When an
 * error buffer is supplied the message is copied into it, truncated to the
 * given capacity, and always NUL-terminated. Handles are opaque and must be
 * released with their matching *_free function.
 */
#ifndef POPDIAG_C_H
#define POPDIAG_C_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define POPDIAG_OK 0
#define POPDIAG_ERR_CONFIG 2
#define POPDIAG_ERR_DATA 3
#define POPDIAG_ERR_INTERNAL 4

const char* popdiag_version(void);

/* ---- high-level pipeline ---- */

/* Runs the diagnose pipeline from a JSON config file; writes report files to
 * the output directory named in the config (or out_dir_override if non-NULL). */
int popdiag_diagnose(const char* config_path, const char* out_dir_override,
                     uint64_t* seed_override, char* err, size_t err_len);

/* Writes a model-by-metric comparison CSV built from report.json files. */
int popdiag_compare(const char* const* report_paths, size_t n_reports,
                    const char* out_csv_path, char* err, size_t err_len);

/* Generates a synthetic population from a JSON spec and writes it as a
 * matrix CSV. */
int popdiag_synth(const char* spec_json, const char* out_path, char* err, size_t err_len);

/* Emits a prompt batch JSONL for external collection. instrument is one of
 * "bfi", "moral", "self_intro"; items_path may be NULL for self_intro. */
int popdiag_prompts(const char* profiles_path, const char* instrument,
                    const char* items_path, int samples, const char* out_path,
                    char* err, size_t err_len);

/* ---- point-cloud metrics on raw row-major arrays ---- */

typedef struct popdiag_cloud popdiag_cloud;

popdiag_cloud* popdiag_cloud_create(const double* data, size_t n, size_t dim);
void popdiag_cloud_free(popdiag_cloud* cloud);

int popdiag_coverage(const popdiag_cloud* generated, const popdiag_cloud* reference,
                     int k, double* out, char* err, size_t err_len);
int popdiag_density(const popdiag_cloud* generated, const popdiag_cloud* reference,
                    int k, double* out, char* err, size_t err_len);
int popdiag_hopkins(const popdiag_cloud* cloud, int reps, uint64_t seed,
                    double* mean_out, double* sd_out, char* err, size_t err_len);
int popdiag_lid(const popdiag_cloud* cloud, int k, double* median_out,
                double* mean_out, size_t* skipped_out, char* err, size_t err_len);
int popdiag_participation_ratio(const popdiag_cloud* cloud, double* out,
                                char* err, size_t err_len);
int popdiag_separation(const popdiag_cloud* cloud, double* min_out,
                       double* mean_nn_out, char* err, size_t err_len);
int popdiag_hyperspherical_uniformity(const popdiag_cloud* cloud, double t,
                                      double* out, char* err, size_t err_len);

#ifdef __cplusplus
}
#endif

#endif /* POPDIAG_C_H */
