/**
 * @file brainshift.h
 * @brief C API of the brainshift shared library.
 *
 * All functions return bs_status; on failure bs_last_error() holds a
 * thread-local message. Handles are opaque and freed with their *_free
 * function.
 */
#ifndef BRAINSHIFT_H
#define BRAINSHIFT_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bs_status {
  BS_OK = 0,
  BS_ERR_USAGE = 1, /* bad arguments or configuration */
  BS_ERR_DATA = 2   /* malformed or inconsistent input data */
} bs_status;

/* Last error message for the calling thread; empty string if none. */
const char *bs_last_error(void);

/* Default pipeline configuration as a JSON document (malloc'd copy is not
 * needed; the pointer stays valid for the process lifetime). */
const char *bs_default_config(void);

/* ---- pipeline stages (file based) ---------------------------------- */

/* Write volume.nii, labels.nii, gt_field.nii and case.json into out_dir.
 * spec_json may be NULL or empty for the default phantom. */
bs_status bs_run_phantom(const char *spec_json, const char *out_dir);

/* Deterministic phantom cohort; writes out_dir/cohort.csv. */
bs_status bs_run_cohort(int n, unsigned long long seed, const char *out_dir);

/* Rigid symmetry alignment; writes the aligned volume and a
 * .transform.json sidecar next to the output. config_json is a JSON document (not a
 * path) and may be NULL or empty for defaults; same for the other stages. */
bs_status bs_run_align(const char *in_nii, const char *out_nii,
                       const char *config_json);

/* Pseudo-healthy synthesis. Any of out_field / out_image / report_csv may
 * be NULL to skip that output. */
bs_status bs_run_synth(const char *in_nii, const char *labels_nii,
                       const char *config_json, const char *out_field_nii,
                       const char *out_image_nii, const char *report_csv);

/* Deformation biomarkers for one subject; writes a one-row CSV. */
bs_status bs_run_biomarkers(const char *field_nii, const char *labels_nii,
                            const char *subject_id, const char *out_csv);

/* Cross-validated AUC report (auc_report.csv layout). */
bs_status bs_run_classify(const char *in_csv, const char *out_csv,
                          const char *config_json);

/* ROC point CSVs and SVG plots per laterality subgroup. */
bs_status bs_run_report(const char *in_csv, const char *out_dir,
                        const char *config_json);

/* ---- volume handles ------------------------------------------------- */

typedef struct bs_volume bs_volume;

bs_status bs_volume_read(const char *path, bs_volume **out);
bs_status bs_volume_write(const bs_volume *vol, const char *path);
void bs_volume_free(bs_volume *vol);

bs_status bs_volume_dims(const bs_volume *vol, int dims_out[3]);
bs_status bs_volume_spacing(const bs_volume *vol, double spacing_out[3]);
/* Pointer to nx*ny*nz doubles, x-fastest; owned by the handle. */
const double *bs_volume_data(const bs_volume *vol);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* BRAINSHIFT_H */
