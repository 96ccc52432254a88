/**
 * @file capi.cpp
 * @brief extern-C shim mapping the C API onto the pipeline stage runners.
 */
#include "brainshift/brainshift.h"

#include <exception>
#include <string>

#include "core/config.hpp"
#include "core/nifti.hpp"
#include "core/pipeline.hpp"

namespace {

thread_local std::string g_last_error;

const char *nz(const char *s) { return s ? s : ""; }

template <typename Fn>
bs_status guarded(Fn &&fn) {
  try {
    fn();
    g_last_error.clear();
    return BS_OK;
  } catch (const brainshift::UsageError &e) {
    g_last_error = e.what();
    return BS_ERR_USAGE;
  } catch (const brainshift::DataError &e) {
    g_last_error = e.what();
    return BS_ERR_DATA;
  } catch (const std::exception &e) {
    g_last_error = e.what();
    return BS_ERR_DATA;
  }
}

bs_status require(bool ok, const char *msg) {
  if (ok)
    return BS_OK;
  g_last_error = msg;
  return BS_ERR_USAGE;
}

} // namespace

struct bs_volume {
  brainshift::ScalarVolume vol;
};

extern "C" {

const char *bs_last_error(void) { return g_last_error.c_str(); }

const char *bs_default_config(void) {
  static const std::string text =
      brainshift::dump_config(brainshift::parse_config(""));
  return text.c_str();
}

bs_status bs_run_phantom(const char *spec_json, const char *out_dir) {
  if (bs_status s = require(out_dir && *out_dir, "phantom: out_dir required"))
    return s;
  return guarded(
      [&] { brainshift::run_phantom(nz(spec_json), out_dir); });
}

bs_status bs_run_cohort(int n, unsigned long long seed, const char *out_dir) {
  if (bs_status s = require(out_dir && *out_dir && n > 0,
                            "cohort: out_dir and n > 0 required"))
    return s;
  return guarded([&] { brainshift::run_cohort(n, seed, out_dir); });
}

bs_status bs_run_align(const char *in_nii, const char *out_nii,
                       const char *config_json) {
  if (bs_status s = require(in_nii && *in_nii && out_nii && *out_nii,
                            "align: input and output paths required"))
    return s;
  return guarded(
      [&] { brainshift::run_align(in_nii, out_nii, nz(config_json)); });
}

bs_status bs_run_synth(const char *in_nii, const char *labels_nii,
                       const char *config_json, const char *out_field_nii,
                       const char *out_image_nii, const char *report_csv) {
  if (bs_status s = require(in_nii && *in_nii && labels_nii && *labels_nii,
                            "synth: volume and labels paths required"))
    return s;
  return guarded([&] {
    brainshift::run_synth(in_nii, labels_nii, nz(config_json),
                          nz(out_field_nii), nz(out_image_nii),
                          nz(report_csv));
  });
}

bs_status bs_run_biomarkers(const char *field_nii, const char *labels_nii,
                            const char *subject_id, const char *out_csv) {
  if (bs_status s = require(field_nii && *field_nii && labels_nii &&
                                *labels_nii && out_csv && *out_csv,
                            "biomarkers: field, labels and output required"))
    return s;
  return guarded([&] {
    brainshift::run_biomarkers(field_nii, labels_nii, nz(subject_id), out_csv);
  });
}

bs_status bs_run_classify(const char *in_csv, const char *out_csv,
                          const char *config_json) {
  if (bs_status s = require(in_csv && *in_csv && out_csv && *out_csv,
                            "classify: input and output CSV paths required"))
    return s;
  return guarded(
      [&] { brainshift::run_classify(in_csv, out_csv, nz(config_json)); });
}

bs_status bs_run_report(const char *in_csv, const char *out_dir,
                        const char *config_json) {
  if (bs_status s = require(in_csv && *in_csv && out_dir && *out_dir,
                            "report: input CSV and out_dir required"))
    return s;
  return guarded(
      [&] { brainshift::run_report(in_csv, out_dir, nz(config_json)); });
}

bs_status bs_volume_read(const char *path, bs_volume **out) {
  if (bs_status s =
          require(path && *path && out, "volume_read: path and out required"))
    return s;
  *out = nullptr;
  return guarded([&] {
    auto *h = new bs_volume{brainshift::read_nifti(path)};
    *out = h;
  });
}

bs_status bs_volume_write(const bs_volume *vol, const char *path) {
  if (bs_status s = require(vol && path && *path,
                            "volume_write: handle and path required"))
    return s;
  return guarded([&] { brainshift::write_nifti(vol->vol, path); });
}

void bs_volume_free(bs_volume *vol) { delete vol; }

bs_status bs_volume_dims(const bs_volume *vol, int dims_out[3]) {
  if (bs_status s =
          require(vol && dims_out, "volume_dims: handle and out required"))
    return s;
  dims_out[0] = vol->vol.dims().nx;
  dims_out[1] = vol->vol.dims().ny;
  dims_out[2] = vol->vol.dims().nz;
  return BS_OK;
}

bs_status bs_volume_spacing(const bs_volume *vol, double spacing_out[3]) {
  if (bs_status s = require(vol && spacing_out,
                            "volume_spacing: handle and out required"))
    return s;
  spacing_out[0] = vol->vol.spacing().sx;
  spacing_out[1] = vol->vol.spacing().sy;
  spacing_out[2] = vol->vol.spacing().sz;
  return BS_OK;
}

const double *bs_volume_data(const bs_volume *vol) {
  return vol ? vol->vol.data().data() : nullptr;
}

} // extern "C"
