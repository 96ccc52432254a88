/**
 * @file pipeline.hpp
 * @brief File-level stage runners wiring the pipeline together; the C API
 *        and CLI are thin shims over these.
 */
#ifndef BRAINSHIFT_PIPELINE_HPP
#define BRAINSHIFT_PIPELINE_HPP

#include <string>

namespace brainshift {

void run_phantom(const std::string &spec_json, const std::string &out_dir);
void run_cohort(int n, std::uint64_t seed, const std::string &out_dir);
void run_align(const std::string &in_path, const std::string &out_path,
               const std::string &config_json);
void run_synth(const std::string &in_path, const std::string &masks_path,
               const std::string &config_json, const std::string &out_field,
               const std::string &out_image, const std::string &report_csv);
void run_biomarkers(const std::string &field_path,
                    const std::string &masks_path, const std::string &id,
                    const std::string &out_csv);
void run_classify(const std::string &in_csv, const std::string &out_csv,
                  const std::string &config_json);
void run_report(const std::string &in_csv, const std::string &out_dir,
                const std::string &config_json);

} // namespace brainshift

#endif
