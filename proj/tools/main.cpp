/**
 * @file main.cpp
 * @brief `brainshift` command-line front-end over the C API.
 *
 * Exit codes: 0 success, 1 usage error, 2 data error.
 */
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "brainshift/brainshift.h"

namespace {

int finish(bs_status status) {
  if (status != BS_OK)
    std::fprintf(stderr, "brainshift: error: %s\n", bs_last_error());
  return static_cast<int>(status);
}

std::string read_file_or_die(const std::string &path) {
  FILE *f = std::fopen(path.c_str(), "rb");
  if (!f)
    throw CLI::ValidationError("cannot open " + path);
  std::string text;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0)
    text.append(buf, n);
  std::fclose(f);
  return text;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Pseudo-healthy head-CT synthesis and deformation biomarkers"};
  app.require_subcommand(0, 1);

  bool dump_config = false;
  app.add_flag("--dump-config", dump_config,
               "Print the default configuration as JSON and exit");

  std::string in_path, out_path, masks_path, config_path, weights_path;
  std::string out_field, out_image, report_csv, field_path, subject_id = "case";
  std::string spec_path, out_dir;
  int cohort_n = 0;
  unsigned long long seed = 7;

  auto *align = app.add_subcommand("align", "Rigid mid-sagittal alignment");
  align->add_option("--in", in_path, "Input NIfTI volume")->required();
  align->add_option("--out", out_path, "Aligned output NIfTI")->required();
  align->add_option("--config", config_path, "Pipeline config JSON file");

  auto *synth = app.add_subcommand("synth", "Pseudo-healthy synthesis");
  synth->add_option("--in", in_path, "Aligned input NIfTI volume")->required();
  synth->add_option("--masks", masks_path, "Label NIfTI volume")->required();
  synth->add_option("--config", config_path, "Pipeline config JSON file");
  synth->add_option("--weights", weights_path,
                    "Config JSON file (alias of --config)");
  synth->add_option("--out-field", out_field, "Displacement field NIfTI");
  synth->add_option("--out-image", out_image, "Pseudo-healthy NIfTI");
  synth->add_option("--report", report_csv, "Loss trace CSV");

  auto *bio = app.add_subcommand("biomarkers", "Deformation biomarkers CSV");
  bio->add_option("--field", field_path, "Displacement field NIfTI")
      ->required();
  bio->add_option("--masks", masks_path, "Label NIfTI volume")->required();
  bio->add_option("--id", subject_id, "Subject identifier");
  bio->add_option("--out", out_path, "Output CSV")->required();

  auto *classify =
      app.add_subcommand("classify", "Cross-validated AUC report");
  classify->add_option("--in", in_path, "Biomarker cohort CSV")->required();
  classify->add_option("--out", out_path, "auc_report.csv path")->required();
  classify->add_option("--config", config_path, "Pipeline config JSON file");

  auto *phantom =
      app.add_subcommand("phantom", "Synthetic phantom case or cohort");
  phantom->add_option("--spec", spec_path, "Phantom spec JSON file");
  phantom->add_option("--cohort", cohort_n,
                      "Generate an n-case cohort instead of one case");
  phantom->add_option("--seed", seed, "Cohort random seed");
  phantom->add_option("--out-dir", out_dir, "Output directory")->required();

  auto *report = app.add_subcommand("report", "ROC point CSVs and SVG plots");
  report->add_option("--in", in_path, "Biomarker cohort CSV")->required();
  report->add_option("--out-dir", out_dir, "Output directory")->required();
  report->add_option("--config", config_path, "Pipeline config JSON file");

  try {
    app.parse(argc, argv);

    if (dump_config) {
      std::fputs(bs_default_config(), stdout);
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::fputs(app.help().c_str(), stderr);
      return 1;
    }

    if (config_path.empty())
      config_path = weights_path;
    const std::string config_json =
        config_path.empty() ? std::string() : read_file_or_die(config_path);

    if (*align)
      return finish(bs_run_align(in_path.c_str(), out_path.c_str(),
                                 config_json.c_str()));
    if (*synth)
      return finish(bs_run_synth(in_path.c_str(), masks_path.c_str(),
                                 config_json.c_str(), out_field.c_str(),
                                 out_image.c_str(), report_csv.c_str()));
    if (*bio)
      return finish(bs_run_biomarkers(field_path.c_str(), masks_path.c_str(),
                                      subject_id.c_str(), out_path.c_str()));
    if (*classify)
      return finish(bs_run_classify(in_path.c_str(), out_path.c_str(),
                                    config_json.c_str()));
    if (*phantom) {
      if (cohort_n > 0)
        return finish(bs_run_cohort(cohort_n, seed, out_dir.c_str()));
      const std::string spec =
          spec_path.empty() ? std::string() : read_file_or_die(spec_path);
      return finish(bs_run_phantom(spec.c_str(), out_dir.c_str()));
    }
    if (*report)
      return finish(bs_run_report(in_path.c_str(), out_dir.c_str(),
                                  config_json.c_str()));
    return 1;
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 1;
  }
}
