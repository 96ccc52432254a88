#include "pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "biomarkers.hpp"
#include "config.hpp"
#include "nifti.hpp"
#include "phantom.hpp"
#include "rigid.hpp"
#include "synth.hpp"

namespace brainshift {

namespace {

namespace fs = std::filesystem;

std::string read_text_file(const std::string &path) {
  std::ifstream f(path);
  if (!f)
    throw DataError("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// biomarker row from a deformation field + masks; mls from the midpoint of
// the warped ventricle centroids
BiomarkerRecord record_from_field(const std::string &id,
                                  const VectorField &field,
                                  const MaskVolume &masks) {
  const Dims d = masks.dims();
  const Spacing sp = masks.spacing();
  BiomarkerRecord r;
  r.id = id;
  const ShiftStats stats =
      extract_biomarkers(field, masks.channel(MaskClass::Brain), sp);
  r.max_shift_mm = stats.max_mm;
  r.mean_shift_mm = stats.mean_mm;
  r.sum_shift_mm = stats.sum_mm;
  if (masks.has(MaskClass::Hematoma)) {
    const auto &hem = masks.channel(MaskClass::Hematoma);
    r.hematoma_volume_mm3 = hematoma_volume(hem, sp);
    double total = 0.0;
    for (double v : hem)
      total += v;
    if (total > 1e-12)
      r.laterality = laterality(hem, d);
  }
  auto centroid_x = [&](MaskClass c) {
    const auto &ch = masks.channel(c);
    double sx = 0.0, sw = 0.0;
    std::size_t p = 0;
    for (int k = 0; k < d.nz; ++k)
      for (int j = 0; j < d.ny; ++j)
        for (int i = 0; i < d.nx; ++i, ++p) {
          sx += ch[p] * i;
          sw += ch[p];
        }
    return sw > 1e-12 ? sx / sw : 0.5 * (d.nx - 1);
  };
  if (masks.has(MaskClass::VentricleLeft) &&
      masks.has(MaskClass::VentricleRight)) {
    const double mid = 0.5 * (centroid_x(MaskClass::VentricleLeft) +
                              centroid_x(MaskClass::VentricleRight));
    r.mls_mm = std::abs(mid - 0.5 * (d.nx - 1)) * sp.sx;
  }
  return r;
}

std::string roc_points_csv(const RocCurve &roc) {
  std::ostringstream out;
  out << "fpr,tpr\n";
  for (std::size_t i = 0; i < roc.fpr.size(); ++i)
    out << format_double(roc.fpr[i]) << ',' << format_double(roc.tpr[i])
        << '\n';
  return out.str();
}

std::string roc_svg(const std::string &title, const RocCurve &roc) {
  const int size = 420, margin = 40, plot = size - 2 * margin;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size
    << "\" height=\"" << size << "\">\n";
  s << "<rect width=\"" << size << "\" height=\"" << size
    << "\" fill=\"white\"/>\n";
  s << "<text x=\"" << size / 2 << "\" y=\"20\" text-anchor=\"middle\" "
    << "font-family=\"sans-serif\" font-size=\"14\">" << title
    << " (AUC=" << format_double(roc.auc) << ")</text>\n";
  // axes and diagonal
  s << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << plot
    << "\" height=\"" << plot << "\" fill=\"none\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << margin << "\" y1=\"" << size - margin << "\" x2=\""
    << size - margin << "\" y2=\"" << margin
    << "\" stroke=\"lightgray\" stroke-dasharray=\"4\"/>\n";
  s << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" "
       "points=\"";
  for (std::size_t i = 0; i < roc.fpr.size(); ++i) {
    const double x = margin + roc.fpr[i] * plot;
    const double y = size - margin - roc.tpr[i] * plot;
    s << format_double(x) << ',' << format_double(y);
    if (i + 1 < roc.fpr.size())
      s << ' ';
  }
  s << "\"/>\n";
  s << "<text x=\"" << size / 2 << "\" y=\"" << size - 8
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"12\">false positive rate</text>\n";
  s << "<text x=\"14\" y=\"" << size / 2
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\""
    << " transform=\"rotate(-90 14 " << size / 2
    << ")\">true positive rate</text>\n";
  s << "</svg>\n";
  return s.str();
}

void write_case(const PhantomCase &c, const std::string &out_dir) {
  fs::create_directories(out_dir);
  write_nifti(c.volume, out_dir + "/volume.nii");
  write_nifti(masks_to_labels(c.masks), out_dir + "/labels.nii");
  write_nifti_field(c.ground_truth_field, c.volume.spacing(),
                    out_dir + "/gt_field.nii");
  nlohmann::json j;
  j["id"] = c.id;
  j["side"] = side_name(c.side);
  j["severity"] = c.severity;
  atomic_write_file(out_dir + "/case.json", j.dump(2) + "\n");
}

} // namespace

void run_phantom(const std::string &spec_json, const std::string &out_dir) {
  const PhantomSpec spec = parse_phantom_spec(spec_json);
  PhantomCase c = generate_phantom(spec);
  if (spec.side != HematomaSide::None)
    c = inject_hematoma(c, spec.side, spec.thickness);
  write_case(c, out_dir);
}

void run_cohort(int n, std::uint64_t seed, const std::string &out_dir) {
  // desk-scale cohort: thickness 2..7 voxels, surgery iff >= 4.5
  const Cohort cohort = generate_cohort(n, seed, 2.0, 7.0, 4.5);
  std::vector<BiomarkerRecord> records;
  for (std::size_t i = 0; i < cohort.cases.size(); ++i) {
    const PhantomCase &c = cohort.cases[i];
    BiomarkerRecord r =
        record_from_field(c.id, c.ground_truth_field, c.masks);
    r.surgery = cohort.labels[i].surgery;
    records.push_back(std::move(r));
  }
  fs::create_directories(out_dir);
  atomic_write_file(out_dir + "/cohort.csv", biomarker_csv(records));
}

void run_align(const std::string &in_path, const std::string &out_path,
               const std::string &config_json) {
  const PipelineConfig cfg = parse_config(config_json);
  const ScalarVolume vol = read_nifti(in_path);
  const AlignResult res = align_symmetry(vol, cfg.align);
  write_nifti(res.aligned, out_path);
  nlohmann::json j;
  j["pitch"] = res.transform.pitch;
  j["yaw"] = res.transform.yaw;
  j["roll"] = res.transform.roll;
  j["tx"] = res.transform.tx;
  j["ty"] = res.transform.ty;
  j["tz"] = res.transform.tz;
  std::string sidecar = out_path;
  if (sidecar.size() > 4 && sidecar.substr(sidecar.size() - 4) == ".nii")
    sidecar = sidecar.substr(0, sidecar.size() - 4);
  atomic_write_file(sidecar + ".transform.json", j.dump(2) + "\n");
}

void run_synth(const std::string &in_path, const std::string &masks_path,
               const std::string &config_json, const std::string &out_field,
               const std::string &out_image, const std::string &report_csv) {
  const PipelineConfig cfg = parse_config(config_json);
  const ScalarVolume vol = read_nifti(in_path);
  const MaskVolume masks =
      labels_to_masks(read_nifti(masks_path), cfg.mask_smoothing_sigma);
  const SynthesisResult res =
      optimize_velocity(vol, masks, cfg.weights, cfg.synth);
  if (!out_field.empty())
    write_nifti_field(res.deformation, vol.spacing(), out_field);
  if (!out_image.empty())
    write_nifti(res.pseudo_healthy, out_image);
  if (!report_csv.empty()) {
    std::ostringstream out;
    out << "iter,total,jeffrey,ssim,ventricle,hematoma,skull,jacobian,"
           "gradient\n";
    for (std::size_t i = 0; i < res.trace.size(); ++i) {
      const LossTerms &t = res.trace[i];
      out << i << ',' << format_double(t.total) << ','
          << format_double(t.jeffreys) << ',' << format_double(t.ssim) << ','
          << format_double(t.ventricle) << ',' << format_double(t.hematoma)
          << ',' << format_double(t.skull) << ','
          << format_double(t.jacobian) << ',' << format_double(t.gradient)
          << '\n';
    }
    atomic_write_file(report_csv, out.str());
  }
  std::printf("hematoma_reduction=%.4f\n", res.hematoma_reduction);
}

void run_biomarkers(const std::string &field_path,
                    const std::string &masks_path, const std::string &id,
                    const std::string &out_csv) {
  const VectorField field = read_nifti_field(field_path);
  const ScalarVolume labels = read_nifti(masks_path);
  const MaskVolume masks = labels_to_masks(labels);
  const BiomarkerRecord r = record_from_field(id, field, masks);
  atomic_write_file(out_csv, biomarker_csv({r}));
}

void run_classify(const std::string &in_csv, const std::string &out_csv,
                  const std::string &config_json) {
  const PipelineConfig cfg = parse_config(config_json);
  const std::vector<BiomarkerRecord> all = read_biomarker_csv(in_csv);
  std::ostringstream out;
  out << "feature_set,subgroup,fold,auc\n";
  for (const std::string subgroup : {"all", "bilateral", "unilateral"}) {
    std::vector<BiomarkerRecord> records;
    for (const auto &r : all)
      if (subgroup == "all" || r.laterality == subgroup)
        records.push_back(r);
    try {
      const auto results = cross_validate(records, default_feature_sets(),
                                          cfg.classify.k, cfg.classify.seed);
      for (const auto &res : results) {
        for (std::size_t f = 0; f < res.fold_aucs.size(); ++f)
          out << res.feature_set << ',' << subgroup << ',' << f << ','
              << format_double(res.fold_aucs[f]) << '\n';
        out << res.feature_set << ',' << subgroup << ",mean,"
            << format_double(res.mean_auc) << '\n';
      }
    } catch (const DataError &e) {
      std::fprintf(stderr, "warning: skipping subgroup %s: %s\n",
                   subgroup.c_str(), e.what());
    }
  }
  atomic_write_file(out_csv, out.str());
}

void run_report(const std::string &in_csv, const std::string &out_dir,
                const std::string &config_json) {
  parse_config(config_json); // validate only
  const std::vector<BiomarkerRecord> all = read_biomarker_csv(in_csv);
  fs::create_directories(out_dir);
  for (const std::string subgroup : {"all", "bilateral", "unilateral"}) {
    std::vector<BiomarkerRecord> records;
    for (const auto &r : all)
      if (subgroup == "all" || r.laterality == subgroup)
        records.push_back(r);
    // joint model when every record carries MLS, else the deformation set
    bool have_mls = !records.empty();
    for (const auto &r : records)
      have_mls = have_mls && r.mls_mm.has_value();
    const auto sets = default_feature_sets();
    const FeatureSet &set = have_mls ? sets[7] : sets[6];
    try {
      std::vector<std::vector<double>> x;
      std::vector<int> y;
      for (const auto &r : records) {
        std::vector<double> row;
        for (const auto &f : set.features)
          row.push_back(f == "mls_mm" ? *r.mls_mm
                        : f == "hematoma_volume_mm3" ? r.hematoma_volume_mm3
                        : f == "max_shift_mm"        ? r.max_shift_mm
                        : f == "mean_shift_mm"       ? r.mean_shift_mm
                                                     : r.sum_shift_mm);
        x.push_back(std::move(row));
        y.push_back(r.surgery ? 1 : 0);
      }
      const LogisticModel model = logistic_fit(x, y, set.features);
      std::vector<double> scores;
      for (const auto &row : x)
        scores.push_back(model.score(row));
      const RocCurve roc = roc_auc(scores, y);
      atomic_write_file(out_dir + "/roc_points_" + subgroup + ".csv",
                        roc_points_csv(roc));
      atomic_write_file(out_dir + "/roc_" + subgroup + ".svg",
                        roc_svg(subgroup, roc));
    } catch (const DataError &e) {
      std::fprintf(stderr, "warning: skipping subgroup %s: %s\n",
                   subgroup.c_str(), e.what());
    }
  }
}

} // namespace brainshift
