/**
 * @file biomarkers.hpp
 * @brief Deformation-field biomarkers, hematoma volumetry, logistic
 *        regression surgery classifiers, ROC/AUC and cross-validation.
 */
#ifndef BRAINSHIFT_BIOMARKERS_HPP
#define BRAINSHIFT_BIOMARKERS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "volume.hpp"

namespace brainshift {

struct BiomarkerRecord {
  std::string id;
  std::optional<double> mls_mm; // hand-measured midline shift, may be absent
  double hematoma_volume_mm3 = 0.0;
  double max_shift_mm = 0.0;
  double mean_shift_mm = 0.0;
  double sum_shift_mm = 0.0;
  std::string laterality; // "unilateral" | "bilateral"
  bool surgery = false;
};

struct ShiftStats {
  double max_mm = 0.0;
  double mean_mm = 0.0;
  double sum_mm = 0.0;
};

/// Voxel-wise displacement magnitudes in mm over the brain mask (> 0.5).
ShiftStats extract_biomarkers(const VectorField &field,
                              const std::vector<double> &brain_mask,
                              const Spacing &spacing);

/// sum(mask) * voxel volume in mm^3.
double hematoma_volume(const std::vector<double> &mask, const Spacing &spacing);

/// "bilateral" iff each half holds at least `threshold` (default 10%) of the
/// total hematoma mass, else "unilateral".
std::string laterality(const std::vector<double> &mask, const Dims &dims,
                       double threshold = 0.10);

struct LogisticModel {
  std::vector<std::string> feature_names;
  std::vector<double> mean, std_dev; // training standardization
  std::vector<double> weights;       // per standardized feature
  double intercept = 0.0;

  double score(const std::vector<double> &features) const; // probability
};

/// L2-penalized (1e-4) logistic regression fit by IRLS on standardized
/// features; tolerance 1e-8, max 100 iterations.
LogisticModel logistic_fit(const std::vector<std::vector<double>> &features,
                           const std::vector<int> &labels,
                           const std::vector<std::string> &feature_names);

struct RocCurve {
  std::vector<double> fpr, tpr; // from (0,0) to (1,1), ties grouped
  double auc = 0.0;             // trapezoidal == pairwise statistic
};

RocCurve roc_auc(const std::vector<double> &scores,
                 const std::vector<int> &labels);

struct FeatureSet {
  std::string name;
  std::vector<std::string> features; // subset of the record columns
};

/// The Table-style feature sets: each single marker, the conventional pair,
/// the deformation triple, and the joint set of all five.
std::vector<FeatureSet> default_feature_sets();

struct CvResult {
  std::string feature_set;
  double mean_auc = 0.0;
  std::vector<double> fold_aucs;
};

/// Stratified k-fold CV; records without mls_mm are dropped from
/// MLS-containing feature sets only.
std::vector<CvResult> cross_validate(const std::vector<BiomarkerRecord> &records,
                                     const std::vector<FeatureSet> &sets,
                                     int k, std::uint64_t seed);

// CSV interface: header
// id,mls_mm,hematoma_volume_mm3,max_shift_mm,mean_shift_mm,sum_shift_mm,laterality,surgery
std::vector<BiomarkerRecord> read_biomarker_csv(const std::string &path);
std::string biomarker_csv(const std::vector<BiomarkerRecord> &records);

} // namespace brainshift

#endif
