/**
 * @file phantom.hpp
 * @brief Deterministic synthetic head phantoms with ground-truth masks and
 *        ground-truth hematoma deformations.
 */
#ifndef BRAINSHIFT_PHANTOM_HPP
#define BRAINSHIFT_PHANTOM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "diffeo.hpp"
#include "volume.hpp"

namespace brainshift {

enum class HematomaSide { None, Left, Right, Bilateral };
const char *side_name(HematomaSide s);
HematomaSide side_from_name(const std::string &name);

struct PhantomSpec {
  int size = 64;                  // cubic grid
  Spacing spacing{1.0, 1.0, 1.0};
  std::uint64_t seed = 0;
  HematomaSide side = HematomaSide::None;
  double thickness = 4.0; // max crescent thickness, voxels
  // pseudo-HU intensities
  double hu_air = -1000.0;
  double hu_brain = 35.0;
  double hu_csf = 8.0;
  double hu_skull = 1000.0;
  double hu_hematoma = 70.0;
};

struct PhantomCase {
  std::string id;
  ScalarVolume volume;
  MaskVolume masks;
  VectorField ground_truth_field; // identity (zero) if no hematoma
  HematomaSide side = HematomaSide::None;
  double severity = 0.0; // applied thickness, voxels
};

/// Mirror-symmetric healthy head: ellipsoidal skull shell, brain interior
/// with a thin CSF gap under the skull, two mirrored ellipsoidal ventricles.
PhantomCase generate_phantom(const PhantomSpec &spec);

/// Warp the healthy phantom with a smooth, diffeomorphic compression field
/// and fill the vacated subdural crescent with hematoma.
PhantomCase inject_hematoma(const PhantomCase &healthy, HematomaSide side,
                            double thickness);

struct CohortLabels {
  std::string id;
  bool surgery = false;
  double thickness = 0.0;
};

struct Cohort {
  std::vector<PhantomCase> cases;
  std::vector<CohortLabels> labels;
};

/// Mixed unilateral/bilateral cohort with randomized thickness; surgery
/// label is (thickness >= threshold), producing a separable cohort.
Cohort generate_cohort(int n, std::uint64_t seed, double thickness_lo,
                       double thickness_hi, double surgery_threshold,
                       int grid_size = 64);

} // namespace brainshift

#endif
