/**
 * @file nifti.hpp
 * @brief Single-file uncompressed NIfTI-1 reader/writer (float32 / int16).
 *
 * Vector fields are stored as 4-D files with dim[4] = 3, voxel units,
 * backward-warp convention noted in the descrip field.
 */
#ifndef BRAINSHIFT_NIFTI_HPP
#define BRAINSHIFT_NIFTI_HPP

#include <string>

#include "volume.hpp"

namespace brainshift {

ScalarVolume read_nifti(const std::string &path);
void write_nifti(const ScalarVolume &vol, const std::string &path);

VectorField read_nifti_field(const std::string &path);
void write_nifti_field(const VectorField &field, const Spacing &spacing,
                       const std::string &path);

/// Integer-label volume (codes 0 bg, 1 brain, 2 skull, 3 hematoma,
/// 4 ventricle_left, 5 ventricle_right) -> per-class soft masks.
/// Optional Gaussian smoothing keeps warped-mask losses differentiable.
MaskVolume labels_to_masks(const ScalarVolume &labels,
                           double smoothing_sigma = 0.0);
ScalarVolume masks_to_labels(const MaskVolume &masks);

/// Atomic file replace helper (write temp then rename).
void atomic_write_file(const std::string &path, const std::string &contents);

} // namespace brainshift

#endif
