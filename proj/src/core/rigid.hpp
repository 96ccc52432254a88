/**
 * @file rigid.hpp
 * @brief Rigid symmetry alignment: bring the mid-sagittal plane onto the
 *        grid's central x-plane by Adam descent on 6 rigid parameters.
 */
#ifndef BRAINSHIFT_RIGID_HPP
#define BRAINSHIFT_RIGID_HPP

#include <vector>

#include "metrics.hpp"
#include "volume.hpp"

namespace brainshift {

/// Fixed-order rotation Rz(roll) * Ry(yaw) * Rx(pitch) about the grid center
/// (applied in physical mm space), translation in voxels.
struct RigidTransform {
  double pitch = 0.0, yaw = 0.0, roll = 0.0; // radians
  double tx = 0.0, ty = 0.0, tz = 0.0;       // voxels

  bool is_identity() const {
    return pitch == 0 && yaw == 0 && roll == 0 && tx == 0 && ty == 0 &&
           tz == 0;
  }
};

struct AlignConfig {
  int iterations = 150;
  double learning_rate = 0.03;
  double weight_jeffreys = 1.0;
  double weight_ssim = 1.0;
  double weight_volume = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double fd_step_angle = 1e-3;      // radians
  double fd_step_translation = 0.1; // voxels
  // capture range: scanner head CT arrives approximately upright, so the
  // angle search is bounded. Without a bound the optimizer can convert a
  // lateral shift into a 90-degree roll (the shift becomes a symmetry-
  // preserving anterior offset) instead of undoing it.
  double max_rotation = 0.35; // radians (~20 degrees) per angle, 0 = none
  MetricsConfig metrics;
};

/// Backward resampling: output voxel p samples the input at
/// R^-1(p - c - t) + c, rotation applied in mm space, c = grid center.
/// The exact identity transform short-circuits to a copy.
ScalarVolume apply_rigid(const ScalarVolume &vol, const RigidTransform &T);

/// Combined symmetry loss of the aligned candidate:
/// w1 * jeffreys + w2 * ssim + w3 * volume balance over the two halves.
double alignment_loss(const ScalarVolume &vol, const AlignConfig &cfg);

struct AlignResult {
  RigidTransform transform; // best-loss iterate
  ScalarVolume aligned;
  std::vector<double> loss_trace; // loss_trace[0] is the initial loss
};

AlignResult align_symmetry(const ScalarVolume &vol, const AlignConfig &cfg);

} // namespace brainshift

#endif
