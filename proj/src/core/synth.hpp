/**
 * @file synth.hpp
 * @brief Pseudo-healthy synthesis: per-volume Adam descent on a control-grid
 *        velocity field minimizing the compound symmetry/anatomy loss, with
 *        full reverse-mode (adjoint) gradients.
 */
#ifndef BRAINSHIFT_SYNTH_HPP
#define BRAINSHIFT_SYNTH_HPP

#include <vector>

#include "diffeo.hpp"
#include "metrics.hpp"
#include "volume.hpp"

namespace brainshift {

struct LossWeights {
  double jeffreys = 1.0;
  double ssim = 1.0;
  double ventricle = 1.0;
  double hematoma = 1.0;
  double skull = 5.0;
  double jacobian = 5.0;
  double gradient = 5.0;
};

struct SynthOptions {
  int iterations = 2000;
  double learning_rate = 3e-4;
  int n_steps = 7;       // scaling-and-squaring steps
  int control_factor = 2;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  MetricsConfig metrics;
};

struct LossTerms {
  double total = 0.0;
  double jeffreys = 0.0;
  double ssim = 0.0;
  double ventricle = 0.0;
  double hematoma = 0.0;
  double skull = 0.0;
  double jacobian = 0.0;
  double gradient = 0.0;
};

/// 1 - dice(warped left ventricle, sagittal_flip(warped right ventricle)).
double ventricle_loss(const MaskVolume &warped_masks);

/// 1 - (sum(orig) - sum(warped)) / sum(orig); 1 at identity, 0 when fully
/// removed. Throws on an empty original mask.
double hematoma_loss(const std::vector<double> &original,
                     const std::vector<double> &warped);

/// 1 - dice(original skull, warped skull).
double skull_loss(const std::vector<double> &original,
                  const std::vector<double> &warped);

/// Eq-by-eq weighted sum of all seven terms at velocity v. The hematoma term
/// is skipped when the input has no hematoma mass. Symmetry terms are
/// evaluated over the brain-masked warped volume.
LossTerms compound_loss(const ScalarVolume &X, const MaskVolume &masks,
                        const VelocityField &v, const LossWeights &weights,
                        const SynthOptions &opts);

/// Forward pass plus reverse-mode gradient w.r.t. the control-grid velocity.
/// grad_ctrl must match v's control grid; it is overwritten.
LossTerms compound_loss_grad(const ScalarVolume &X, const MaskVolume &masks,
                             const VelocityField &v,
                             const LossWeights &weights,
                             const SynthOptions &opts,
                             VectorField &grad_ctrl);

struct SynthesisResult {
  VelocityField velocity;
  VectorField deformation; // integrate_velocity(velocity, n_steps)
  ScalarVolume pseudo_healthy;
  MaskVolume warped_masks;
  std::vector<LossTerms> trace; // one entry per iteration evaluated
  double hematoma_reduction = 0.0;
};

SynthesisResult optimize_velocity(const ScalarVolume &X,
                                  const MaskVolume &masks,
                                  const LossWeights &weights,
                                  const SynthOptions &opts);

/// Adjoint-vs-central-differences check at random control-grid coordinates;
/// returns the max relative error (denominator max(|fd|, 1e-6)). The default
/// step suits smooth regions; a smaller step avoids the kinks of the
/// trilinear interpolant and the triangular histogram kernel.
double gradient_check(const ScalarVolume &X, const MaskVolume &masks,
                      const LossWeights &weights, const VelocityField &v,
                      const SynthOptions &opts, int samples = 100,
                      std::uint64_t seed = 1, double step = 1e-3);

} // namespace brainshift

#endif
