/**
 * @file diffeo.hpp
 * @brief Stationary-velocity-field machinery: scaling-and-squaring
 *        integration, field composition, Jacobian determinants and the two
 *        field regularizers, with hand-written adjoints.
 */
#ifndef BRAINSHIFT_DIFFEO_HPP
#define BRAINSHIFT_DIFFEO_HPP

#include <vector>

#include "volume.hpp"

namespace brainshift {

/// Velocity on a control grid coarsened by `factor` per axis relative to the
/// image grid; trilinearly upsampled to full resolution before integration.
struct VelocityField {
  VectorField field;   // control-grid values, voxel units of the image grid
  Dims image_dims;
  int factor = 2;
};

Dims control_dims(const Dims &image_dims, int factor);
VelocityField make_velocity(const Dims &image_dims, int factor);

/// Trilinear upsample control grid -> image grid (control point q maps to
/// image coordinate q * factor).
VectorField upsample_velocity(const VelocityField &v);
/// Adjoint of upsample_velocity; accumulates into grad_ctrl.
void upsample_velocity_adjoint(const VectorField &grad_full,
                               const Dims &image_dims, int factor,
                               VectorField &grad_ctrl);

/// Scaling and squaring: u0 = upsample(v) / 2^n, then n self-compositions.
VectorField integrate_velocity(const VelocityField &v, int n_steps = 7);

/// Same, keeping every intermediate field u_0..u_n for the reverse pass.
std::vector<VectorField> integrate_velocity_trace(const VelocityField &v,
                                                  int n_steps);

/// Composition under backward warping: u(p) = u_g(p) + sample(u_f, p+u_g(p)).
VectorField compose(const VectorField &f, const VectorField &g);

/// Reverse pass of the self-composition u' = compose(u, u); accumulates the
/// pullback of grad_out into grad_in.
void compose_self_adjoint(const VectorField &u, const VectorField &grad_out,
                          VectorField &grad_in);

/// Adjoint of out = warp_channel(data, field) w.r.t. the field
/// (data held fixed): grad_field(p) += grad_out(p) * dSample/dposition.
void warp_adjoint(const std::vector<double> &data, const Dims &d,
                  const VectorField &field,
                  const std::vector<double> &grad_out, VectorField &grad_field);

/// det of the map p + u(p), central differences (one-sided at boundaries),
/// in voxel coordinates.
ScalarVolume jacobian_determinant(const VectorField &u, const Spacing &spacing);

/// mean over voxels of (detJ(p) - target(p))^2, target = 1 - hematoma(p)
/// (nullptr hematoma means target 1 everywhere).
double jacobian_loss(const VectorField &u, const std::vector<double> *hematoma);
void jacobian_loss_adjoint(const VectorField &u,
                           const std::vector<double> *hematoma, double scale,
                           VectorField &grad_u);

/// Diffusion regularizer on the control grid: sum over components and axes
/// of the mean squared forward difference.
double gradient_loss(const VelocityField &v);
void gradient_loss_adjoint(const VelocityField &v, double scale,
                           VectorField &grad_ctrl);

} // namespace brainshift

#endif
