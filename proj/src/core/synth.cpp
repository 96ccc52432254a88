#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "adam.hpp"
#include "rng.hpp"

namespace brainshift {

namespace {

// Scatter a half-volume gradient back into the full grid (inverse of
// split_halves_raw; the dropped center slice of an odd-nx grid gets nothing).
void scatter_half(const std::vector<double> &half, const Dims &full_dims,
                  bool right, std::vector<double> &full) {
  const Dims h = half_dims(full_dims);
  const int off = right ? full_dims.nx - h.nx : 0;
  std::size_t p = 0;
  for (int k = 0; k < full_dims.nz; ++k)
    for (int j = 0; j < full_dims.ny; ++j) {
      const std::size_t row =
          static_cast<std::size_t>(full_dims.nx) *
          (static_cast<std::size_t>(j) +
           static_cast<std::size_t>(full_dims.ny) * k);
      for (int i = 0; i < h.nx; ++i, ++p)
        full[row + off + i] += half[p];
    }
}

double vec_sum(const std::vector<double> &v) {
  double s = 0.0;
  for (double x : v)
    s += x;
  return s;
}

struct TermFlags {
  bool has_hematoma = false;
  double hematoma_sum = 0.0;
};

void check_finite(double v, const char *term) {
  if (!std::isfinite(v))
    throw DataError(std::string("compound_loss: non-finite term ") + term);
}

LossTerms evaluate(const ScalarVolume &X, const MaskVolume &masks,
                   const VelocityField &v, const LossWeights &w,
                   const SynthOptions &opts, VectorField *grad_ctrl) {
  const Dims d = X.dims();
  if (masks.dims() != d)
    throw DataError("compound_loss: mask grid does not match volume");
  if (v.image_dims != d)
    throw DataError("compound_loss: velocity image grid mismatch");

  const auto &brain = masks.channel(MaskClass::Brain);
  const auto &skull = masks.channel(MaskClass::Skull);
  const auto &vl = masks.channel(MaskClass::VentricleLeft);
  const auto &vr = masks.channel(MaskClass::VentricleRight);
  TermFlags flags;
  const std::vector<double> *hem = nullptr;
  if (masks.has(MaskClass::Hematoma)) {
    hem = &masks.channel(MaskClass::Hematoma);
    flags.hematoma_sum = vec_sum(*hem);
    flags.has_hematoma = flags.hematoma_sum > 1e-12;
  }

  // forward: integrate, warp, split
  const auto trace = integrate_velocity_trace(v, opts.n_steps);
  const VectorField &u = trace.back();
  const std::vector<double> Y = warp_channel(X.data(), d, u);
  const std::vector<double> Wb = warp_channel(brain, d, u);
  const std::vector<double> Ws = warp_channel(skull, d, u);
  const std::vector<double> Wvl = warp_channel(vl, d, u);
  const std::vector<double> Wvr = warp_channel(vr, d, u);
  std::vector<double> Wh;
  if (flags.has_hematoma)
    Wh = warp_channel(*hem, d, u);

  auto [Yl, Yr] = split_halves_raw(Y, d);
  auto [Wbl, Wbr] = split_halves_raw(Wb, d);
  const Dims hd = half_dims(d);

  LossTerms terms;

  // L_jeffrey: brain-weighted intensity histograms of the two halves
  JeffreysGrad jg;
  if (grad_ctrl) {
    jg = jeffreys_loss_with_grad(Yl, Yr, &Wbl, &Wbr, opts.metrics.n_bins,
                                 opts.metrics.range_lo, opts.metrics.range_hi);
    terms.jeffreys = jg.value;
  } else {
    terms.jeffreys =
        jeffreys_loss(Yl, Yr, &Wbl, &Wbr, opts.metrics.n_bins,
                      opts.metrics.range_lo, opts.metrics.range_hi);
  }
  check_finite(terms.jeffreys, "jeffreys");

  // L_ssim on the brain-masked halves; window clamped on small grids
  const int win = std::max(
      1, std::min({opts.metrics.ssim_window, hd.nx, hd.ny, hd.nz}));
  const double L = opts.metrics.range_hi - opts.metrics.range_lo;
  const double c1 = (0.01 * L) * (0.01 * L);
  const double c2 = (0.03 * L) * (0.03 * L);
  std::vector<double> A(hd.count()), B(hd.count());
  for (std::size_t i = 0; i < A.size(); ++i)
    A[i] = Yl[i] * Wbl[i];
  {
    std::vector<double> Brh(hd.count());
    for (std::size_t i = 0; i < Brh.size(); ++i)
      Brh[i] = Yr[i] * Wbr[i];
    B = sagittal_flip_raw(Brh, hd);
  }
  SsimGrad sg;
  if (grad_ctrl) {
    sg = ssim_value_with_grad(A, B, hd, win, c1, c2);
    terms.ssim = -sg.value;
  } else {
    terms.ssim = -ssim_value(A, B, hd, win, c1, c2);
  }
  check_finite(terms.ssim, "ssim");

  // L_ventricle
  const std::vector<double> WvrF = sagittal_flip_raw(Wvr, d);
  DiceGrad vent;
  if (grad_ctrl) {
    vent = soft_dice_with_grad(Wvl, WvrF);
    terms.ventricle = 1.0 - vent.value;
  } else {
    terms.ventricle = 1.0 - soft_dice(Wvl, WvrF);
  }
  check_finite(terms.ventricle, "ventricle");

  // L_hematoma (skipped for hematoma-free inputs)
  if (flags.has_hematoma) {
    terms.hematoma = vec_sum(Wh) / flags.hematoma_sum;
    check_finite(terms.hematoma, "hematoma");
  }

  // L_skull
  DiceGrad sk;
  if (grad_ctrl) {
    sk = soft_dice_with_grad(skull, Ws);
    terms.skull = 1.0 - sk.value;
  } else {
    terms.skull = 1.0 - soft_dice(skull, Ws);
  }
  check_finite(terms.skull, "skull");

  // L_jacobian: non-hematoma voxels to 1, hematoma voxels to 0
  terms.jacobian = jacobian_loss(u, flags.has_hematoma ? hem : nullptr);
  check_finite(terms.jacobian, "jacobian");

  // L_gradient on the control-grid velocity
  terms.gradient = gradient_loss(v);
  check_finite(terms.gradient, "gradient");

  terms.total = w.jeffreys * terms.jeffreys + w.ssim * terms.ssim +
                w.ventricle * terms.ventricle +
                (flags.has_hematoma ? w.hematoma * terms.hematoma : 0.0) +
                w.skull * terms.skull + w.jacobian * terms.jacobian +
                w.gradient * terms.gradient;
  check_finite(terms.total, "total");

  if (!grad_ctrl)
    return terms;

  // ---- reverse pass ----
  for (int c = 0; c < 3; ++c)
    std::fill(grad_ctrl->comp(c).begin(), grad_ctrl->comp(c).end(), 0.0);
  VectorField ubar(d);

  // jeffreys: intensity and weight gradients scattered back to full grids
  std::vector<double> gY(d.count(), 0.0), gWb(d.count(), 0.0);
  if (w.jeffreys != 0.0) {
    for (auto *p : {&jg.d_left, &jg.d_right, &jg.dw_left, &jg.dw_right})
      for (auto &x : *p)
        x *= w.jeffreys;
    scatter_half(jg.d_left, d, false, gY);
    scatter_half(jg.d_right, d, true, gY);
    scatter_half(jg.dw_left, d, false, gWb);
    scatter_half(jg.dw_right, d, true, gWb);
  }

  // ssim: A = Yl .* Wbl, B = flip(Yr .* Wbr); loss is -ssim
  if (w.ssim != 0.0) {
    std::vector<double> gA = sg.d_a;
    std::vector<double> gB = sagittal_flip_raw(sg.d_b, hd);
    std::vector<double> gYl(hd.count()), gWbl(hd.count()), gYr(hd.count()),
        gWbr(hd.count());
    for (std::size_t i = 0; i < gA.size(); ++i) {
      const double ga = -w.ssim * gA[i];
      gYl[i] = ga * Wbl[i];
      gWbl[i] = ga * Yl[i];
      const double gb = -w.ssim * gB[i];
      gYr[i] = gb * Wbr[i];
      gWbr[i] = gb * Yr[i];
    }
    scatter_half(gYl, d, false, gY);
    scatter_half(gYr, d, true, gY);
    scatter_half(gWbl, d, false, gWb);
    scatter_half(gWbr, d, true, gWb);
  }
  warp_adjoint(X.data(), d, u, gY, ubar);
  warp_adjoint(brain, d, u, gWb, ubar);

  // ventricle
  if (w.ventricle != 0.0) {
    std::vector<double> gWvl = vent.d_a;
    for (auto &x : gWvl)
      x *= -w.ventricle;
    std::vector<double> gWvr = sagittal_flip_raw(vent.d_b, d);
    for (auto &x : gWvr)
      x *= -w.ventricle;
    warp_adjoint(vl, d, u, gWvl, ubar);
    warp_adjoint(vr, d, u, gWvr, ubar);
  }

  // hematoma: d/dWh = w4 / sum(orig)
  if (flags.has_hematoma && w.hematoma != 0.0) {
    std::vector<double> gWh(d.count(), w.hematoma / flags.hematoma_sum);
    warp_adjoint(*hem, d, u, gWh, ubar);
  }

  // skull (only the warped operand depends on u)
  if (w.skull != 0.0) {
    std::vector<double> gWs = sk.d_b;
    for (auto &x : gWs)
      x *= -w.skull;
    warp_adjoint(skull, d, u, gWs, ubar);
  }

  // jacobian
  if (w.jacobian != 0.0)
    jacobian_loss_adjoint(u, flags.has_hematoma ? hem : nullptr, w.jacobian,
                          ubar);

  // pull the deformation gradient back through the squaring chain
  for (int s = opts.n_steps - 1; s >= 0; --s) {
    VectorField prev(d);
    compose_self_adjoint(trace[s], ubar, prev);
    ubar = std::move(prev);
  }

  // u_0 = upsample(v) / 2^n
  const double scale = 1.0 / static_cast<double>(1u << opts.n_steps);
  for (int c = 0; c < 3; ++c)
    for (auto &x : ubar.comp(c))
      x *= scale;
  upsample_velocity_adjoint(ubar, d, v.factor, *grad_ctrl);

  // gradient regularizer acts on the control grid directly
  if (w.gradient != 0.0)
    gradient_loss_adjoint(v, w.gradient, *grad_ctrl);

  return terms;
}

} // namespace

double ventricle_loss(const MaskVolume &warped_masks) {
  const auto &l = warped_masks.channel(MaskClass::VentricleLeft);
  const auto &r = warped_masks.channel(MaskClass::VentricleRight);
  if (vec_sum(l) <= 1e-12 || vec_sum(r) <= 1e-12)
    throw DataError("ventricle_loss: empty ventricle channel");
  return 1.0 - soft_dice(l, sagittal_flip_raw(r, warped_masks.dims()));
}

double hematoma_loss(const std::vector<double> &original,
                     const std::vector<double> &warped) {
  const double s = vec_sum(original);
  if (s <= 1e-12)
    throw DataError("hematoma_loss: empty original hematoma mask");
  return 1.0 - (s - vec_sum(warped)) / s;
}

double skull_loss(const std::vector<double> &original,
                  const std::vector<double> &warped) {
  if (vec_sum(original) <= 1e-12)
    throw DataError("skull_loss: empty skull mask");
  return 1.0 - soft_dice(original, warped);
}

LossTerms compound_loss(const ScalarVolume &X, const MaskVolume &masks,
                        const VelocityField &v, const LossWeights &weights,
                        const SynthOptions &opts) {
  return evaluate(X, masks, v, weights, opts, nullptr);
}

LossTerms compound_loss_grad(const ScalarVolume &X, const MaskVolume &masks,
                             const VelocityField &v,
                             const LossWeights &weights,
                             const SynthOptions &opts,
                             VectorField &grad_ctrl) {
  if (grad_ctrl.dims() != v.field.dims())
    throw DataError("compound_loss_grad: gradient grid mismatch");
  return evaluate(X, masks, v, weights, opts, &grad_ctrl);
}

SynthesisResult optimize_velocity(const ScalarVolume &X,
                                  const MaskVolume &masks,
                                  const LossWeights &weights,
                                  const SynthOptions &opts) {
  if (opts.iterations < 1 || opts.learning_rate <= 0.0)
    throw UsageError("optimize_velocity: bad iterations or learning rate");
  VelocityField v = make_velocity(X.dims(), opts.control_factor);
  const std::size_t m = v.field.count();
  VectorField grad(v.field.dims());
  AdamOptimizer adam(3 * m, opts.learning_rate, opts.adam_beta1,
                     opts.adam_beta2, opts.adam_eps);
  std::vector<double> params(3 * m, 0.0), flat_grad(3 * m);

  SynthesisResult result;
  std::vector<double> best_params = params;
  double best = std::numeric_limits<double>::infinity();

  for (int it = 0; it < opts.iterations; ++it) {
    for (int c = 0; c < 3; ++c)
      std::copy(params.begin() + c * m, params.begin() + (c + 1) * m,
                v.field.comp(c).begin());
    const LossTerms terms =
        compound_loss_grad(X, masks, v, weights, opts, grad);
    result.trace.push_back(terms);
    if (terms.total < best) {
      best = terms.total;
      best_params = params;
    }
    for (int c = 0; c < 3; ++c)
      std::copy(grad.comp(c).begin(), grad.comp(c).end(),
                flat_grad.begin() + c * m);
    adam.step(params, flat_grad);
  }

  for (int c = 0; c < 3; ++c)
    std::copy(best_params.begin() + c * m, best_params.begin() + (c + 1) * m,
              v.field.comp(c).begin());
  result.velocity = v;
  result.deformation = integrate_velocity(v, opts.n_steps);
  result.pseudo_healthy = warp(X, result.deformation);
  result.warped_masks = warp(masks, result.deformation);
  if (masks.has(MaskClass::Hematoma)) {
    const double orig = vec_sum(masks.channel(MaskClass::Hematoma));
    if (orig > 1e-12) {
      const double warped =
          vec_sum(result.warped_masks.channel(MaskClass::Hematoma));
      result.hematoma_reduction = (orig - warped) / orig;
    }
  }
  return result;
}

double gradient_check(const ScalarVolume &X, const MaskVolume &masks,
                      const LossWeights &weights, const VelocityField &v,
                      const SynthOptions &opts, int samples,
                      std::uint64_t seed, double step) {
  VectorField grad(v.field.dims());
  compound_loss_grad(X, masks, v, weights, opts, grad);

  Rng rng(seed);
  VelocityField probe = v;
  const std::size_t m = v.field.count();
  const double h = step;
  double max_rel = 0.0;
  for (int s = 0; s < samples; ++s) {
    const int c = static_cast<int>(rng.integer(3));
    const std::size_t i = rng.integer(m);
    const double saved = probe.field.comp(c)[i];
    probe.field.comp(c)[i] = saved + h;
    const double lp = compound_loss(X, masks, probe, weights, opts).total;
    probe.field.comp(c)[i] = saved - h;
    const double lm = compound_loss(X, masks, probe, weights, opts).total;
    probe.field.comp(c)[i] = saved;
    const double fd = (lp - lm) / (2.0 * h);
    const double ad = grad.comp(c)[i];
    const double rel = std::abs(ad - fd) / std::max(std::abs(fd), 1e-6);
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

} // namespace brainshift
