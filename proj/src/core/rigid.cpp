#include "rigid.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "adam.hpp"
#include "parallel.hpp"

namespace brainshift {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 rotation_matrix(double pitch, double yaw, double roll) {
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const double cr = std::cos(roll), sr = std::sin(roll);
  // Rz(roll) * Ry(yaw) * Rx(pitch)
  Mat3 r;
  r[0] = {cr * cy, cr * sy * sp - sr * cp, cr * sy * cp + sr * sp};
  r[1] = {sr * cy, sr * sy * sp + cr * cp, sr * sy * cp - cr * sp};
  r[2] = {-sy, cy * sp, cy * cp};
  return r;
}

} // namespace

ScalarVolume apply_rigid(const ScalarVolume &vol, const RigidTransform &T) {
  if (T.is_identity())
    return vol;
  const Dims d = vol.dims();
  const Spacing s = vol.spacing();
  ScalarVolume out(d, s);
  const Mat3 r = rotation_matrix(T.pitch, T.yaw, T.roll);
  // inverse rotation = transpose
  const double cx = 0.5 * (d.nx - 1), cy = 0.5 * (d.ny - 1),
               cz = 0.5 * (d.nz - 1);
  const std::size_t n = d.count();
  parallel_chunks(n, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t p = begin; p < end; ++p) {
      const int i = static_cast<int>(p % d.nx);
      const int j = static_cast<int>((p / d.nx) % d.ny);
      const int k = static_cast<int>(p / (static_cast<std::size_t>(d.nx) *
                                          d.ny));
      // voxel offset from center minus translation, taken to mm space
      const double vx = (i - cx - T.tx) * s.sx;
      const double vy = (j - cy - T.ty) * s.sy;
      const double vz = (k - cz - T.tz) * s.sz;
      const double rx = r[0][0] * vx + r[1][0] * vy + r[2][0] * vz;
      const double ry = r[0][1] * vx + r[1][1] * vy + r[2][1] * vz;
      const double rz = r[0][2] * vx + r[1][2] * vy + r[2][2] * vz;
      out.data()[p] = trilinear_sample_raw(vol.data(), d, cx + rx / s.sx,
                                           cy + ry / s.sy, cz + rz / s.sz);
    }
  });
  return out;
}

double alignment_loss(const ScalarVolume &vol, const AlignConfig &cfg) {
  auto [left, right] = split_halves(vol);
  double loss = 0.0;
  if (cfg.weight_jeffreys != 0.0)
    loss += cfg.weight_jeffreys * jeffreys_loss(left, right, cfg.metrics);
  if (cfg.weight_ssim != 0.0)
    loss += cfg.weight_ssim * ssim_loss(left, right, cfg.metrics);
  if (cfg.weight_volume != 0.0)
    loss += cfg.weight_volume *
            volume_balance_loss(vol, cfg.metrics.binarizer_tau,
                                cfg.metrics.binarizer_eps);
  return loss;
}

AlignResult align_symmetry(const ScalarVolume &vol, const AlignConfig &cfg) {
  if (cfg.iterations < 1 || cfg.learning_rate <= 0.0)
    throw UsageError("align_symmetry: bad iterations or learning rate");
  // foreground precondition, shared with volume_balance_loss
  volume_balance_loss(vol, cfg.metrics.binarizer_tau,
                      cfg.metrics.binarizer_eps);

  auto params_to_transform = [](const std::vector<double> &p) {
    RigidTransform t;
    t.pitch = p[0];
    t.yaw = p[1];
    t.roll = p[2];
    t.tx = p[3];
    t.ty = p[4];
    t.tz = p[5];
    return t;
  };
  auto eval = [&](const std::vector<double> &p) {
    return alignment_loss(apply_rigid(vol, params_to_transform(p)), cfg);
  };

  std::vector<double> params(6, 0.0);
  AdamOptimizer adam(6, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                     cfg.adam_eps);
  AlignResult result;
  double best = eval(params);
  result.loss_trace.push_back(best);
  std::vector<double> best_params = params;

  for (int it = 0; it < cfg.iterations; ++it) {
    // central finite differences on the 6 parameters
    std::vector<double> grad(6, 0.0);
    std::vector<std::function<void()>> tasks;
    std::array<double, 12> vals{};
    for (int p = 0; p < 6; ++p) {
      const double h = p < 3 ? cfg.fd_step_angle : cfg.fd_step_translation;
      for (int sgn = 0; sgn < 2; ++sgn)
        tasks.push_back([&, p, sgn, h] {
          std::vector<double> q = params;
          q[p] += sgn == 0 ? h : -h;
          vals[2 * p + sgn] = eval(q);
        });
    }
    parallel_tasks(tasks);
    for (int p = 0; p < 6; ++p) {
      const double h = p < 3 ? cfg.fd_step_angle : cfg.fd_step_translation;
      grad[p] = (vals[2 * p] - vals[2 * p + 1]) / (2.0 * h);
      if (!std::isfinite(grad[p]))
        throw DataError("align_symmetry: non-finite gradient");
    }
    adam.step(params, grad);
    if (cfg.max_rotation > 0.0)
      for (int p = 0; p < 3; ++p)
        params[p] = std::clamp(params[p], -cfg.max_rotation, cfg.max_rotation);
    const double loss = eval(params);
    if (!std::isfinite(loss))
      throw DataError("align_symmetry: non-finite loss at iteration " +
                      std::to_string(it));
    result.loss_trace.push_back(loss);
    if (loss < best) {
      best = loss;
      best_params = params;
    }
  }
  result.transform = params_to_transform(best_params);
  result.aligned = apply_rigid(vol, result.transform);
  return result;
}

} // namespace brainshift
