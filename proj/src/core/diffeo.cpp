#include "diffeo.hpp"

#include <array>
#include <cmath>

#include "parallel.hpp"

namespace brainshift {

Dims control_dims(const Dims &image_dims, int factor) {
  if (factor < 1)
    throw UsageError("control_dims: factor must be >= 1");
  auto up = [factor](int n) { return (n + factor - 1) / factor; };
  return Dims{up(image_dims.nx), up(image_dims.ny), up(image_dims.nz)};
}

VelocityField make_velocity(const Dims &image_dims, int factor) {
  VelocityField v;
  v.image_dims = image_dims;
  v.factor = factor;
  v.field = VectorField(control_dims(image_dims, factor));
  return v;
}

VectorField upsample_velocity(const VelocityField &v) {
  const Dims id = v.image_dims;
  const Dims cd = v.field.dims();
  VectorField out(id);
  const double inv = 1.0 / v.factor;
  std::size_t p = 0;
  for (int k = 0; k < id.nz; ++k)
    for (int j = 0; j < id.ny; ++j)
      for (int i = 0; i < id.nx; ++i, ++p) {
        const double x = i * inv, y = j * inv, z = k * inv;
        for (int c = 0; c < 3; ++c)
          out.comp(c)[p] = trilinear_sample_raw(v.field.comp(c), cd, x, y, z);
      }
  return out;
}

void upsample_velocity_adjoint(const VectorField &grad_full,
                               const Dims &image_dims, int factor,
                               VectorField &grad_ctrl) {
  const Dims cd = grad_ctrl.dims();
  const double inv = 1.0 / factor;
  std::size_t p = 0;
  for (int k = 0; k < image_dims.nz; ++k)
    for (int j = 0; j < image_dims.ny; ++j)
      for (int i = 0; i < image_dims.nx; ++i, ++p) {
        const TrilinearStencil s =
            trilinear_stencil(cd, i * inv, j * inv, k * inv);
        auto idx = [&](int a, int b, int c) {
          return static_cast<std::size_t>(a) +
                 static_cast<std::size_t>(cd.nx) *
                     (static_cast<std::size_t>(b) +
                      static_cast<std::size_t>(cd.ny) * c);
        };
        const double w000 = (1 - s.fx) * (1 - s.fy) * (1 - s.fz);
        const double w100 = s.fx * (1 - s.fy) * (1 - s.fz);
        const double w010 = (1 - s.fx) * s.fy * (1 - s.fz);
        const double w110 = s.fx * s.fy * (1 - s.fz);
        const double w001 = (1 - s.fx) * (1 - s.fy) * s.fz;
        const double w101 = s.fx * (1 - s.fy) * s.fz;
        const double w011 = (1 - s.fx) * s.fy * s.fz;
        const double w111 = s.fx * s.fy * s.fz;
        for (int c = 0; c < 3; ++c) {
          const double g = grad_full.comp(c)[p];
          if (g == 0.0)
            continue;
          auto &gc = grad_ctrl.comp(c);
          gc[idx(s.i0, s.j0, s.k0)] += g * w000;
          gc[idx(s.i1, s.j0, s.k0)] += g * w100;
          gc[idx(s.i0, s.j1, s.k0)] += g * w010;
          gc[idx(s.i1, s.j1, s.k0)] += g * w110;
          gc[idx(s.i0, s.j0, s.k1)] += g * w001;
          gc[idx(s.i1, s.j0, s.k1)] += g * w101;
          gc[idx(s.i0, s.j1, s.k1)] += g * w011;
          gc[idx(s.i1, s.j1, s.k1)] += g * w111;
        }
      }
}

VectorField compose(const VectorField &f, const VectorField &g) {
  if (f.dims() != g.dims())
    throw DataError("compose: dims mismatch");
  const Dims d = f.dims();
  VectorField out(d);
  const std::size_t nxy = static_cast<std::size_t>(d.nx) * d.ny;
  parallel_chunks(d.count(), [&](std::size_t begin, std::size_t end,
                                 std::size_t) {
    for (std::size_t p = begin; p < end; ++p) {
      const int k = static_cast<int>(p / nxy);
      const int j = static_cast<int>((p - k * nxy) / d.nx);
      const int i =
          static_cast<int>(p - k * nxy - static_cast<std::size_t>(j) * d.nx);
      const double x = i + g.comp(0)[p];
      const double y = j + g.comp(1)[p];
      const double z = k + g.comp(2)[p];
      for (int c = 0; c < 3; ++c)
        out.comp(c)[p] =
            g.comp(c)[p] + trilinear_sample_raw(f.comp(c), d, x, y, z);
    }
  });
  return out;
}

std::vector<VectorField> integrate_velocity_trace(const VelocityField &v,
                                                  int n_steps) {
  if (n_steps < 1)
    throw UsageError("integrate_velocity: n_steps must be >= 1");
  std::vector<VectorField> trace;
  trace.reserve(n_steps + 1);
  VectorField u = upsample_velocity(v);
  const double scale = 1.0 / static_cast<double>(1u << n_steps);
  for (int c = 0; c < 3; ++c)
    for (auto &x : u.comp(c))
      x *= scale;
  trace.push_back(u);
  for (int s = 0; s < n_steps; ++s)
    trace.push_back(compose(trace.back(), trace.back()));
  return trace;
}

VectorField integrate_velocity(const VelocityField &v, int n_steps) {
  auto trace = integrate_velocity_trace(v, n_steps);
  return std::move(trace.back());
}

void compose_self_adjoint(const VectorField &u, const VectorField &grad_out,
                          VectorField &grad_in) {
  const Dims d = u.dims();
  std::size_t p = 0;
  for (int k = 0; k < d.nz; ++k)
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i, ++p) {
        const double gx = grad_out.comp(0)[p];
        const double gy = grad_out.comp(1)[p];
        const double gz = grad_out.comp(2)[p];
        if (gx == 0.0 && gy == 0.0 && gz == 0.0)
          continue;
        const double x = i + u.comp(0)[p];
        const double y = j + u.comp(1)[p];
        const double z = k + u.comp(2)[p];
        // direct term: u'(p) includes u(p)
        grad_in.comp(0)[p] += gx;
        grad_in.comp(1)[p] += gy;
        grad_in.comp(2)[p] += gz;
        // position term: d sample(u_c, q)/dq with q = p + u(p)
        const std::array<double, 3> g = {gx, gy, gz};
        for (int c = 0; c < 3; ++c) {
          if (g[c] == 0.0)
            continue;
          const auto pg = trilinear_position_gradient(u.comp(c), d, x, y, z);
          grad_in.comp(0)[p] += g[c] * pg[0];
          grad_in.comp(1)[p] += g[c] * pg[1];
          grad_in.comp(2)[p] += g[c] * pg[2];
        }
        // value term: scatter trilinear weights at q
        const TrilinearStencil s = trilinear_stencil(d, x, y, z);
        auto idx = [&](int a, int b, int c2) {
          return static_cast<std::size_t>(a) +
                 static_cast<std::size_t>(d.nx) *
                     (static_cast<std::size_t>(b) +
                      static_cast<std::size_t>(d.ny) * c2);
        };
        const double w[8] = {
            (1 - s.fx) * (1 - s.fy) * (1 - s.fz),
            s.fx * (1 - s.fy) * (1 - s.fz),
            (1 - s.fx) * s.fy * (1 - s.fz),
            s.fx * s.fy * (1 - s.fz),
            (1 - s.fx) * (1 - s.fy) * s.fz,
            s.fx * (1 - s.fy) * s.fz,
            (1 - s.fx) * s.fy * s.fz,
            s.fx * s.fy * s.fz};
        const std::size_t corner[8] = {
            idx(s.i0, s.j0, s.k0), idx(s.i1, s.j0, s.k0),
            idx(s.i0, s.j1, s.k0), idx(s.i1, s.j1, s.k0),
            idx(s.i0, s.j0, s.k1), idx(s.i1, s.j0, s.k1),
            idx(s.i0, s.j1, s.k1), idx(s.i1, s.j1, s.k1)};
        for (int c = 0; c < 3; ++c) {
          if (g[c] == 0.0)
            continue;
          auto &gc = grad_in.comp(c);
          for (int t = 0; t < 8; ++t)
            gc[corner[t]] += g[c] * w[t];
        }
      }
}

void warp_adjoint(const std::vector<double> &data, const Dims &d,
                  const VectorField &field,
                  const std::vector<double> &grad_out,
                  VectorField &grad_field) {
  const std::size_t nxy = static_cast<std::size_t>(d.nx) * d.ny;
  parallel_chunks(d.count(), [&](std::size_t begin, std::size_t end,
                                 std::size_t) {
    for (std::size_t p = begin; p < end; ++p) {
      const double g = grad_out[p];
      if (g == 0.0)
        continue;
      const int k = static_cast<int>(p / nxy);
      const int j = static_cast<int>((p - k * nxy) / d.nx);
      const int i =
          static_cast<int>(p - k * nxy - static_cast<std::size_t>(j) * d.nx);
      const auto pg = trilinear_position_gradient(
          data, d, i + field.comp(0)[p], j + field.comp(1)[p],
          k + field.comp(2)[p]);
      grad_field.comp(0)[p] += g * pg[0];
      grad_field.comp(1)[p] += g * pg[1];
      grad_field.comp(2)[p] += g * pg[2];
    }
  });
}

namespace {

// 3x3 Jacobian of p + u(p) at one voxel, central differences in voxel
// coordinates, one-sided at boundary faces. J[c][axis].
std::array<std::array<double, 3>, 3> jacobian_at(const VectorField &u, int i,
                                                 int j, int k) {
  const Dims d = u.dims();
  std::array<std::array<double, 3>, 3> J{};
  auto diff = [&](int c, int axis) {
    int ia = i, ja = j, ka = k, ib = i, jb = j, kb = k;
    double denom = 2.0;
    const int n = axis == 0 ? d.nx : axis == 1 ? d.ny : d.nz;
    int &ca = axis == 0 ? ia : axis == 1 ? ja : ka;
    int &cb = axis == 0 ? ib : axis == 1 ? jb : kb;
    if (ca + 1 > n - 1 || cb - 1 < 0)
      denom = 1.0;
    ca = std::min(ca + 1, n - 1);
    cb = std::max(cb - 1, 0);
    return (u.comp(c)[u.index(ia, ja, ka)] - u.comp(c)[u.index(ib, jb, kb)]) /
           denom;
  };
  for (int c = 0; c < 3; ++c)
    for (int axis = 0; axis < 3; ++axis)
      J[c][axis] = diff(c, axis) + (c == axis ? 1.0 : 0.0);
  return J;
}

double det3(const std::array<std::array<double, 3>, 3> &m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

// d det / d m[i][j] = cofactor C_ij
std::array<std::array<double, 3>, 3> cofactors(
    const std::array<std::array<double, 3>, 3> &m) {
  std::array<std::array<double, 3>, 3> c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
      const int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
      c[i][j] = m[i1][j1] * m[i2][j2] - m[i1][j2] * m[i2][j1];
    }
  return c;
}

} // namespace

ScalarVolume jacobian_determinant(const VectorField &u,
                                  const Spacing &spacing) {
  const Dims d = u.dims();
  if (d.nx < 3 || d.ny < 3 || d.nz < 3)
    throw DataError("jacobian_determinant: dims must be >= 3 per axis");
  ScalarVolume out(d, spacing);
  std::size_t p = 0;
  for (int k = 0; k < d.nz; ++k)
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i, ++p)
        out.data()[p] = det3(jacobian_at(u, i, j, k));
  return out;
}

double jacobian_loss(const VectorField &u,
                     const std::vector<double> *hematoma) {
  const Dims d = u.dims();
  if (hematoma && hematoma->size() != d.count())
    throw DataError("jacobian_loss: mask dims mismatch");
  double sum = 0.0;
  std::size_t p = 0;
  for (int k = 0; k < d.nz; ++k)
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i, ++p) {
        const double target = 1.0 - (hematoma ? (*hematoma)[p] : 0.0);
        const double r = det3(jacobian_at(u, i, j, k)) - target;
        sum += r * r;
      }
  return sum / static_cast<double>(d.count());
}

void jacobian_loss_adjoint(const VectorField &u,
                           const std::vector<double> *hematoma, double scale,
                           VectorField &grad_u) {
  const Dims d = u.dims();
  const double inv_n = 1.0 / static_cast<double>(d.count());
  std::size_t p = 0;
  for (int k = 0; k < d.nz; ++k)
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i, ++p) {
        const auto J = jacobian_at(u, i, j, k);
        const double target = 1.0 - (hematoma ? (*hematoma)[p] : 0.0);
        const double gdet = scale * inv_n * 2.0 * (det3(J) - target);
        if (gdet == 0.0)
          continue;
        const auto C = cofactors(J);
        // scatter through the finite-difference stencil of each J entry
        for (int c = 0; c < 3; ++c)
          for (int axis = 0; axis < 3; ++axis) {
            const double gJ = gdet * C[c][axis];
            int ia = i, ja = j, ka = k, ib = i, jb = j, kb = k;
            double denom = 2.0;
            const int n = axis == 0 ? d.nx : axis == 1 ? d.ny : d.nz;
            int &ca = axis == 0 ? ia : axis == 1 ? ja : ka;
            int &cb = axis == 0 ? ib : axis == 1 ? jb : kb;
            if (ca + 1 > n - 1 || cb - 1 < 0)
              denom = 1.0;
            ca = std::min(ca + 1, n - 1);
            cb = std::max(cb - 1, 0);
            grad_u.comp(c)[u.index(ia, ja, ka)] += gJ / denom;
            grad_u.comp(c)[u.index(ib, jb, kb)] -= gJ / denom;
          }
      }
}

double gradient_loss(const VelocityField &v) {
  const Dims d = v.field.dims();
  if (d.nx < 2 || d.ny < 2 || d.nz < 2)
    throw DataError("gradient_loss: control grid must be >= 2 per axis");
  double loss = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    const std::size_t stride =
        axis == 0 ? 1
        : axis == 1 ? static_cast<std::size_t>(d.nx)
                    : static_cast<std::size_t>(d.nx) * d.ny;
    const int lim_x = d.nx - (axis == 0 ? 1 : 0);
    const int lim_y = d.ny - (axis == 1 ? 1 : 0);
    const int lim_z = d.nz - (axis == 2 ? 1 : 0);
    const double count =
        static_cast<double>(lim_x) * lim_y * lim_z;
    for (int c = 0; c < 3; ++c) {
      const auto &vc = v.field.comp(c);
      double sum = 0.0;
      for (int k = 0; k < lim_z; ++k)
        for (int j = 0; j < lim_y; ++j) {
          std::size_t p = v.field.index(0, j, k);
          for (int i = 0; i < lim_x; ++i, ++p) {
            const double dd = vc[p + stride] - vc[p];
            sum += dd * dd;
          }
        }
      loss += sum / count;
    }
  }
  return loss;
}

void gradient_loss_adjoint(const VelocityField &v, double scale,
                           VectorField &grad_ctrl) {
  const Dims d = v.field.dims();
  for (int axis = 0; axis < 3; ++axis) {
    const std::size_t stride =
        axis == 0 ? 1
        : axis == 1 ? static_cast<std::size_t>(d.nx)
                    : static_cast<std::size_t>(d.nx) * d.ny;
    const int lim_x = d.nx - (axis == 0 ? 1 : 0);
    const int lim_y = d.ny - (axis == 1 ? 1 : 0);
    const int lim_z = d.nz - (axis == 2 ? 1 : 0);
    const double inv_count =
        1.0 / (static_cast<double>(lim_x) * lim_y * lim_z);
    for (int c = 0; c < 3; ++c) {
      const auto &vc = v.field.comp(c);
      auto &gc = grad_ctrl.comp(c);
      for (int k = 0; k < lim_z; ++k)
        for (int j = 0; j < lim_y; ++j) {
          std::size_t p = v.field.index(0, j, k);
          for (int i = 0; i < lim_x; ++i, ++p) {
            const double g =
                scale * inv_count * 2.0 * (vc[p + stride] - vc[p]);
            gc[p + stride] += g;
            gc[p] -= g;
          }
        }
    }
  }
}

} // namespace brainshift
