#include "volume.hpp"

#include <algorithm>
#include <cmath>

#include "parallel.hpp"

namespace brainshift {

ScalarVolume::ScalarVolume(Dims d, Spacing s, double fill)
    : dims_(d), spacing_(s), data_(d.count(), fill) {
  if (d.nx <= 0 || d.ny <= 0 || d.nz <= 0)
    throw DataError("ScalarVolume: dims must be positive");
  if (s.sx <= 0 || s.sy <= 0 || s.sz <= 0)
    throw DataError("ScalarVolume: spacing must be positive");
}

const char *mask_class_name(MaskClass c) {
  switch (c) {
  case MaskClass::Brain: return "brain";
  case MaskClass::Skull: return "skull";
  case MaskClass::Hematoma: return "hematoma";
  case MaskClass::VentricleLeft: return "ventricle_left";
  case MaskClass::VentricleRight: return "ventricle_right";
  }
  return "?";
}

std::vector<double> &MaskVolume::channel(MaskClass c) {
  auto &ch = channels_[static_cast<int>(c)];
  if (ch.empty())
    throw DataError(std::string("MaskVolume: missing channel ") +
                    mask_class_name(c));
  return ch;
}

const std::vector<double> &MaskVolume::channel(MaskClass c) const {
  const auto &ch = channels_[static_cast<int>(c)];
  if (ch.empty())
    throw DataError(std::string("MaskVolume: missing channel ") +
                    mask_class_name(c));
  return ch;
}

void MaskVolume::set_channel(MaskClass c, std::vector<double> values) {
  if (values.size() != dims_.count())
    throw DataError("MaskVolume: channel size does not match grid");
  channels_[static_cast<int>(c)] = std::move(values);
}

VectorField::VectorField(Dims d) : dims_(d) {
  for (auto &c : comps_)
    c.assign(d.count(), 0.0);
}

TrilinearStencil trilinear_stencil(const Dims &d, double x, double y,
                                   double z) {
  // clamp-to-edge: positions outside the grid sample the boundary value
  auto prep = [](double v, int n, int &a, int &b, double &f) {
    if (v <= 0.0) {
      a = b = 0;
      f = 0.0;
    } else if (v >= n - 1) {
      a = b = n - 1;
      f = 0.0;
    } else {
      a = static_cast<int>(std::floor(v));
      b = a + 1;
      f = v - a;
    }
  };
  TrilinearStencil s;
  prep(x, d.nx, s.i0, s.i1, s.fx);
  prep(y, d.ny, s.j0, s.j1, s.fy);
  prep(z, d.nz, s.k0, s.k1, s.fz);
  return s;
}

double trilinear_sample_raw(const std::vector<double> &data, const Dims &d,
                            double x, double y, double z) {
  const TrilinearStencil s = trilinear_stencil(d, x, y, z);
  auto idx = [&](int i, int j, int k) {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(d.nx) *
               (static_cast<std::size_t>(j) +
                static_cast<std::size_t>(d.ny) * k);
  };
  const double c000 = data[idx(s.i0, s.j0, s.k0)];
  const double c100 = data[idx(s.i1, s.j0, s.k0)];
  const double c010 = data[idx(s.i0, s.j1, s.k0)];
  const double c110 = data[idx(s.i1, s.j1, s.k0)];
  const double c001 = data[idx(s.i0, s.j0, s.k1)];
  const double c101 = data[idx(s.i1, s.j0, s.k1)];
  const double c011 = data[idx(s.i0, s.j1, s.k1)];
  const double c111 = data[idx(s.i1, s.j1, s.k1)];
  const double c00 = c000 + s.fx * (c100 - c000);
  const double c10 = c010 + s.fx * (c110 - c010);
  const double c01 = c001 + s.fx * (c101 - c001);
  const double c11 = c011 + s.fx * (c111 - c011);
  const double c0 = c00 + s.fy * (c10 - c00);
  const double c1 = c01 + s.fy * (c11 - c01);
  return c0 + s.fz * (c1 - c0);
}

double trilinear_sample(const ScalarVolume &vol, double x, double y, double z) {
  return trilinear_sample_raw(vol.data(), vol.dims(), x, y, z);
}

std::array<double, 3> trilinear_position_gradient(
    const std::vector<double> &data, const Dims &d, double x, double y,
    double z) {
  const TrilinearStencil s = trilinear_stencil(d, x, y, z);
  auto idx = [&](int i, int j, int k) {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(d.nx) *
               (static_cast<std::size_t>(j) +
                static_cast<std::size_t>(d.ny) * k);
  };
  const double c000 = data[idx(s.i0, s.j0, s.k0)];
  const double c100 = data[idx(s.i1, s.j0, s.k0)];
  const double c010 = data[idx(s.i0, s.j1, s.k0)];
  const double c110 = data[idx(s.i1, s.j1, s.k0)];
  const double c001 = data[idx(s.i0, s.j0, s.k1)];
  const double c101 = data[idx(s.i1, s.j0, s.k1)];
  const double c011 = data[idx(s.i0, s.j1, s.k1)];
  const double c111 = data[idx(s.i1, s.j1, s.k1)];
  const double gx0 = (c100 - c000) + s.fy * ((c110 - c010) - (c100 - c000));
  const double gx1 = (c101 - c001) + s.fy * ((c111 - c011) - (c101 - c001));
  double gx = gx0 + s.fz * (gx1 - gx0);
  const double gy0 = (c010 - c000) + s.fx * ((c110 - c100) - (c010 - c000));
  const double gy1 = (c011 - c001) + s.fx * ((c111 - c101) - (c011 - c001));
  double gy = gy0 + s.fz * (gy1 - gy0);
  const double c00 = c000 + s.fx * (c100 - c000);
  const double c10 = c010 + s.fx * (c110 - c010);
  const double c01 = c001 + s.fx * (c101 - c001);
  const double c11 = c011 + s.fx * (c111 - c011);
  double gz = (c01 + s.fy * (c11 - c01)) - (c00 + s.fy * (c10 - c00));
  // clamped axes have zero positional sensitivity
  if (s.i0 == s.i1) gx = 0.0;
  if (s.j0 == s.j1) gy = 0.0;
  if (s.k0 == s.k1) gz = 0.0;
  return {gx, gy, gz};
}

std::vector<double> warp_channel(const std::vector<double> &data,
                                 const Dims &d, const VectorField &field) {
  if (field.dims() != d)
    throw DataError("warp: field dims do not match volume dims");
  std::vector<double> out(d.count());
  const auto &ux = field.comp(0);
  const auto &uy = field.comp(1);
  const auto &uz = field.comp(2);
  const std::size_t nxy = static_cast<std::size_t>(d.nx) * d.ny;
  parallel_chunks(d.count(), [&](std::size_t begin, std::size_t end,
                                 std::size_t) {
    for (std::size_t p = begin; p < end; ++p) {
      const int k = static_cast<int>(p / nxy);
      const int j = static_cast<int>((p - k * nxy) / d.nx);
      const int i = static_cast<int>(p - k * nxy - static_cast<std::size_t>(j) * d.nx);
      out[p] = trilinear_sample_raw(data, d, i + ux[p], j + uy[p], k + uz[p]);
    }
  });
  return out;
}

ScalarVolume warp(const ScalarVolume &vol, const VectorField &field) {
  ScalarVolume out(vol.dims(), vol.spacing());
  out.data() = warp_channel(vol.data(), vol.dims(), field);
  return out;
}

MaskVolume warp(const MaskVolume &masks, const VectorField &field) {
  MaskVolume out(masks.dims(), masks.spacing());
  for (int c = 0; c < kNumMaskClasses; ++c) {
    const auto cls = static_cast<MaskClass>(c);
    if (masks.has(cls))
      out.set_channel(cls,
                      warp_channel(masks.channel(cls), masks.dims(), field));
  }
  return out;
}

ScalarVolume resample(const ScalarVolume &vol, Spacing target) {
  if (target.sx <= 0 || target.sy <= 0 || target.sz <= 0)
    throw DataError("resample: target spacing must be positive");
  const Dims d = vol.dims();
  const Spacing s = vol.spacing();
  const Dims nd{
      static_cast<int>(std::lround(d.nx * s.sx / target.sx)),
      static_cast<int>(std::lround(d.ny * s.sy / target.sy)),
      static_cast<int>(std::lround(d.nz * s.sz / target.sz))};
  if (nd.nx < 1 || nd.ny < 1 || nd.nz < 1)
    throw DataError("resample: degenerate output extent");
  ScalarVolume out(nd, target);
  const double rx = target.sx / s.sx, ry = target.sy / s.sy,
               rz = target.sz / s.sz;
  std::size_t p = 0;
  for (int k = 0; k < nd.nz; ++k)
    for (int j = 0; j < nd.ny; ++j)
      for (int i = 0; i < nd.nx; ++i, ++p)
        out.data()[p] =
            trilinear_sample_raw(vol.data(), d, i * rx, j * ry, k * rz);
  return out;
}

Dims half_dims(const Dims &d) {
  if (d.nx < 2)
    throw DataError("split_halves: nx must be at least 2");
  return Dims{d.nx / 2, d.ny, d.nz};
}

std::pair<std::vector<double>, std::vector<double>> split_halves_raw(
    const std::vector<double> &data, const Dims &d) {
  const Dims h = half_dims(d);
  std::vector<double> left(h.count()), right(h.count());
  const int off = d.nx - h.nx; // odd nx: center slice excluded
  std::size_t p = 0;
  for (int k = 0; k < d.nz; ++k)
    for (int j = 0; j < d.ny; ++j) {
      const std::size_t row =
          static_cast<std::size_t>(d.nx) *
          (static_cast<std::size_t>(j) + static_cast<std::size_t>(d.ny) * k);
      for (int i = 0; i < h.nx; ++i, ++p) {
        left[p] = data[row + i];
        right[p] = data[row + off + i];
      }
    }
  return {std::move(left), std::move(right)};
}

std::pair<ScalarVolume, ScalarVolume> split_halves(const ScalarVolume &vol) {
  auto [l, r] = split_halves_raw(vol.data(), vol.dims());
  ScalarVolume left(half_dims(vol.dims()), vol.spacing());
  ScalarVolume right(half_dims(vol.dims()), vol.spacing());
  left.data() = std::move(l);
  right.data() = std::move(r);
  return {std::move(left), std::move(right)};
}

std::vector<double> sagittal_flip_raw(const std::vector<double> &data,
                                      const Dims &d) {
  std::vector<double> out(data.size());
  std::size_t p = 0;
  for (int k = 0; k < d.nz; ++k)
    for (int j = 0; j < d.ny; ++j) {
      const std::size_t row =
          static_cast<std::size_t>(d.nx) *
          (static_cast<std::size_t>(j) + static_cast<std::size_t>(d.ny) * k);
      for (int i = 0; i < d.nx; ++i, ++p)
        out[p] = data[row + (d.nx - 1 - i)];
    }
  return out;
}

ScalarVolume sagittal_flip(const ScalarVolume &vol) {
  ScalarVolume out(vol.dims(), vol.spacing());
  out.data() = sagittal_flip_raw(vol.data(), vol.dims());
  return out;
}

MaskVolume sagittal_flip(const MaskVolume &masks) {
  MaskVolume out(masks.dims(), masks.spacing());
  for (int c = 0; c < kNumMaskClasses; ++c) {
    const auto cls = static_cast<MaskClass>(c);
    if (masks.has(cls))
      out.set_channel(cls, sagittal_flip_raw(masks.channel(cls), masks.dims()));
  }
  return out;
}

VectorField sagittal_flip(const VectorField &field) {
  VectorField out(field.dims());
  out.comp(0) = sagittal_flip_raw(field.comp(0), field.dims());
  for (auto &v : out.comp(0))
    v = -v;
  out.comp(1) = sagittal_flip_raw(field.comp(1), field.dims());
  out.comp(2) = sagittal_flip_raw(field.comp(2), field.dims());
  return out;
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (auto &v : k)
    v /= sum;
  return k;
}

void convolve_axis(std::vector<double> &data, const Dims &d, int axis,
                   const std::vector<double> &kernel) {
  const int radius = static_cast<int>(kernel.size()) / 2;
  const int n = axis == 0 ? d.nx : axis == 1 ? d.ny : d.nz;
  const std::size_t stride =
      axis == 0 ? 1
      : axis == 1 ? static_cast<std::size_t>(d.nx)
                  : static_cast<std::size_t>(d.nx) * d.ny;
  std::vector<double> line(n);
  const int na = axis == 0 ? d.ny : d.nx;
  const int nb = axis == 2 ? d.ny : d.nz;
  for (int b = 0; b < nb; ++b)
    for (int a = 0; a < na; ++a) {
      std::size_t base;
      if (axis == 0)
        base = static_cast<std::size_t>(d.nx) *
               (static_cast<std::size_t>(a) +
                static_cast<std::size_t>(d.ny) * b);
      else if (axis == 1)
        base = static_cast<std::size_t>(a) +
               static_cast<std::size_t>(d.nx) * d.ny * b;
      else
        base = static_cast<std::size_t>(a) +
               static_cast<std::size_t>(d.nx) * b;
      for (int i = 0; i < n; ++i)
        line[i] = data[base + stride * i];
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t) {
          const int src = std::clamp(i + t, 0, n - 1);
          acc += kernel[t + radius] * line[src];
        }
        data[base + stride * i] = acc;
      }
    }
}

} // namespace

std::vector<double> gaussian_smooth(const std::vector<double> &data,
                                    const Dims &d, double sigma) {
  std::vector<double> out = data;
  if (sigma <= 0.0)
    return out;
  const auto kernel = gaussian_kernel(sigma);
  for (int axis = 0; axis < 3; ++axis)
    convolve_axis(out, d, axis, kernel);
  return out;
}

} // namespace brainshift
