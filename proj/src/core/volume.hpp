/**
 * @file volume.hpp
 * @brief Voxel-grid containers, trilinear sampling, warping, resampling and
 *        hemisphere splitting.
 */
#ifndef BRAINSHIFT_VOLUME_HPP
#define BRAINSHIFT_VOLUME_HPP

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace brainshift {

// Thrown for malformed inputs or files (CLI exit code 2).
struct DataError : std::runtime_error {
  explicit DataError(const std::string &msg) : std::runtime_error(msg) {}
};

// Thrown for bad invocations / configs (CLI exit code 1).
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string &msg) : std::runtime_error(msg) {}
};

struct Dims {
  int nx = 0, ny = 0, nz = 0;
  std::size_t count() const {
    return static_cast<std::size_t>(nx) * ny * nz;
  }
  bool operator==(const Dims &) const = default;
};

struct Spacing {
  double sx = 1.0, sy = 1.0, sz = 1.0;
  bool operator==(const Spacing &) const = default;
};

/// 3D scalar grid, x-fastest layout, intensities in pseudo-Hounsfield units.
class ScalarVolume {
public:
  ScalarVolume() = default;
  ScalarVolume(Dims d, Spacing s, double fill = 0.0);

  const Dims &dims() const { return dims_; }
  const Spacing &spacing() const { return spacing_; }

  double &at(int i, int j, int k) { return data_[index(i, j, k)]; }
  double at(int i, int j, int k) const { return data_[index(i, j, k)]; }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims_.nx) *
               (static_cast<std::size_t>(j) +
                static_cast<std::size_t>(dims_.ny) * k);
  }

  std::vector<double> &data() { return data_; }
  const std::vector<double> &data() const { return data_; }

private:
  Dims dims_;
  Spacing spacing_;
  std::vector<double> data_;
};

/// Segmentation classes carried by MaskVolume.
enum class MaskClass : int {
  Brain = 0,
  Skull = 1,
  Hematoma = 2,
  VentricleLeft = 3,
  VentricleRight = 4,
};
inline constexpr int kNumMaskClasses = 5;
const char *mask_class_name(MaskClass c);

/// Per-class soft masks in [0,1] on the same grid as a paired ScalarVolume.
class MaskVolume {
public:
  MaskVolume() = default;
  MaskVolume(Dims d, Spacing s) : dims_(d), spacing_(s) {}

  const Dims &dims() const { return dims_; }
  const Spacing &spacing() const { return spacing_; }

  bool has(MaskClass c) const {
    return !channels_[static_cast<int>(c)].empty();
  }
  std::vector<double> &channel(MaskClass c);
  const std::vector<double> &channel(MaskClass c) const;
  void set_channel(MaskClass c, std::vector<double> values);

private:
  Dims dims_;
  Spacing spacing_;
  std::array<std::vector<double>, kNumMaskClasses> channels_;
};

/// 3-component vector grid in voxel units (displacement or velocity).
/// Backward-warp convention: output voxel p samples the input at p + u(p).
class VectorField {
public:
  VectorField() = default;
  explicit VectorField(Dims d);

  const Dims &dims() const { return dims_; }
  std::size_t count() const { return dims_.count(); }

  std::vector<double> &comp(int axis) { return comps_[axis]; }
  const std::vector<double> &comp(int axis) const { return comps_[axis]; }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims_.nx) *
               (static_cast<std::size_t>(j) +
                static_cast<std::size_t>(dims_.ny) * k);
  }

private:
  Dims dims_;
  std::array<std::vector<double>, 3> comps_;
};

/// Trilinear interpolation with clamp-to-edge boundary handling.
double trilinear_sample(const ScalarVolume &vol, double x, double y, double z);
double trilinear_sample_raw(const std::vector<double> &data, const Dims &d,
                            double x, double y, double z);

/// Derivative of trilinear_sample_raw w.r.t. the sample position.
/// Zero along axes clamped to the boundary.
std::array<double, 3> trilinear_position_gradient(
    const std::vector<double> &data, const Dims &d, double x, double y,
    double z);

/// Trilinear corner weights; used by scatter-style adjoints.
struct TrilinearStencil {
  int i0, j0, k0;   // base corner (clamped)
  int i1, j1, k1;   // opposite corner (clamped)
  double fx, fy, fz; // fractional offsets in [0,1]
};
TrilinearStencil trilinear_stencil(const Dims &d, double x, double y, double z);

/// Backward warp: out(p) = sample(in, p + u(p)).
ScalarVolume warp(const ScalarVolume &vol, const VectorField &field);
MaskVolume warp(const MaskVolume &masks, const VectorField &field);
std::vector<double> warp_channel(const std::vector<double> &data,
                                 const Dims &d, const VectorField &field);

/// Trilinear resampling onto a grid covering the same physical extent.
ScalarVolume resample(const ScalarVolume &vol, Spacing target);

/// Split by the mid-sagittal plane along x. Odd nx drops the center slice.
std::pair<ScalarVolume, ScalarVolume> split_halves(const ScalarVolume &vol);
std::pair<std::vector<double>, std::vector<double>> split_halves_raw(
    const std::vector<double> &data, const Dims &d);
Dims half_dims(const Dims &d);

/// Reverse the x axis. For fields the x component is negated too.
ScalarVolume sagittal_flip(const ScalarVolume &vol);
MaskVolume sagittal_flip(const MaskVolume &masks);
VectorField sagittal_flip(const VectorField &field);
std::vector<double> sagittal_flip_raw(const std::vector<double> &data,
                                      const Dims &d);

/// Separable Gaussian smoothing, clamp-to-edge, truncated at 3 sigma.
std::vector<double> gaussian_smooth(const std::vector<double> &data,
                                    const Dims &d, double sigma);

} // namespace brainshift

#endif
