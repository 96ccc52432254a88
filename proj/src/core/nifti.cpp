#include "nifti.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

namespace brainshift {

namespace {

// NIfTI-1 header, 348 bytes.
#pragma pack(push, 1)
struct Nifti1Header {
  int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  int32_t extents;
  int16_t session_error;
  char regular;
  char dim_info;
  int16_t dim[8];
  float intent_p1, intent_p2, intent_p3;
  int16_t intent_code;
  int16_t datatype;
  int16_t bitpix;
  int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope, scl_inter;
  int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max, cal_min;
  float slice_duration, toffset;
  int32_t glmax, glmin;
  char descrip[80];
  char aux_file[24];
  int16_t qform_code, sform_code;
  float quatern_b, quatern_c, quatern_d;
  float qoffset_x, qoffset_y, qoffset_z;
  float srow_x[4], srow_y[4], srow_z[4];
  char intent_name[16];
  char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");

constexpr int16_t kDtInt16 = 4;
constexpr int16_t kDtFloat32 = 16;

template <typename T> void byteswap_inplace(T &v) {
  auto *p = reinterpret_cast<unsigned char *>(&v);
  std::reverse(p, p + sizeof(T));
}

void swap_header(Nifti1Header &h) {
  byteswap_inplace(h.sizeof_hdr);
  for (auto &d : h.dim)
    byteswap_inplace(d);
  byteswap_inplace(h.intent_code);
  byteswap_inplace(h.datatype);
  byteswap_inplace(h.bitpix);
  for (auto &p : h.pixdim)
    byteswap_inplace(p);
  byteswap_inplace(h.vox_offset);
  byteswap_inplace(h.scl_slope);
  byteswap_inplace(h.scl_inter);
  byteswap_inplace(h.qform_code);
  byteswap_inplace(h.sform_code);
}

struct RawNifti {
  Nifti1Header hdr{};
  std::vector<double> data; // already slope/inter scaled
  Dims dims;
  Spacing spacing;
  int nt = 1;
};

RawNifti read_raw(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw DataError("nifti: cannot open " + path);
  RawNifti out;
  Nifti1Header &h = out.hdr;
  if (!f.read(reinterpret_cast<char *>(&h), sizeof(h)))
    throw DataError("nifti: truncated header in " + path);
  bool swapped = false;
  if (h.sizeof_hdr != 348) {
    swap_header(h);
    swapped = true;
    if (h.sizeof_hdr != 348)
      throw DataError("nifti: bad sizeof_hdr in " + path);
  }
  if (std::strncmp(h.magic, "n+1", 4) != 0) {
    if (std::strncmp(h.magic, "ni1", 4) == 0)
      throw DataError("nifti: two-file (.hdr/.img) NIfTI not supported: " +
                      path);
    throw DataError("nifti: unsupported format magic in " + path);
  }
  if (h.datatype != kDtInt16 && h.datatype != kDtFloat32)
    throw DataError("nifti: unsupported datatype " +
                    std::to_string(h.datatype) + " in " + path);
  const int ndim = h.dim[0];
  if (ndim < 3 || ndim > 4)
    throw DataError("nifti: expected 3-D or 4-D image in " + path);
  out.dims = Dims{h.dim[1], h.dim[2], h.dim[3]};
  out.nt = ndim == 4 ? h.dim[4] : 1;
  if (out.dims.nx <= 0 || out.dims.ny <= 0 || out.dims.nz <= 0 || out.nt <= 0)
    throw DataError("nifti: invalid dims in " + path);
  out.spacing = Spacing{std::abs(h.pixdim[1]), std::abs(h.pixdim[2]),
                        std::abs(h.pixdim[3])};
  if (out.spacing.sx <= 0 || out.spacing.sy <= 0 || out.spacing.sz <= 0)
    throw DataError("nifti: non-positive pixdim in " + path);
  if (h.sform_code > 0 &&
      (h.srow_x[1] != 0 || h.srow_x[2] != 0 || h.srow_y[0] != 0 ||
       h.srow_y[2] != 0 || h.srow_z[0] != 0 || h.srow_z[1] != 0))
    std::fprintf(stderr,
                 "warning: nifti %s has a non-axis-aligned sform; "
                 "orientation is ignored\n",
                 path.c_str());

  const std::size_t nvox = out.dims.count() * out.nt;
  const std::streamoff offset =
      std::max<std::streamoff>(static_cast<std::streamoff>(h.vox_offset), 348);
  f.seekg(offset, std::ios::beg);
  double slope = h.scl_slope;
  double inter = h.scl_inter;
  if (slope == 0.0) {
    slope = 1.0;
    inter = 0.0;
  }
  out.data.resize(nvox);
  if (h.datatype == kDtFloat32) {
    std::vector<float> buf(nvox);
    if (!f.read(reinterpret_cast<char *>(buf.data()),
                static_cast<std::streamsize>(nvox * sizeof(float))))
      throw DataError("nifti: truncated data in " + path);
    for (std::size_t i = 0; i < nvox; ++i) {
      float v = buf[i];
      if (swapped)
        byteswap_inplace(v);
      out.data[i] = slope * static_cast<double>(v) + inter;
    }
  } else {
    std::vector<int16_t> buf(nvox);
    if (!f.read(reinterpret_cast<char *>(buf.data()),
                static_cast<std::streamsize>(nvox * sizeof(int16_t))))
      throw DataError("nifti: truncated data in " + path);
    for (std::size_t i = 0; i < nvox; ++i) {
      int16_t v = buf[i];
      if (swapped)
        byteswap_inplace(v);
      out.data[i] = slope * static_cast<double>(v) + inter;
    }
  }
  return out;
}

Nifti1Header make_header(const Dims &d, const Spacing &s, int nt,
                         const char *descrip) {
  Nifti1Header h{};
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = static_cast<int16_t>(nt > 1 ? 4 : 3);
  h.dim[1] = static_cast<int16_t>(d.nx);
  h.dim[2] = static_cast<int16_t>(d.ny);
  h.dim[3] = static_cast<int16_t>(d.nz);
  h.dim[4] = static_cast<int16_t>(nt > 1 ? nt : 1);
  for (int i = 5; i < 8; ++i)
    h.dim[i] = 1;
  h.datatype = kDtFloat32;
  h.bitpix = 32;
  h.pixdim[0] = 1.0f;
  h.pixdim[1] = static_cast<float>(s.sx);
  h.pixdim[2] = static_cast<float>(s.sy);
  h.pixdim[3] = static_cast<float>(s.sz);
  h.pixdim[4] = 1.0f;
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.scl_inter = 0.0f;
  h.xyzt_units = 2; // NIFTI_UNITS_MM
  std::snprintf(h.descrip, sizeof(h.descrip), "%s", descrip);
  h.qform_code = 0;
  h.sform_code = 1;
  h.srow_x[0] = static_cast<float>(s.sx);
  h.srow_y[1] = static_cast<float>(s.sy);
  h.srow_z[2] = static_cast<float>(s.sz);
  std::memcpy(h.magic, "n+1", 4);
  return h;
}

void write_raw(const std::string &path, const Nifti1Header &h,
               const std::vector<double> &data) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f)
      throw DataError("nifti: cannot write " + tmp);
    f.write(reinterpret_cast<const char *>(&h), sizeof(h));
    const char pad[4] = {0, 0, 0, 0};
    f.write(pad, 4); // vox_offset 352
    std::vector<float> buf(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
      buf[i] = static_cast<float>(data[i]);
    f.write(reinterpret_cast<const char *>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!f)
      throw DataError("nifti: short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

} // namespace

ScalarVolume read_nifti(const std::string &path) {
  RawNifti raw = read_raw(path);
  if (raw.nt != 1)
    throw DataError("nifti: expected scalar volume, got 4-D file: " + path);
  ScalarVolume vol(raw.dims, raw.spacing);
  vol.data() = std::move(raw.data);
  return vol;
}

void write_nifti(const ScalarVolume &vol, const std::string &path) {
  const Nifti1Header h =
      make_header(vol.dims(), vol.spacing(), 1, "brainshift volume");
  write_raw(path, h, vol.data());
}

VectorField read_nifti_field(const std::string &path) {
  RawNifti raw = read_raw(path);
  if (raw.nt != 3)
    throw DataError("nifti: expected 3-component field (dim[4]=3): " + path);
  VectorField f(raw.dims);
  const std::size_t n = raw.dims.count();
  for (int c = 0; c < 3; ++c)
    std::copy(raw.data.begin() + c * n, raw.data.begin() + (c + 1) * n,
              f.comp(c).begin());
  return f;
}

void write_nifti_field(const VectorField &field, const Spacing &spacing,
                       const std::string &path) {
  const Nifti1Header h = make_header(
      field.dims(), spacing, 3,
      "brainshift displacement, voxel units, backward warp p+u(p)");
  const std::size_t n = field.count();
  std::vector<double> data(3 * n);
  for (int c = 0; c < 3; ++c)
    std::copy(field.comp(c).begin(), field.comp(c).end(),
              data.begin() + c * n);
  write_raw(path, h, data);
}

MaskVolume labels_to_masks(const ScalarVolume &labels, double smoothing_sigma) {
  MaskVolume masks(labels.dims(), labels.spacing());
  const std::size_t n = labels.dims().count();
  // label codes: 1 brain, 2 skull, 3 hematoma, 4 ventricle L, 5 ventricle R
  static const MaskClass order[5] = {MaskClass::Brain, MaskClass::Skull,
                                     MaskClass::Hematoma,
                                     MaskClass::VentricleLeft,
                                     MaskClass::VentricleRight};
  for (int code = 1; code <= 5; ++code) {
    std::vector<double> ch(n, 0.0);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::lround(labels.data()[i]) == code) {
        ch[i] = 1.0;
        any = true;
      }
    }
    // ventricle voxels count as brain tissue too
    if (order[code - 1] == MaskClass::Brain) {
      for (std::size_t i = 0; i < n; ++i) {
        const long c = std::lround(labels.data()[i]);
        if (c == 4 || c == 5) {
          ch[i] = 1.0;
          any = true;
        }
      }
    }
    if (!any)
      continue;
    if (smoothing_sigma > 0.0)
      ch = gaussian_smooth(ch, labels.dims(), smoothing_sigma);
    masks.set_channel(order[code - 1], std::move(ch));
  }
  return masks;
}

ScalarVolume masks_to_labels(const MaskVolume &masks) {
  ScalarVolume labels(masks.dims(), masks.spacing());
  const std::size_t n = masks.dims().count();
  static const std::pair<MaskClass, int> order[] = {
      {MaskClass::Brain, 1},
      {MaskClass::VentricleLeft, 4},
      {MaskClass::VentricleRight, 5},
      {MaskClass::Hematoma, 3},
      {MaskClass::Skull, 2}};
  for (const auto &[cls, code] : order) {
    if (!masks.has(cls))
      continue;
    const auto &ch = masks.channel(cls);
    for (std::size_t i = 0; i < n; ++i)
      if (ch[i] >= 0.5)
        labels.data()[i] = code;
  }
  return labels;
}

void atomic_write_file(const std::string &path, const std::string &contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f)
      throw DataError("cannot write " + tmp);
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!f)
      throw DataError("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

} // namespace brainshift
