#include "phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rng.hpp"

namespace brainshift {

const char *side_name(HematomaSide s) {
  switch (s) {
  case HematomaSide::None: return "none";
  case HematomaSide::Left: return "left";
  case HematomaSide::Right: return "right";
  case HematomaSide::Bilateral: return "bilateral";
  }
  return "?";
}

HematomaSide side_from_name(const std::string &name) {
  if (name == "none") return HematomaSide::None;
  if (name == "left") return HematomaSide::Left;
  if (name == "right") return HematomaSide::Right;
  if (name == "bilateral") return HematomaSide::Bilateral;
  throw UsageError("unknown hematoma side: " + name);
}

namespace {

// Head geometry derived from the grid size; all fractions of n.
struct Geometry {
  double cx, cy, cz;
  double skull_out[3];
  double skull_in[3];
  double brain[3]; // inner skull minus the CSF gap
  double gap = 2.0;
  double vent_off;    // ventricle center x offset from midline
  double vent_r[3];

  explicit Geometry(const Dims &d) {
    cx = 0.5 * (d.nx - 1);
    cy = 0.5 * (d.ny - 1);
    cz = 0.5 * (d.nz - 1);
    const double n = d.nx;
    // distinct radii per axis, like a real head
    skull_out[0] = 0.42 * n;
    skull_out[1] = 0.46 * d.ny;
    skull_out[2] = 0.36 * d.nz;
    // shell and CSF gap shrink proportionally on tiny (test-size) grids
    const double scale = std::min(1.0, n / 32.0);
    gap *= scale;
    for (int a = 0; a < 3; ++a)
      skull_in[a] = skull_out[a] - 2.5 * scale;
    for (int a = 0; a < 3; ++a)
      brain[a] = skull_in[a] - gap;
    vent_off = 0.12 * n;
    vent_r[0] = 0.055 * n;
    vent_r[1] = 0.14 * d.ny;
    vent_r[2] = 0.10 * d.nz;
    // anterior/superior ventricle offset and a posterior-inferior
    // (cerebellum-like) structure: the head must be mirror symmetric about
    // the mid-sagittal plane only — with every structure centered on all
    // three planes, 90-degree axis swaps would also be symmetry optima
    vent_cy = 0.05 * d.ny;
    vent_cz = 0.04 * d.nz;
    post_c[0] = 0.0;
    post_c[1] = 0.24 * d.ny;
    post_c[2] = -0.16 * d.nz;
    post_r[0] = 0.16 * n;
    post_r[1] = 0.12 * d.ny;
    post_r[2] = 0.10 * d.nz;
  }

  double vent_cy = 0.0, vent_cz = 0.0;
  double post_c[3] = {0, 0, 0};
  double post_r[3] = {1, 1, 1};

  static double rho(double x, double y, double z, const double r[3]) {
    const double a = x / r[0], b = y / r[1], c = z / r[2];
    return std::sqrt(a * a + b * b + c * c);
  }
};

} // namespace

PhantomCase generate_phantom(const PhantomSpec &spec) {
  if (spec.size < 8)
    throw UsageError("generate_phantom: grid must be >= 8 per axis");
  const Dims d{spec.size, spec.size, spec.size};
  const Geometry g(d);
  if (spec.thickness >= g.skull_in[0] / 2.0)
    throw UsageError("generate_phantom: thickness too large for the grid");

  PhantomCase out;
  out.id = "phantom";
  out.volume = ScalarVolume(d, spec.spacing, spec.hu_air);
  out.masks = MaskVolume(d, spec.spacing);
  out.ground_truth_field = VectorField(d);
  out.side = HematomaSide::None;

  const std::size_t n = d.count();
  std::vector<double> brain_bin(n, 0.0), skull_bin(n, 0.0), vl_bin(n, 0.0),
      vr_bin(n, 0.0);
  std::size_t p = 0;
  for (int k = 0; k < d.nz; ++k)
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i, ++p) {
        const double x = i - g.cx, y = j - g.cy, z = k - g.cz;
        const double r_out = Geometry::rho(x, y, z, g.skull_out);
        const double r_in = Geometry::rho(x, y, z, g.skull_in);
        const double r_br = Geometry::rho(x, y, z, g.brain);
        double v = spec.hu_air;
        if (r_out <= 1.0) {
          if (r_in > 1.0) {
            v = spec.hu_skull;
            skull_bin[p] = 1.0;
          } else {
            v = spec.hu_csf; // subarachnoid gap
            if (r_br <= 1.0) {
              v = spec.hu_brain;
              brain_bin[p] = 1.0;
              // posterior-inferior structure: slightly denser tissue
              if (Geometry::rho(x - g.post_c[0], y - g.post_c[1],
                                z - g.post_c[2], g.post_r) <= 1.0)
                v = spec.hu_brain + 15.0;
            }
          }
        }
        const double rl = Geometry::rho(x + g.vent_off, y - g.vent_cy,
                                        z - g.vent_cz, g.vent_r);
        const double rr = Geometry::rho(x - g.vent_off, y - g.vent_cy,
                                        z - g.vent_cz, g.vent_r);
        if (rl <= 1.0) {
          v = spec.hu_csf;
          vl_bin[p] = 1.0;
        } else if (rr <= 1.0) {
          v = spec.hu_csf;
          vr_bin[p] = 1.0;
        }
        out.volume.data()[p] = v;
      }

  out.volume.data() = gaussian_smooth(out.volume.data(), d, 1.0);
  out.masks.set_channel(MaskClass::Brain, gaussian_smooth(brain_bin, d, 1.0));
  out.masks.set_channel(MaskClass::Skull, gaussian_smooth(skull_bin, d, 1.0));
  out.masks.set_channel(MaskClass::VentricleLeft,
                        gaussian_smooth(vl_bin, d, 1.0));
  out.masks.set_channel(MaskClass::VentricleRight,
                        gaussian_smooth(vr_bin, d, 1.0));
  return out;
}

PhantomCase inject_hematoma(const PhantomCase &healthy, HematomaSide side,
                            double thickness) {
  for (int c = 0; c < 3; ++c)
    for (double v : healthy.ground_truth_field.comp(c))
      if (v != 0.0)
        throw UsageError("inject_hematoma: input must be a healthy phantom");
  if (side == HematomaSide::None || thickness <= 0.0) {
    PhantomCase out = healthy;
    out.severity = 0.0;
    return out;
  }
  const Dims d = healthy.volume.dims();
  const Geometry g(d);
  if (thickness >= g.skull_in[0] / 2.0)
    throw UsageError("inject_hematoma: thickness too large (brain collision)");

  // crescent compression: magnitude tapers from ~thickness near the inner
  // skull to 0 at the midline; the near-skull rise band is wider than the
  // displacement so the map stays diffeomorphic and the skull stays put
  const double T = thickness;
  const double sigma_slope =
      std::clamp(1.0 - g.gap / std::max(T, g.gap + 0.5), 0.15, 0.75);
  const double band = T / sigma_slope;
  const bool left = side == HematomaSide::Left || side == HematomaSide::Bilateral;
  const bool right =
      side == HematomaSide::Right || side == HematomaSide::Bilateral;

  const std::size_t n = d.count();
  std::vector<double> s_left(n, 0.0), s_right(n, 0.0);
  // deep mass effect: compressed tissue pushes midline structures toward the
  // contralateral side; amplitude is a fraction of the crescent thickness,
  // centered between the crescent and the midline, and gated to vanish at
  // the brain surface so the skull stays fixed and no spurious recession
  // appears away from the crescent
  const double ax = g.skull_in[0];
  const double push_amp = 0.35 * T;
  const double push_sigma = 0.55 * ax;
  const double push_x0 = 0.40 * ax;
  const double push_band = std::max(band, 0.25 * ax);
  std::size_t p = 0;
  for (int k = 0; k < d.nz; ++k)
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i, ++p) {
        const double x = i - g.cx, y = j - g.cy, z = k - g.cz;
        const double r_in = Geometry::rho(x, y, z, g.skull_in);
        if (r_in >= 1.0)
          continue;
        const double depth = (1.0 - r_in) * g.skull_in[0];
        const double rise = std::min(depth / band, 1.0);
        // smoothstep lateral profile: full strength only over a far-lateral
        // cap, keeping the crescent (and deformation support) compact
        auto cap = [](double zeta) {
          const double t = std::clamp((zeta - 0.58) / 0.24, 0.0, 1.0);
          return t * t * (3.0 - 2.0 * t);
        };
        // interior gate: zero until past the subarachnoid gap, so the brain
        // boundary itself does not recede under the push term
        const double rise2 =
            std::clamp((depth - g.gap - 1.5) / push_band, 0.0, 1.0);
        auto bump = [&](double xc) {
          const double t = (x - xc) / push_sigma;
          return std::exp(-t * t);
        };
        if (left)
          s_left[p] =
              T * rise * cap(std::clamp(-x / ax, 0.0, 1.0)) +
              push_amp * rise2 * bump(-push_x0);
        if (right)
          s_right[p] =
              T * rise * cap(std::clamp(x / ax, 0.0, 1.0)) +
              push_amp * rise2 * bump(push_x0);
      }
  s_left = gaussian_smooth(s_left, d, 0.8);
  s_right = gaussian_smooth(s_right, d, 0.8);

  PhantomCase out;
  out.id = healthy.id + "_" + side_name(side);
  out.side = side;
  out.severity = thickness;
  out.ground_truth_field = VectorField(d);
  for (std::size_t q = 0; q < n; ++q)
    out.ground_truth_field.comp(0)[q] = -s_left[q] + s_right[q];

  out.volume = warp(healthy.volume, out.ground_truth_field);
  out.masks = warp(healthy.masks, out.ground_truth_field);

  // vacated subdural crescent: healthy brain receded past its old boundary
  const auto &wbrain = out.masks.channel(MaskClass::Brain);
  const auto &hbrain = healthy.masks.channel(MaskClass::Brain);
  std::vector<double> hem_bin(n, 0.0);
  for (std::size_t q = 0; q < n; ++q)
    if (hbrain[q] >= 0.5 && wbrain[q] < 0.5)
      hem_bin[q] = 1.0;
  const std::vector<double> hem_soft = gaussian_smooth(hem_bin, d, 1.0);
  for (std::size_t q = 0; q < n; ++q) {
    const double m = hem_soft[q];
    out.volume.data()[q] =
        out.volume.data()[q] * (1.0 - m) + 70.0 * m; // hematoma pseudo-HU
  }
  out.masks.set_channel(MaskClass::Hematoma, hem_soft);
  return out;
}

Cohort generate_cohort(int n, std::uint64_t seed, double thickness_lo,
                       double thickness_hi, double surgery_threshold,
                       int grid_size) {
  if (n < 4)
    throw UsageError("generate_cohort: need n >= 4");
  Cohort cohort;
  PhantomSpec spec;
  spec.size = grid_size;
  const PhantomCase healthy = generate_phantom(spec);
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    const double pick = rng.uniform();
    const HematomaSide side = pick < 0.4   ? HematomaSide::Left
                              : pick < 0.8 ? HematomaSide::Right
                                           : HematomaSide::Bilateral;
    const double t = rng.uniform(thickness_lo, thickness_hi);
    PhantomCase c = inject_hematoma(healthy, side, t);
    char id[32];
    std::snprintf(id, sizeof(id), "case%03d", i);
    c.id = id;
    cohort.labels.push_back({c.id, t >= surgery_threshold, t});
    cohort.cases.push_back(std::move(c));
  }
  return cohort;
}

} // namespace brainshift
