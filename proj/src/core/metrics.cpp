#include "metrics.hpp"

#include <cmath>

namespace brainshift {

namespace {

struct BinSplit {
  int b0 = 0, b1 = 0;      // receiving bins
  double w0 = 1.0, w1 = 0; // triangular weights, w0 + w1 = 1
  bool interior = false;   // derivative +-1/width applies only here
};

BinSplit bin_split(double x, int n_bins, double lo, double width) {
  BinSplit s;
  const double c0 = lo + 0.5 * width;
  const double t = (x - c0) / width; // position in bin-center units
  if (t <= 0.0) {
    s.b0 = s.b1 = 0;
    return s;
  }
  if (t >= n_bins - 1) {
    s.b0 = s.b1 = n_bins - 1;
    return s;
  }
  s.b0 = static_cast<int>(std::floor(t));
  s.b1 = s.b0 + 1;
  s.w1 = t - s.b0;
  s.w0 = 1.0 - s.w1;
  s.interior = true;
  return s;
}

} // namespace

SoftHistogram soft_histogram(const std::vector<double> &values,
                             const std::vector<double> *weights, int n_bins,
                             double lo, double hi) {
  if (n_bins < 2 || hi <= lo)
    throw UsageError("soft_histogram: need n_bins >= 2 and hi > lo");
  if (weights && weights->size() != values.size())
    throw DataError("soft_histogram: weight size mismatch");
  SoftHistogram h;
  h.n_bins = n_bins;
  h.lo = lo;
  h.hi = hi;
  h.probs.assign(n_bins, 0.0);
  const double width = (hi - lo) / n_bins;
  double wsum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double w = weights ? (*weights)[i] : 1.0;
    if (w == 0.0)
      continue;
    const BinSplit s = bin_split(values[i], n_bins, lo, width);
    h.probs[s.b0] += w * s.w0;
    h.probs[s.b1] += w * s.w1;
    wsum += w;
  }
  if (wsum <= 0.0)
    throw DataError("soft_histogram: empty effective support");
  double total = 0.0;
  for (auto &p : h.probs) {
    p += kHistEps;
    total += p;
  }
  for (auto &p : h.probs)
    p /= total;
  h.total = total;
  return h;
}

SoftHistogram soft_histogram(const ScalarVolume &vol,
                             const std::vector<double> *mask, int n_bins,
                             double lo, double hi) {
  return soft_histogram(vol.data(), mask, n_bins, lo, hi);
}

double jeffreys_loss(const std::vector<double> &left,
                     const std::vector<double> &right,
                     const std::vector<double> *wl,
                     const std::vector<double> *wr, int n_bins, double lo,
                     double hi) {
  const SoftHistogram hl = soft_histogram(left, wl, n_bins, lo, hi);
  const SoftHistogram hr = soft_histogram(right, wr, n_bins, lo, hi);
  double loss = 0.0;
  for (int b = 0; b < n_bins; ++b) {
    const double p = hl.probs[b], q = hr.probs[b];
    loss += p * std::log(p / q) + q * std::log(q / p);
  }
  return loss;
}

double jeffreys_loss(const ScalarVolume &left, const ScalarVolume &right,
                     const MetricsConfig &cfg) {
  if (left.data().empty() || right.data().empty())
    throw DataError("jeffreys_loss: empty half");
  return jeffreys_loss(left.data(), right.data(), nullptr, nullptr,
                       cfg.n_bins, cfg.range_lo, cfg.range_hi);
}

JeffreysGrad jeffreys_loss_with_grad(const std::vector<double> &left,
                                     const std::vector<double> &right,
                                     const std::vector<double> *wl,
                                     const std::vector<double> *wr,
                                     int n_bins, double lo, double hi) {
  const SoftHistogram hl = soft_histogram(left, wl, n_bins, lo, hi);
  const SoftHistogram hr = soft_histogram(right, wr, n_bins, lo, hi);
  JeffreysGrad g;
  std::vector<double> dHl(n_bins), dHr(n_bins);
  for (int b = 0; b < n_bins; ++b) {
    const double p = hl.probs[b], q = hr.probs[b];
    const double lr = std::log(p / q);
    g.value += p * lr + q * std::log(q / p);
    dHl[b] = lr + 1.0 - q / p;
    dHr[b] = -lr + 1.0 - p / q;
  }
  // through the normalization H_b = (raw_b + eps) / total
  auto to_raw = [n_bins](const std::vector<double> &dH,
                         const SoftHistogram &h) {
    double dot = 0.0;
    for (int b = 0; b < n_bins; ++b)
      dot += dH[b] * h.probs[b];
    std::vector<double> draw(n_bins);
    for (int b = 0; b < n_bins; ++b)
      draw[b] = (dH[b] - dot) / h.total;
    return draw;
  };
  const std::vector<double> drawL = to_raw(dHl, hl);
  const std::vector<double> drawR = to_raw(dHr, hr);

  const double width = (hi - lo) / n_bins;
  auto backprop = [&](const std::vector<double> &vals,
                      const std::vector<double> *w,
                      const std::vector<double> &draw,
                      std::vector<double> &dx, std::vector<double> &dw) {
    dx.assign(vals.size(), 0.0);
    if (w)
      dw.assign(vals.size(), 0.0);
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double wi = w ? (*w)[i] : 1.0;
      const BinSplit s = bin_split(vals[i], n_bins, lo, width);
      if (s.interior && wi != 0.0)
        dx[i] = wi * (draw[s.b1] - draw[s.b0]) / width;
      if (w)
        dw[i] = draw[s.b0] * s.w0 + draw[s.b1] * s.w1;
    }
  };
  backprop(left, wl, drawL, g.d_left, g.dw_left);
  backprop(right, wr, drawR, g.d_right, g.dw_right);
  return g;
}

// ---------------------------------------------------------------------------
// SSIM with a uniform window over fully-contained (valid) positions.

namespace {

Dims valid_dims(const Dims &d, int w) {
  return Dims{d.nx - w + 1, d.ny - w + 1, d.nz - w + 1};
}

// Valid sliding-window sum along one axis; output shrinks along that axis.
std::vector<double> slide_sum(const std::vector<double> &in, Dims &d, int axis,
                              int w) {
  const int n = axis == 0 ? d.nx : axis == 1 ? d.ny : d.nz;
  const int m = n - w + 1;
  Dims od = d;
  (axis == 0 ? od.nx : axis == 1 ? od.ny : od.nz) = m;
  std::vector<double> out(od.count());
  const int na = axis == 0 ? d.ny : d.nx;
  const int nb = axis == 2 ? d.ny : d.nz;
  for (int b = 0; b < nb; ++b)
    for (int a = 0; a < na; ++a) {
      std::size_t ibase, obase, istride, ostride;
      auto strides = [&](const Dims &dd, std::size_t &base,
                         std::size_t &stride) {
        if (axis == 0) {
          base = static_cast<std::size_t>(dd.nx) *
                 (a + static_cast<std::size_t>(dd.ny) * b);
          stride = 1;
        } else if (axis == 1) {
          base = a + static_cast<std::size_t>(dd.nx) * dd.ny * b;
          stride = dd.nx;
        } else {
          base = a + static_cast<std::size_t>(dd.nx) * b;
          stride = static_cast<std::size_t>(dd.nx) * dd.ny;
        }
      };
      strides(d, ibase, istride);
      strides(od, obase, ostride);
      double acc = 0.0;
      for (int i = 0; i < w; ++i)
        acc += in[ibase + istride * i];
      out[obase] = acc;
      for (int i = 1; i < m; ++i) {
        acc += in[ibase + istride * (i + w - 1)] - in[ibase + istride * (i - 1)];
        out[obase + ostride * i] = acc;
      }
    }
  d = od;
  return out;
}

// Adjoint of slide_sum: scatter each window sum back to its w contributors.
std::vector<double> slide_sum_adjoint(const std::vector<double> &in, Dims &d,
                                      int axis, int w) {
  const int m = axis == 0 ? d.nx : axis == 1 ? d.ny : d.nz;
  const int n = m + w - 1;
  Dims od = d;
  (axis == 0 ? od.nx : axis == 1 ? od.ny : od.nz) = n;
  std::vector<double> out(od.count(), 0.0);
  const int na = axis == 0 ? d.ny : d.nx;
  const int nb = axis == 2 ? d.ny : d.nz;
  for (int b = 0; b < nb; ++b)
    for (int a = 0; a < na; ++a) {
      std::size_t ibase, obase, istride, ostride;
      auto strides = [&](const Dims &dd, std::size_t &base,
                         std::size_t &stride) {
        if (axis == 0) {
          base = static_cast<std::size_t>(dd.nx) *
                 (a + static_cast<std::size_t>(dd.ny) * b);
          stride = 1;
        } else if (axis == 1) {
          base = a + static_cast<std::size_t>(dd.nx) * dd.ny * b;
          stride = dd.nx;
        } else {
          base = a + static_cast<std::size_t>(dd.nx) * b;
          stride = static_cast<std::size_t>(dd.nx) * dd.ny;
        }
      };
      strides(d, ibase, istride);
      strides(od, obase, ostride);
      // running-sum form of the transposed correlation
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        if (i < m)
          acc += in[ibase + istride * i];
        if (i >= w)
          acc -= in[ibase + istride * (i - w)];
        out[obase + ostride * i] = acc;
      }
    }
  d = od;
  return out;
}

std::vector<double> box_sum_valid(const std::vector<double> &data, Dims d,
                                  int w) {
  std::vector<double> out = slide_sum(data, d, 0, w);
  out = slide_sum(out, d, 1, w);
  out = slide_sum(out, d, 2, w);
  return out;
}

std::vector<double> box_sum_adjoint(const std::vector<double> &grad, Dims id,
                                    int w) {
  std::vector<double> out = slide_sum_adjoint(grad, id, 2, w);
  out = slide_sum_adjoint(out, id, 1, w);
  out = slide_sum_adjoint(out, id, 0, w);
  return out;
}

struct SsimTerms {
  Dims id;
  double inv_w3;
  std::vector<double> ma, mb, sa2, sb2, sab;
};

SsimTerms ssim_terms(const std::vector<double> &a,
                     const std::vector<double> &b, const Dims &d, int w) {
  if (a.size() != d.count() || b.size() != d.count())
    throw DataError("ssim: input size mismatch");
  const Dims id = valid_dims(d, w);
  if (id.nx < 1 || id.ny < 1 || id.nz < 1)
    throw DataError("ssim: volume smaller than the window");
  SsimTerms t;
  t.id = id;
  t.inv_w3 = 1.0 / (static_cast<double>(w) * w * w);
  const std::size_t n = d.count();
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  t.ma = box_sum_valid(a, d, w);
  t.mb = box_sum_valid(b, d, w);
  t.sa2 = box_sum_valid(aa, d, w);
  t.sb2 = box_sum_valid(bb, d, w);
  t.sab = box_sum_valid(ab, d, w);
  const std::size_t m = id.count();
  for (std::size_t i = 0; i < m; ++i) {
    t.ma[i] *= t.inv_w3;
    t.mb[i] *= t.inv_w3;
    t.sa2[i] = t.sa2[i] * t.inv_w3 - t.ma[i] * t.ma[i];
    t.sb2[i] = t.sb2[i] * t.inv_w3 - t.mb[i] * t.mb[i];
    t.sab[i] = t.sab[i] * t.inv_w3 - t.ma[i] * t.mb[i];
  }
  return t;
}

} // namespace

double ssim_value(const std::vector<double> &a, const std::vector<double> &b,
                  const Dims &d, int window, double c1, double c2) {
  const SsimTerms t = ssim_terms(a, b, d, window);
  const std::size_t m = t.id.count();
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double num = (2.0 * t.ma[i] * t.mb[i] + c1) * (2.0 * t.sab[i] + c2);
    const double den = (t.ma[i] * t.ma[i] + t.mb[i] * t.mb[i] + c1) *
                       (t.sa2[i] + t.sb2[i] + c2);
    sum += num / den;
  }
  return sum / static_cast<double>(m);
}

SsimGrad ssim_value_with_grad(const std::vector<double> &a,
                              const std::vector<double> &b, const Dims &d,
                              int window, double c1, double c2) {
  const SsimTerms t = ssim_terms(a, b, d, window);
  const std::size_t m = t.id.count();
  const double inv_m = 1.0 / static_cast<double>(m);
  std::vector<double> g_ma(m), g_mb(m), g_ea(m), g_eb(m), g_eab(m);
  SsimGrad g;
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double ma = t.ma[i], mb = t.mb[i];
    const double A1 = 2.0 * ma * mb + c1;
    const double A2 = 2.0 * t.sab[i] + c2;
    const double B1 = ma * ma + mb * mb + c1;
    const double B2 = t.sa2[i] + t.sb2[i] + c2;
    const double D = B1 * B2;
    const double s = A1 * A2 / D;
    sum += s;
    const double ds_ma = (2.0 * mb * A2 - s * 2.0 * ma * B2) / D;
    const double ds_mb = (2.0 * ma * A2 - s * 2.0 * mb * B2) / D;
    const double ds_sa2 = -s * B1 / D;
    const double ds_sb2 = ds_sa2;
    const double ds_sab = 2.0 * A1 / D;
    // fold sigma^2 = E[x^2] - mean^2 back into raw box-sum channels
    g_ea[i] = inv_m * ds_sa2;
    g_eb[i] = inv_m * ds_sb2;
    g_eab[i] = inv_m * ds_sab;
    g_ma[i] = inv_m * (ds_ma - 2.0 * ma * ds_sa2 - mb * ds_sab);
    g_mb[i] = inv_m * (ds_mb - 2.0 * mb * ds_sb2 - ma * ds_sab);
  }
  g.value = sum * inv_m;

  const std::vector<double> s_ma = box_sum_adjoint(g_ma, t.id, window);
  const std::vector<double> s_mb = box_sum_adjoint(g_mb, t.id, window);
  const std::vector<double> s_ea = box_sum_adjoint(g_ea, t.id, window);
  const std::vector<double> s_eb = box_sum_adjoint(g_eb, t.id, window);
  const std::vector<double> s_eab = box_sum_adjoint(g_eab, t.id, window);
  const std::size_t n = d.count();
  g.d_a.resize(n);
  g.d_b.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.d_a[i] = t.inv_w3 * (s_ma[i] + s_ea[i] * 2.0 * a[i] + s_eab[i] * b[i]);
    g.d_b[i] = t.inv_w3 * (s_mb[i] + s_eb[i] * 2.0 * b[i] + s_eab[i] * a[i]);
  }
  return g;
}

double ssim_loss(const ScalarVolume &left, const ScalarVolume &right,
                 const MetricsConfig &cfg) {
  if (left.dims() != right.dims())
    throw DataError("ssim_loss: dims mismatch");
  const double L = cfg.range_hi - cfg.range_lo;
  const double c1 = (0.01 * L) * (0.01 * L);
  const double c2 = (0.03 * L) * (0.03 * L);
  const std::vector<double> flipped =
      sagittal_flip_raw(right.data(), right.dims());
  return -ssim_value(left.data(), flipped, left.dims(), cfg.ssim_window, c1,
                     c2);
}

double volume_balance_loss(const ScalarVolume &vol, double tau, double eps_b) {
  const std::size_t n = vol.dims().count();
  std::vector<double> fg(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    fg[i] = 1.0 / (1.0 + std::exp(-(vol.data()[i] - tau) / eps_b));
    total += fg[i];
  }
  if (total < 1e-9)
    throw DataError("volume_balance_loss: no foreground");
  auto [l, r] = split_halves_raw(fg, vol.dims());
  double sl = 0.0, sr = 0.0;
  for (double v : l)
    sl += v;
  for (double v : r)
    sr += v;
  return std::abs(sl - sr) / total;
}

double soft_dice(const std::vector<double> &a, const std::vector<double> &b) {
  if (a.size() != b.size())
    throw DataError("soft_dice: size mismatch");
  double inter = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return 2.0 * inter / (na + nb + 1e-8);
}

DiceGrad soft_dice_with_grad(const std::vector<double> &a,
                             const std::vector<double> &b) {
  if (a.size() != b.size())
    throw DataError("soft_dice: size mismatch");
  double inter = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double den = na + nb + 1e-8;
  DiceGrad g;
  g.value = 2.0 * inter / den;
  g.d_a.resize(a.size());
  g.d_b.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    g.d_a[i] = (2.0 * b[i] - g.value * 2.0 * a[i]) / den;
    g.d_b[i] = (2.0 * a[i] - g.value * 2.0 * b[i]) / den;
  }
  return g;
}

} // namespace brainshift
