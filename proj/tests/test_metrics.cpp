#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "core/metrics.hpp"
#include "core/rng.hpp"
#include "core/volume.hpp"

using namespace brainshift;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed,
                                  double lo, double hi) {
  std::vector<double> out(n);
  Rng rng(seed);
  for (auto &x : out)
    x = rng.uniform(lo, hi);
  return out;
}

// independent scalar oracle for the normalized soft histogram: bins of width
// (hi-lo)/n, centers at lo + (b+0.5)*width, triangular kernel, edge clamping
std::vector<double> histogram_oracle(const std::vector<double> &values,
                                     const std::vector<double> *weights,
                                     int n_bins, double lo, double hi) {
  std::vector<double> counts(n_bins, 0.0);
  const double width = (hi - lo) / n_bins;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double w = weights ? (*weights)[i] : 1.0;
    double t = (values[i] - lo) / width - 0.5;
    t = std::min(std::max(t, 0.0), static_cast<double>(n_bins - 1));
    for (int b = 0; b < n_bins; ++b) {
      const double dist = std::abs(t - b);
      if (dist < 1.0)
        counts[b] += w * (1.0 - dist);
    }
  }
  double total = 0.0;
  for (double &c : counts) {
    c += kHistEps;
    total += c;
  }
  for (double &c : counts)
    c /= total;
  return counts;
}

} // namespace

TEST_CASE("soft histogram: values at a bin center give a one-hot histogram") {
  // 16 bins over [0, 16]: bin width 1, centers at b + 0.5
  std::vector<double> vals(50, 7.5);
  SoftHistogram h = soft_histogram(vals, nullptr, 16, 0.0, 16.0);
  double sum = 0.0;
  for (int b = 0; b < 16; ++b) {
    sum += h.probs[b];
    if (b == 7)
      CHECK(h.probs[b] == doctest::Approx(1.0).epsilon(1e-5));
    else
      CHECK(h.probs[b] < 1e-6);
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("soft histogram: midway value contributes half to each neighbor") {
  std::vector<double> vals(10, 8.0); // midway between centers 7.5 and 8.5
  SoftHistogram h = soft_histogram(vals, nullptr, 16, 0.0, 16.0);
  CHECK(h.probs[7] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(h.probs[8] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("soft histogram matches the scalar oracle on random input") {
  auto vals = random_values(500, 3, -100, 200);
  auto wts = random_values(500, 4, 0.0, 1.0);
  SUBCASE("unweighted") {
    SoftHistogram h = soft_histogram(vals, nullptr, 16, -100, 200);
    auto ref = histogram_oracle(vals, nullptr, 16, -100, 200);
    for (int b = 0; b < 16; ++b)
      CHECK(h.probs[b] == doctest::Approx(ref[b]).epsilon(1e-6));
  }
  SUBCASE("weighted") {
    SoftHistogram h = soft_histogram(vals, &wts, 16, -100, 200);
    auto ref = histogram_oracle(vals, &wts, 16, -100, 200);
    for (int b = 0; b < 16; ++b)
      CHECK(h.probs[b] == doctest::Approx(ref[b]).epsilon(1e-6));
  }
}

TEST_CASE("soft histogram rejects empty support") {
  std::vector<double> vals(10, 5.0), zero(10, 0.0);
  CHECK_THROWS_AS((void)soft_histogram(vals, &zero, 8, 0, 10), DataError);
}

TEST_CASE("jeffreys loss of identical halves is zero") {
  auto vals = random_values(300, 5, -100, 200);
  CHECK(jeffreys_loss(vals, vals, nullptr, nullptr, 64, -100, 200) ==
        doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("jeffreys of (0.75,0.25) vs (0.25,0.75) histograms is ln 3") {
  // two bins with centers 0 and 1; values exactly on the centers build the
  // desired histograms directly
  std::vector<double> left{0, 0, 0, 1};  // 0.75 / 0.25
  std::vector<double> right{0, 1, 1, 1}; // 0.25 / 0.75
  const double v = jeffreys_loss(left, right, nullptr, nullptr, 2, 0.0, 1.0);
  // sum_b (Hl-Hr) ln(Hl/Hr) = 0.5 ln 3 + 0.5 ln 3 = ln 3
  CHECK(v == doctest::Approx(std::log(3.0)).epsilon(1e-6));
}

TEST_CASE("jeffreys is symmetric and non-negative") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto a = random_values(200, 100 + s, -100, 200);
    auto b = random_values(200, 200 + s, -100, 200);
    const double ab = jeffreys_loss(a, b, nullptr, nullptr, 32, -100, 200);
    const double ba = jeffreys_loss(b, a, nullptr, nullptr, 32, -100, 200);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-9));
    CHECK(ab >= 0.0);
  }
}

TEST_CASE("jeffreys gradient matches central finite differences") {
  auto a = random_values(60, 7, -90, 190);
  auto b = random_values(60, 8, -90, 190);
  auto wa = random_values(60, 9, 0.2, 1.0);
  auto wb = random_values(60, 10, 0.2, 1.0);
  JeffreysGrad g = jeffreys_loss_with_grad(a, b, &wa, &wb, 16, -100, 200);
  const double h = 3e-3;
  const double width = 300.0 / 16;
  Rng rng(11);
  for (int t = 0; t < 100; ++t) {
    const std::size_t i = rng.integer(60);
    const bool left = rng.integer(2) == 0;
    auto &vec = left ? a : b;
    const double keep = vec[i];
    // the triangular kernel is piecewise linear; skip samples whose
    // difference interval straddles a kink (finite differences are wrong
    // there, the analytic gradient is not)
    const double bin_t = (keep + 100.0) / width - 0.5;
    if (std::abs(bin_t - std::round(bin_t)) * width < 2 * h)
      continue;
    vec[i] = keep + h;
    const double fp = jeffreys_loss(a, b, &wa, &wb, 16, -100, 200);
    vec[i] = keep - h;
    const double fm = jeffreys_loss(a, b, &wa, &wb, 16, -100, 200);
    vec[i] = keep;
    const double fd = (fp - fm) / (2 * h);
    const double ad = left ? g.d_left[i] : g.d_right[i];
    CHECK(std::abs(ad - fd) / std::max(std::abs(fd), 1e-6) < 1e-3);
  }
}

TEST_CASE("ssim loss is -1 on mirror-identical halves") {
  const Dims d{12, 12, 12};
  ScalarVolume right(d, Spacing{}, 0.0);
  Rng rng(13);
  for (auto &x : right.data())
    x = rng.uniform(-100, 200);
  ScalarVolume left = sagittal_flip(right);
  MetricsConfig cfg;
  CHECK(ssim_loss(left, right, cfg) == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("ssim on constant images matches the closed form") {
  const Dims d{10, 10, 10};
  const double c1v = 40.0, c2v = 90.0;
  MetricsConfig cfg;
  const double L = cfg.range_hi - cfg.range_lo;
  const double C1 = (0.01 * L) * (0.01 * L), C2 = (0.03 * L) * (0.03 * L);
  ScalarVolume a(d, Spacing{}, c1v), b(d, Spacing{}, c2v);
  // zero variance: structure/contrast term is exactly 1, luminance term is
  // (2 c1 c2 + C1)/(c1^2 + c2^2 + C1)
  const double expected = (2 * c1v * c2v + C1) / (c1v * c1v + c2v * c2v + C1);
  CHECK(ssim_loss(a, b, cfg) == doctest::Approx(-expected).epsilon(1e-9));
  (void)C2;
}

TEST_CASE("ssim value matches a naive windowed reference") {
  const Dims d{11, 10, 9};
  auto a = random_values(d.count(), 17, 0, 100);
  auto b = random_values(d.count(), 18, 0, 100);
  const int w = 7;
  const double C1 = 9.0, C2 = 81.0;
  const double got = ssim_value(a, b, d, w, C1, C2);
  // naive reference: loop windows where the full 7^3 support fits
  const int r = w / 2;
  double acc = 0.0;
  int count = 0;
  auto at = [&](const std::vector<double> &v, int i, int j, int k) {
    return v[static_cast<std::size_t>(i) +
             static_cast<std::size_t>(d.nx) *
                 (static_cast<std::size_t>(j) +
                  static_cast<std::size_t>(d.ny) * k)];
  };
  for (int k = r; k < d.nz - r; ++k)
    for (int j = r; j < d.ny - r; ++j)
      for (int i = r; i < d.nx - r; ++i) {
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        for (int dk = -r; dk <= r; ++dk)
          for (int dj = -r; dj <= r; ++dj)
            for (int di = -r; di <= r; ++di) {
              const double x = at(a, i + di, j + dj, k + dk);
              const double y = at(b, i + di, j + dj, k + dk);
              sa += x; sb += y; saa += x * x; sbb += y * y; sab += x * y;
            }
        const double n = w * w * w;
        const double ma = sa / n, mb = sb / n;
        const double va = saa / n - ma * ma, vb = sbb / n - mb * mb;
        const double cov = sab / n - ma * mb;
        acc += (2 * ma * mb + C1) * (2 * cov + C2) /
               ((ma * ma + mb * mb + C1) * (va + vb + C2));
        ++count;
      }
  CHECK(got == doctest::Approx(acc / count).epsilon(1e-5));
}

TEST_CASE("ssim gradient matches central finite differences") {
  const Dims d{9, 9, 9};
  auto a = random_values(d.count(), 21, 0, 100);
  auto b = random_values(d.count(), 22, 0, 100);
  SsimGrad g = ssim_value_with_grad(a, b, d, 7, 9.0, 81.0);
  const double h = 0.1; // 1e-3 of the 100-unit range
  Rng rng(23);
  for (int t = 0; t < 100; ++t) {
    const std::size_t i = rng.integer(d.count());
    const bool first = rng.integer(2) == 0;
    auto &vec = first ? a : b;
    const double keep = vec[i];
    vec[i] = keep + h;
    const double fp = ssim_value(a, b, d, 7, 9.0, 81.0);
    vec[i] = keep - h;
    const double fm = ssim_value(a, b, d, 7, 9.0, 81.0);
    vec[i] = keep;
    const double fd = (fp - fm) / (2 * h);
    const double ad = first ? g.d_a[i] : g.d_b[i];
    CHECK(std::abs(ad - fd) / std::max(std::abs(fd), 1e-6) < 1e-3);
  }
}

TEST_CASE("volume balance loss on the three constructed cases") {
  const Dims d{16, 8, 8};
  const double tau = -200.0, eps_b = 10.0;
  SUBCASE("mirror-symmetric volume gives 0") {
    ScalarVolume v(d, Spacing{}, -1000.0);
    for (int k = 2; k < 6; ++k)
      for (int j = 2; j < 6; ++j)
        for (int i = 2; i < 14; ++i)
          v.at(i, j, k) = 50.0;
    CHECK(volume_balance_loss(v, tau, eps_b) ==
          doctest::Approx(0.0).epsilon(1e-6));
  }
  SUBCASE("all foreground in the left half gives 1") {
    ScalarVolume v(d, Spacing{}, -1000.0);
    for (int k = 2; k < 6; ++k)
      for (int j = 2; j < 6; ++j)
        for (int i = 1; i < 6; ++i)
          v.at(i, j, k) = 50.0;
    CHECK(volume_balance_loss(v, tau, eps_b) == doctest::Approx(1.0).epsilon(1e-3));
  }
  SUBCASE("75/25 split gives 0.5") {
    ScalarVolume v(d, Spacing{}, -1000.0);
    // 6 foreground columns on the left, 2 on the right, same rows
    for (int k = 2; k < 6; ++k)
      for (int j = 2; j < 6; ++j) {
        for (int i = 1; i < 7; ++i)
          v.at(i, j, k) = 50.0;
        for (int i = 9; i < 11; ++i)
          v.at(i, j, k) = 50.0;
      }
    CHECK(volume_balance_loss(v, tau, eps_b) ==
          doctest::Approx(0.5).epsilon(1e-3));
  }
  SUBCASE("no foreground is an error") {
    ScalarVolume v(d, Spacing{}, -1000.0);
    CHECK_THROWS_AS((void)volume_balance_loss(v, tau, eps_b), DataError);
  }
}

TEST_CASE("soft dice identities") {
  std::vector<double> a{1, 1, 1, 1, 0, 0, 0, 0};
  std::vector<double> b{0, 0, 1, 1, 1, 1, 0, 0};
  std::vector<double> c{0, 0, 0, 0, 1, 1, 1, 1};
  CHECK(soft_dice(a, a) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(soft_dice(a, c) == doctest::Approx(0.0).epsilon(1e-6));
  // |A∩B| = 2, |A| = |B| = 4 -> 2*2/(4+4) = 0.5
  CHECK(soft_dice(a, b) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("soft dice gradient matches central finite differences") {
  auto a = random_values(40, 31, 0, 1);
  auto b = random_values(40, 32, 0, 1);
  DiceGrad g = soft_dice_with_grad(a, b);
  CHECK(g.value == doctest::Approx(soft_dice(a, b)).epsilon(1e-12));
  const double h = 1e-3;
  Rng rng(33);
  for (int t = 0; t < 100; ++t) {
    const std::size_t i = rng.integer(40);
    const bool first = rng.integer(2) == 0;
    auto &vec = first ? a : b;
    const double keep = vec[i];
    vec[i] = keep + h;
    const double fp = soft_dice(a, b);
    vec[i] = keep - h;
    const double fm = soft_dice(a, b);
    vec[i] = keep;
    const double fd = (fp - fm) / (2 * h);
    const double ad = first ? g.d_a[i] : g.d_b[i];
    CHECK(std::abs(ad - fd) / std::max(std::abs(fd), 1e-6) < 1e-3);
  }
}
