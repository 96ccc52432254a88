/**
 * @file metrics.hpp
 * @brief Differentiable similarity and symmetry losses shared by rigid
 *        alignment and diffeomorphic synthesis.
 *
 * Every loss has a plain forward evaluation; the ones used inside the
 * velocity optimization also have a *_with_grad variant that returns
 * analytic derivatives w.r.t. the inputs.
 */
#ifndef BRAINSHIFT_METRICS_HPP
#define BRAINSHIFT_METRICS_HPP

#include <optional>
#include <vector>

#include "volume.hpp"

namespace brainshift {

struct MetricsConfig {
  int n_bins = 64;
  double range_lo = -100.0; // pseudo-HU window over brain tissue + blood
  double range_hi = 200.0;
  double binarizer_tau = -200.0; // air/tissue boundary
  double binarizer_eps = 10.0;
  int ssim_window = 7;
};

/// Normalized soft histogram (triangular kernel, epsilon-smoothed).
struct SoftHistogram {
  int n_bins = 0;
  double lo = 0.0, hi = 0.0;
  std::vector<double> probs; // sums to 1
  double total = 0.0;        // normalizer sum(raw + eps), needed by adjoints
};

inline constexpr double kHistEps = 1e-8;

SoftHistogram soft_histogram(const std::vector<double> &values,
                             const std::vector<double> *weights, int n_bins,
                             double lo, double hi);
SoftHistogram soft_histogram(const ScalarVolume &vol,
                             const std::vector<double> *mask, int n_bins,
                             double lo, double hi);

/// Symmetric KL (Jeffreys) divergence between the soft histograms of the
/// two inputs. Always >= 0.
double jeffreys_loss(const std::vector<double> &left,
                     const std::vector<double> &right,
                     const std::vector<double> *wl,
                     const std::vector<double> *wr, int n_bins, double lo,
                     double hi);
double jeffreys_loss(const ScalarVolume &left, const ScalarVolume &right,
                     const MetricsConfig &cfg);

struct JeffreysGrad {
  double value = 0.0;
  std::vector<double> d_left, d_right;   // w.r.t. intensities
  std::vector<double> dw_left, dw_right; // w.r.t. mask weights (if given)
};
JeffreysGrad jeffreys_loss_with_grad(const std::vector<double> &left,
                                     const std::vector<double> &right,
                                     const std::vector<double> *wl,
                                     const std::vector<double> *wr,
                                     int n_bins, double lo, double hi);

/// -SSIM(left, sagittal_flip(right)), 7^3 uniform window over voxels where
/// the full window fits, C1=(0.01 L)^2, C2=(0.03 L)^2 with L the configured
/// intensity range. Value in [-1, 1].
double ssim_loss(const ScalarVolume &left, const ScalarVolume &right,
                 const MetricsConfig &cfg);

/// SSIM core on two equally sized channels (no flip); returns the mean SSIM
/// over valid windows. Used by ssim_loss and by the adjoint path.
double ssim_value(const std::vector<double> &a, const std::vector<double> &b,
                  const Dims &d, int window, double c1, double c2);

struct SsimGrad {
  double value = 0.0;            // mean SSIM
  std::vector<double> d_a, d_b;  // d(mean SSIM)/d input
};
SsimGrad ssim_value_with_grad(const std::vector<double> &a,
                              const std::vector<double> &b, const Dims &d,
                              int window, double c1, double c2);

/// |sum B(X_left) - sum B(X_right)| / sum B(X) with the soft binarizer
/// B(x) = sigmoid((x - tau) / eps). Value in [0, 1].
double volume_balance_loss(const ScalarVolume &vol, double tau, double eps_b);

/// 2 sum(ab) / (sum a^2 + sum b^2 + eps), eps = 1e-8.
double soft_dice(const std::vector<double> &a, const std::vector<double> &b);

struct DiceGrad {
  double value = 0.0;
  std::vector<double> d_a, d_b;
};
DiceGrad soft_dice_with_grad(const std::vector<double> &a,
                             const std::vector<double> &b);

} // namespace brainshift

#endif
