/**
 * @file rng.hpp
 * @brief Seeded RNG with distribution helpers that are stable across
 *        platforms (std distributions are implementation-defined).
 */
#ifndef BRAINSHIFT_RNG_HPP
#define BRAINSHIFT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace brainshift {

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    const double u =
        static_cast<double>(engine_() >> 11) * 0x1.0p-53; // [0, 1)
    return lo + u * (hi - lo);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    if (have_spare_) {
      have_spare_ = false;
      return mean + stddev * spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 1e-300)
      u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return mean + stddev * r * std::cos(theta);
  }

  std::uint64_t integer(std::uint64_t n) { // [0, n)
    return engine_() % n;
  }

  std::mt19937_64 &engine() { return engine_; }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

} // namespace brainshift

#endif
