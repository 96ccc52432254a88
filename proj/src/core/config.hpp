/**
 * @file config.hpp
 * @brief Strict JSON pipeline configuration (unknown keys rejected).
 */
#ifndef BRAINSHIFT_CONFIG_HPP
#define BRAINSHIFT_CONFIG_HPP

#include <cstdint>
#include <string>

#include "phantom.hpp"
#include "rigid.hpp"
#include "synth.hpp"

namespace brainshift {

struct ClassifyConfig {
  int k = 5;
  std::uint64_t seed = 17;
  double bilateral_threshold = 0.10;
};

struct PipelineConfig {
  MetricsConfig metrics;
  AlignConfig align;   // align.metrics mirrors `metrics` after load
  LossWeights weights;
  SynthOptions synth;  // synth.metrics mirrors `metrics` after load
  double mask_smoothing_sigma = 1.0;
  ClassifyConfig classify;
};

/// Parse a config JSON string; missing keys keep defaults, unknown keys and
/// constraint violations throw UsageError. Empty string -> defaults.
PipelineConfig parse_config(const std::string &json_text);
PipelineConfig load_config_file(const std::string &path);

/// Serialize (deterministically) so that dump -> parse round-trips.
std::string dump_config(const PipelineConfig &cfg);

/// Phantom spec JSON: {size, seed, side, thickness, spacing}.
PhantomSpec parse_phantom_spec(const std::string &json_text);

} // namespace brainshift

#endif
