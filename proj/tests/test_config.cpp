#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/config.hpp"
#include "core/volume.hpp"

using namespace brainshift;

TEST_CASE("empty config yields the documented defaults") {
  PipelineConfig cfg = parse_config("");
  CHECK(cfg.metrics.n_bins == 64);
  CHECK(cfg.metrics.range_lo == -100.0);
  CHECK(cfg.metrics.range_hi == 200.0);
  CHECK(cfg.metrics.binarizer_tau == -200.0);
  CHECK(cfg.metrics.binarizer_eps == 10.0);
  CHECK(cfg.metrics.ssim_window == 7);
  CHECK(cfg.align.iterations == 150);
  CHECK(cfg.align.learning_rate == 0.03);
  CHECK(cfg.align.weight_jeffreys == 1.0);
  CHECK(cfg.align.weight_ssim == 1.0);
  CHECK(cfg.align.weight_volume == 1.0);
  CHECK(cfg.synth.iterations == 2000);
  CHECK(cfg.synth.learning_rate == 3e-4);
  CHECK(cfg.synth.n_steps == 7);
  CHECK(cfg.synth.control_factor == 2);
  CHECK(cfg.weights.jeffreys == 1.0);
  CHECK(cfg.weights.ssim == 1.0);
  CHECK(cfg.weights.ventricle == 1.0);
  CHECK(cfg.weights.hematoma == 1.0);
  CHECK(cfg.weights.skull == 5.0);
  CHECK(cfg.weights.jacobian == 5.0);
  CHECK(cfg.weights.gradient == 5.0);
  CHECK(cfg.mask_smoothing_sigma == 1.0);
  CHECK(cfg.classify.k == 5);
  CHECK(cfg.classify.seed == 17);
  CHECK(cfg.classify.bilateral_threshold == 0.10);
  // metrics are mirrored into the align and synth stages
  CHECK(cfg.align.metrics.n_bins == cfg.metrics.n_bins);
  CHECK(cfg.synth.metrics.ssim_window == cfg.metrics.ssim_window);
}

TEST_CASE("dump then parse round-trips to an equal config") {
  PipelineConfig cfg = parse_config(R"({
    "metrics": {"n_bins": 32, "range_lo": -50, "range_hi": 150},
    "align": {"iterations": 80, "learning_rate": 0.01},
    "synth": {"iterations": 300, "learning_rate": 0.05,
              "weights": {"skull": 2.5, "hematoma": 0.5}},
    "classify": {"k": 4, "seed": 99}
  })");
  const std::string dumped = dump_config(cfg);
  PipelineConfig back = parse_config(dumped);
  CHECK(back.metrics.n_bins == 32);
  CHECK(back.metrics.range_lo == -50.0);
  CHECK(back.metrics.range_hi == 150.0);
  CHECK(back.align.iterations == 80);
  CHECK(back.align.learning_rate == 0.01);
  CHECK(back.synth.iterations == 300);
  CHECK(back.synth.learning_rate == 0.05);
  CHECK(back.weights.skull == 2.5);
  CHECK(back.weights.hematoma == 0.5);
  CHECK(back.weights.jacobian == 5.0); // untouched default
  CHECK(back.classify.k == 4);
  CHECK(back.classify.seed == 99);
  // serialization is deterministic
  CHECK(dump_config(back) == dumped);
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_AS((void)parse_config(R"({"bogus": 1})"), UsageError);
  CHECK_THROWS_AS((void)parse_config(R"({"metrics": {"bins": 8}})"),
                  UsageError);
  CHECK_THROWS_AS((void)parse_config(R"({"align": {"lr": 0.1}})"), UsageError);
  CHECK_THROWS_AS(
      (void)parse_config(R"({"synth": {"weights": {"jacobean": 1}}})"),
      UsageError);
  CHECK_THROWS_AS((void)parse_config(R"({"classify": {"folds": 5}})"),
                  UsageError);
}

TEST_CASE("constraint violations are rejected") {
  CHECK_THROWS_AS((void)parse_config(R"({"metrics": {"n_bins": 1}})"),
                  UsageError);
  CHECK_THROWS_AS(
      (void)parse_config(R"({"metrics": {"range_lo": 10, "range_hi": 10}})"),
      UsageError);
  CHECK_THROWS_AS((void)parse_config(R"({"metrics": {"ssim_window": 6}})"),
                  UsageError);
  CHECK_THROWS_AS((void)parse_config(R"({"align": {"iterations": 0}})"),
                  UsageError);
  CHECK_THROWS_AS((void)parse_config(R"({"align": {"learning_rate": 0}})"),
                  UsageError);
  CHECK_THROWS_AS((void)parse_config(R"({"synth": {"n_steps": 0}})"),
                  UsageError);
  CHECK_THROWS_AS(
      (void)parse_config(R"({"synth": {"weights": {"skull": -1}}})"),
      UsageError);
  CHECK_THROWS_AS((void)parse_config(R"({"synth": {"weights": {
      "jeffreys": 0, "ssim": 0, "ventricle": 0, "hematoma": 0,
      "skull": 0, "jacobian": 0, "gradient": 0}}})"),
                  UsageError);
  CHECK_THROWS_AS((void)parse_config(R"({"classify": {"k": 1}})"), UsageError);
  CHECK_THROWS_AS((void)parse_config("not json"), UsageError);
  CHECK_THROWS_AS((void)parse_config("[1,2,3]"), UsageError);
}

TEST_CASE("phantom spec parsing") {
  PhantomSpec def = parse_phantom_spec("");
  CHECK(def.size == 64);
  CHECK(def.side == HematomaSide::None);
  CHECK(def.thickness == 4.0);

  PhantomSpec s = parse_phantom_spec(
      R"({"size": 48, "seed": 3, "side": "left", "thickness": 5.0,
          "spacing": [0.4, 0.4, 1.5]})");
  CHECK(s.size == 48);
  CHECK(s.seed == 3);
  CHECK(s.side == HematomaSide::Left);
  CHECK(s.thickness == 5.0);
  CHECK(s.spacing.sz == 1.5);

  CHECK_THROWS_AS((void)parse_phantom_spec(R"({"size": 16})"), UsageError);
  CHECK_THROWS_AS((void)parse_phantom_spec(R"({"side": "up"})"), UsageError);
  CHECK_THROWS_AS((void)parse_phantom_spec(R"({"spacing": [1, 1]})"),
                  UsageError);
  CHECK_THROWS_AS((void)parse_phantom_spec(R"({"extra": 1})"), UsageError);
}

TEST_CASE("missing config file is a data error") {
  CHECK_THROWS_AS((void)load_config_file("/nonexistent/cfg.json"), DataError);
  PipelineConfig cfg = load_config_file("");
  CHECK(cfg.synth.n_steps == 7);
}
