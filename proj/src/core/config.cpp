#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace brainshift {

namespace {

using nlohmann::json;

void reject_unknown(const json &obj, const std::set<std::string> &known,
                    const std::string &where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key()))
      throw UsageError("config: unknown key '" + it.key() + "' in " + where);
}

template <typename T>
void get(const json &obj, const char *key, T &out) {
  if (obj.contains(key))
    out = obj.at(key).get<T>();
}

json parse_object(const std::string &text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error &e) {
    throw UsageError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object())
    throw UsageError("config: top level must be a JSON object");
  return j;
}

} // namespace

PipelineConfig parse_config(const std::string &json_text) {
  PipelineConfig cfg;
  if (json_text.empty()) {
    cfg.align.metrics = cfg.metrics;
    cfg.synth.metrics = cfg.metrics;
    return cfg;
  }
  const json j = parse_object(json_text);
  reject_unknown(j, {"metrics", "align", "synth", "classify"}, "config");

  if (j.contains("metrics")) {
    const json &m = j.at("metrics");
    reject_unknown(m,
                   {"n_bins", "range_lo", "range_hi", "binarizer_tau",
                    "binarizer_eps", "ssim_window"},
                   "metrics");
    get(m, "n_bins", cfg.metrics.n_bins);
    get(m, "range_lo", cfg.metrics.range_lo);
    get(m, "range_hi", cfg.metrics.range_hi);
    get(m, "binarizer_tau", cfg.metrics.binarizer_tau);
    get(m, "binarizer_eps", cfg.metrics.binarizer_eps);
    get(m, "ssim_window", cfg.metrics.ssim_window);
    if (cfg.metrics.n_bins < 2 || cfg.metrics.range_hi <= cfg.metrics.range_lo)
      throw UsageError("config: metrics need n_bins >= 2 and range_hi > "
                       "range_lo");
    if (cfg.metrics.ssim_window < 1 || cfg.metrics.ssim_window % 2 == 0)
      throw UsageError("config: ssim_window must be odd and >= 1");
  }

  if (j.contains("align")) {
    const json &a = j.at("align");
    reject_unknown(a,
                   {"iterations", "learning_rate", "weight_jeffreys",
                    "weight_ssim", "weight_volume", "max_rotation"},
                   "align");
    get(a, "iterations", cfg.align.iterations);
    get(a, "learning_rate", cfg.align.learning_rate);
    get(a, "weight_jeffreys", cfg.align.weight_jeffreys);
    get(a, "weight_ssim", cfg.align.weight_ssim);
    get(a, "weight_volume", cfg.align.weight_volume);
    get(a, "max_rotation", cfg.align.max_rotation);
    if (cfg.align.max_rotation < 0.0)
      throw UsageError("config: align.max_rotation must be >= 0");
    if (cfg.align.iterations < 1 || cfg.align.learning_rate <= 0.0)
      throw UsageError("config: align needs iterations >= 1 and learning "
                       "rate > 0");
  }

  if (j.contains("synth")) {
    const json &s = j.at("synth");
    reject_unknown(s,
                   {"iterations", "learning_rate", "n_steps", "control_factor",
                    "mask_smoothing_sigma", "weights"},
                   "synth");
    get(s, "iterations", cfg.synth.iterations);
    get(s, "learning_rate", cfg.synth.learning_rate);
    get(s, "n_steps", cfg.synth.n_steps);
    get(s, "control_factor", cfg.synth.control_factor);
    get(s, "mask_smoothing_sigma", cfg.mask_smoothing_sigma);
    if (cfg.synth.iterations < 1 || cfg.synth.learning_rate <= 0.0 ||
        cfg.synth.n_steps < 1 || cfg.synth.control_factor < 1)
      throw UsageError("config: bad synth settings");
    if (s.contains("weights")) {
      const json &w = s.at("weights");
      reject_unknown(w,
                     {"jeffreys", "ssim", "ventricle", "hematoma", "skull",
                      "jacobian", "gradient"},
                     "synth.weights");
      get(w, "jeffreys", cfg.weights.jeffreys);
      get(w, "ssim", cfg.weights.ssim);
      get(w, "ventricle", cfg.weights.ventricle);
      get(w, "hematoma", cfg.weights.hematoma);
      get(w, "skull", cfg.weights.skull);
      get(w, "jacobian", cfg.weights.jacobian);
      get(w, "gradient", cfg.weights.gradient);
      const double all = cfg.weights.jeffreys + cfg.weights.ssim +
                         cfg.weights.ventricle + cfg.weights.hematoma +
                         cfg.weights.skull + cfg.weights.jacobian +
                         cfg.weights.gradient;
      for (double v : {cfg.weights.jeffreys, cfg.weights.ssim,
                       cfg.weights.ventricle, cfg.weights.hematoma,
                       cfg.weights.skull, cfg.weights.jacobian,
                       cfg.weights.gradient})
        if (v < 0.0)
          throw UsageError("config: loss weights must be >= 0");
      if (all <= 0.0)
        throw UsageError("config: at least one loss weight must be > 0");
    }
  }

  if (j.contains("classify")) {
    const json &c = j.at("classify");
    reject_unknown(c, {"k", "seed", "bilateral_threshold"}, "classify");
    get(c, "k", cfg.classify.k);
    get(c, "seed", cfg.classify.seed);
    get(c, "bilateral_threshold", cfg.classify.bilateral_threshold);
    if (cfg.classify.k < 2)
      throw UsageError("config: classify.k must be >= 2");
  }

  cfg.align.metrics = cfg.metrics;
  cfg.synth.metrics = cfg.metrics;
  return cfg;
}

PipelineConfig load_config_file(const std::string &path) {
  if (path.empty())
    return parse_config("");
  std::ifstream f(path);
  if (!f)
    throw DataError("config: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const PipelineConfig &cfg) {
  json j;
  j["metrics"] = {{"n_bins", cfg.metrics.n_bins},
                  {"range_lo", cfg.metrics.range_lo},
                  {"range_hi", cfg.metrics.range_hi},
                  {"binarizer_tau", cfg.metrics.binarizer_tau},
                  {"binarizer_eps", cfg.metrics.binarizer_eps},
                  {"ssim_window", cfg.metrics.ssim_window}};
  j["align"] = {{"iterations", cfg.align.iterations},
                {"learning_rate", cfg.align.learning_rate},
                {"weight_jeffreys", cfg.align.weight_jeffreys},
                {"weight_ssim", cfg.align.weight_ssim},
                {"weight_volume", cfg.align.weight_volume},
                {"max_rotation", cfg.align.max_rotation}};
  j["synth"] = {{"iterations", cfg.synth.iterations},
                {"learning_rate", cfg.synth.learning_rate},
                {"n_steps", cfg.synth.n_steps},
                {"control_factor", cfg.synth.control_factor},
                {"mask_smoothing_sigma", cfg.mask_smoothing_sigma},
                {"weights",
                 {{"jeffreys", cfg.weights.jeffreys},
                  {"ssim", cfg.weights.ssim},
                  {"ventricle", cfg.weights.ventricle},
                  {"hematoma", cfg.weights.hematoma},
                  {"skull", cfg.weights.skull},
                  {"jacobian", cfg.weights.jacobian},
                  {"gradient", cfg.weights.gradient}}}};
  j["classify"] = {{"k", cfg.classify.k},
                   {"seed", cfg.classify.seed},
                   {"bilateral_threshold", cfg.classify.bilateral_threshold}};
  return j.dump(2) + "\n";
}

PhantomSpec parse_phantom_spec(const std::string &json_text) {
  PhantomSpec spec;
  if (json_text.empty())
    return spec;
  const json j = parse_object(json_text);
  reject_unknown(j, {"size", "seed", "side", "thickness", "spacing"},
                 "phantom spec");
  get(j, "size", spec.size);
  get(j, "seed", spec.seed);
  if (j.contains("side"))
    spec.side = side_from_name(j.at("side").get<std::string>());
  get(j, "thickness", spec.thickness);
  if (j.contains("spacing")) {
    const auto v = j.at("spacing").get<std::vector<double>>();
    if (v.size() != 3 || v[0] <= 0 || v[1] <= 0 || v[2] <= 0)
      throw UsageError("phantom spec: spacing must be 3 positive numbers");
    spec.spacing = Spacing{v[0], v[1], v[2]};
  }
  if (spec.size < 32)
    throw UsageError("phantom spec: size must be >= 32");
  return spec;
}

} // namespace brainshift
