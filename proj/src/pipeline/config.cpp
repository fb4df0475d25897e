#include "hsisr/pipeline/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hsisr/core/error.hpp"
#include "hsisr/core/rng.hpp"

namespace hsisr::pipeline {

using nlohmann::json;

json default_config_json() {
  return json::parse(R"({
    "seed": 0,
    "scale": 2,
    "output_dir": "runs/default",
    "variant": "full",
    "data": {
      "source": "synthetic",
      "synthetic": {"height": 64, "width": 64, "bands": 16, "count": 1},
      "files": [],
      "format": "native",
      "test_fraction": 0.0,
      "patch_size": 32,
      "patch_stride": 16,
      "augment": false
    },
    "grouping": {"n_subs": 16, "n_ovls": 4},
    "gae": {
      "latent_channels": 8,
      "latent_downscale": 2,
      "enc_widths": [32],
      "dec_widths": [32, 32],
      "global_widths": [32, 32],
      "activation": "silu",
      "global_decoder": true
    },
    "loss": {
      "lambda1": 0.3,
      "lambda2": 0.1,
      "lambda3": 0.001,
      "perceptual": "fixed-random-conv",
      "vgg_weights": "",
      "vgg_cut": "relu2_2"
    },
    "stage1": {"steps": 2000, "batch_size": 4, "lr": 1e-4, "lr_final": -1.0, "beta1": 0.9, "beta2": 0.999,
               "resume": false, "log_every": 100},
    "diffusion": {"T": 100, "schedule": "linear", "beta_min": 1e-3, "beta_max": 0.2, "time_dim": 32,
                  "widths": [32, 64]},
    "stage2": {"steps": 2000, "batch_size": 4, "lr": 1e-5, "lr_final": -1.0, "beta1": 0.9, "beta2": 0.999,
               "crop": 16, "resume": false, "log_every": 100},
    "infer": {"split": "auto"},
    "benchmark": {"sizes": [64, 128, 256]},
    "ablate": {"variants": ["full", "no-gd", "no-gs", "diff-pb", "diff-fb"]}
  })");
}

namespace {

void merge_into(json& base, const json& patch, const std::string& path) {
  if (!patch.is_object()) throw ConfigError("config section '" + path + "' must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string full = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key '" + full + "'");
    if (base[key].is_object()) {
      merge_into(base[key], value, full);
    } else {
      base[key] = value;
    }
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + path + key + "' has the wrong type: " + j.at(key).dump());
  }
}

StageConfig stage_from(const json& j, const std::string& path) {
  StageConfig s;
  s.steps = get<int>(j, "steps", path);
  s.batch_size = get<int>(j, "batch_size", path);
  s.lr = get<double>(j, "lr", path);
  s.lr_final = get<double>(j, "lr_final", path);
  s.beta1 = get<double>(j, "beta1", path);
  s.beta2 = get<double>(j, "beta2", path);
  s.resume = get<bool>(j, "resume", path);
  s.log_every = get<int>(j, "log_every", path);
  if (j.contains("crop")) s.crop = get<int>(j, "crop", path);
  if (s.steps < 0) throw ConfigError(path + "steps must be >= 0");
  if (s.batch_size < 1) throw ConfigError(path + "batch_size must be >= 1");
  if (!(s.lr >= 0.0)) throw ConfigError(path + "lr must be >= 0");
  if (!(s.beta1 >= 0.0 && s.beta1 < 1.0 && s.beta2 >= 0.0 && s.beta2 < 1.0)) {
    throw ConfigError(path + "beta1/beta2 must be in [0, 1)");
  }
  if (s.crop < 0) throw ConfigError(path + "crop must be >= 0");
  return s;
}

}  // namespace

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json* node = &j;
  std::stringstream ks(key);
  std::string part;
  std::string seen;
  while (std::getline(ks, part, '.')) {
    seen += seen.empty() ? part : "." + part;
    if (!node->is_object() || !node->contains(part)) throw ConfigError("unknown config key '" + seen + "'");
    node = &(*node)[part];
  }
  if (node->is_object()) throw ConfigError("config key '" + key + "' is a section, not a value");
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  *node = value;
}

PipelineConfig config_from_json(const json& merged) {
  PipelineConfig c;
  c.json = merged;
  c.seed = get<std::uint64_t>(merged, "seed", "");
  c.scale = get<int>(merged, "scale", "");
  if (c.scale < 2 || c.scale > 4) throw ConfigError("scale must be 2, 3 or 4");
  c.output_dir = get<std::string>(merged, "output_dir", "");
  c.variant = get<std::string>(merged, "variant", "");
  const auto& names = variant_names();
  if (std::find(names.begin(), names.end(), c.variant) == names.end()) {
    throw ConfigError("unknown variant '" + c.variant + "'");
  }

  const json& d = merged.at("data");
  c.data.source = get<std::string>(d, "source", "data.");
  if (c.data.source != "synthetic" && c.data.source != "files") {
    throw ConfigError("data.source must be 'synthetic' or 'files'");
  }
  const json& syn = d.at("synthetic");
  c.data.synth_height = get<int>(syn, "height", "data.synthetic.");
  c.data.synth_width = get<int>(syn, "width", "data.synthetic.");
  c.data.synth_bands = get<int>(syn, "bands", "data.synthetic.");
  c.data.synth_count = get<int>(syn, "count", "data.synthetic.");
  if (c.data.synth_height < 8 || c.data.synth_width < 8 || c.data.synth_bands < 3 || c.data.synth_count < 1) {
    throw ConfigError("data.synthetic needs height, width >= 8, bands >= 3 and count >= 1");
  }
  c.data.files = get<std::vector<std::string>>(d, "files", "data.");
  c.data.format = get<std::string>(d, "format", "data.");
  c.data.test_fraction = get<double>(d, "test_fraction", "data.");
  if (!(c.data.test_fraction >= 0.0 && c.data.test_fraction < 1.0)) {
    throw ConfigError("data.test_fraction must be in [0, 1)");
  }
  c.data.patch_size = get<int>(d, "patch_size", "data.");
  c.data.patch_stride = get<int>(d, "patch_stride", "data.");
  c.data.augment = get<bool>(d, "augment", "data.");

  const json& g = merged.at("grouping");
  c.grouping.n_subs = get<int>(g, "n_subs", "grouping.");
  c.grouping.n_ovls = get<int>(g, "n_ovls", "grouping.");
  c.grouping.validate();

  const json& a = merged.at("gae");
  c.gae.latent_channels = get<int>(a, "latent_channels", "gae.");
  c.gae.latent_downscale = get<int>(a, "latent_downscale", "gae.");
  c.gae.enc_widths = get<std::vector<int>>(a, "enc_widths", "gae.");
  c.gae.dec_widths = get<std::vector<int>>(a, "dec_widths", "gae.");
  c.gae.global_widths = get<std::vector<int>>(a, "global_widths", "gae.");
  c.gae.activation = get<std::string>(a, "activation", "gae.");
  c.gae.global_decoder = get<bool>(a, "global_decoder", "gae.");
  c.gae.validate();

  const json& l = merged.at("loss");
  c.loss.lambda1 = get<double>(l, "lambda1", "loss.");
  c.loss.lambda2 = get<double>(l, "lambda2", "loss.");
  c.loss.lambda3 = get<double>(l, "lambda3", "loss.");
  c.loss.validate();
  c.perceptual = get<std::string>(l, "perceptual", "loss.");
  c.vgg_weights = get<std::string>(l, "vgg_weights", "loss.");
  c.vgg_cut = get<std::string>(l, "vgg_cut", "loss.");

  c.stage1 = stage_from(merged.at("stage1"), "stage1.");
  c.stage2 = stage_from(merged.at("stage2"), "stage2.");

  const json& f = merged.at("diffusion");
  c.diffusion.steps = get<int>(f, "T", "diffusion.");
  c.diffusion.schedule = diffusion::parse_schedule(get<std::string>(f, "schedule", "diffusion."));
  c.diffusion.beta_min = get<double>(f, "beta_min", "diffusion.");
  c.diffusion.beta_max = get<double>(f, "beta_max", "diffusion.");
  c.diffusion.time_dim = get<int>(f, "time_dim", "diffusion.");
  c.diffusion.widths = get<std::vector<int>>(f, "widths", "diffusion.");
  c.diffusion.validate();

  c.infer_split = get<std::string>(merged.at("infer"), "split", "infer.");
  if (c.infer_split != "auto" && c.infer_split != "train" && c.infer_split != "test") {
    throw ConfigError("infer.split must be auto, train or test");
  }
  c.benchmark_sizes = get<std::vector<int>>(merged.at("benchmark"), "sizes", "benchmark.");
  for (int s : c.benchmark_sizes)
    if (s < 8) throw ConfigError("benchmark.sizes entries must be >= 8");
  c.ablate_variants = get<std::vector<std::string>>(merged.at("ablate"), "variants", "ablate.");
  for (const auto& v : c.ablate_variants)
    if (std::find(names.begin(), names.end(), v) == names.end()) {
      throw ConfigError("unknown variant '" + v + "' in ablate.variants");
    }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
  json merged = default_config_json();
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config " + file.string());
    json user = json::parse(in, nullptr, false);
    if (user.is_discarded()) throw ConfigError("config " + file.string() + " is not valid JSON");
    merge_into(merged, user, "");
  }
  for (const auto& o : overrides) apply_override(merged, o);
  return config_from_json(merged);
}

std::string config_hash(const PipelineConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(cfg.json.dump())));
  return buf;
}

std::filesystem::path output_root(const PipelineConfig& cfg) {
  std::filesystem::path out(cfg.output_dir);
  if (out.is_relative()) {
    if (const char* root = std::getenv("HSISR_OUTPUT_ROOT"); root && *root) out = std::filesystem::path(root) / out;
  }
  return out;
}

const std::vector<std::string>& variant_names() {
  static const std::vector<std::string> names{"full", "no-gd", "no-gs", "diff-pb", "diff-fb"};
  return names;
}

bool variant_uses_gae(const std::string& variant) { return variant == "full" || variant == "no-gd" || variant == "no-gs"; }

GroupingConfig variant_grouping(const PipelineConfig& cfg, const std::string& variant, int bands) {
  GroupingConfig g = cfg.grouping;
  if (variant == "no-gs") {
    g.n_subs = bands;
    g.n_ovls = std::min(g.n_ovls, bands - 1);
  }
  return g;
}

gae::GaeConfig variant_gae(const PipelineConfig& cfg, const std::string& variant) {
  gae::GaeConfig g = cfg.gae;
  if (variant == "no-gd") g.global_decoder = false;
  return g;
}

}  // namespace hsisr::pipeline
