#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsisr/diffusion/schedule.hpp"
#include "hsisr/gae/gae.hpp"
#include "hsisr/gae/losses.hpp"
#include "hsisr/grouping/grouping.hpp"

namespace hsisr::pipeline {

struct DataConfig {
  std::string source = "synthetic";  // synthetic | files
  int synth_height = 64;
  int synth_width = 64;
  int synth_bands = 16;
  int synth_count = 1;
  std::vector<std::string> files;
  std::string format = "native";  // native | raw-bsq
  double test_fraction = 0.0;
  int patch_size = 32;
  int patch_stride = 16;
  bool augment = false;
};

struct StageConfig {
  int steps = 2000;
  int batch_size = 4;
  double lr = 1e-4;
  double lr_final = -1.0;  // >= 0 enables cosine decay
  double beta1 = 0.9;
  double beta2 = 0.999;
  int crop = 0;  // stage 2 only: latent crop size, 0 = whole latent
  bool resume = false;
  int log_every = 100;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  int scale = 2;
  std::string output_dir = "runs/default";
  std::string variant = "full";  // full | no-gd | no-gs | diff-pb | diff-fb
  DataConfig data;
  GroupingConfig grouping;
  gae::GaeConfig gae;
  gae::LossConfig loss;
  std::string perceptual = "fixed-random-conv";
  std::string vgg_weights;
  std::string vgg_cut = "relu2_2";
  StageConfig stage1;
  StageConfig stage2;
  diffusion::DiffusionConfig diffusion;
  std::string infer_split = "auto";  // auto | train | test
  std::vector<int> benchmark_sizes{64, 128, 256};
  std::vector<std::string> ablate_variants{"full", "no-gd", "no-gs", "diff-pb", "diff-fb"};

  nlohmann::json json;  // the merged configuration this struct was built from
};

// Every recognised key with its default value.
nlohmann::json default_config_json();

// defaults <- file (if non-empty) <- "a.b.c=value" overrides. Values are parsed
// as JSON when possible and kept as strings otherwise. Unknown keys are rejected.
PipelineConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides = {});
PipelineConfig config_from_json(const nlohmann::json& merged);
void apply_override(nlohmann::json& json, const std::string& assignment);

// FNV-1a of the canonical (sorted-key, compact) JSON, as 16 hex digits.
std::string config_hash(const PipelineConfig& cfg);

// output_dir resolved against $HSISR_OUTPUT_ROOT when it is relative and the variable is set.
std::filesystem::path output_root(const PipelineConfig& cfg);

const std::vector<std::string>& variant_names();
bool variant_uses_gae(const std::string& variant);
// Grouping and GAE settings after applying the variant's ablation.
GroupingConfig variant_grouping(const PipelineConfig& cfg, const std::string& variant, int bands);
gae::GaeConfig variant_gae(const PipelineConfig& cfg, const std::string& variant);

}  // namespace hsisr::pipeline
