#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsisr/core/cube.hpp"
#include "hsisr/diffusion/denoiser.hpp"
#include "hsisr/diffusion/schedule.hpp"
#include "hsisr/gae/gae.hpp"
#include "hsisr/metrics/metrics.hpp"
#include "hsisr/pipeline/codec.hpp"
#include "hsisr/pipeline/config.hpp"

namespace hsisr::pipeline {

// Layout of an output directory.
struct RunPaths {
  std::filesystem::path root;

  std::filesystem::path data() const { return root / "data"; }
  std::filesystem::path dataset_index() const { return data() / "dataset.json"; }
  std::filesystem::path checkpoints() const { return root / "checkpoints"; }
  std::filesystem::path gae_checkpoint(const std::string& variant) const;
  std::filesystem::path diffusion_checkpoint(const std::string& variant) const;
  std::filesystem::path manifests() const { return root / "manifests"; }
  std::filesystem::path logs() const { return root / "logs"; }
  std::filesystem::path infer(const std::string& variant) const { return root / "infer" / variant; }
  std::filesystem::path eval(const std::string& variant) const { return root / "eval" / variant; }
};

RunPaths run_paths(const PipelineConfig& cfg);

struct DatasetImage {
  std::string id;
  std::string split;  // train | test
  std::filesystem::path hr;
  std::filesystem::path lr;
};

struct Dataset {
  int scale = 2;
  int bands = 0;
  std::vector<DatasetImage> images;

  std::vector<const DatasetImage*> split(const std::string& name) const;
};

// Throws IoError when the directory was never prepared.
Dataset load_dataset(const RunPaths& paths);
// Images used by infer/evaluate: infer.split, with "auto" meaning test when non-empty, else train.
std::vector<const DatasetImage*> eval_images(const PipelineConfig& cfg, const Dataset& ds);

// Spatial sizes must be multiples of this so that every variant's latent grid and
// denoiser levels line up.
int spatial_multiple(const PipelineConfig& cfg);

// Everything needed to run inference for one variant.
struct Models {
  std::string variant;
  std::unique_ptr<gae::GroupAutoencoder> gae;  // null for diff-pb / diff-fb
  std::unique_ptr<LatentCodec> codec;
  std::unique_ptr<diffusion::UNetDenoiser> denoiser;
  diffusion::NoiseSchedule schedule;
  std::string gae_id;
  std::string diffusion_id;
};

// Loads both checkpoints of a variant and checks them against the configuration.
// Throws ConfigError on any grouping, latent-shape or schedule mismatch.
Models load_models(const PipelineConfig& cfg, const std::string& variant, int bands);
// Freshly initialised models, for timing runs without trained weights.
Models untrained_models(const PipelineConfig& cfg, const std::string& variant, int bands);

nlohmann::json diffusion_signature(const diffusion::DiffusionConfig& cfg);

// Each command writes manifests/<name>.json and returns it.
nlohmann::json cmd_prepare(const PipelineConfig& cfg);
nlohmann::json cmd_train_stage1(const PipelineConfig& cfg);
nlohmann::json cmd_train_stage2(const PipelineConfig& cfg);
// Without an input path every image of the evaluation split is processed.
nlohmann::json cmd_infer(const PipelineConfig& cfg, const std::optional<std::filesystem::path>& input = {},
                         const std::optional<std::filesystem::path>& output = {});
nlohmann::json cmd_evaluate(const PipelineConfig& cfg);
// Direct comparison of two cube files; writes report, PNGs and curve data into out_dir.
metrics::MetricsReport evaluate_files(const std::filesystem::path& ref, const std::filesystem::path& cand, int scale,
                                      const std::filesystem::path& out_dir, const std::string& format = "native");
nlohmann::json cmd_ablate(const PipelineConfig& cfg);
nlohmann::json cmd_benchmark_time(const PipelineConfig& cfg);

// Copy of cfg with a different variant (json updated so the hash follows).
PipelineConfig with_variant(const PipelineConfig& cfg, const std::string& variant);

// Manifest comparison that ignores the "timing" section.
bool same_manifest(const nlohmann::json& a, const nlohmann::json& b);

}  // namespace hsisr::pipeline
