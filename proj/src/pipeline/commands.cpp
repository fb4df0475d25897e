#include "hsisr/pipeline/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include "hsisr/core/cube_io.hpp"
#include "hsisr/core/error.hpp"
#include "hsisr/core/patches.hpp"
#include "hsisr/core/png.hpp"
#include "hsisr/core/resample.hpp"
#include "hsisr/core/rng.hpp"
#include "hsisr/core/synth.hpp"
#include "hsisr/diffusion/sampler.hpp"
#include "hsisr/gae/perceptual.hpp"
#include "hsisr/gae/trainer.hpp"
#include "hsisr/pipeline/super_resolve.hpp"

namespace hsisr::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("short write to " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw IoError(path.string() + " is not valid JSON");
  return j;
}

json write_manifest(const PipelineConfig& cfg, const std::string& name, json body) {
  body["command"] = name;
  body["config_hash"] = config_hash(cfg);
  body["config"] = cfg.json;
  write_text(run_paths(cfg).manifests() / (name + ".json"), body.dump(2) + "\n");
  return body;
}

void log_line(const std::string& line) { std::cerr << line << std::endl; }

// Bands drawn as R, G, B in false-colour renderings.
std::array<int, 3> display_bands(int bands) {
  auto at = [&](double f) { return static_cast<int>(std::lround(f * (bands - 1))); };
  return {at(0.75), at(0.5), at(0.25)};
}

std::uint64_t image_seed(std::uint64_t seed, const std::string& id) {
  return splitmix64(seed ^ fnv1a64("infer/" + id));
}

metrics::MetricsReport mean_report(const std::vector<metrics::MetricsReport>& reports) {
  metrics::MetricsReport m;
  if (reports.empty()) return m;
  for (const auto& r : reports) {
    m.mpsnr += r.mpsnr;
    m.mssim += r.mssim;
    m.sam += r.sam;
    m.cc += r.cc;
    m.rmse += r.rmse;
    m.ergas += r.ergas;
  }
  const double n = static_cast<double>(reports.size());
  m.mpsnr /= n;
  m.mssim /= n;
  m.sam /= n;
  m.cc /= n;
  m.rmse /= n;
  m.ergas /= n;
  m.scale = reports.front().scale;
  return m;
}

json report_json(const metrics::MetricsReport& r) {
  return {{"mpsnr", metrics::format_metric(r.mpsnr)}, {"mssim", r.mssim}, {"sam", r.sam}, {"cc", r.cc},
          {"rmse", r.rmse},                            {"ergas", r.ergas}, {"scale", r.scale}};
}

void require_gae_variant(const std::string& variant, const char* what) {
  if (!variant_uses_gae(variant)) throw ConfigError(std::string(what) + " does not apply to variant " + variant);
}

}  // namespace

fs::path RunPaths::gae_checkpoint(const std::string& variant) const { return checkpoints() / ("gae-" + variant + ".ckpt"); }

fs::path RunPaths::diffusion_checkpoint(const std::string& variant) const {
  return checkpoints() / ("diffusion-" + variant + ".ckpt");
}

RunPaths run_paths(const PipelineConfig& cfg) { return {output_root(cfg)}; }

std::vector<const DatasetImage*> Dataset::split(const std::string& name) const {
  std::vector<const DatasetImage*> out;
  for (const auto& im : images)
    if (im.split == name) out.push_back(&im);
  return out;
}

Dataset load_dataset(const RunPaths& paths) {
  if (!fs::exists(paths.dataset_index())) {
    throw IoError("no prepared dataset at " + paths.data().string() + " (run prepare first)");
  }
  const json j = read_json(paths.dataset_index());
  Dataset ds;
  ds.scale = j.at("scale").get<int>();
  ds.bands = j.at("bands").get<int>();
  for (const auto& im : j.at("images")) {
    ds.images.push_back({im.at("id").get<std::string>(), im.at("split").get<std::string>(),
                         paths.data() / im.at("hr").get<std::string>(), paths.data() / im.at("lr").get<std::string>()});
  }
  return ds;
}

std::vector<const DatasetImage*> eval_images(const PipelineConfig& cfg, const Dataset& ds) {
  if (cfg.infer_split == "auto") {
    auto test = ds.split("test");
    return test.empty() ? ds.split("train") : test;
  }
  return ds.split(cfg.infer_split);
}

int spatial_multiple(const PipelineConfig& cfg) {
  const int unet = 1 << (static_cast<int>(cfg.diffusion.widths.size()) - 1);
  return std::lcm(cfg.scale, cfg.gae.latent_downscale * unet);
}

PipelineConfig with_variant(const PipelineConfig& cfg, const std::string& variant) {
  json j = cfg.json;
  j["variant"] = variant;
  return config_from_json(j);
}

bool same_manifest(const json& a, const json& b) {
  json x = a, y = b;
  x.erase("timing");
  y.erase("timing");
  return x == y;
}

json diffusion_signature(const diffusion::DiffusionConfig& d) {
  return {{"T", d.steps},
          {"schedule", diffusion::schedule_name(d.schedule)},
          {"beta_min", d.beta_min},
          {"beta_max", d.beta_max},
          {"time_dim", d.time_dim},
          {"widths", d.widths}};
}

// ---------------------------------------------------------------- prepare

json cmd_prepare(const PipelineConfig& cfg) {
  const auto t0 = Clock::now();
  const RunPaths paths = run_paths(cfg);
  require_scale(cfg.scale);

  std::vector<Cube> cubes;
  std::vector<std::string> sources;
  if (cfg.data.source == "synthetic") {
    for (int i = 0; i < cfg.data.synth_count; ++i) {
      const std::uint64_t s = splitmix64(cfg.seed ^ fnv1a64("data.synthetic")) + static_cast<std::uint64_t>(i);
      cubes.push_back(synth_cube(cfg.data.synth_height, cfg.data.synth_width, cfg.data.synth_bands, s));
      sources.push_back("synthetic:" + std::to_string(i));
    }
  } else {
    if (cfg.data.files.empty()) throw ConfigError("data.source is 'files' but data.files is empty");
    const CubeFormat format = parse_cube_format(cfg.data.format);
    for (const auto& f : cfg.data.files) {
      cubes.push_back(normalize(load_cube(f, format)));
      sources.push_back(f);
    }
  }
  const int bands = cubes.front().bands();
  for (const auto& c : cubes)
    if (c.bands() != bands) throw ShapeError("all cubes must have the same number of bands");

  // Crop to the spatial multiple so every variant's latent grid lines up.
  const int m = spatial_multiple(cfg);
  for (auto& c : cubes) {
    const int h = c.height() / m * m;
    const int w = c.width() / m * m;
    if (h < m || w < m) throw ShapeError("cube " + shape_string(c) + " is smaller than the spatial multiple " +
                                         std::to_string(m));
    if (h != c.height() || w != c.width()) {
      Cube cropped(h, w, bands);
      for (int b = 0; b < bands; ++b)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) cropped.at(y, x, b) = c.at(y, x, b);
      cropped.meta = c.meta;
      cropped.meta["cropped_from"] = shape_string(c);
      c = std::move(cropped);
    }
  }

  // Deterministic split.
  std::vector<int> order(cubes.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng = seed_stream(cfg.seed, "data.split");
  std::shuffle(order.begin(), order.end(), split_rng);
  const int n_test = static_cast<int>(std::floor(cfg.data.test_fraction * static_cast<double>(cubes.size()) + 0.5));
  if (n_test >= static_cast<int>(cubes.size())) throw ConfigError("data.test_fraction leaves no training images");
  std::vector<std::string> split(cubes.size(), "train");
  for (int i = 0; i < n_test; ++i) split[order[i]] = "test";

  fs::create_directories(paths.data());
  json images = json::array();
  json patch_counts = json::array();
  long total_patches = 0;
  PatchSpec spec{cfg.data.patch_size, cfg.data.patch_stride, cfg.data.augment};
  for (std::size_t i = 0; i < cubes.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "img%03zu", i);
    const ImagePair pair = degrade(cubes[i], cfg.scale);
    const std::string hr_rel = split[i] + "/" + id + "_hr.cube";
    const std::string lr_rel = split[i] + "/" + id + "_lr.cube";
    fs::create_directories(paths.data() / split[i]);
    save_cube(pair.hr, paths.data() / hr_rel);
    save_cube(pair.lr, paths.data() / lr_rel);
    long patches = 0;
    if (split[i] == "train") patches = static_cast<long>(extract_patches(pair, spec).size());
    total_patches += patches;
    patch_counts.push_back(patches);
    images.push_back({{"id", id},
                      {"split", split[i]},
                      {"hr", hr_rel},
                      {"lr", lr_rel},
                      {"source", sources[i]},
                      {"height", pair.hr.height()},
                      {"width", pair.hr.width()},
                      {"bands", bands},
                      {"patches", patches}});
  }
  const json index = {{"scale", cfg.scale},
                      {"bands", bands},
                      {"images", images},
                      {"patches", {{"size", spec.patch_size}, {"stride", spec.stride}, {"augment", spec.augment},
                                   {"total", total_patches}}}};
  write_text(paths.dataset_index(), index.dump(2) + "\n");
  return write_manifest(cfg, "prepare", {{"dataset", index}, {"timing", {{"seconds", seconds_since(t0)}}}});
}

// ---------------------------------------------------------------- stage 1

json cmd_train_stage1(const PipelineConfig& cfg) {
  const auto t0 = Clock::now();
  const std::string& variant = cfg.variant;
  require_gae_variant(variant, "stage 1");
  const RunPaths paths = run_paths(cfg);
  const Dataset ds = load_dataset(paths);

  std::vector<Cube> patches;
  PatchSpec spec{cfg.data.patch_size, cfg.data.patch_stride, cfg.data.augment};
  for (const auto* im : ds.split("train")) {
    const ImagePair pair{load_cube(im->hr), load_cube(im->lr), ds.scale};
    for (auto& p : extract_patches(pair, spec)) patches.push_back(std::move(p.hr));
  }
  if (patches.empty()) throw ConfigError("stage 1 has no training patches");

  gae::GroupAutoencoder model(variant_gae(cfg, variant), variant_grouping(cfg, variant, ds.bands), ds.bands,
                              cfg.seed);
  const auto phi = gae::make_extractor(cfg.perceptual, cfg.vgg_weights, cfg.vgg_cut);
  nn::AdamParams hp{cfg.stage1.lr, cfg.stage1.beta1, cfg.stage1.beta2};
  nn::Adam opt(model.parameters(), hp);

  std::int64_t start = 0;
  const fs::path ckpt_path = paths.gae_checkpoint(variant);
  if (cfg.stage1.resume && fs::exists(ckpt_path)) {
    const auto ckpt = nn::Checkpoint::load(ckpt_path);
    model.load(ckpt);
    nn::restore_optimizer(ckpt, opt, "adam/");
    start = ckpt.manifest.at("step").get<std::int64_t>();
    log_line("stage1[" + variant + "]: resuming at step " + std::to_string(start));
  }

  gae::TrainOptions opts;
  opts.steps = cfg.stage1.steps;
  opts.batch_size = cfg.stage1.batch_size;
  opts.adam = hp;
  opts.lr_final = cfg.stage1.lr_final;
  opts.seed = cfg.seed;

  fs::create_directories(paths.logs());
  std::ofstream curve(paths.logs() / ("stage1-" + variant + ".csv"), start > 0 ? std::ios::app : std::ios::trunc);
  if (start == 0) curve << "step,total,l1,sam,gradient,perceptual\n";
  const auto report = gae::train_gae(
      model, opt, patches, cfg.loss, *phi, opts, start, [&](std::int64_t step, const gae::LossBreakdown& l) {
        curve << step << "," << l.total << "," << l.l1 << "," << l.sam << "," << l.gradient << "," << l.perceptual
              << "\n";
        if (cfg.stage1.log_every > 0 && step % cfg.stage1.log_every == 0) {
          log_line("stage1[" + variant + "] step " + std::to_string(step) + " loss " + std::to_string(l.total));
        }
      });

  nn::Checkpoint ckpt;
  model.save(ckpt);
  nn::store_optimizer(ckpt, opt, "adam/");
  ckpt.manifest["step"] = std::max<std::int64_t>(start, cfg.stage1.steps);
  ckpt.manifest["variant"] = variant;
  ckpt.manifest["config_hash"] = config_hash(cfg);
  fs::create_directories(paths.checkpoints());
  ckpt.save(ckpt_path);
  const std::string id = nn::parameter_hash(model.parameters());

  // Reconstruction quality on whole held-out images (training images when there is no test split).
  auto held_out = ds.split("test");
  const std::string recon_split = held_out.empty() ? "train" : "test";
  if (held_out.empty()) held_out = ds.split("train");
  json recon = json::array();
  for (const auto* im : held_out) {
    const Cube hr = load_cube(im->hr);
    const Cube re = model.decode(model.encode(hr));
    recon.push_back({{"id", im->id}, {"metrics", report_json(metrics::evaluate(hr, re, ds.scale))}});
  }

  return write_manifest(cfg, "train-stage1-" + variant,
                        {{"variant", variant},
                         {"checkpoint", {{"path", ckpt_path.string()}, {"id", id}}},
                         {"steps", {{"start", start}, {"end", std::max<std::int64_t>(start, cfg.stage1.steps)}}},
                         {"patches", patches.size()},
                         {"final_loss", report.loss_curve.empty() ? 0.0 : report.loss_curve.back()},
                         {"reconstruction", {{"split", recon_split}, {"images", recon}}},
                         {"timing", {{"seconds", seconds_since(t0)}}}});
}

// ---------------------------------------------------------------- stage 2

namespace {

std::unique_ptr<gae::GroupAutoencoder> load_gae(const PipelineConfig& cfg, const std::string& variant, int bands) {
  const fs::path path = run_paths(cfg).gae_checkpoint(variant);
  if (!fs::exists(path)) throw ConfigError("no stage-1 checkpoint at " + path.string() + " (run train-stage1)");
  auto model = std::make_unique<gae::GroupAutoencoder>(variant_gae(cfg, variant), variant_grouping(cfg, variant, bands),
                                                       bands, cfg.seed);
  model->load(nn::Checkpoint::load(path));
  return model;
}

// Stage-2 crop: clipped to the latent size and rounded down to the denoiser's multiple.
int effective_crop(int requested, int h, int w, int multiple) {
  if (requested <= 0 || requested >= std::min(h, w)) return 0;
  const int c = requested / multiple * multiple;
  return c < multiple ? multiple : c;
}

}  // namespace

json cmd_train_stage2(const PipelineConfig& cfg) {
  const auto t0 = Clock::now();
  const std::string& variant = cfg.variant;
  const RunPaths paths = run_paths(cfg);
  const Dataset ds = load_dataset(paths);

  std::unique_ptr<gae::GroupAutoencoder> gae_model;
  std::unique_ptr<LatentCodec> codec;
  LatentStandardizer standardizer;
  std::string gae_hash_before;
  std::vector<diffusion::LatentPair> pairs;
  const auto train = ds.split("train");
  if (train.empty()) throw ConfigError("stage 2 has no training images");

  if (variant_uses_gae(variant)) {
    gae_model = load_gae(cfg, variant, ds.bands);
    gae_hash_before = nn::parameter_hash(gae_model->parameters());
    GaeCodec raw(*gae_model, {});
    std::vector<std::vector<nn::Tensor>> hr_lat, lr_lat;
    std::vector<nn::Tensor> all_hr;
    for (const auto* im : train) {
      hr_lat.push_back(raw.encode_raw(load_cube(im->hr)));
      lr_lat.push_back(raw.encode_raw(upsample_bicubic(load_cube(im->lr), ds.scale)));
      all_hr.insert(all_hr.end(), hr_lat.back().begin(), hr_lat.back().end());
    }
    standardizer = LatentStandardizer::fit(all_hr);
    for (std::size_t i = 0; i < train.size(); ++i)
      for (std::size_t g = 0; g < hr_lat[i].size(); ++g)
        pairs.push_back({standardizer.forward(lr_lat[i][g]), standardizer.forward(hr_lat[i][g])});
    codec = std::make_unique<GaeCodec>(*gae_model, standardizer);
  } else {
    if (variant == "diff-pb") {
      codec = std::make_unique<PerBandCodec>();
    } else {
      codec = std::make_unique<FullBandCodec>(ds.bands);
    }
    for (const auto* im : train) {
      const auto hr = codec->encode(load_cube(im->hr));
      const auto lr = codec->encode(upsample_bicubic(load_cube(im->lr), ds.scale));
      for (std::size_t g = 0; g < hr.size(); ++g) pairs.push_back({lr[g], hr[g]});
    }
  }

  diffusion::UNetDenoiser denoiser(cfg.diffusion, codec->latent_channels(), cfg.seed);
  const auto sched = diffusion::build_schedule(cfg.diffusion);
  nn::AdamParams hp{cfg.stage2.lr, cfg.stage2.beta1, cfg.stage2.beta2};
  nn::Adam opt(denoiser.parameters(), hp);

  int start = 0;
  const fs::path ckpt_path = paths.diffusion_checkpoint(variant);
  if (cfg.stage2.resume && fs::exists(ckpt_path)) {
    const auto ckpt = nn::Checkpoint::load(ckpt_path);
    denoiser.load(ckpt);
    nn::restore_optimizer(ckpt, opt, "adam/");
    start = ckpt.manifest.at("step").get<int>();
  }

  diffusion::DiffusionTrainOptions opts;
  opts.steps = cfg.stage2.steps;
  opts.batch_size = cfg.stage2.batch_size;
  opts.lr = cfg.stage2.lr;
  opts.lr_final = cfg.stage2.lr_final;
  opts.seed = cfg.seed;
  opts.crop = effective_crop(cfg.stage2.crop, pairs.front().hr.h(), pairs.front().hr.w(), denoiser.spatial_multiple());

  fs::create_directories(paths.logs());
  std::ofstream curve(paths.logs() / ("stage2-" + variant + ".csv"), start > 0 ? std::ios::app : std::ios::trunc);
  if (start == 0) curve << "step,loss\n";
  const auto report = diffusion::train_diffusion(denoiser, opt, pairs, sched, opts, start, [&](int step, double loss) {
    curve << step << "," << loss << "\n";
    if (cfg.stage2.log_every > 0 && step % cfg.stage2.log_every == 0) {
      log_line("stage2[" + variant + "] step " + std::to_string(step) + " loss " + std::to_string(loss));
    }
  });

  std::string gae_hash_after;
  if (gae_model) {
    gae_hash_after = nn::parameter_hash(gae_model->parameters());
    if (gae_hash_after != gae_hash_before) throw Error("stage 2 modified the frozen GAE weights");
  }

  nn::Checkpoint ckpt;
  denoiser.save(ckpt);
  nn::store_optimizer(ckpt, opt, "adam/");
  ckpt.manifest["diffusion"] = diffusion_signature(cfg.diffusion);
  ckpt.manifest["latent_shift"] = standardizer.shift;
  ckpt.manifest["latent_scale"] = standardizer.scale;
  ckpt.manifest["gae_id"] = gae_hash_before;
  ckpt.manifest["variant"] = variant;
  ckpt.manifest["bands"] = ds.bands;
  ckpt.manifest["step"] = std::max(start, cfg.stage2.steps);
  ckpt.manifest["config_hash"] = config_hash(cfg);
  fs::create_directories(paths.checkpoints());
  ckpt.save(ckpt_path);

  return write_manifest(cfg, "train-stage2-" + variant,
                        {{"variant", variant},
                         {"pairs", pairs.size()},
                         {"images", train.size()},
                         {"elements_per_image", codec->elements(ds.bands)},
                         {"crop", opts.crop},
                         {"latent_standardizer", {{"shift", standardizer.shift}, {"scale", standardizer.scale}}},
                         {"gae_id", {{"before", gae_hash_before}, {"after", gae_hash_after}}},
                         {"checkpoint", {{"path", ckpt_path.string()}, {"id", nn::parameter_hash(denoiser.parameters())}}},
                         {"final_loss", report.loss_curve.empty() ? 0.0 : report.loss_curve.back()},
                         {"timing", {{"seconds", seconds_since(t0)}}}});
}

// ---------------------------------------------------------------- models

Models load_models(const PipelineConfig& cfg, const std::string& variant, int bands) {
  Models m;
  m.variant = variant;
  const fs::path dpath = run_paths(cfg).diffusion_checkpoint(variant);
  if (!fs::exists(dpath)) throw ConfigError("no stage-2 checkpoint at " + dpath.string() + " (run train-stage2)");
  const auto dckpt = nn::Checkpoint::load(dpath);
  if (!dckpt.manifest.contains("diffusion") || dckpt.manifest["diffusion"] != diffusion_signature(cfg.diffusion)) {
    throw ConfigError("diffusion checkpoint " + dckpt.manifest.value("diffusion", json()).dump() +
                      " does not match config " + diffusion_signature(cfg.diffusion).dump());
  }
  if (dckpt.manifest.value("bands", -1) != bands) {
    throw ConfigError("diffusion checkpoint was trained for " + std::to_string(dckpt.manifest.value("bands", -1)) +
                      " bands, input has " + std::to_string(bands));
  }
  if (variant_uses_gae(variant)) {
    m.gae = load_gae(cfg, variant, bands);
    m.gae_id = nn::parameter_hash(m.gae->parameters());
    if (dckpt.manifest.value("gae_id", std::string()) != m.gae_id) {
      throw ConfigError("diffusion checkpoint was trained on a different GAE (retrain stage 2)");
    }
    const LatentStandardizer st{dckpt.manifest.at("latent_shift").get<double>(),
                                dckpt.manifest.at("latent_scale").get<double>()};
    m.codec = std::make_unique<GaeCodec>(*m.gae, st);
  } else if (variant == "diff-pb") {
    m.codec = std::make_unique<PerBandCodec>();
  } else {
    m.codec = std::make_unique<FullBandCodec>(bands);
  }
  m.denoiser = std::make_unique<diffusion::UNetDenoiser>(cfg.diffusion, m.codec->latent_channels(), cfg.seed);
  m.denoiser->load(dckpt);
  m.diffusion_id = nn::parameter_hash(m.denoiser->parameters());
  m.schedule = diffusion::build_schedule(cfg.diffusion);
  return m;
}

Models untrained_models(const PipelineConfig& cfg, const std::string& variant, int bands) {
  Models m;
  m.variant = variant;
  if (variant_uses_gae(variant)) {
    m.gae = std::make_unique<gae::GroupAutoencoder>(variant_gae(cfg, variant), variant_grouping(cfg, variant, bands),
                                                    bands, cfg.seed);
    m.gae_id = nn::parameter_hash(m.gae->parameters());
    m.codec = std::make_unique<GaeCodec>(*m.gae, LatentStandardizer{});
  } else if (variant == "diff-pb") {
    m.codec = std::make_unique<PerBandCodec>();
  } else {
    m.codec = std::make_unique<FullBandCodec>(bands);
  }
  m.denoiser = std::make_unique<diffusion::UNetDenoiser>(cfg.diffusion, m.codec->latent_channels(), cfg.seed);
  m.diffusion_id = nn::parameter_hash(m.denoiser->parameters());
  m.schedule = diffusion::build_schedule(cfg.diffusion);
  return m;
}

// ---------------------------------------------------------------- infer

json cmd_infer(const PipelineConfig& cfg, const std::optional<fs::path>& input, const std::optional<fs::path>& output) {
  const RunPaths paths = run_paths(cfg);
  const std::string& variant = cfg.variant;

  struct Job {
    std::string id;
    Cube lr;
    fs::path out;
  };
  std::vector<Job> jobs;
  if (input) {
    Cube lr = load_cube(*input);
    fs::path out = output ? *output : paths.infer(variant) / (input->stem().string() + "_sr.cube");
    jobs.push_back({input->stem().string(), std::move(lr), out});
  } else {
    const Dataset ds = load_dataset(paths);
    if (ds.scale != cfg.scale) throw ConfigError("dataset was prepared at a different scale");
    for (const auto* im : eval_images(cfg, ds)) jobs.push_back({im->id, load_cube(im->lr), paths.infer(variant) / (im->id + "_sr.cube")});
    if (jobs.empty()) throw ConfigError("no images in the evaluation split");
  }

  const int bands = jobs.front().lr.bands();
  const Models models = load_models(cfg, variant, bands);
  json images = json::array();
  json timing = json::object();
  for (auto& job : jobs) {
    if (job.lr.bands() != bands) throw ShapeError("all inputs must have the same number of bands");
    const int m = spatial_multiple(cfg);
    if ((job.lr.height() * cfg.scale) % m != 0 || (job.lr.width() * cfg.scale) % m != 0) {
      throw ShapeError("LR size " + shape_string(job.lr) + " times scale is not a multiple of " + std::to_string(m));
    }
    models.denoiser->reset_calls();
    const auto t0 = Clock::now();
    const Cube sr = super_resolve(*models.codec, *models.denoiser, models.schedule, job.lr, cfg.scale,
                                  image_seed(cfg.seed, job.id));
    const double secs = seconds_since(t0);
    const std::uint64_t calls = models.denoiser->calls();
    const std::uint64_t expected =
        static_cast<std::uint64_t>(models.schedule.steps()) * models.codec->elements(bands);
    if (calls != expected) {
      throw Error("denoiser call count " + std::to_string(calls) + " differs from T x elements = " +
                  std::to_string(expected));
    }
    fs::create_directories(job.out.parent_path());
    save_cube(sr, job.out);
    images.push_back({{"id", job.id},
                      {"output", job.out.string()},
                      {"shape", shape_string(sr)},
                      {"elements", models.codec->elements(bands)},
                      {"denoiser_calls", calls},
                      {"expected_calls", expected}});
    timing[job.id] = secs;
    log_line("infer[" + variant + "] " + job.id + ": " + std::to_string(calls) + " denoiser calls, " +
             std::to_string(secs) + " s");
  }
  return write_manifest(cfg, "infer-" + variant,
                        {{"variant", variant},
                         {"T", models.schedule.steps()},
                         {"checkpoints", {{"gae", models.gae_id}, {"diffusion", models.diffusion_id}}},
                         {"images", images},
                         {"timing", timing}});
}

// ---------------------------------------------------------------- evaluate

namespace {

void write_renderings(const Cube& ref, const Cube& cand, const Cube* baseline, const fs::path& dir,
                      const std::string& stem) {
  fs::create_directories(dir);
  const auto rgb = display_bands(ref.bands());
  write_png(false_color(ref, rgb), dir / (stem + "_ref.png"));
  write_png(false_color(cand, rgb), dir / (stem + "_cand.png"));
  const auto err = metrics::error_map(ref, cand, rgb);
  float vmax = *std::max_element(err.values.begin(), err.values.end());
  metrics::ErrorMap err_base;
  if (baseline) {
    write_png(false_color(*baseline, rgb), dir / (stem + "_bicubic.png"));
    err_base = metrics::error_map(ref, *baseline, rgb);
    vmax = std::max(vmax, *std::max_element(err_base.values.begin(), err_base.values.end()));
  }
  write_png(metrics::render_error_map(err, vmax), dir / (stem + "_error.png"));
  if (baseline) write_png(metrics::render_error_map(err_base, vmax), dir / (stem + "_error_bicubic.png"));

  // Spectral curve at the centre pixel as plain columns.
  const int x = ref.width() / 2;
  const int y = ref.height() / 2;
  const auto r = metrics::spectral_curve(ref, x, y);
  const auto c = metrics::spectral_curve(cand, x, y);
  std::vector<float> b;
  if (baseline) b = metrics::spectral_curve(*baseline, x, y);
  std::string text = baseline ? "band,ref,cand,bicubic,cand_diff,bicubic_diff\n" : "band,ref,cand,cand_diff\n";
  for (std::size_t k = 0; k < r.size(); ++k) {
    text += std::to_string(k) + "," + metrics::format_metric(r[k]) + "," + metrics::format_metric(c[k]);
    if (baseline) text += "," + metrics::format_metric(b[k]);
    text += "," + metrics::format_metric(c[k] - r[k]);
    if (baseline) text += "," + metrics::format_metric(b[k] - r[k]);
    text += "\n";
  }
  write_text(dir / (stem + "_curve.csv"), text);
}

}  // namespace

metrics::MetricsReport evaluate_files(const fs::path& ref_path, const fs::path& cand_path, int scale,
                                      const fs::path& out_dir, const std::string& format) {
  const CubeFormat f = parse_cube_format(format);
  const Cube ref = load_cube(ref_path, f);
  const Cube cand = load_cube(cand_path, f);
  const auto report = metrics::evaluate(ref, cand, scale);
  write_text(out_dir / "metrics.txt", metrics::to_key_value(report));
  write_text(out_dir / "metrics.csv", metrics::csv_header() + "\n" + metrics::csv_row(cand_path.stem().string(), report) + "\n");
  write_renderings(ref, cand, nullptr, out_dir, cand_path.stem().string());
  return report;
}

json cmd_evaluate(const PipelineConfig& cfg) {
  const RunPaths paths = run_paths(cfg);
  const std::string& variant = cfg.variant;
  const Dataset ds = load_dataset(paths);
  const fs::path dir = paths.eval(variant);
  std::string csv = metrics::csv_header() + "\n";
  std::string base_csv = metrics::csv_header() + "\n";
  json images = json::array();
  std::vector<metrics::MetricsReport> sr_reports, base_reports;
  for (const auto* im : eval_images(cfg, ds)) {
    const fs::path sr_path = paths.infer(variant) / (im->id + "_sr.cube");
    if (!fs::exists(sr_path)) throw IoError("missing " + sr_path.string() + " (run infer first)");
    const Cube hr = load_cube(im->hr);
    const Cube sr = load_cube(sr_path);
    const Cube bic = upsample_bicubic(load_cube(im->lr), ds.scale);
    const auto r_sr = metrics::evaluate(hr, sr, ds.scale);
    const auto r_bic = metrics::evaluate(hr, bic, ds.scale);
    csv += metrics::csv_row(im->id, r_sr) + "\n";
    base_csv += metrics::csv_row(im->id, r_bic) + "\n";
    write_text(dir / (im->id + "_metrics.txt"), metrics::to_key_value(r_sr));
    write_renderings(hr, sr, &bic, dir, im->id);
    log_line("evaluate[" + variant + "] " + im->id + ": " + metrics::to_human(r_sr));
    log_line("evaluate[bicubic] " + im->id + ": " + metrics::to_human(r_bic));
    images.push_back({{"id", im->id}, {"sr", report_json(r_sr)}, {"bicubic", report_json(r_bic)}});
    sr_reports.push_back(r_sr);
    base_reports.push_back(r_bic);
  }
  write_text(dir / "metrics.csv", csv);
  write_text(dir / "bicubic.csv", base_csv);
  return write_manifest(cfg, "evaluate-" + variant,
                        {{"variant", variant},
                         {"images", images},
                         {"mean", {{"sr", report_json(mean_report(sr_reports))},
                                   {"bicubic", report_json(mean_report(base_reports))}}}});
}

// ---------------------------------------------------------------- ablate

json cmd_ablate(const PipelineConfig& cfg) {
  const RunPaths paths = run_paths(cfg);
  if (!fs::exists(paths.dataset_index())) cmd_prepare(cfg);
  const Dataset ds = load_dataset(paths);
  std::string csv = "variant," + metrics::csv_header().substr(std::string("label,").size()) + ",denoiser_calls\n";
  json rows = json::array();
  json timing = json::object();
  metrics::MetricsReport bicubic;
  for (const auto& variant : cfg.ablate_variants) {
    const auto t0 = Clock::now();
    const PipelineConfig vc = with_variant(cfg, variant);
    if (variant_uses_gae(variant)) cmd_train_stage1(vc);
    cmd_train_stage2(vc);
    const json inf = cmd_infer(vc);
    std::uint64_t calls = 0;
    for (const auto& im : inf["images"]) calls += im["denoiser_calls"].get<std::uint64_t>();
    cmd_evaluate(vc);
    // Mean over the evaluation images, recomputed from the stored cubes.
    std::vector<metrics::MetricsReport> reports, base;
    for (const auto* im : eval_images(vc, ds)) {
      const Cube hr = load_cube(im->hr);
      reports.push_back(metrics::evaluate(hr, load_cube(paths.infer(variant) / (im->id + "_sr.cube")), ds.scale));
      base.push_back(metrics::evaluate(hr, upsample_bicubic(load_cube(im->lr), ds.scale), ds.scale));
    }
    const auto mean = mean_report(reports);
    bicubic = mean_report(base);
    const std::string row = metrics::csv_row(variant, mean);
    csv += row + "," + std::to_string(calls) + "\n";
    rows.push_back({{"variant", variant}, {"metrics", report_json(mean)}, {"denoiser_calls", calls}});
    timing[variant] = seconds_since(t0);
    log_line("ablate[" + variant + "]: " + metrics::to_human(mean));
  }
  csv += metrics::csv_row("bicubic", bicubic) + ",0\n";
  write_text(paths.root / "ablation.csv", csv);
  return write_manifest(cfg, "ablate", {{"rows", rows}, {"bicubic", report_json(bicubic)}, {"timing", timing}});
}

// ---------------------------------------------------------------- benchmark

json cmd_benchmark_time(const PipelineConfig& cfg) {
  const RunPaths paths = run_paths(cfg);
  int bands = cfg.data.synth_bands;
  if (fs::exists(paths.dataset_index())) bands = load_dataset(paths).bands;

  const std::vector<std::pair<std::string, std::string>> models{
      {"ours", "full"}, {"diff-pb", "diff-pb"}, {"diff-fb", "diff-fb"}};
  std::string csv = "size,model,seconds,denoiser_calls,expected_calls,T,elements,weights\n";
  json rows = json::array();
  json timing = json::object();
  const int m = spatial_multiple(cfg);
  for (int size : cfg.benchmark_sizes) {
    if (size % m != 0) throw ConfigError("benchmark size " + std::to_string(size) + " is not a multiple of " +
                                         std::to_string(m));
    const Cube hr = synth_cube(size, size, bands, splitmix64(cfg.seed ^ fnv1a64("benchmark")) + size);
    const Cube lr = degrade(hr, cfg.scale).lr;
    for (const auto& [label, variant] : models) {
      Models mod;
      std::string weights = "checkpoint";
      try {
        mod = load_models(cfg, variant, bands);
      } catch (const ConfigError&) {
        mod = untrained_models(cfg, variant, bands);
        weights = "untrained";
      }
      mod.denoiser->reset_calls();
      const auto t0 = Clock::now();
      [[maybe_unused]] const Cube sr = super_resolve(*mod.codec, *mod.denoiser, mod.schedule, lr, cfg.scale, cfg.seed);
      const double secs = seconds_since(t0);
      const std::uint64_t calls = mod.denoiser->calls();
      const std::uint64_t expected = static_cast<std::uint64_t>(mod.schedule.steps()) * mod.codec->elements(bands);
      csv += std::to_string(size) + "," + label + "," + metrics::format_metric(secs) + "," + std::to_string(calls) +
             "," + std::to_string(expected) + "," + std::to_string(mod.schedule.steps()) + "," +
             std::to_string(mod.codec->elements(bands)) + "," + weights + "\n";
      rows.push_back({{"size", size},
                      {"model", label},
                      {"denoiser_calls", calls},
                      {"expected_calls", expected},
                      {"elements", mod.codec->elements(bands)},
                      {"weights", weights}});
      timing[std::to_string(size) + "/" + label] = secs;
      log_line("benchmark " + std::to_string(size) + "x" + std::to_string(size) + " " + label + ": " +
               std::to_string(secs) + " s, " + std::to_string(calls) + " calls");
    }
  }
  write_text(paths.root / "benchmark_time.csv", csv);
  return write_manifest(cfg, "benchmark-time", {{"bands", bands}, {"rows", rows}, {"timing", timing}});
}

}  // namespace hsisr::pipeline
