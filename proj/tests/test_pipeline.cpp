#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sys/wait.h>

#include "hsisr/core/cube_io.hpp"
#include "hsisr/core/error.hpp"
#include "hsisr/core/resample.hpp"
#include "hsisr/diffusion/sampler.hpp"
#include "hsisr/pipeline/commands.hpp"
#include "hsisr/pipeline/config.hpp"
#include "hsisr/pipeline/super_resolve.hpp"
#include "test_util.hpp"

using namespace hsisr;
using namespace hsisr::pipeline;
using nlohmann::json;

namespace {

// 16x16x10 synthetic cubes, three images with one held out, tiny networks.
std::vector<std::string> tiny_overrides(const std::filesystem::path& out) {
  return {"output_dir=" + out.string(),
          "seed=3",
          "data.synthetic.height=16",
          "data.synthetic.width=16",
          "data.synthetic.bands=10",
          "data.synthetic.count=3",
          "data.test_fraction=0.34",
          "data.patch_size=8",
          "data.patch_stride=4",
          "grouping.n_subs=4",
          "grouping.n_ovls=1",
          "gae.latent_channels=3",
          "gae.enc_widths=[8]",
          "gae.dec_widths=[8,8]",
          "gae.global_widths=[8]",
          "stage1.steps=4",
          "stage1.batch_size=2",
          "stage1.lr=1e-3",
          "stage1.log_every=0",
          "diffusion.T=5",
          "diffusion.beta_max=0.5",
          "diffusion.time_dim=8",
          "diffusion.widths=[8,16]",
          "stage2.steps=3",
          "stage2.batch_size=2",
          "stage2.lr=1e-3",
          "stage2.crop=4",
          "stage2.log_every=0",
          "benchmark.sizes=[16]"};
}

PipelineConfig tiny_config(const std::filesystem::path& out, std::vector<std::string> extra = {}) {
  auto o = tiny_overrides(out);
  o.insert(o.end(), extra.begin(), extra.end());
  return load_config({}, o);
}

void train_variant(const PipelineConfig& cfg) {
  if (variant_uses_gae(cfg.variant)) cmd_train_stage1(cfg);
  cmd_train_stage2(cfg);
}

json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HSISR_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config merging, overrides and hashing") {
  test::TempDir dir("cfg");
  const PipelineConfig def = load_config({});
  CHECK(def.scale == 2);
  CHECK(def.grouping.n_subs == 16);
  CHECK(def.stage1.lr == doctest::Approx(1e-4));
  CHECK(def.stage2.lr == doctest::Approx(1e-5));
  CHECK(def.stage2.lr <= def.stage1.lr);
  CHECK(def.loss.lambda1 == doctest::Approx(0.3));
  CHECK(def.ablate_variants == variant_names());
  CHECK(variant_names() == std::vector<std::string>{"full", "no-gd", "no-gs", "diff-pb", "diff-fb"});

  {
    std::ofstream f(dir / "c.json");
    f << R"({"scale": 3, "grouping": {"n_subs": 8}, "output_dir": "x"})";
  }
  const PipelineConfig file = load_config(dir / "c.json", {"grouping.n_ovls=2", "variant=no-gs"});
  CHECK(file.scale == 3);
  CHECK(file.grouping.n_subs == 8);
  CHECK(file.grouping.n_ovls == 2);
  CHECK(file.variant == "no-gs");
  CHECK(file.output_dir == "x");

  CHECK(config_hash(def) == config_hash(load_config({})));
  CHECK(config_hash(def) != config_hash(load_config({}, {"seed=1"})));
  CHECK(config_hash(def).size() == 16);

  CHECK_THROWS_AS(load_config({}, {"grouping.n_sub=3"}), ConfigError);
  CHECK_THROWS_AS(load_config({}, {"nonsense=1"}), ConfigError);
  CHECK_THROWS_AS(load_config({}, {"scale"}), ConfigError);
  CHECK_THROWS_AS(load_config({}, {"scale=7"}), ConfigError);
  CHECK_THROWS_AS(load_config({}, {"scale=\"two\""}), ConfigError);
  CHECK_THROWS_AS(load_config({}, {"variant=other"}), ConfigError);
  CHECK_THROWS_AS(load_config({}, {"grouping=3"}), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
  {
    std::ofstream f(dir / "bad.json");
    f << R"({"stage1": {"stepz": 3}})";
  }
  CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);

  // Variant ablations.
  CHECK(variant_grouping(def, "no-gs", 30).n_subs == 30);
  CHECK(variant_grouping(def, "full", 30).n_subs == 16);
  CHECK_FALSE(variant_gae(def, "no-gd").global_decoder);
  CHECK(variant_gae(def, "full").global_decoder);
  CHECK_FALSE(variant_uses_gae("diff-pb"));
  CHECK(variant_uses_gae("no-gs"));

  ::setenv("HSISR_OUTPUT_ROOT", dir.path().c_str(), 1);
  CHECK(output_root(load_config({}, {"output_dir=rel"})) == dir / "rel");
  CHECK(output_root(load_config({}, {"output_dir=/abs/path"})) == std::filesystem::path("/abs/path"));
  ::unsetenv("HSISR_OUTPUT_ROOT");
}

TEST_CASE("prepare writes a deterministic split with the tiling patch counts") {
  test::TempDir a("prep"), b("prep");
  const json ma = cmd_prepare(tiny_config(a.path()));
  cmd_prepare(tiny_config(b.path()));
  CHECK(read_json(a / "data/dataset.json") == read_json(b / "data/dataset.json"));
  CHECK(ma.contains("config_hash"));

  const Dataset ds = load_dataset(run_paths(tiny_config(a.path())));
  CHECK(ds.bands == 10);
  CHECK(ds.split("train").size() == 2);
  CHECK(ds.split("test").size() == 1);
  for (const auto* im : ds.split("train")) {
    const Cube hr = load_cube(im->hr);
    const Cube lr = load_cube(im->lr);
    CHECK(hr.height() == 16);
    CHECK(hr.bands() == 10);
    CHECK(lr.height() * 2 == hr.height());
    CHECK(lr.width() * 2 == hr.width());
  }
  // ((16 - 8) / 4 + 1)^2 patches per training image.
  const json index = read_json(a / "data/dataset.json");
  CHECK(index["patches"]["total"] == 2 * 9);

  // Another seed reshuffles the split deterministically.
  test::TempDir c("prep");
  cmd_prepare(tiny_config(c.path(), {"seed=11"}));
  cmd_prepare(tiny_config(b.path(), {"seed=11"}));
  CHECK(read_json(c / "data/dataset.json") == read_json(b / "data/dataset.json"));

  // Sizes are cropped to the spatial multiple of all variants.
  test::TempDir d("prep");
  cmd_prepare(tiny_config(d.path(), {"data.synthetic.height=18"}));
  CHECK(load_cube(load_dataset(run_paths(tiny_config(d.path()))).split("train").front()->hr).height() == 16);
}

TEST_CASE("stage 1 needs prepared data and resumes exactly") {
  test::TempDir empty("s1");
  CHECK_THROWS_AS(cmd_train_stage1(tiny_config(empty.path())), IoError);

  test::TempDir a("s1"), b("s1");
  cmd_prepare(tiny_config(a.path()));
  cmd_prepare(tiny_config(b.path()));
  const json full = cmd_train_stage1(tiny_config(a.path()));
  cmd_train_stage1(tiny_config(b.path(), {"stage1.steps=2"}));
  const json resumed = cmd_train_stage1(tiny_config(b.path(), {"stage1.resume=true"}));
  CHECK(resumed["steps"]["start"] == 2);
  CHECK(resumed["final_loss"].get<double>() == doctest::Approx(full["final_loss"].get<double>()).epsilon(1e-6));
  CHECK(resumed["checkpoint"]["id"] == full["checkpoint"]["id"]);
  CHECK(full["reconstruction"]["split"] == "test");
  CHECK(full["reconstruction"]["images"].size() == 1);

  // The loss log of the resumed run continues the first one.
  std::ifstream la(a / "logs/stage1-full.csv"), lb(b / "logs/stage1-full.csv");
  std::string sa((std::istreambuf_iterator<char>(la)), {}), sb((std::istreambuf_iterator<char>(lb)), {});
  CHECK(sa == sb);

  CHECK_THROWS_AS(cmd_train_stage1(tiny_config(a.path(), {"variant=diff-pb"})), ConfigError);
}

TEST_CASE("stage 2 pairs, frozen GAE and checkpoint checks") {
  test::TempDir dir("s2");
  const PipelineConfig cfg = tiny_config(dir.path());
  cmd_prepare(cfg);
  CHECK_THROWS_AS(cmd_train_stage2(cfg), ConfigError);  // no stage-1 checkpoint yet
  cmd_train_stage1(cfg);
  const json m = cmd_train_stage2(cfg);
  // 10 bands, groups of 4 overlapping by 1: starts 0, 3, 6.
  CHECK(m["elements_per_image"] == 3);
  CHECK(m["pairs"] == 2 * 3);
  CHECK(m["gae_id"]["before"] == m["gae_id"]["after"]);
  CHECK(m["crop"] == 4);

  const json pb = cmd_train_stage2(with_variant(cfg, "diff-pb"));
  CHECK(pb["pairs"] == 2 * 10);
  const json fb = cmd_train_stage2(with_variant(cfg, "diff-fb"));
  CHECK(fb["pairs"] == 2);

  // A checkpoint trained for one architecture refuses another configuration.
  CHECK_THROWS_AS(load_models(tiny_config(dir.path(), {"diffusion.widths=[8,8]"}), "full", 10), ConfigError);
  CHECK_THROWS_AS(load_models(tiny_config(dir.path(), {"diffusion.T=6"}), "full", 10), ConfigError);
  CHECK_THROWS_AS(load_models(tiny_config(dir.path(), {"grouping.n_subs=5"}), "full", 10), ConfigError);
  CHECK_THROWS_AS(load_models(cfg, "full", 11), ConfigError);

  // Retraining stage 1 invalidates the stage-2 checkpoint.
  cmd_train_stage1(tiny_config(dir.path(), {"stage1.steps=5"}));
  CHECK_THROWS_AS(load_models(cfg, "full", 10), ConfigError);
}

TEST_CASE("inference follows encode, per-element sampling, decode") {
  test::TempDir dir("inf");
  const PipelineConfig cfg = tiny_config(dir.path());
  cmd_prepare(cfg);
  train_variant(cfg);
  const Models models = load_models(cfg, "full", 10);
  const Cube lr = load_cube(load_dataset(run_paths(cfg)).split("test").front()->lr);

  TracingPredictor tracer(*models.denoiser);
  const Cube sr = super_resolve(*models.codec, tracer, models.schedule, lr, 2, 99);
  CHECK(sr.height() == lr.height() * 2);
  CHECK(sr.bands() == 10);

  // Manual composition with no extra steps.
  const auto z_lr = models.codec->encode(upsample_bicubic(lr, 2));
  REQUIRE(z_lr.size() == 3);
  std::vector<nn::Tensor> z_sr;
  for (std::size_t i = 0; i < z_lr.size(); ++i)
    z_sr.push_back(diffusion::reverse_sample(*models.denoiser, z_lr[i], models.schedule,
                                             element_seed(99, static_cast<int>(i))));
  CHECK(models.codec->decode(z_sr) == sr);

  // Each element sees t = T..1 once, always with its own conditioning latent.
  const auto trace = tracer.trace();
  CHECK(trace.size() == 5 * 3);
  CHECK(tracer.calls() == 15);
  std::map<float, std::vector<int>> by_element;
  for (const auto& c : trace) by_element[c.z_lr_probe].push_back(c.t);
  REQUIRE(by_element.size() == 3);
  for (const auto& [probe, ts] : by_element) CHECK(ts == std::vector<int>{5, 4, 3, 2, 1});
  std::vector<float> probes;
  for (const auto& z : z_lr) probes.push_back(z.values()[0]);
  for (float p : probes) CHECK(by_element.count(p) == 1);
}

TEST_CASE("denoiser calls per variant and bit-identical reruns") {
  test::TempDir dir("acct");
  const PipelineConfig cfg = tiny_config(dir.path());
  cmd_prepare(cfg);
  const std::map<std::string, int> elements{{"full", 3}, {"no-gd", 3}, {"no-gs", 1}, {"diff-pb", 10}, {"diff-fb", 1}};
  for (const auto& [variant, g] : elements) {
    const PipelineConfig vc = with_variant(cfg, variant);
    train_variant(vc);
    const json m = cmd_infer(vc);
    REQUIRE(m["images"].size() == 1);
    CHECK(m["images"][0]["denoiser_calls"] == 5 * g);
    CHECK(m["images"][0]["shape"] == "16x16x10");
  }

  const PipelineConfig full = with_variant(cfg, "full");
  const json first = cmd_infer(full);
  const auto sr_path = std::filesystem::path(first["images"][0]["output"].get<std::string>());
  const Cube a = load_cube(sr_path);
  const json second = cmd_infer(full);
  CHECK(load_cube(sr_path) == a);
  CHECK(same_manifest(first, second));
  CHECK(first["config_hash"] == config_hash(full));
  CHECK(first["checkpoints"]["diffusion"].get<std::string>().size() > 0);

  // Explicit input and output paths.
  const auto lr_path = load_dataset(run_paths(cfg)).split("test").front()->lr;
  const json direct = cmd_infer(full, lr_path, dir / "direct.cube");
  CHECK(load_cube(dir / "direct.cube").same_shape(a));
  CHECK(direct["images"][0]["denoiser_calls"] == 15);

  const json ev = cmd_evaluate(full);
  CHECK(ev["images"].size() == 1);
  std::ifstream csv(run_paths(cfg).eval("full") / "metrics.csv");
  int lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  CHECK(lines == 1 + 1);
  CHECK(std::filesystem::exists(run_paths(cfg).eval("full") / "bicubic.csv"));

  const json bench = cmd_benchmark_time(cfg);
  REQUIRE(bench["rows"].size() == 3);
  CHECK(bench["rows"][0]["denoiser_calls"] == 15);
  CHECK(bench["rows"][1]["denoiser_calls"] == 50);
  CHECK(bench["rows"][2]["denoiser_calls"] == 5);
}

TEST_CASE("evaluate of identical files reports the best values") {
  test::TempDir dir("eval");
  const Cube c = test::random_cube(16, 16, 6, 4);
  save_cube(c, dir / "a.cube");
  const auto r = evaluate_files(dir / "a.cube", dir / "a.cube", 2, dir / "out");
  CHECK(std::isinf(r.mpsnr));
  CHECK(r.ergas == 0.0);
  CHECK(std::filesystem::exists(dir / "out/metrics.csv"));
}

TEST_CASE("command line exit codes") {
  test::TempDir dir("cli");
  CHECK(run_cli("prepare --set scale=7") == 2);
  CHECK(run_cli("prepare --set no.such.key=1") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("train-stage1 --set output_dir=" + (dir / "none").string()) == 1);
  CHECK(run_cli("prepare --set output_dir=" + (dir / "ok").string() +
                " --set data.synthetic.height=16 --set data.synthetic.width=16 --set data.patch_size=16 --set data.patch_stride=8") == 0);
  CHECK(std::filesystem::exists(dir / "ok/manifests/prepare.json"));
  const Cube a = test::random_cube(16, 16, 4, 1);
  save_cube(a, dir / "a.cube");
  CHECK(run_cli("evaluate --ref " + (dir / "a.cube").string() + " --cand " + (dir / "a.cube").string() +
                " --out " + (dir / "ev").string()) == 0);
}
