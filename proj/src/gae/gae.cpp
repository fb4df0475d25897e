#include "hsisr/gae/gae.hpp"

#include <algorithm>

#include "hsisr/core/error.hpp"
#include "hsisr/core/rng.hpp"

namespace hsisr::gae {

void GaeConfig::validate() const {
  if (latent_channels < 1) throw ConfigError("gae.latent_channels must be >= 1");
  if (latent_downscale < 1 || (latent_downscale & (latent_downscale - 1)) != 0) {
    throw ConfigError("gae.latent_downscale must be a power of two");
  }
  if (enc_widths.empty() || dec_widths.empty()) throw ConfigError("gae.enc_widths and gae.dec_widths must be non-empty");
  if (global_decoder && global_widths.empty()) throw ConfigError("gae.global_widths must be non-empty");
  for (const auto* list : {&enc_widths, &dec_widths, &global_widths})
    for (int w : *list)
      if (w < 1) throw ConfigError("gae layer widths must be positive");
  nn::parse_activation(activation);
}

int GaeConfig::levels() const {
  int levels = 0;
  for (int d = latent_downscale; d > 1; d /= 2) ++levels;
  return levels;
}

GroupAutoencoder::GroupAutoencoder(const GaeConfig& cfg, const GroupingConfig& grouping, int bands,
                                   std::uint64_t seed)
    : cfg_(cfg), grouping_(grouping), bands_(bands) {
  cfg_.validate();
  plan_ = plan_groups(bands, grouping_);
  coverage_ = coverage(plan_, bands);
  const auto act = nn::parse_activation(cfg_.activation);
  Rng rng = seed_stream(seed, "gae.init");
  const int n_subs = grouping_.n_subs;

  auto enc_width = [&](int level) { return cfg_.enc_widths[std::min<std::size_t>(level, cfg_.enc_widths.size() - 1)]; };
  encoder_.add_conv(nn::Conv2d("enc.in", n_subs, enc_width(0), 3, 1, rng));
  encoder_.add_activation(act);
  for (int l = 0; l < cfg_.levels(); ++l) {
    encoder_.add_conv(nn::Conv2d("enc.down" + std::to_string(l), enc_width(l), enc_width(l + 1), 3, 2, rng));
    encoder_.add_activation(act);
  }
  encoder_.add_conv(nn::Conv2d("enc.out", enc_width(cfg_.levels()), cfg_.latent_channels, 3, 1, rng));

  const int d0 = cfg_.dec_widths.front();
  local_decoder_.add_conv(nn::Conv2d("dec.in", cfg_.latent_channels, d0, 3, 1, rng));
  local_decoder_.add_activation(act);
  for (int l = 0; l < cfg_.levels(); ++l) {
    local_decoder_.add_upsample();
    local_decoder_.add_conv(nn::Conv2d("dec.up" + std::to_string(l), d0, d0, 3, 1, rng));
    local_decoder_.add_activation(act);
  }
  for (std::size_t k = 1; k < cfg_.dec_widths.size(); ++k) {
    local_decoder_.add_conv(
        nn::Conv2d("dec.conv" + std::to_string(k), cfg_.dec_widths[k - 1], cfg_.dec_widths[k], 3, 1, rng));
    local_decoder_.add_activation(act);
  }
  local_decoder_.add_conv(nn::Conv2d("dec.out", cfg_.dec_widths.back(), n_subs, 3, 1, rng));

  if (cfg_.global_decoder) {
    int in = bands;
    for (std::size_t k = 0; k < cfg_.global_widths.size(); ++k) {
      global_decoder_.add_conv(nn::Conv2d("global.conv" + std::to_string(k), in, cfg_.global_widths[k], 3, 1, rng));
      global_decoder_.add_activation(act);
      in = cfg_.global_widths[k];
    }
    // Zero-initialised last layer: the global part starts as the identity.
    global_decoder_.add_conv(nn::Conv2d("global.out", in, bands, 3, 1, rng, nn::InitMode::Zero));
  }
}

void GroupAutoencoder::require_input(const nn::Tensor& x) const {
  if (x.c() != bands_) {
    throw ShapeError("GAE expects " + std::to_string(bands_) + " bands, got " + nn::shape_string(x));
  }
  if (x.h() % cfg_.latent_downscale != 0 || x.w() % cfg_.latent_downscale != 0) {
    throw ShapeError("spatial size " + std::to_string(x.h()) + "x" + std::to_string(x.w()) +
                     " not divisible by latent_downscale " + std::to_string(cfg_.latent_downscale));
  }
}

nn::Tensor GroupAutoencoder::split_groups(const nn::Tensor& x) const {
  const int g_count = group_count();
  const int n_subs = grouping_.n_subs;
  nn::Tensor out(x.n() * g_count, n_subs, x.h(), x.w());
  for (int i = 0; i < x.n(); ++i)
    for (int g = 0; g < g_count; ++g)
      for (int b = 0; b < n_subs; ++b) {
        const auto src = x.plane(i, plan_[g].start + b);
        std::copy(src.begin(), src.end(), out.plane(i * g_count + g, b).begin());
      }
  return out;
}

nn::Tensor GroupAutoencoder::split_groups_backward(const nn::Tensor& dgroups, int batch) const {
  const int g_count = group_count();
  nn::Tensor dx(batch, bands_, dgroups.h(), dgroups.w());
  for (int i = 0; i < batch; ++i)
    for (int g = 0; g < g_count; ++g)
      for (int b = 0; b < grouping_.n_subs; ++b) {
        const auto src = dgroups.plane(i * g_count + g, b);
        auto dst = dx.plane(i, plan_[g].start + b);
        for (std::size_t p = 0; p < dst.size(); ++p) dst[p] += src[p];
      }
  return dx;
}

nn::Tensor GroupAutoencoder::merge_groups(const nn::Tensor& groups) const {
  const int g_count = group_count();
  if (groups.n() % g_count != 0 || groups.c() != grouping_.n_subs) {
    throw ShapeError("merge: " + nn::shape_string(groups) + " does not match " + std::to_string(g_count) +
                     " groups of " + std::to_string(grouping_.n_subs) + " bands");
  }
  const int batch = groups.n() / g_count;
  nn::Tensor out(batch, bands_, groups.h(), groups.w());
  std::vector<double> acc(groups.plane_size());
  for (int i = 0; i < batch; ++i) {
    for (int b = 0; b < bands_; ++b) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int g = 0; g < g_count; ++g) {
        if (b < plan_[g].start || b >= plan_[g].end) continue;
        const auto src = groups.plane(i * g_count + g, b - plan_[g].start);
        for (std::size_t p = 0; p < acc.size(); ++p) acc[p] += src[p];
      }
      auto dst = out.plane(i, b);
      for (std::size_t p = 0; p < acc.size(); ++p) dst[p] = static_cast<float>(acc[p] / coverage_[b]);
    }
  }
  return out;
}

nn::Tensor GroupAutoencoder::merge_groups_backward(const nn::Tensor& dmerged) const {
  const int g_count = group_count();
  nn::Tensor dgroups(dmerged.n() * g_count, grouping_.n_subs, dmerged.h(), dmerged.w());
  for (int i = 0; i < dmerged.n(); ++i)
    for (int g = 0; g < g_count; ++g)
      for (int b = 0; b < grouping_.n_subs; ++b) {
        const int band = plan_[g].start + b;
        const float inv = 1.0f / static_cast<float>(coverage_[band]);
        const auto src = dmerged.plane(i, band);
        auto dst = dgroups.plane(i * g_count + g, b);
        for (std::size_t p = 0; p < dst.size(); ++p) dst[p] = src[p] * inv;
      }
  return dgroups;
}

nn::Tensor GroupAutoencoder::encode(const nn::Tensor& x) const {
  require_input(x);
  return encoder_.forward(split_groups(x));
}

nn::Tensor GroupAutoencoder::decode_local(const nn::Tensor& z) const {
  if (z.c() != cfg_.latent_channels) {
    throw ShapeError("GAE decode expects " + std::to_string(cfg_.latent_channels) + " latent channels, got " +
                     nn::shape_string(z));
  }
  return merge_groups(local_decoder_.forward(z));
}

nn::Tensor GroupAutoencoder::decode(const nn::Tensor& z) const {
  nn::Tensor merged = decode_local(z);
  if (!cfg_.global_decoder) return merged;
  nn::Tensor residual = global_decoder_.forward(merged);
  nn::add_inplace(merged, residual);
  return merged;
}

LatentList GroupAutoencoder::encode(const Cube& cube) const {
  const nn::Tensor z = encode(nn::from_cube(cube));
  LatentList out;
  out.group_plan = plan_;
  out.source_bands = bands_;
  for (int g = 0; g < z.n(); ++g) out.latents.push_back(nn::take_item(z, g));
  return out;
}

Cube GroupAutoencoder::decode(const LatentList& latents) const {
  if (static_cast<int>(latents.latents.size()) != group_count()) {
    throw ShapeError("GAE decode expects " + std::to_string(group_count()) + " latents, got " +
                     std::to_string(latents.latents.size()));
  }
  return nn::to_cube(decode(nn::concat_batch(latents.latents)));
}

nn::Tensor GroupAutoencoder::forward_train(const nn::Tensor& x) {
  require_input(x);
  trace_.batch = x.n();
  const nn::Tensor z = encoder_.forward(split_groups(x), &trace_.encoder);
  nn::Tensor merged = merge_groups(local_decoder_.forward(z, &trace_.local));
  if (!cfg_.global_decoder) return merged;
  nn::Tensor residual = global_decoder_.forward(merged, &trace_.global);
  nn::add_inplace(merged, residual);
  return merged;
}

void GroupAutoencoder::backward(const nn::Tensor& dout) {
  nn::Tensor dmerged = dout;
  if (cfg_.global_decoder) nn::add_inplace(dmerged, global_decoder_.backward(trace_.global, dout));
  const nn::Tensor dz = local_decoder_.backward(trace_.local, merge_groups_backward(dmerged));
  encoder_.backward(trace_.encoder, dz);
}

nn::ParameterList GroupAutoencoder::encoder_parameters() { return encoder_.parameters(); }

nn::ParameterList GroupAutoencoder::decoder_parameters() {
  nn::ParameterList out = local_decoder_.parameters();
  for (nn::Parameter* p : global_decoder_.parameters()) out.push_back(p);
  return out;
}

nn::ParameterList GroupAutoencoder::parameters() {
  nn::ParameterList out = encoder_parameters();
  for (nn::Parameter* p : decoder_parameters()) out.push_back(p);
  return out;
}

nlohmann::json GroupAutoencoder::signature() const {
  return {{"bands", bands_},
          {"n_subs", grouping_.n_subs},
          {"n_ovls", grouping_.n_ovls},
          {"latent_channels", cfg_.latent_channels},
          {"latent_downscale", cfg_.latent_downscale},
          {"enc_widths", cfg_.enc_widths},
          {"dec_widths", cfg_.dec_widths},
          {"global_widths", cfg_.global_widths},
          {"global_decoder", cfg_.global_decoder},
          {"activation", cfg_.activation}};
}

void GroupAutoencoder::save(nn::Checkpoint& ckpt) {
  nn::store_parameters(ckpt, parameters(), "gae/");
  ckpt.manifest["gae"] = signature();
}

void GroupAutoencoder::load(const nn::Checkpoint& ckpt) {
  if (!ckpt.manifest.contains("gae") || ckpt.manifest["gae"] != signature()) {
    throw ConfigError("GAE checkpoint does not match the configured model: checkpoint " +
                      (ckpt.manifest.contains("gae") ? ckpt.manifest["gae"].dump() : std::string("<none>")) +
                      " vs config " + signature().dump());
  }
  nn::restore_parameters(ckpt, parameters(), "gae/");
}

}  // namespace hsisr::gae
