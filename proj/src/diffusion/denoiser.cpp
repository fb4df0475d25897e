#include "hsisr/diffusion/denoiser.hpp"

#include <cmath>
#include <string>

#include "hsisr/core/error.hpp"
#include "hsisr/core/rng.hpp"

namespace hsisr::diffusion {

using nn::Tensor;

Tensor NoisePredictor::predict(const Tensor& z_t, std::span<const int> t, const Tensor& z_lr) const {
  nn::require_same_shape(z_t, z_lr, "denoiser inputs");
  if (static_cast<int>(t.size()) != z_t.n()) {
    throw ShapeError("denoiser got " + std::to_string(t.size()) + " timesteps for batch of " +
                     std::to_string(z_t.n()));
  }
  calls_.fetch_add(static_cast<std::uint64_t>(z_t.n()));
  return do_predict(z_t, t, z_lr);
}

Tensor timestep_embedding(std::span<const int> t, int dim) {
  const int half = dim / 2;
  Tensor e(static_cast<int>(t.size()), dim, 1, 1);
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (int k = 0; k < half; ++k) {
      const double freq = std::exp(-std::log(10000.0) * k / half);
      const double arg = t[i] * freq;
      e.at(static_cast<int>(i), k, 0, 0) = static_cast<float>(std::sin(arg));
      e.at(static_cast<int>(i), half + k, 0, 0) = static_cast<float>(std::cos(arg));
    }
  }
  return e;
}

UNetDenoiser::UNetDenoiser(const DiffusionConfig& cfg, int latent_channels, std::uint64_t seed)
    : cfg_(cfg), latent_(latent_channels) {
  cfg_.validate();
  if (latent_ < 1) throw ConfigError("denoiser latent_channels must be >= 1");
  Rng rng = seed_stream(seed, "denoiser.init");
  const auto& w = cfg_.widths;
  const int n = levels();
  emb_dim_ = 2 * cfg_.time_dim;
  temb1_ = nn::Linear("temb.1", cfg_.time_dim, emb_dim_, rng);
  temb2_ = nn::Linear("temb.2", emb_dim_, emb_dim_, rng);
  conv_in_ = nn::Conv2d("in", 2 * latent_, w[0], 3, 1, rng);

  auto make_block = [&](const std::string& name, int c) {
    return ResBlock{nn::Conv2d(name + ".conv1", c, c, 3, 1, rng),
                    nn::Conv2d(name + ".conv2", c, c, 3, 1, rng, nn::InitMode::Zero),
                    nn::Linear(name + ".emb", emb_dim_, c, rng)};
  };
  for (int l = 0; l < n; ++l) {
    enc_.push_back(make_block("enc" + std::to_string(l), w[l]));
    if (l + 1 < n) down_.emplace_back("down" + std::to_string(l), w[l], w[l + 1], 3, 2, rng);
  }
  mid_ = make_block("mid", w[n - 1]);
  merge_.resize(n);
  dec_.resize(n);
  up_.resize(n);
  for (int l = n - 1; l >= 0; --l) {
    merge_[l] = nn::Conv2d("merge" + std::to_string(l), 2 * w[l], w[l], 3, 1, rng);
    dec_[l] = make_block("dec" + std::to_string(l), w[l]);
    if (l > 0) up_[l] = nn::Conv2d("up" + std::to_string(l), w[l], w[l - 1], 3, 1, rng);
  }
  conv_out_ = nn::Conv2d("out", w[0], latent_, 3, 1, rng, nn::InitMode::Zero);
}

void UNetDenoiser::check_inputs(const Tensor& z_t, std::span<const int> t, const Tensor& z_lr) const {
  nn::require_same_shape(z_t, z_lr, "denoiser inputs");
  if (z_t.c() != latent_) {
    throw ShapeError("denoiser expects " + std::to_string(latent_) + " latent channels, got " + nn::shape_string(z_t));
  }
  const int m = spatial_multiple();
  if (z_t.h() % m != 0 || z_t.w() % m != 0) {
    throw ShapeError("latent size " + nn::shape_string(z_t) + " is not a multiple of " + std::to_string(m));
  }
  if (static_cast<int>(t.size()) != z_t.n()) throw ShapeError("timestep count does not match batch");
}

Tensor UNetDenoiser::block_forward(const ResBlock& blk, const Tensor& x, const Tensor& emb, BlockCache* cache) const {
  Tensor a = nn::activate(act_, x);
  Tensor h1 = blk.conv1.forward(a);
  nn::add_channel_bias(h1, blk.proj.forward(emb));
  Tensor b = nn::activate(act_, h1);
  Tensor y = nn::add(x, blk.conv2.forward(b));
  if (cache) *cache = BlockCache{x, std::move(a), std::move(h1), std::move(b)};
  return y;
}

Tensor UNetDenoiser::block_backward(ResBlock& blk, const BlockCache& c, const Tensor& emb, const Tensor& dy,
                                    Tensor& demb) {
  Tensor db = blk.conv2.backward(c.b, dy);
  Tensor dh1 = nn::activate_backward(act_, c.h1, db);
  nn::add_inplace(demb, blk.proj.backward(emb, nn::channel_bias_backward(dh1)));
  Tensor da = blk.conv1.backward(c.a, dh1);
  Tensor dx = nn::activate_backward(act_, c.x, da);
  nn::add_inplace(dx, dy);
  return dx;
}

Tensor UNetDenoiser::run(const Tensor& z_t, std::span<const int> t, const Tensor& z_lr, Cache* cache) const {
  check_inputs(z_t, t, z_lr);
  const int n = levels();

  Tensor e0 = timestep_embedding(t, cfg_.time_dim);
  Tensor u = temb1_.forward(e0);
  Tensor v = nn::activate(act_, u);
  Tensor w2 = temb2_.forward(v);
  Tensor emb = nn::activate(act_, w2);

  Tensor input = nn::concat_channels(z_t, z_lr);
  Tensor h = conv_in_.forward(input);
  std::vector<Tensor> skips(n);
  if (cache) {
    cache->enc.assign(n, {});
    cache->dec.assign(n, {});
    cache->down_in.assign(n, {});
    cache->merge_in.assign(n, {});
    cache->up_in.assign(n, {});
  }
  for (int l = 0; l < n; ++l) {
    h = block_forward(enc_[l], h, emb, cache ? &cache->enc[l] : nullptr);
    skips[l] = h;
    if (l + 1 < n) {
      if (cache) cache->down_in[l] = h;
      h = down_[l].forward(h);
    }
  }
  h = block_forward(mid_, h, emb, cache ? &cache->mid : nullptr);
  for (int l = n - 1; l >= 0; --l) {
    Tensor cat = nn::concat_channels(h, skips[l]);
    h = merge_[l].forward(cat);
    if (cache) cache->merge_in[l] = std::move(cat);
    h = block_forward(dec_[l], h, emb, cache ? &cache->dec[l] : nullptr);
    if (l > 0) {
      Tensor up = nn::upsample_nearest2x(h);
      h = up_[l].forward(up);
      if (cache) cache->up_in[l] = std::move(up);
    }
  }
  Tensor out_act = nn::activate(act_, h);
  Tensor out = conv_out_.forward(out_act);
  if (cache) {
    cache->e0 = std::move(e0);
    cache->u = std::move(u);
    cache->v = std::move(v);
    cache->w2 = std::move(w2);
    cache->emb = std::move(emb);
    cache->input = std::move(input);
    cache->out_pre = std::move(h);
    cache->out_act = std::move(out_act);
  }
  return out;
}

Tensor UNetDenoiser::do_predict(const Tensor& z_t, std::span<const int> t, const Tensor& z_lr) const {
  return run(z_t, t, z_lr, nullptr);
}

Tensor UNetDenoiser::forward_train(const Tensor& z_t, std::span<const int> t, const Tensor& z_lr) {
  return run(z_t, t, z_lr, &cache_);
}

void UNetDenoiser::backward(const Tensor& dpred) {
  if (cache_.input.empty()) throw Error("UNetDenoiser::backward called without forward_train");
  const int n = levels();
  const Tensor& emb = cache_.emb;
  Tensor demb(emb.n(), emb.c(), 1, 1);

  Tensor dh = nn::activate_backward(act_, cache_.out_pre, conv_out_.backward(cache_.out_act, dpred));
  std::vector<Tensor> dskips(n);
  for (int l = 0; l < n; ++l) {
    if (l > 0) dh = nn::upsample_nearest2x_backward(up_[l].backward(cache_.up_in[l], dh));
    dh = block_backward(dec_[l], cache_.dec[l], emb, dh, demb);
    Tensor dcat = merge_[l].backward(cache_.merge_in[l], dh);
    // The first half goes to whatever produced h: up_[l+1] on the next pass, or mid.
    nn::split_channels(dcat, cfg_.widths[l], dh, dskips[l]);
  }
  dh = block_backward(mid_, cache_.mid, emb, dh, demb);
  for (int l = n - 1; l >= 0; --l) {
    if (l + 1 < n) dh = down_[l].backward(cache_.down_in[l], dh);
    nn::add_inplace(dh, dskips[l]);
    dh = block_backward(enc_[l], cache_.enc[l], emb, dh, demb);
  }
  conv_in_.backward(cache_.input, dh);

  Tensor dw2 = nn::activate_backward(act_, cache_.w2, demb);
  Tensor dv = temb2_.backward(cache_.v, dw2);
  Tensor du = nn::activate_backward(act_, cache_.u, dv);
  temb1_.backward(cache_.e0, du);
}

nn::ParameterList UNetDenoiser::parameters() {
  nn::ParameterList out;
  temb1_.collect(out);
  temb2_.collect(out);
  conv_in_.collect(out);
  auto collect_block = [&](ResBlock& b) {
    b.conv1.collect(out);
    b.conv2.collect(out);
    b.proj.collect(out);
  };
  const int n = levels();
  for (int l = 0; l < n; ++l) {
    collect_block(enc_[l]);
    if (l + 1 < n) down_[l].collect(out);
  }
  collect_block(mid_);
  for (int l = n - 1; l >= 0; --l) {
    merge_[l].collect(out);
    collect_block(dec_[l]);
    if (l > 0) up_[l].collect(out);
  }
  conv_out_.collect(out);
  return out;
}

nlohmann::json UNetDenoiser::signature() const {
  return {{"latent_channels", latent_}, {"time_dim", cfg_.time_dim}, {"widths", cfg_.widths}};
}

void UNetDenoiser::save(nn::Checkpoint& ckpt) {
  ckpt.manifest["denoiser"] = signature();
  nn::store_parameters(ckpt, parameters(), "denoiser/");
}

void UNetDenoiser::load(const nn::Checkpoint& ckpt) {
  if (!ckpt.manifest.contains("denoiser")) throw ConfigError("checkpoint has no denoiser");
  if (ckpt.manifest["denoiser"] != signature()) {
    throw ConfigError("denoiser checkpoint " + ckpt.manifest["denoiser"].dump() + " does not match config " +
                      signature().dump());
  }
  nn::restore_parameters(ckpt, parameters(), "denoiser/");
}

}  // namespace hsisr::diffusion
