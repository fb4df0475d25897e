#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hsisr/core/cube.hpp"
#include "hsisr/grouping/grouping.hpp"
#include "hsisr/nn/checkpoint.hpp"
#include "hsisr/nn/sequential.hpp"

namespace hsisr::gae {

struct GaeConfig {
  int latent_channels = 8;
  int latent_downscale = 2;              // power of two
  std::vector<int> enc_widths{32};       // width at full resolution, then after each downsampling
  std::vector<int> dec_widths{32, 32};   // local decoder conv widths at full resolution
  std::vector<int> global_widths{32, 32};
  std::string activation = "silu";
  bool global_decoder = true;            // false: residual of the global part forced to zero

  void validate() const;
  int levels() const;  // log2(latent_downscale)
};

// One latent per band group, all of shape [1, latent_channels, h/ds, w/ds].
struct LatentList {
  std::vector<nn::Tensor> latents;
  std::vector<BandRange> group_plan;
  int source_bands = 0;
};

// Group-Autoencoder: one encoder shared by every band group, a local decoder
// mapping each latent back to its group, overlap-mean merging into the full
// cube, then a residual global decoder over all bands.
class GroupAutoencoder {
 public:
  GroupAutoencoder(const GaeConfig& cfg, const GroupingConfig& grouping, int bands, std::uint64_t seed);

  const GaeConfig& config() const { return cfg_; }
  const GroupingConfig& grouping() const { return grouping_; }
  int bands() const { return bands_; }
  const std::vector<BandRange>& plan() const { return plan_; }
  int group_count() const { return static_cast<int>(plan_.size()); }

  // x: [N, C, H, W] -> [N*G, L, H/ds, W/ds], item n*G+g is group g of image n.
  nn::Tensor encode(const nn::Tensor& x) const;
  // z: [N*G, L, h, w] -> [N, C, h*ds, w*ds].
  nn::Tensor decode(const nn::Tensor& z) const;
  // Local decoding plus merge, without the global part.
  nn::Tensor decode_local(const nn::Tensor& z) const;

  LatentList encode(const Cube& cube) const;
  Cube decode(const LatentList& latents) const;

  // Training pass; caches activations for backward().
  nn::Tensor forward_train(const nn::Tensor& x);
  void backward(const nn::Tensor& dout);

  nn::ParameterList parameters();
  nn::ParameterList encoder_parameters();
  nn::ParameterList decoder_parameters();

  void save(nn::Checkpoint& ckpt);
  void load(const nn::Checkpoint& ckpt);
  // Manifest entries that must match for a checkpoint to be usable with this model.
  nlohmann::json signature() const;

 private:
  nn::Tensor split_groups(const nn::Tensor& x) const;
  nn::Tensor split_groups_backward(const nn::Tensor& dgroups, int batch) const;
  nn::Tensor merge_groups(const nn::Tensor& groups) const;
  nn::Tensor merge_groups_backward(const nn::Tensor& dmerged) const;
  void require_input(const nn::Tensor& x) const;

  GaeConfig cfg_;
  GroupingConfig grouping_;
  int bands_;
  std::vector<BandRange> plan_;
  std::vector<int> coverage_;

  nn::ConvStack encoder_;
  nn::ConvStack local_decoder_;
  nn::ConvStack global_decoder_;

  struct Trace {
    int batch = 0;
    std::vector<nn::Tensor> encoder, local, global;
  } trace_;
};

}  // namespace hsisr::gae
