#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsisr/nn/layers.hpp"

namespace hsisr::nn {

class Adam;

struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<float> values;
};

// Named-tensor container: a one-line JSON header (manifest + tensor index)
// followed by the raw little-endian f32 payload of every tensor in order.
class Checkpoint {
 public:
  nlohmann::json manifest = nlohmann::json::object();

  void put(std::string name, std::vector<int> shape, std::vector<float> values);
  bool contains(const std::string& name) const;
  const NamedTensor& get(const std::string& name) const;
  const std::vector<NamedTensor>& tensors() const { return tensors_; }

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

 private:
  std::vector<NamedTensor> tensors_;
};

void store_parameters(Checkpoint& ckpt, const ParameterList& params, const std::string& prefix = "");
// Throws ConfigError when a tensor is missing or its shape disagrees.
void restore_parameters(const Checkpoint& ckpt, const ParameterList& params, const std::string& prefix = "");

void store_optimizer(Checkpoint& ckpt, Adam& opt, const std::string& prefix);
void restore_optimizer(const Checkpoint& ckpt, Adam& opt, const std::string& prefix);

// FNV-1a over names, shapes and raw values; equal hashes mean identical weights.
std::string parameter_hash(const ParameterList& params);

}  // namespace hsisr::nn
