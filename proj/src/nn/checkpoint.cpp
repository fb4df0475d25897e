#include "hsisr/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hsisr/core/error.hpp"
#include "hsisr/core/rng.hpp"
#include "hsisr/nn/adam.hpp"

namespace hsisr::nn {
namespace {

using nlohmann::json;

constexpr const char* kMagic = "hsisr-checkpoint";

static_assert(std::endian::native == std::endian::little, "checkpoint payloads assume a little-endian host");

std::string shape_text(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

}  // namespace

void Checkpoint::put(std::string name, std::vector<int> shape, std::vector<float> values) {
  for (NamedTensor& t : tensors_) {
    if (t.name == name) {
      t.shape = std::move(shape);
      t.values = std::move(values);
      return;
    }
  }
  tensors_.push_back(NamedTensor{std::move(name), std::move(shape), std::move(values)});
}

bool Checkpoint::contains(const std::string& name) const {
  for (const NamedTensor& t : tensors_)
    if (t.name == name) return true;
  return false;
}

const NamedTensor& Checkpoint::get(const std::string& name) const {
  for (const NamedTensor& t : tensors_)
    if (t.name == name) return t;
  throw ConfigError("checkpoint has no tensor '" + name + "'");
}

void Checkpoint::save(const std::filesystem::path& path) const {
  json header;
  header["format"] = kMagic;
  header["version"] = 1;
  header["manifest"] = manifest;
  json index = json::array();
  std::size_t offset = 0;
  for (const NamedTensor& t : tensors_) {
    index.push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}, {"count", t.values.size()}});
    offset += t.values.size();
  }
  header["tensors"] = index;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  const std::string text = header.dump() + "\n";
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const NamedTensor& t : tensors_) {
    out.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * sizeof(float)));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty checkpoint");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": malformed checkpoint header: " + e.what());
  }
  if (header.value("format", "") != kMagic) throw IoError(path.string() + ": not a checkpoint file");
  std::ostringstream rest;
  rest << in.rdbuf();
  const std::string payload = rest.str();
  Checkpoint ckpt;
  ckpt.manifest = header.value("manifest", json::object());
  for (const json& entry : header.at("tensors")) {
    NamedTensor t;
    t.name = entry.at("name").get<std::string>();
    t.shape = entry.at("shape").get<std::vector<int>>();
    const auto offset = entry.at("offset").get<std::size_t>();
    const auto count = entry.at("count").get<std::size_t>();
    if ((offset + count) * sizeof(float) > payload.size()) {
      throw IoError(path.string() + ": payload size mismatch for tensor '" + t.name + "'");
    }
    t.values.resize(count);
    std::memcpy(t.values.data(), payload.data() + offset * sizeof(float), count * sizeof(float));
    ckpt.tensors_.push_back(std::move(t));
  }
  return ckpt;
}

void store_parameters(Checkpoint& ckpt, const ParameterList& params, const std::string& prefix) {
  for (const Parameter* p : params) ckpt.put(prefix + p->name, p->shape, p->value);
}

void restore_parameters(const Checkpoint& ckpt, const ParameterList& params, const std::string& prefix) {
  for (Parameter* p : params) {
    const NamedTensor& t = ckpt.get(prefix + p->name);
    if (t.shape != p->shape) {
      throw ConfigError("checkpoint tensor '" + t.name + "' has shape " + shape_text(t.shape) +
                        ", model expects " + shape_text(p->shape));
    }
    p->value = t.values;
  }
}

void store_optimizer(Checkpoint& ckpt, Adam& opt, const std::string& prefix) {
  const auto& params = opt.parameters();
  for (std::size_t k = 0; k < params.size(); ++k) {
    ckpt.put(prefix + "m/" + params[k]->name, params[k]->shape, opt.first_moments()[k]);
    ckpt.put(prefix + "v/" + params[k]->name, params[k]->shape, opt.second_moments()[k]);
  }
  ckpt.put(prefix + "step", {1}, {static_cast<float>(opt.steps())});
}

void restore_optimizer(const Checkpoint& ckpt, Adam& opt, const std::string& prefix) {
  const auto& params = opt.parameters();
  for (std::size_t k = 0; k < params.size(); ++k) {
    opt.first_moments()[k] = ckpt.get(prefix + "m/" + params[k]->name).values;
    opt.second_moments()[k] = ckpt.get(prefix + "v/" + params[k]->name).values;
  }
  opt.set_steps(static_cast<std::int64_t>(ckpt.get(prefix + "step").values.at(0)));
}

std::string parameter_hash(const ParameterList& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Parameter* p : params) {
    h = fnv1a64(p->name, h);
    h = fnv1a64(shape_text(p->shape), h);
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(p->value.data()), p->value.size() * sizeof(float)), h);
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace hsisr::nn
