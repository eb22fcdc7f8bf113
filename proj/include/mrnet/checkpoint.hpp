#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrnet/errors.hpp"
#include "mrnet/grid.hpp"
#include "mrnet/network.hpp"

namespace mrnet::ckpt {

// MRN1 container: magic "MRN1", a 32-bit little-endian manifest length, a
// JSON manifest (parameter names, shapes, dtype, byte offsets, config
// echo), then raw little-endian float32 arrays in manifest order.

inline constexpr char kMagic[4] = {'M', 'R', 'N', '1'};

struct Checkpoint {
  nlohmann::json manifest;
  std::map<std::string, std::pair<std::array<std::size_t, 2>, std::vector<float>>> tensors;
};

namespace detail {

inline void append_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

inline void append_f32_le(std::vector<std::uint8_t>& out, float v) {
  append_u32_le(out, std::bit_cast<std::uint32_t>(v));
}

inline std::uint32_t read_u32_le(std::span<const std::uint8_t> bytes, std::size_t off) {
  return static_cast<std::uint32_t>(bytes[off]) |
         (static_cast<std::uint32_t>(bytes[off + 1]) << 8) |
         (static_cast<std::uint32_t>(bytes[off + 2]) << 16) |
         (static_cast<std::uint32_t>(bytes[off + 3]) << 24);
}

}  // namespace detail

template <typename T>
std::vector<std::uint8_t> serialize(const std::vector<Parameter<T>>& params,
                                    const nlohmann::json& config_echo) {
  nlohmann::json manifest;
  manifest["format"] = "MRN1";
  manifest["dtype"] = "f32";
  manifest["config"] = config_echo;
  manifest["params"] = nlohmann::json::array();

  std::vector<std::uint8_t> payload;
  for (const auto& p : params) {
    manifest["params"].push_back(
        {{"name", p.name},
         {"shape", {p.value.length(), p.value.channels()}},
         {"dtype", "f32"},
         {"offset", payload.size()},
         {"trainable", p.trainable}});
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      detail::append_f32_le(payload, static_cast<float>(p.value.raw()[i]));
    }
  }

  const std::string manifest_str = manifest.dump();
  std::vector<std::uint8_t> out;
  out.reserve(8 + manifest_str.size() + payload.size());
  out.insert(out.end(), kMagic, kMagic + 4);
  detail::append_u32_le(out, static_cast<std::uint32_t>(manifest_str.size()));
  out.insert(out.end(), manifest_str.begin(), manifest_str.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

inline Checkpoint deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || !std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw ContractError("checkpoint: missing MRN1 magic");
  }
  const std::uint32_t manifest_len = detail::read_u32_le(bytes, 4);
  if (bytes.size() < 8 + static_cast<std::size_t>(manifest_len)) {
    throw ContractError("checkpoint: truncated manifest");
  }
  Checkpoint ckpt;
  try {
    ckpt.manifest = nlohmann::json::parse(bytes.begin() + 8,
                                          bytes.begin() + 8 + manifest_len);
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("checkpoint: bad manifest JSON: ") + e.what());
  }
  const std::size_t payload_start = 8 + manifest_len;
  for (const auto& entry : ckpt.manifest.at("params")) {
    const std::string name = entry.at("name");
    const std::size_t l = entry.at("shape").at(0);
    const std::size_t c = entry.at("shape").at(1);
    const std::size_t offset = entry.at("offset");
    const std::size_t count = l * c;
    if (payload_start + offset + 4 * count > bytes.size()) {
      throw ContractError("checkpoint: tensor '" + name + "' runs past end of file");
    }
    std::vector<float> data(count);
    for (std::size_t i = 0; i < count; ++i) {
      data[i] = std::bit_cast<float>(
          detail::read_u32_le(bytes, payload_start + offset + 4 * i));
    }
    ckpt.tensors[name] = {{l, c}, std::move(data)};
  }
  return ckpt;
}

template <typename T>
void save(const std::filesystem::path& path, const Model<T>& model,
          const nlohmann::json& config_echo) {
  const auto bytes = serialize(model.parameters(), config_echo);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ContractError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

inline Checkpoint load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                  std::istreambuf_iterator<char>()};
  return deserialize(bytes);
}

/// Copies tensors into an already-built model; names and shapes must match.
template <typename T>
void load_into(const Checkpoint& ckpt, Model<T>& model) {
  for (auto& p : model.parameters()) {
    const auto it = ckpt.tensors.find(p.name);
    if (it == ckpt.tensors.end()) {
      throw ContractError("checkpoint: missing parameter '" + p.name + "'");
    }
    const auto& [shape, data] = it->second;
    if (shape[0] != p.value.length() || shape[1] != p.value.channels()) {
      throw ContractError("checkpoint: parameter '" + p.name + "' has shape " +
                          std::to_string(shape[0]) + "x" + std::to_string(shape[1]) +
                          ", model expects " + p.value.shape_str());
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      p.value.raw()[i] = static_cast<T>(data[i]);
    }
  }
  if (ckpt.tensors.size() != model.parameters().size()) {
    throw ContractError("checkpoint: tensor count " +
                        std::to_string(ckpt.tensors.size()) + " != model parameter count " +
                        std::to_string(model.parameters().size()));
  }
}

}  // namespace mrnet::ckpt
