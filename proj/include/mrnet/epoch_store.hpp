#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "mrnet/edf.hpp"
#include "mrnet/errors.hpp"
#include "mrnet/stage.hpp"

namespace mrnet::store {

// One directory per record: epochs.bin holds little-endian float32 tensors
// of kPaddedLength values each, concatenated in epoch order; labels.csv
// carries "epoch_index,stage" rows. Produced identically by EDF ingestion
// and the synthetic generator.

inline constexpr const char* kEpochsFile = "epochs.bin";
inline constexpr const char* kLabelsFile = "labels.csv";

struct EpochStore {
  std::vector<std::vector<float>> epochs;  // each kPaddedLength long
  StageSeq labels;
};

namespace detail {

inline void append_f32_le(std::vector<std::uint8_t>& out, float v) {
  const auto u = std::bit_cast<std::uint32_t>(v);
  out.push_back(static_cast<std::uint8_t>(u & 0xff));
  out.push_back(static_cast<std::uint8_t>((u >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((u >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((u >> 24) & 0xff));
}

inline float read_f32_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  const std::uint32_t u = static_cast<std::uint32_t>(bytes[offset]) |
                          (static_cast<std::uint32_t>(bytes[offset + 1]) << 8) |
                          (static_cast<std::uint32_t>(bytes[offset + 2]) << 16) |
                          (static_cast<std::uint32_t>(bytes[offset + 3]) << 24);
  return std::bit_cast<float>(u);
}

inline std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

inline void write_all(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ContractError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace detail

inline void write_labels_csv(const std::filesystem::path& path,
                             std::span<const Stage> labels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ContractError("cannot write " + path.string());
  out << "epoch_index,stage\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << i << "," << stage_name(labels[i]) << "\n";
  }
}

inline StageSeq read_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "epoch_index,stage") {
    throw ContractError(path.string() + ":1: expected header 'epoch_index,stage'");
  }
  StageSeq labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ContractError(path.string() + ":" + std::to_string(line_no) +
                          ": expected 'epoch_index,stage'");
    }
    const std::string idx = line.substr(0, comma);
    const std::string name = line.substr(comma + 1);
    if (idx != std::to_string(labels.size())) {
      throw ContractError(path.string() + ":" + std::to_string(line_no) +
                          ": epoch_index " + idx + " out of order, expected " +
                          std::to_string(labels.size()));
    }
    const auto stage = stage_from_name(name);
    if (!stage) {
      throw ContractError(path.string() + ":" + std::to_string(line_no) +
                          ": unknown stage '" + name + "'");
    }
    labels.push_back(*stage);
  }
  return labels;
}

inline void write_store(const std::filesystem::path& dir, const EpochStore& store) {
  if (store.epochs.size() != store.labels.size()) {
    throw ContractError("write_store: epochs/labels size mismatch");
  }
  std::filesystem::create_directories(dir);
  std::vector<std::uint8_t> bytes;
  bytes.reserve(store.epochs.size() * edf::kPaddedLength * 4);
  for (const auto& epoch : store.epochs) {
    if (epoch.size() != edf::kPaddedLength) {
      throw ContractError("write_store: epoch tensor must have " +
                          std::to_string(edf::kPaddedLength) + " values, got " +
                          std::to_string(epoch.size()));
    }
    for (float v : epoch) detail::append_f32_le(bytes, v);
  }
  detail::write_all(dir / kEpochsFile, bytes);
  write_labels_csv(dir / kLabelsFile, store.labels);
}

inline EpochStore read_store(const std::filesystem::path& dir) {
  EpochStore store;
  store.labels = read_labels_csv(dir / kLabelsFile);
  const auto bytes = detail::read_all(dir / kEpochsFile);
  const std::size_t epoch_bytes = edf::kPaddedLength * 4;
  if (bytes.size() != store.labels.size() * epoch_bytes) {
    throw ContractError((dir / kEpochsFile).string() + ": size " +
                        std::to_string(bytes.size()) + " bytes does not match " +
                        std::to_string(store.labels.size()) + " labelled epochs");
  }
  store.epochs.resize(store.labels.size());
  for (std::size_t e = 0; e < store.epochs.size(); ++e) {
    store.epochs[e].resize(edf::kPaddedLength);
    for (std::size_t i = 0; i < edf::kPaddedLength; ++i) {
      store.epochs[e][i] = detail::read_f32_le(bytes, e * epoch_bytes + i * 4);
    }
  }
  return store;
}

/// Record directories under a root, sorted by name.
inline std::vector<std::filesystem::path> list_records(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) {
    throw ContractError(root.string() + " is not a directory");
  }
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / kLabelsFile)) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

}  // namespace mrnet::store
