#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrnet/errors.hpp"
#include "mrnet/msc.hpp"
#include "mrnet/network.hpp"
#include "mrnet/synthgen.hpp"
#include "mrnet/trainer.hpp"

namespace mrnet {

/// Flat key=value configuration: schema-checked dotted keys, defaults from
/// this table, overridden by a config file and then by command-line sets
/// (last writer wins). Unknown keys are hard errors.
class RunConfig {
 public:
  enum class Type { Int, Real, Bool, String };

  RunConfig() {
    add("network.input_length", Type::Int, "3072", "epoch tensor length fed to the model");
    add("network.num_blocks", Type::Int, "9", "residual blocks in the backbone");
    add("network.kernel_length", Type::Int, "32", "conv filter length");
    add("network.base_channels", Type::Int, "32", "stem output channels");
    add("network.subsample_blocks", Type::String, "2,4,6,8",
        "1-based blocks that halve length and double channels");
    add("network.dropout_p", Type::Real, "0.3", "dropout between block convs");
    add("network.batch_norm", Type::Bool, "true", "batch normalization in blocks");
    add("network.tap_blocks", Type::String, "5,7,9", "pyramid tap blocks, shallow first");
    add("network.acf_kernel_length", Type::Int, "3", "ACF leading conv length");
    add("network.acf_bottleneck_ratio", Type::Int, "4", "ACF gate bottleneck ratio");
    add("network.head_pool_target", Type::Int, "3", "adaptive pool length in the head");
    add("network.head_hidden", Type::String, "128",
        "comma-separated hidden layer widths ('' for none)");
    add("train.epochs", Type::Int, "70", "training epochs");
    add("train.batch_size", Type::Int, "128", "mini-batch size");
    add("train.lr0", Type::Real, "0.1", "initial learning rate");
    add("train.lr_decay_factor", Type::Real, "0.1", "multiplier applied at each decay");
    add("train.lr_decay_every", Type::Int, "20", "epochs between decays");
    add("train.momentum", Type::Real, "0.9", "SGD momentum");
    add("train.seed", Type::Int, "42", "run seed");
    add("train.folds", Type::Int, "10", "cross-validation folds");
    add("msc.g", Type::String, "log", "compression function: linear | sqrt | log");
    add("msc.r", Type::Real, "4.2", "compression exponent");
    add("msc.a", Type::Real, "1.5", "inertia decay constant");
    add("msc.n", Type::Int, "4", "inertia lookahead order");
    add("msc.cascade", Type::Bool, "false", "corrections feed subsequent comparisons");
    add("msc.laplace_smoothing", Type::Bool, "false", "add-1 smoothing of counts");
    add("synth.records", Type::Int, "4", "records to generate");
    add("synth.epochs_per_record", Type::Int, "120", "epochs per generated record");
    add("synth.noise_uv", Type::Real, "3", "white-noise level");
    add("synth.jitter_rate", Type::Real, "0.15", "fraction of epochs flipped");
    add("synth.confidence_margin", Type::Real, "0.1", "argmax margin of flipped epochs");
    add("synth.seed", Type::Int, "7", "generator seed");
    add("ingest.channel", Type::String, "EEG Fpz-Cz", "EEG channel label to extract");
    add("ingest.pad_mode", Type::String, "tail", "epoch padding: tail | center");
    add("ingest.trim_wake", Type::Int, "0",
        "keep at most N minutes of wake around the sleep period (0 = off)");
    add("plot.color_truth", Type::String, "#1f77b4", "hypnogram lane color");
    add("plot.color_raw", Type::String, "#d62728", "hypnogram lane color");
    add("plot.color_corrected", Type::String, "#2ca02c", "hypnogram lane color");
  }

  void set(const std::string& key, const std::string& value) {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      throw ContractError("unknown config key '" + key + "'");
    }
    validate_value(key, it->second.type, value);
    it->second.value = value;
  }

  /// "key = value" lines, '#' comments, blank lines allowed.
  void load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ContractError("cannot open config file " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw ContractError(path.string() + ":" + std::to_string(line_no) +
                            ": expected key=value");
      }
      try {
        set(trim(trimmed.substr(0, eq)), trim(trimmed.substr(eq + 1)));
      } catch (const ContractError& e) {
        throw ContractError(path.string() + ":" + std::to_string(line_no) + ": " +
                            e.what());
      }
    }
  }

  /// "key=value" tokens from the command line.
  void set_from_cli(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
      throw ContractError("--set expects key=value, got '" + assignment + "'");
    }
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
  }

  const std::string& get_string(const std::string& key) const { return entry(key).value; }

  std::int64_t get_int(const std::string& key) const {
    return parse_int(key, entry(key).value);
  }

  double get_real(const std::string& key) const {
    return parse_real(key, entry(key).value);
  }

  bool get_bool(const std::string& key) const {
    const std::string& v = entry(key).value;
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ContractError("config key '" + key + "': expected bool, got '" + v + "'");
  }

  std::vector<int> get_int_list(const std::string& key) const {
    const std::string& v = entry(key).value;
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string t = trim(item);
      if (t.empty()) continue;
      out.push_back(static_cast<int>(parse_int(key, t)));
    }
    return out;
  }

  /// Sorted key=value lines; written as config.echo next to every output.
  std::string echo() const {
    std::string out;
    for (const auto& [key, e] : entries_) {
      out += key + "=" + e.value + "\n";
    }
    return out;
  }

  void write_echo(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "config.echo", std::ios::trunc);
    if (!out) throw ContractError("cannot write config.echo in " + dir.string());
    out << echo();
  }

  nlohmann::json as_json() const {
    nlohmann::json j;
    for (const auto& [key, e] : entries_) j[key] = e.value;
    return j;
  }

  ModelConfig model_config() const {
    ModelConfig cfg;
    cfg.backbone.input_length = static_cast<int>(get_int("network.input_length"));
    cfg.backbone.num_blocks = static_cast<int>(get_int("network.num_blocks"));
    cfg.backbone.kernel_length = static_cast<int>(get_int("network.kernel_length"));
    cfg.backbone.base_channels = static_cast<int>(get_int("network.base_channels"));
    cfg.backbone.subsample_blocks = get_int_list("network.subsample_blocks");
    cfg.backbone.dropout_p = get_real("network.dropout_p");
    cfg.backbone.use_batch_norm = get_bool("network.batch_norm");
    cfg.pyramid.tap_blocks = get_int_list("network.tap_blocks");
    cfg.acf.conv_kernel_length = static_cast<int>(get_int("network.acf_kernel_length"));
    cfg.acf.bottleneck_ratio = static_cast<int>(get_int("network.acf_bottleneck_ratio"));
    cfg.head.pool_target = static_cast<int>(get_int("network.head_pool_target"));
    cfg.head.hidden_sizes = get_int_list("network.head_hidden");
    return cfg;
  }

  TrainConfig train_config() const {
    TrainConfig cfg;
    cfg.epochs = static_cast<int>(get_int("train.epochs"));
    cfg.batch_size = static_cast<int>(get_int("train.batch_size"));
    cfg.lr0 = get_real("train.lr0");
    cfg.lr_decay_factor = get_real("train.lr_decay_factor");
    cfg.lr_decay_every = static_cast<int>(get_int("train.lr_decay_every"));
    cfg.momentum = get_real("train.momentum");
    cfg.seed = static_cast<std::uint64_t>(get_int("train.seed"));
    return cfg;
  }

  msc::MscConfig msc_config() const {
    msc::MscConfig cfg;
    cfg.g = msc::compression_from_name(get_string("msc.g"));
    cfg.r = get_real("msc.r");
    cfg.a = get_real("msc.a");
    cfg.n = static_cast<int>(get_int("msc.n"));
    cfg.cascade = get_bool("msc.cascade");
    cfg.laplace_smoothing = get_bool("msc.laplace_smoothing");
    cfg.validate();
    return cfg;
  }

  synth::SynthConfig synth_config() const {
    synth::SynthConfig cfg;
    cfg.epochs_per_record = static_cast<int>(get_int("synth.epochs_per_record"));
    cfg.noise_uv = get_real("synth.noise_uv");
    cfg.seed = static_cast<std::uint64_t>(get_int("synth.seed"));
    cfg.validate();
    return cfg;
  }

 private:
  struct Entry {
    Type type;
    std::string value;
    std::string description;
  };

  static std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
  }

  void add(const std::string& key, Type type, const std::string& value,
           const std::string& description) {
    entries_[key] = Entry{type, value, description};
  }

  const Entry& entry(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ContractError("unknown config key '" + key + "'");
    return it->second;
  }

  static std::int64_t parse_int(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const std::int64_t out = std::stoll(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw ContractError("config key '" + key + "': expected integer, got '" + v + "'");
    }
  }

  static double parse_real(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const double out = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw ContractError("config key '" + key + "': expected number, got '" + v + "'");
    }
  }

  void validate_value(const std::string& key, Type type, const std::string& value) const {
    switch (type) {
      case Type::Int: parse_int(key, value); break;
      case Type::Real: parse_real(key, value); break;
      case Type::Bool:
        if (value != "true" && value != "false" && value != "0" && value != "1") {
          throw ContractError("config key '" + key + "': expected bool, got '" + value +
                              "'");
        }
        break;
      case Type::String: break;
    }
  }

  std::map<std::string, Entry> entries_;
};

}  // namespace mrnet
