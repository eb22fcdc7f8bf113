#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mrnet/errors.hpp"
#include "mrnet/grid.hpp"
#include "mrnet/ops.hpp"
#include "mrnet/stage.hpp"
#include "mrnet/tape.hpp"

namespace mrnet {

/// Residual backbone layout. Defaults give the 19-conv-layer network:
/// one stem conv plus 9 blocks of two convs, halving length at blocks
/// 2/4/6/8 so a 3072-sample input reaches 768/384/192 at blocks 5/7/9.
struct BackboneConfig {
  int input_length = 3072;
  int num_blocks = 9;
  int kernel_length = 32;
  int base_channels = 32;
  std::vector<int> subsample_blocks = {2, 4, 6, 8};  // 1-based block indices
  double dropout_p = 0.3;
  bool use_batch_norm = true;

  int conv_layer_count() const { return 2 * num_blocks + 1; }
  bool subsamples_at(int block) const {
    for (int b : subsample_blocks)
      if (b == block) return true;
    return false;
  }
};

struct PyramidConfig {
  std::vector<int> tap_blocks = {5, 7, 9};  // shallow -> deep, 1-based
};

struct AcfConfig {
  int conv_kernel_length = 3;
  int bottleneck_ratio = 4;
};

struct HeadConfig {
  int pool_target = 3;
  std::vector<int> hidden_sizes = {128};
  int num_classes = 5;
};

struct ModelConfig {
  BackboneConfig backbone;
  PyramidConfig pyramid;
  AcfConfig acf;
  HeadConfig head;
};

template <typename T>
struct Parameter {
  std::string name;
  Grid<T> value;
  Grid<T> grad;
  Grid<T> velocity;
  bool trainable = true;
};

/// The MRNet model: residual backbone, per-tap Adaptive Channel Fusion,
/// concatenation pyramid, pooled classifier head.
template <typename T>
class Model {
 public:
  using NodeId = typename Tape<T>::NodeId;

  Model(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    validate_config();
    ops::Rng rng(seed);
    build(rng);
  }

  struct Forward {
    std::vector<NodeId> taps;            // in tap_blocks order (shallow -> deep)
    NodeId fused = 0;                    // P3
    NodeId logits = 0;
    std::vector<std::pair<std::size_t, NodeId>> bound_params;  // param idx -> leaf
  };

  Forward forward(Tape<T>& tape, NodeId input, bool training, ops::Rng& rng) {
    for (const Grid<T>& g : tape.value(input)) {
      if (g.length() != static_cast<std::size_t>(cfg_.backbone.input_length) ||
          g.channels() != 1) {
        throw ShapeError("model: expected input " +
                         std::to_string(cfg_.backbone.input_length) + "x1, got " +
                         g.shape_str());
      }
    }
    Binding bind(params_.size());

    // Stem.
    NodeId x = tape.conv1d(input, bind.get(tape, *this, stem_.conv.w),
                           bind.get(tape, *this, stem_.conv.b), stem_.conv.spec);
    x = apply_bn(tape, bind, x, stem_.bn, training);
    x = tape.pointwise(x, ops::Pointwise::Relu);

    // Residual blocks, recording taps.
    std::vector<NodeId> taps(cfg_.pyramid.tap_blocks.size());
    for (int b = 0; b < cfg_.backbone.num_blocks; ++b) {
      x = residual_block(tape, bind, x, blocks_[b], training, rng);
      for (std::size_t t = 0; t < cfg_.pyramid.tap_blocks.size(); ++t) {
        if (cfg_.pyramid.tap_blocks[t] == b + 1) taps[t] = x;
      }
    }

    // Per-tap channel gates, then deepest-first fusion.
    std::vector<NodeId> gated(taps.size());
    for (std::size_t t = 0; t < taps.size(); ++t) {
      gated[t] = acf_apply(tape, bind, taps[t], acfs_[t], training);
    }
    NodeId fused = gated.back();
    for (std::size_t t = taps.size() - 1; t-- > 0;) {
      NodeId up = tape.upsample2x(fused);
      const std::size_t want = tape.value(gated[t])[0].length();
      const std::size_t got = tape.value(up)[0].length();
      if (want != got) {
        throw ShapeError("pyramid: tap length " + std::to_string(want) +
                         " does not extend the 2:1 chain (upsampled " +
                         std::to_string(got) + ")");
      }
      fused = tape.concat_channels(up, gated[t]);
    }

    // Head: pool to a fixed few samples per channel, then dense stack.
    NodeId h = tape.adaptive_avg_pool(fused, cfg_.head.pool_target);
    h = tape.flatten(h);
    for (std::size_t i = 0; i < head_.fcs.size(); ++i) {
      h = tape.fully_connected(h, bind.get(tape, *this, head_.fcs[i].w),
                               bind.get(tape, *this, head_.fcs[i].b));
      if (i + 1 < head_.fcs.size()) h = tape.pointwise(h, ops::Pointwise::Relu);
    }

    Forward f;
    f.taps = std::move(taps);
    f.fused = fused;
    f.logits = h;
    f.bound_params = bind.bound();
    return f;
  }

  /// Eval-mode confidence vector for one epoch.
  std::array<T, kNumStages> infer(const Grid<T>& epoch) {
    Tape<T> tape;
    ops::Rng rng(0);  // unused in eval mode
    NodeId in = tape.leaf(epoch);
    Forward f = forward(tape, in, /*training=*/false, rng);
    Grid<T> p = ops::softmax(tape.value(f.logits)[0]);
    std::array<T, kNumStages> out{};
    for (int i = 0; i < kNumStages; ++i) out[i] = p(i, 0);
    return out;
  }

  /// Argmax with ties broken toward the lowest stage index.
  static Stage argmax_stage(std::span<const T> probs) {
    int best = 0;
    for (int i = 1; i < kNumStages; ++i) {
      if (probs[i] > probs[best]) best = i;
    }
    return static_cast<Stage>(best);
  }

  std::pair<std::array<T, kNumStages>, Stage> predict(const Grid<T>& epoch) {
    auto p = infer(epoch);
    return {p, argmax_stage(std::span<const T>(p.data(), p.size()))};
  }

  std::vector<Parameter<T>>& parameters() { return params_; }
  const std::vector<Parameter<T>>& parameters() const { return params_; }
  const ModelConfig& config() const { return cfg_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) {
      if (p.trainable) n += p.value.size();
    }
    return n;
  }

  std::string summary() const {
    std::ostringstream os;
    std::size_t total = 0;
    for (const auto& p : params_) {
      os << p.name << "  " << p.value.shape_str() << "  " << p.value.size()
         << (p.trainable ? "" : "  (fixed)") << "\n";
      if (p.trainable) total += p.value.size();
    }
    os << "trainable parameters: " << total << "\n";
    return os.str();
  }

  /// Channel count entering/leaving each block (1-based; 0 = stem output).
  int channels_after_block(int block) const {
    int c = cfg_.backbone.base_channels;
    for (int b = 1; b <= block; ++b) {
      if (cfg_.backbone.subsamples_at(b)) c *= 2;
    }
    return c;
  }

  int length_after_block(int block) const {
    int len = cfg_.backbone.input_length;
    for (int b = 1; b <= block; ++b) {
      if (cfg_.backbone.subsamples_at(b)) len = (len + 1) / 2;
    }
    return len;
  }

  int fused_channels() const {
    int c = 0;
    for (int t : cfg_.pyramid.tap_blocks) c += channels_after_block(t);
    return c;
  }

  /// Harvest gradients from a finished backward pass into parameter slots.
  void collect_grads(const Tape<T>& tape, const Forward& f) {
    for (const auto& [idx, node] : f.bound_params) {
      const auto& g = tape.grad(node);
      if (g.empty()) continue;  // backward not run through this leaf
      Grid<T>& dst = params_[idx].grad;
      for (std::size_t i = 0; i < dst.size(); ++i) dst.raw()[i] += g[0].raw()[i];
    }
  }

  void zero_grads() {
    for (auto& p : params_) p.grad.fill(T{});
  }

 private:
  struct ConvLayer {
    std::size_t w = 0, b = 0;
    ops::ConvSpec spec;
  };
  struct BnLayer {
    bool present = false;
    std::size_t gamma = 0, beta = 0, rmean = 0, rvar = 0;
  };
  struct Stem {
    ConvLayer conv;
    BnLayer bn;
  };
  struct Block {
    ConvLayer conv1, conv2;
    BnLayer bn1, bn2;
    bool subsample = false;
    bool project = false;
    ConvLayer proj;
  };
  struct Acf {
    ConvLayer conv;
    std::size_t fc1_w = 0, fc1_b = 0, fc2_w = 0, fc2_b = 0;
  };
  struct Fc {
    std::size_t w = 0, b = 0;
  };
  struct Head {
    std::vector<Fc> fcs;
  };

  /// Lazily binds parameters to tape leaves, one leaf per parameter per
  /// forward, so gradients for shared uses accumulate in a single node.
  class Binding {
   public:
    explicit Binding(std::size_t n) : node_(n) {}
    NodeId get(Tape<T>& tape, Model& m, std::size_t idx) {
      if (!node_[idx]) {
        node_[idx] = tape.leaf(m.params_[idx].value);
        order_.emplace_back(idx, *node_[idx]);
      }
      return *node_[idx];
    }
    const std::vector<std::pair<std::size_t, NodeId>>& bound() const { return order_; }

   private:
    std::vector<std::optional<NodeId>> node_;
    std::vector<std::pair<std::size_t, NodeId>> order_;
  };

  void validate_config() {
    const auto& bb = cfg_.backbone;
    if (bb.num_blocks < 1 || bb.base_channels < 1 || bb.kernel_length < 1 ||
        bb.input_length < 1) {
      throw ContractError("model config: backbone fields must be >= 1");
    }
    if (bb.dropout_p < 0.0 || bb.dropout_p >= 1.0) {
      throw ContractError("model config: dropout_p must be in [0,1)");
    }
    for (int t : cfg_.pyramid.tap_blocks) {
      if (t < 1 || t > bb.num_blocks) {
        throw ContractError("model config: tap block " + std::to_string(t) +
                            " outside 1.." + std::to_string(bb.num_blocks));
      }
    }
    if (cfg_.pyramid.tap_blocks.empty()) {
      throw ContractError("model config: at least one tap block required");
    }
    for (std::size_t i = 1; i < cfg_.pyramid.tap_blocks.size(); ++i) {
      if (cfg_.pyramid.tap_blocks[i] <= cfg_.pyramid.tap_blocks[i - 1]) {
        throw ContractError("model config: tap blocks must be strictly increasing");
      }
    }
    if (cfg_.head.pool_target < 1 || cfg_.head.num_classes != kNumStages) {
      throw ContractError("model config: head must pool >= 1 and emit 5 classes");
    }
  }

  std::size_t add_param(std::string name, Grid<T> value, bool trainable = true) {
    params_.push_back(Parameter<T>{std::move(name), value, value.zeros_like(),
                                   value.zeros_like(), trainable});
    return params_.size() - 1;
  }

  ConvLayer make_conv(const std::string& name, int k, int cin, int cout, int stride,
                      ops::Rng& rng) {
    ConvLayer layer;
    layer.spec = ops::ConvSpec{k, cin, cout, stride};
    layer.w = add_param(name + ".weight",
                        ops::he_init<T>(static_cast<std::size_t>(k) * cin, cout,
                                        static_cast<std::size_t>(k) * cin, rng));
    layer.b = add_param(name + ".bias", Grid<T>(1, cout));
    return layer;
  }

  BnLayer make_bn(const std::string& name, int channels) {
    BnLayer bn;
    if (!cfg_.backbone.use_batch_norm) return bn;
    bn.present = true;
    bn.gamma = add_param(name + ".gamma", Grid<T>(1, channels, T{1}));
    bn.beta = add_param(name + ".beta", Grid<T>(1, channels));
    bn.rmean = add_param(name + ".running_mean", Grid<T>(1, channels), false);
    bn.rvar = add_param(name + ".running_var", Grid<T>(1, channels, T{1}), false);
    return bn;
  }

  Fc make_fc(const std::string& name, int in_dim, int out_dim, ops::Rng& rng) {
    Fc fc;
    fc.w = add_param(name + ".weight", ops::he_init<T>(out_dim, in_dim, in_dim, rng));
    fc.b = add_param(name + ".bias", Grid<T>(out_dim, 1));
    return fc;
  }

  void build(ops::Rng& rng) {
    const auto& bb = cfg_.backbone;
    stem_.conv = make_conv("stem.conv", bb.kernel_length, 1, bb.base_channels, 1, rng);
    stem_.bn = make_bn("stem.bn", bb.base_channels);

    int ch = bb.base_channels;
    for (int b = 1; b <= bb.num_blocks; ++b) {
      Block blk;
      blk.subsample = bb.subsamples_at(b);
      const int out_ch = blk.subsample ? ch * 2 : ch;
      const std::string base = "block" + std::to_string(b);
      blk.conv1 = make_conv(base + ".conv1", bb.kernel_length, ch, out_ch,
                            blk.subsample ? 2 : 1, rng);
      blk.bn1 = make_bn(base + ".bn1", out_ch);
      blk.conv2 = make_conv(base + ".conv2", bb.kernel_length, out_ch, out_ch, 1, rng);
      blk.bn2 = make_bn(base + ".bn2", out_ch);
      blk.project = blk.subsample || out_ch != ch;
      if (blk.project) {
        blk.proj = make_conv(base + ".shortcut", 1, ch, out_ch, 1, rng);
      }
      blocks_.push_back(blk);
      ch = out_ch;
    }

    for (std::size_t t = 0; t < cfg_.pyramid.tap_blocks.size(); ++t) {
      const int c = channels_after_block(cfg_.pyramid.tap_blocks[t]);
      const int mid = std::max(1, c / cfg_.acf.bottleneck_ratio);
      const std::string base = "acf" + std::to_string(t + 1);
      Acf acf;
      acf.conv = make_conv(base + ".conv", cfg_.acf.conv_kernel_length, c, c, 1, rng);
      Fc fc1 = make_fc(base + ".fc1", c, mid, rng);
      Fc fc2 = make_fc(base + ".fc2", mid, c, rng);
      acf.fc1_w = fc1.w;
      acf.fc1_b = fc1.b;
      acf.fc2_w = fc2.w;
      acf.fc2_b = fc2.b;
      acfs_.push_back(acf);
    }

    int width = cfg_.head.pool_target * fused_channels();
    int idx = 1;
    for (int hidden : cfg_.head.hidden_sizes) {
      head_.fcs.push_back(make_fc("head.fc" + std::to_string(idx++), width, hidden, rng));
      width = hidden;
    }
    head_.fcs.push_back(make_fc("head.out", width, cfg_.head.num_classes, rng));
  }

  NodeId apply_bn(Tape<T>& tape, Binding& bind, NodeId x, const BnLayer& bn,
                  bool training) {
    if (!bn.present) return x;
    return tape.batch_norm(x, bind.get(tape, *this, bn.gamma),
                           bind.get(tape, *this, bn.beta), params_[bn.rmean].value,
                           params_[bn.rvar].value, training);
  }

  /// Main path Conv-BN-ReLU-Dropout-Conv-BN plus identity or pool+1x1 shortcut.
  NodeId residual_block(Tape<T>& tape, Binding& bind, NodeId x, const Block& blk,
                        bool training, ops::Rng& rng) {
    NodeId main = tape.conv1d(x, bind.get(tape, *this, blk.conv1.w),
                              bind.get(tape, *this, blk.conv1.b), blk.conv1.spec);
    main = apply_bn(tape, bind, main, blk.bn1, training);
    main = tape.pointwise(main, ops::Pointwise::Relu);
    main = tape.dropout(main, cfg_.backbone.dropout_p, rng, training);
    main = tape.conv1d(main, bind.get(tape, *this, blk.conv2.w),
                       bind.get(tape, *this, blk.conv2.b), blk.conv2.spec);
    main = apply_bn(tape, bind, main, blk.bn2, training);

    NodeId shortcut = x;
    if (blk.subsample) shortcut = tape.avg_pool(shortcut, 2);
    if (blk.project) {
      shortcut = tape.conv1d(shortcut, bind.get(tape, *this, blk.proj.w),
                             bind.get(tape, *this, blk.proj.b), blk.proj.spec);
    }
    return tape.add(main, shortcut);
  }

  /// Conv -> GAP -> FC+ReLU -> FC+Sigmoid; the 1 x C gate multiplies the
  /// original tap, not the conv output.
  NodeId acf_apply(Tape<T>& tape, Binding& bind, NodeId tap, const Acf& acf,
                   bool training) {
    (void)training;
    NodeId y = tape.conv1d(tap, bind.get(tape, *this, acf.conv.w),
                           bind.get(tape, *this, acf.conv.b), acf.conv.spec);
    y = tape.adaptive_avg_pool(y, 1);             // 1 x C
    y = tape.flatten(y);                          // C x 1
    y = tape.fully_connected(y, bind.get(tape, *this, acf.fc1_w),
                             bind.get(tape, *this, acf.fc1_b));
    y = tape.pointwise(y, ops::Pointwise::Relu);
    y = tape.fully_connected(y, bind.get(tape, *this, acf.fc2_w),
                             bind.get(tape, *this, acf.fc2_b));
    y = tape.pointwise(y, ops::Pointwise::Sigmoid);
    const std::size_t c = tape.value(tap)[0].channels();
    y = tape.reshape(y, 1, c);                    // row of channel gates
    return tape.scale_channels(tap, y);
  }

  ModelConfig cfg_;
  std::vector<Parameter<T>> params_;
  Stem stem_;
  std::vector<Block> blocks_;
  std::vector<Acf> acfs_;
  Head head_;
};

}  // namespace mrnet
