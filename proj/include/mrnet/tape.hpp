#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "mrnet/errors.hpp"
#include "mrnet/grid.hpp"
#include "mrnet/ops.hpp"
#include "mrnet/parallel.hpp"

namespace mrnet {

/// Reverse-mode tape over batches of grids. Every node carries one grid
/// per batch member; parameter leaves have batch size 1 and broadcast.
/// Nodes are appended in evaluation order, so reverse insertion order is
/// a valid topological order for the backward sweep. Gradients accumulate
/// across uses of a node; callers reset by building a fresh tape.
template <typename T>
class Tape {
 public:
  using NodeId = std::size_t;

  NodeId leaf(std::vector<Grid<T>> values) {
    if (values.empty()) throw ShapeError("Tape::leaf: empty batch");
    return push(std::move(values), {});
  }

  NodeId leaf(Grid<T> value) {
    std::vector<Grid<T>> v;
    v.push_back(std::move(value));
    return push(std::move(v), {});
  }

  std::size_t batch_size(NodeId id) const { return nodes_[id].value.size(); }
  const std::vector<Grid<T>>& value(NodeId id) const { return nodes_[id].value; }
  const std::vector<Grid<T>>& grad(NodeId id) const { return nodes_[id].grad; }

  NodeId conv1d(NodeId input, NodeId kernel, NodeId bias, const ops::ConvSpec& spec) {
    require_param(kernel, "conv1d kernel");
    require_param(bias, "conv1d bias");
    const auto& in = nodes_[input].value;
    const std::size_t B = in.size();
    std::vector<Grid<T>> out(B);
    {
      const Grid<T>& w = nodes_[kernel].value[0];
      const Grid<T>& b = nodes_[bias].value[0];
      parallel_for(B, [&](std::size_t i) { out[i] = ops::conv1d(in[i], w, b, spec); });
    }
    const NodeId id = push(std::move(out), [this, input, kernel, bias, spec](Node& node) {
      const auto& in_v = nodes_[input].value;
      const Grid<T>& w = nodes_[kernel].value[0];
      const std::size_t B = in_v.size();
      std::vector<ops::ConvGrads<T>> grads(B);
      parallel_for(B, [&](std::size_t i) {
        grads[i] = ops::conv1d_backward(node.grad[i], in_v[i], w, spec);
      });
      for (std::size_t i = 0; i < B; ++i) {
        accumulate(nodes_[input].grad[i], grads[i].input);
        accumulate(nodes_[kernel].grad[0], grads[i].kernel);
        accumulate(nodes_[bias].grad[0], grads[i].bias);
      }
    });
    return id;
  }

  NodeId pointwise(NodeId input, ops::Pointwise kind) {
    return map_unary(input,
                     [kind](const Grid<T>& g) { return ops::pointwise(g, kind); },
                     [this, input, kind](Node& node) {
                       const auto& in_v = nodes_[input].value;
                       for (std::size_t i = 0; i < in_v.size(); ++i) {
                         accumulate(nodes_[input].grad[i],
                                    ops::pointwise_backward(node.grad[i], in_v[i],
                                                            node.value[i], kind));
                       }
                     });
  }

  NodeId fully_connected(NodeId input, NodeId weights, NodeId bias) {
    require_param(weights, "fully_connected weights");
    require_param(bias, "fully_connected bias");
    const auto& in = nodes_[input].value;
    std::vector<Grid<T>> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
      out[i] = ops::fully_connected(in[i], nodes_[weights].value[0], nodes_[bias].value[0]);
    }
    return push(std::move(out), [this, input, weights, bias](Node& node) {
      const auto& in_v = nodes_[input].value;
      const Grid<T>& w = nodes_[weights].value[0];
      for (std::size_t i = 0; i < in_v.size(); ++i) {
        auto g = ops::fully_connected_backward(node.grad[i], in_v[i], w);
        accumulate(nodes_[input].grad[i], g.input);
        accumulate(nodes_[weights].grad[0], g.weights);
        accumulate(nodes_[bias].grad[0], g.bias);
      }
    });
  }

  NodeId adaptive_avg_pool(NodeId input, std::size_t target_length) {
    return map_unary(
        input,
        [target_length](const Grid<T>& g) { return ops::adaptive_avg_pool(g, target_length); },
        [this, input](Node& node) {
          const auto& in_v = nodes_[input].value;
          for (std::size_t i = 0; i < in_v.size(); ++i) {
            accumulate(nodes_[input].grad[i],
                       ops::adaptive_avg_pool_backward(node.grad[i], in_v[i].length()));
          }
        });
  }

  NodeId avg_pool(NodeId input, std::size_t window) {
    return map_unary(input,
                     [window](const Grid<T>& g) { return ops::avg_pool(g, window); },
                     [this, input, window](Node& node) {
                       const auto& in_v = nodes_[input].value;
                       for (std::size_t i = 0; i < in_v.size(); ++i) {
                         accumulate(nodes_[input].grad[i],
                                    ops::avg_pool_backward(node.grad[i], in_v[i].length(),
                                                           window));
                       }
                     });
  }

  NodeId upsample2x(NodeId input) {
    return map_unary(input, [](const Grid<T>& g) { return ops::upsample2x(g); },
                     [this, input](Node& node) {
                       for (std::size_t i = 0; i < node.grad.size(); ++i) {
                         accumulate(nodes_[input].grad[i],
                                    ops::upsample2x_backward(node.grad[i]));
                       }
                     });
  }

  NodeId flatten(NodeId input) {
    return map_unary(input, [](const Grid<T>& g) { return ops::flatten(g); },
                     [this, input](Node& node) {
                       const auto& in_v = nodes_[input].value;
                       for (std::size_t i = 0; i < in_v.size(); ++i) {
                         Grid<T> back(in_v[i].length(), in_v[i].channels(),
                                      node.grad[i].raw());
                         accumulate(nodes_[input].grad[i], back);
                       }
                     });
  }

  /// Same raw data, new (length, channels) shape.
  NodeId reshape(NodeId input, std::size_t length, std::size_t channels) {
    return map_unary(input,
                     [length, channels](const Grid<T>& g) {
                       return Grid<T>(length, channels, g.raw());
                     },
                     [this, input](Node& node) {
                       const auto& in_v = nodes_[input].value;
                       for (std::size_t i = 0; i < in_v.size(); ++i) {
                         Grid<T> back(in_v[i].length(), in_v[i].channels(),
                                      node.grad[i].raw());
                         accumulate(nodes_[input].grad[i], back);
                       }
                     });
  }

  NodeId concat_channels(NodeId a, NodeId b) {
    require_same_batch(a, b, "concat_channels");
    const auto& av = nodes_[a].value;
    const auto& bv = nodes_[b].value;
    std::vector<Grid<T>> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = ops::concat_channels(av[i], bv[i]);
    return push(std::move(out), [this, a, b](Node& node) {
      const auto& av = nodes_[a].value;
      for (std::size_t i = 0; i < av.size(); ++i) {
        const std::size_t ca = av[i].channels();
        Grid<T>& da = nodes_[a].grad[i];
        Grid<T>& db = nodes_[b].grad[i];
        const Grid<T>& up = node.grad[i];
        for (std::size_t l = 0; l < up.length(); ++l) {
          for (std::size_t c = 0; c < ca; ++c) da(l, c) += up(l, c);
          for (std::size_t c = ca; c < up.channels(); ++c) db(l, c - ca) += up(l, c);
        }
      }
    });
  }

  NodeId add(NodeId a, NodeId b) {
    require_same_batch(a, b, "add");
    const auto& av = nodes_[a].value;
    const auto& bv = nodes_[b].value;
    std::vector<Grid<T>> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = ops::add(av[i], bv[i]);
    return push(std::move(out), [this, a, b](Node& node) {
      for (std::size_t i = 0; i < node.grad.size(); ++i) {
        accumulate(nodes_[a].grad[i], node.grad[i]);
        accumulate(nodes_[b].grad[i], node.grad[i]);
      }
    });
  }

  NodeId scale_channels(NodeId feature, NodeId weights) {
    require_same_batch(feature, weights, "scale_channels");
    const auto& fv = nodes_[feature].value;
    const auto& wv = nodes_[weights].value;
    std::vector<Grid<T>> out(fv.size());
    for (std::size_t i = 0; i < fv.size(); ++i) out[i] = ops::scale_channels(fv[i], wv[i]);
    return push(std::move(out), [this, feature, weights](Node& node) {
      const auto& fv = nodes_[feature].value;
      const auto& wv = nodes_[weights].value;
      for (std::size_t i = 0; i < fv.size(); ++i) {
        auto g = ops::scale_channels_backward(node.grad[i], fv[i], wv[i]);
        accumulate(nodes_[feature].grad[i], g.feature);
        accumulate(nodes_[weights].grad[i], g.weights);
      }
    });
  }

  NodeId dropout(NodeId input, double p, ops::Rng& rng, bool training) {
    const auto& in = nodes_[input].value;
    std::vector<Grid<T>> out(in.size());
    auto masks = std::make_shared<std::vector<std::vector<std::uint8_t>>>(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
      auto r = ops::dropout(in[i], p, rng, training);
      out[i] = std::move(r.output);
      (*masks)[i] = std::move(r.mask);
    }
    return push(std::move(out), [this, input, p, training, masks](Node& node) {
      for (std::size_t i = 0; i < node.grad.size(); ++i) {
        accumulate(nodes_[input].grad[i],
                   ops::dropout_backward(node.grad[i], (*masks)[i], p, training));
      }
    });
  }

  NodeId batch_norm(NodeId input, NodeId gamma, NodeId beta, Grid<T>& running_mean,
                    Grid<T>& running_var, bool training, T momentum = T{0.9}) {
    require_param(gamma, "batch_norm gamma");
    require_param(beta, "batch_norm beta");
    auto fwd = ops::batch_norm<T>(std::span<const Grid<T>>(nodes_[input].value),
                                  nodes_[gamma].value[0], nodes_[beta].value[0],
                                  running_mean, running_var, training, momentum);
    auto mean = std::make_shared<Grid<T>>(std::move(fwd.batch_mean));
    auto var = std::make_shared<Grid<T>>(std::move(fwd.batch_var));
    return push(std::move(fwd.output), [this, input, gamma, beta, training, mean,
                                        var](Node& node) {
      const auto& in_v = nodes_[input].value;
      if (training) {
        auto g = ops::batch_norm_backward<T>(std::span<const Grid<T>>(node.grad),
                                             std::span<const Grid<T>>(in_v),
                                             nodes_[gamma].value[0], *mean, *var);
        for (std::size_t i = 0; i < in_v.size(); ++i) {
          accumulate(nodes_[input].grad[i], g.input[i]);
        }
        accumulate(nodes_[gamma].grad[0], g.gamma);
        accumulate(nodes_[beta].grad[0], g.beta);
      } else {
        // Eval mode: running stats are constants, the map is affine.
        const Grid<T>& gm = nodes_[gamma].value[0];
        const std::size_t C = gm.channels();
        std::vector<T> k(C);
        for (std::size_t c = 0; c < C; ++c) {
          k[c] = gm(0, c) / std::sqrt((*var)(0, c) + static_cast<T>(ops::kBnEps));
        }
        for (std::size_t i = 0; i < in_v.size(); ++i) {
          Grid<T>& dst = nodes_[input].grad[i];
          const Grid<T>& up = node.grad[i];
          for (std::size_t l = 0; l < up.length(); ++l) {
            for (std::size_t c = 0; c < C; ++c) dst(l, c) += up(l, c) * k[c];
          }
          for (std::size_t l = 0; l < up.length(); ++l) {
            for (std::size_t c = 0; c < C; ++c) {
              const T xhat = (in_v[i](l, c) - (*mean)(0, c)) /
                             std::sqrt((*var)(0, c) + static_cast<T>(ops::kBnEps));
              nodes_[gamma].grad[0](0, c) += up(l, c) * xhat;
              nodes_[beta].grad[0](0, c) += up(l, c);
            }
          }
        }
      }
    });
  }

  /// Per-sample cross-entropy; value is a (1,1) grid per batch member.
  NodeId softmax_xent(NodeId logits, std::span<const int> labels) {
    const auto& in = nodes_[logits].value;
    if (labels.size() != in.size()) {
      throw ShapeError("softmax_xent: labels size != batch size");
    }
    std::vector<Grid<T>> out(in.size());
    auto probs = std::make_shared<std::vector<Grid<T>>>(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
      auto r = ops::softmax_xent(in[i], labels[i]);
      out[i] = Grid<T>(1, 1, {r.loss});
      (*probs)[i] = std::move(r.probs);
    }
    std::vector<int> label_copy(labels.begin(), labels.end());
    return push(std::move(out),
                [this, logits, probs, label_copy = std::move(label_copy)](Node& node) {
                  for (std::size_t i = 0; i < node.grad.size(); ++i) {
                    accumulate(nodes_[logits].grad[i],
                               ops::softmax_xent_backward((*probs)[i], label_copy[i],
                                                          node.grad[i](0, 0)));
                  }
                });
  }

  /// Softmax probabilities as a value node (inference path).
  NodeId softmax(NodeId logits) {
    return map_unary(logits, [](const Grid<T>& g) { return ops::softmax(g); },
                     [this, logits](Node& node) {
                       for (std::size_t i = 0; i < node.grad.size(); ++i) {
                         const Grid<T>& p = node.value[i];
                         const Grid<T>& up = node.grad[i];
                         T dot{};
                         for (std::size_t r = 0; r < p.length(); ++r)
                           dot += up(r, 0) * p(r, 0);
                         Grid<T>& dst = nodes_[logits].grad[i];
                         for (std::size_t r = 0; r < p.length(); ++r)
                           dst(r, 0) += p(r, 0) * (up(r, 0) - dot);
                       }
                     });
  }

  /// Mean over batch members of (1,1) grids -> single (1,1) grid.
  NodeId batch_mean(NodeId input) {
    const auto& in = nodes_[input].value;
    T total{};
    for (const auto& g : in) {
      if (g.length() != 1 || g.channels() != 1) {
        throw ShapeError("batch_mean: expected scalar grids");
      }
      total += g(0, 0);
    }
    std::vector<Grid<T>> out;
    out.emplace_back(1, 1, std::vector<T>{total / static_cast<T>(in.size())});
    return push(std::move(out), [this, input](Node& node) {
      const T u = node.grad[0](0, 0) / static_cast<T>(nodes_[input].value.size());
      for (auto& g : nodes_[input].grad) g(0, 0) += u;
    });
  }

  /// Seeds the root gradient with 1 and sweeps the tape in reverse.
  void backward(NodeId root) {
    auto& r = nodes_[root];
    if (r.value.size() != 1 || r.value[0].size() != 1) {
      throw ShapeError("Tape::backward: root must be a single scalar");
    }
    ensure_grads();
    r.grad[0](0, 0) += T{1};
    for (std::size_t i = root + 1; i-- > 0;) {
      if (nodes_[i].back) nodes_[i].back(nodes_[i]);
    }
  }

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    std::vector<Grid<T>> value;
    std::vector<Grid<T>> grad;
    std::function<void(Node&)> back;
  };

  NodeId push(std::vector<Grid<T>> values, std::function<void(Node&)> back) {
    nodes_.push_back(Node{std::move(values), {}, std::move(back)});
    return nodes_.size() - 1;
  }

  template <typename Fwd, typename Back>
  NodeId map_unary(NodeId input, Fwd&& fwd, Back&& back) {
    const auto& in = nodes_[input].value;
    std::vector<Grid<T>> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
    return push(std::move(out), std::forward<Back>(back));
  }

  void require_param(NodeId id, const char* what) const {
    if (nodes_[id].value.size() != 1) {
      throw ShapeError(std::string(what) + ": expected batch size 1");
    }
  }

  void require_same_batch(NodeId a, NodeId b, const char* what) const {
    if (nodes_[a].value.size() != nodes_[b].value.size()) {
      throw ShapeError(std::string(what) + ": batch size mismatch");
    }
  }

  void ensure_grads() {
    for (auto& n : nodes_) {
      if (n.grad.size() != n.value.size()) {
        n.grad.clear();
        n.grad.reserve(n.value.size());
        for (const auto& v : n.value) n.grad.push_back(v.zeros_like());
      }
    }
  }

  static void accumulate(Grid<T>& dst, const Grid<T>& src) {
    require_same_shape(dst, src, "Tape::accumulate");
    for (std::size_t i = 0; i < dst.size(); ++i) dst.raw()[i] += src.raw()[i];
  }

  std::vector<Node> nodes_;
};

}  // namespace mrnet
