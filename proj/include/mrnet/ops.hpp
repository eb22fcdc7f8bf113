#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mrnet/errors.hpp"
#include "mrnet/grid.hpp"

namespace mrnet::ops {

using Rng = std::mt19937_64;

/// Stride/channel contract for conv1d. Padding is always "same-zero":
/// output length = ceil(L / stride), zeros split with the extra pad on
/// the right when the total is odd.
struct ConvSpec {
  int kernel_length = 1;
  int in_channels = 1;
  int out_channels = 1;
  int stride = 1;

  void validate() const {
    if (kernel_length < 1 || in_channels < 1 || out_channels < 1 || stride < 1) {
      throw ShapeError("ConvSpec: all fields must be >= 1");
    }
  }
  std::size_t output_length(std::size_t input_length) const {
    return (input_length + static_cast<std::size_t>(stride) - 1) / stride;
  }
  std::size_t left_pad(std::size_t input_length) const {
    const std::size_t out_len = output_length(input_length);
    const std::ptrdiff_t total = static_cast<std::ptrdiff_t>((out_len - 1) * stride) +
                                 kernel_length - static_cast<std::ptrdiff_t>(input_length);
    return total > 0 ? static_cast<std::size_t>(total) / 2 : 0;
  }
};

/// Kernel tensor layout: Grid of shape (K * Cin) x Cout, entry
/// (k, ic, oc) at row k * Cin + ic, column oc.
template <typename T>
Grid<T> make_kernel(int kernel_length, int in_channels, int out_channels, T fill = T{}) {
  return Grid<T>(static_cast<std::size_t>(kernel_length) * in_channels, out_channels, fill);
}

template <typename T>
void check_conv_args(const Grid<T>& input, const Grid<T>& kernel, const Grid<T>& bias,
                     const ConvSpec& spec) {
  spec.validate();
  if (input.channels() != static_cast<std::size_t>(spec.in_channels)) {
    throw ShapeError("conv1d: expected " + std::to_string(spec.in_channels) +
                     " input channels, got " + std::to_string(input.channels()));
  }
  if (kernel.length() != static_cast<std::size_t>(spec.kernel_length) * spec.in_channels ||
      kernel.channels() != static_cast<std::size_t>(spec.out_channels)) {
    throw ShapeError("conv1d: kernel shape " + kernel.shape_str() + ", expected " +
                     std::to_string(spec.kernel_length * spec.in_channels) + "x" +
                     std::to_string(spec.out_channels));
  }
  if (bias.length() != 1 || bias.channels() != static_cast<std::size_t>(spec.out_channels)) {
    throw ShapeError("conv1d: bias shape " + bias.shape_str() + ", expected 1x" +
                     std::to_string(spec.out_channels));
  }
}

/// Cross-correlation (no kernel flip) with same-zero padding.
template <typename T>
Grid<T> conv1d(const Grid<T>& input, const Grid<T>& kernel, const Grid<T>& bias,
               const ConvSpec& spec) {
  check_conv_args(input, kernel, bias, spec);
  const std::size_t L = input.length();
  const std::size_t out_len = spec.output_length(L);
  const std::ptrdiff_t left = static_cast<std::ptrdiff_t>(spec.left_pad(L));
  const int K = spec.kernel_length;
  const int cin = spec.in_channels;
  const int cout = spec.out_channels;

  Grid<T> out(out_len, cout);
  const T* x = input.data();
  const T* w = kernel.data();
  T* y = out.data();
  for (std::size_t i = 0; i < out_len; ++i) {
    T* yrow = y + i * cout;
    for (int oc = 0; oc < cout; ++oc) yrow[oc] = bias(0, oc);
    for (int k = 0; k < K; ++k) {
      const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) * spec.stride + k - left;
      if (j < 0 || j >= static_cast<std::ptrdiff_t>(L)) continue;
      const T* xrow = x + j * cin;
      const T* wrow = w + static_cast<std::size_t>(k) * cin * cout;
      for (int ic = 0; ic < cin; ++ic) {
        const T xv = xrow[ic];
        const T* wv = wrow + static_cast<std::size_t>(ic) * cout;
        for (int oc = 0; oc < cout; ++oc) yrow[oc] += xv * wv[oc];
      }
    }
  }
  return out;
}

template <typename T>
struct ConvGrads {
  Grid<T> input;
  Grid<T> kernel;
  Grid<T> bias;
};

template <typename T>
ConvGrads<T> conv1d_backward(const Grid<T>& upstream, const Grid<T>& input,
                             const Grid<T>& kernel, const ConvSpec& spec) {
  const std::size_t L = input.length();
  const std::size_t out_len = spec.output_length(L);
  if (upstream.length() != out_len ||
      upstream.channels() != static_cast<std::size_t>(spec.out_channels)) {
    throw ShapeError("conv1d_backward: upstream shape " + upstream.shape_str() +
                     ", expected " + std::to_string(out_len) + "x" +
                     std::to_string(spec.out_channels));
  }
  const std::ptrdiff_t left = static_cast<std::ptrdiff_t>(spec.left_pad(L));
  const int K = spec.kernel_length;
  const int cin = spec.in_channels;
  const int cout = spec.out_channels;

  ConvGrads<T> g{input.zeros_like(), kernel.zeros_like(), Grid<T>(1, cout)};
  const T* x = input.data();
  const T* w = kernel.data();
  const T* up = upstream.data();
  T* dx = g.input.data();
  T* dw = g.kernel.data();

  for (std::size_t i = 0; i < out_len; ++i) {
    const T* uprow = up + i * cout;
    for (int oc = 0; oc < cout; ++oc) g.bias(0, oc) += uprow[oc];
    for (int k = 0; k < K; ++k) {
      const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) * spec.stride + k - left;
      if (j < 0 || j >= static_cast<std::ptrdiff_t>(L)) continue;
      const T* xrow = x + j * cin;
      T* dxrow = dx + j * cin;
      const T* wrow = w + static_cast<std::size_t>(k) * cin * cout;
      T* dwrow = dw + static_cast<std::size_t>(k) * cin * cout;
      for (int ic = 0; ic < cin; ++ic) {
        const T xv = xrow[ic];
        const T* wv = wrow + static_cast<std::size_t>(ic) * cout;
        T* dwv = dwrow + static_cast<std::size_t>(ic) * cout;
        T acc{};
        for (int oc = 0; oc < cout; ++oc) {
          acc += uprow[oc] * wv[oc];
          dwv[oc] += xv * uprow[oc];
        }
        dxrow[ic] += acc;
      }
    }
  }
  return g;
}

enum class Pointwise { Relu, Sigmoid };

template <typename T>
Grid<T> pointwise(const Grid<T>& input, Pointwise kind) {
  Grid<T> out = input.zeros_like();
  const T* x = input.data();
  T* y = out.data();
  const std::size_t n = input.size();
  if (kind == Pointwise::Relu) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T{} ? x[i] : T{};
  } else {
    for (std::size_t i = 0; i < n; ++i) y[i] = T{1} / (T{1} + std::exp(-x[i]));
  }
  return out;
}

/// relu'(0) := 0. Sigmoid gradient uses the saved forward output.
template <typename T>
Grid<T> pointwise_backward(const Grid<T>& upstream, const Grid<T>& input,
                           const Grid<T>& output, Pointwise kind) {
  require_same_shape(input, upstream, "pointwise_backward");
  Grid<T> dx = input.zeros_like();
  const std::size_t n = input.size();
  const T* up = upstream.data();
  T* d = dx.data();
  if (kind == Pointwise::Relu) {
    const T* x = input.data();
    for (std::size_t i = 0; i < n; ++i) d[i] = x[i] > T{} ? up[i] : T{};
  } else {
    const T* y = output.data();
    for (std::size_t i = 0; i < n; ++i) d[i] = up[i] * y[i] * (T{1} - y[i]);
  }
  return dx;
}

/// y = Wx + b. x is (N,1); W is (M,N); b is (M,1).
template <typename T>
Grid<T> fully_connected(const Grid<T>& x, const Grid<T>& weights, const Grid<T>& bias) {
  if (x.channels() != 1 || bias.channels() != 1) {
    throw ShapeError("fully_connected: x and bias must be column vectors");
  }
  if (weights.channels() != x.length() || weights.length() != bias.length()) {
    throw ShapeError("fully_connected: weights " + weights.shape_str() + " vs x " +
                     x.shape_str() + ", bias " + bias.shape_str());
  }
  const std::size_t m = weights.length();
  const std::size_t n = x.length();
  Grid<T> y(m, 1);
  for (std::size_t o = 0; o < m; ++o) {
    T acc = bias(o, 0);
    const T* wrow = weights.data() + o * n;
    for (std::size_t i = 0; i < n; ++i) acc += wrow[i] * x(i, 0);
    y(o, 0) = acc;
  }
  return y;
}

template <typename T>
struct FcGrads {
  Grid<T> input;
  Grid<T> weights;
  Grid<T> bias;
};

template <typename T>
FcGrads<T> fully_connected_backward(const Grid<T>& upstream, const Grid<T>& x,
                                    const Grid<T>& weights) {
  const std::size_t m = weights.length();
  const std::size_t n = x.length();
  if (upstream.length() != m || upstream.channels() != 1) {
    throw ShapeError("fully_connected_backward: upstream " + upstream.shape_str());
  }
  FcGrads<T> g{x.zeros_like(), weights.zeros_like(), Grid<T>(m, 1)};
  for (std::size_t o = 0; o < m; ++o) {
    const T u = upstream(o, 0);
    g.bias(o, 0) = u;
    const T* wrow = weights.data() + o * n;
    T* dwrow = g.weights.data() + o * n;
    for (std::size_t i = 0; i < n; ++i) {
      dwrow[i] = u * x(i, 0);
      g.input(i, 0) += u * wrow[i];
    }
  }
  return g;
}

/// Bin b covers input rows [floor(b*L/T), floor((b+1)*L/T)).
template <typename T>
Grid<T> adaptive_avg_pool(const Grid<T>& input, std::size_t target_length) {
  const std::size_t L = input.length();
  const std::size_t C = input.channels();
  if (target_length < 1 || target_length > L) {
    throw ShapeError("adaptive_avg_pool: target " + std::to_string(target_length) +
                     " out of range for L=" + std::to_string(L));
  }
  Grid<T> out(target_length, C);
  for (std::size_t b = 0; b < target_length; ++b) {
    const std::size_t lo = b * L / target_length;
    const std::size_t hi = (b + 1) * L / target_length;
    const T inv = T{1} / static_cast<T>(hi - lo);
    for (std::size_t c = 0; c < C; ++c) {
      T acc{};
      for (std::size_t l = lo; l < hi; ++l) acc += input(l, c);
      out(b, c) = acc * inv;
    }
  }
  return out;
}

template <typename T>
Grid<T> adaptive_avg_pool_backward(const Grid<T>& upstream, std::size_t input_length) {
  const std::size_t tl = upstream.length();
  const std::size_t C = upstream.channels();
  Grid<T> dx(input_length, C);
  for (std::size_t b = 0; b < tl; ++b) {
    const std::size_t lo = b * input_length / tl;
    const std::size_t hi = (b + 1) * input_length / tl;
    const T inv = T{1} / static_cast<T>(hi - lo);
    for (std::size_t c = 0; c < C; ++c) {
      const T u = upstream(b, c) * inv;
      for (std::size_t l = lo; l < hi; ++l) dx(l, c) += u;
    }
  }
  return dx;
}

/// Nearest-neighbour, each sample repeated once: length L -> 2L.
template <typename T>
Grid<T> upsample2x(const Grid<T>& input) {
  const std::size_t L = input.length();
  const std::size_t C = input.channels();
  Grid<T> out(2 * L, C);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t c = 0; c < C; ++c) {
      out(2 * l, c) = input(l, c);
      out(2 * l + 1, c) = input(l, c);
    }
  }
  return out;
}

template <typename T>
Grid<T> upsample2x_backward(const Grid<T>& upstream) {
  const std::size_t L2 = upstream.length();
  if (L2 % 2 != 0) throw ShapeError("upsample2x_backward: odd upstream length");
  Grid<T> dx(L2 / 2, upstream.channels());
  for (std::size_t l = 0; l < L2 / 2; ++l) {
    for (std::size_t c = 0; c < upstream.channels(); ++c) {
      dx(l, c) = upstream(2 * l, c) + upstream(2 * l + 1, c);
    }
  }
  return dx;
}

template <typename T>
Grid<T> concat_channels(const Grid<T>& a, const Grid<T>& b) {
  if (a.length() != b.length()) {
    throw ShapeError("concat_channels: lengths " + std::to_string(a.length()) + " vs " +
                     std::to_string(b.length()));
  }
  Grid<T> out(a.length(), a.channels() + b.channels());
  for (std::size_t l = 0; l < a.length(); ++l) {
    for (std::size_t c = 0; c < a.channels(); ++c) out(l, c) = a(l, c);
    for (std::size_t c = 0; c < b.channels(); ++c) out(l, a.channels() + c) = b(l, c);
  }
  return out;
}

template <typename T>
Grid<T> add(const Grid<T>& a, const Grid<T>& b) {
  require_same_shape(a, b, "add");
  Grid<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.raw()[i] += b.raw()[i];
  return out;
}

/// Per-channel gate: out[l,c] = feature[l,c] * w[0,c].
template <typename T>
Grid<T> scale_channels(const Grid<T>& feature, const Grid<T>& channel_weights) {
  if (channel_weights.length() != 1 || channel_weights.channels() != feature.channels()) {
    throw ShapeError("scale_channels: weights " + channel_weights.shape_str() +
                     " vs feature " + feature.shape_str());
  }
  Grid<T> out = feature.zeros_like();
  for (std::size_t l = 0; l < feature.length(); ++l) {
    for (std::size_t c = 0; c < feature.channels(); ++c) {
      out(l, c) = feature(l, c) * channel_weights(0, c);
    }
  }
  return out;
}

template <typename T>
struct ScaleGrads {
  Grid<T> feature;
  Grid<T> weights;
};

template <typename T>
ScaleGrads<T> scale_channels_backward(const Grid<T>& upstream, const Grid<T>& feature,
                                      const Grid<T>& channel_weights) {
  ScaleGrads<T> g{feature.zeros_like(), channel_weights.zeros_like()};
  for (std::size_t l = 0; l < feature.length(); ++l) {
    for (std::size_t c = 0; c < feature.channels(); ++c) {
      g.feature(l, c) = upstream(l, c) * channel_weights(0, c);
      g.weights(0, c) += upstream(l, c) * feature(l, c);
    }
  }
  return g;
}

/// Row-major flatten (L,C) -> (L*C, 1).
template <typename T>
Grid<T> flatten(const Grid<T>& input) {
  return Grid<T>(input.size(), 1, input.raw());
}

template <typename T>
Grid<T> softmax(const Grid<T>& logits) {
  if (logits.channels() != 1) throw ShapeError("softmax: expected column vector");
  Grid<T> p = logits.zeros_like();
  T mx = logits(0, 0);
  for (std::size_t i = 1; i < logits.length(); ++i) mx = std::max(mx, logits(i, 0));
  T total{};
  for (std::size_t i = 0; i < logits.length(); ++i) {
    p(i, 0) = std::exp(logits(i, 0) - mx);
    total += p(i, 0);
  }
  for (std::size_t i = 0; i < logits.length(); ++i) p(i, 0) /= total;
  return p;
}

template <typename T>
struct SoftmaxXent {
  T loss;
  Grid<T> probs;  // (num_classes, 1)
};

/// loss = -log P[label]; gradient w.r.t. logits = P - onehot(label).
template <typename T>
SoftmaxXent<T> softmax_xent(const Grid<T>& logits, int label) {
  if (label < 0 || label >= static_cast<int>(logits.length())) {
    throw ContractError("softmax_xent: label " + std::to_string(label) + " out of range");
  }
  SoftmaxXent<T> r{T{}, softmax(logits)};
  r.loss = -std::log(r.probs(label, 0));
  return r;
}

template <typename T>
Grid<T> softmax_xent_backward(const Grid<T>& probs, int label, T upstream = T{1}) {
  Grid<T> g = probs;
  g(label, 0) -= T{1};
  for (std::size_t i = 0; i < g.length(); ++i) g(i, 0) *= upstream;
  return g;
}

template <typename T>
struct DropoutResult {
  Grid<T> output;
  std::vector<std::uint8_t> mask;  // 1 = kept
};

/// Inverted dropout: survivors scaled by 1/(1-p) so eval is identity.
template <typename T>
DropoutResult<T> dropout(const Grid<T>& input, double p, Rng& rng, bool training) {
  if (p < 0.0 || p >= 1.0) {
    throw ContractError("dropout: p must be in [0,1), got " + std::to_string(p));
  }
  if (!training || p == 0.0) {
    return {input, std::vector<std::uint8_t>(input.size(), 1)};
  }
  DropoutResult<T> r{input.zeros_like(), std::vector<std::uint8_t>(input.size(), 0)};
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (unif(rng) >= p) {
      r.mask[i] = 1;
      r.output.raw()[i] = input.raw()[i] * scale;
    }
  }
  return r;
}

template <typename T>
Grid<T> dropout_backward(const Grid<T>& upstream, const std::vector<std::uint8_t>& mask,
                         double p, bool training) {
  if (!training || p == 0.0) return upstream;
  Grid<T> dx = upstream.zeros_like();
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    if (mask[i]) dx.raw()[i] = upstream.raw()[i] * scale;
  }
  return dx;
}

template <typename T>
struct BnForward {
  std::vector<Grid<T>> output;
  Grid<T> batch_mean;  // stats actually used for normalization
  Grid<T> batch_var;   // biased (1/N) variance
};

inline constexpr double kBnEps = 1e-5;

/// Normalizes each channel over (batch x length), then applies gamma/beta.
/// Training mode uses batch statistics and folds them into the running
/// stats with the given momentum; eval mode uses the running stats as-is.
template <typename T>
BnForward<T> batch_norm(std::span<const Grid<T>> input, const Grid<T>& gamma,
                        const Grid<T>& beta, Grid<T>& running_mean, Grid<T>& running_var,
                        bool training, T momentum = T{0.9}) {
  if (input.empty()) throw ShapeError("batch_norm: empty batch");
  const std::size_t C = input[0].channels();
  if (gamma.channels() != C || beta.channels() != C) {
    throw ShapeError("batch_norm: gamma/beta channel mismatch");
  }
  if (training && input.size() < 2) {
    throw ContractError("batch_norm: training mode requires batch >= 2, got " +
                        std::to_string(input.size()));
  }
  BnForward<T> r;
  r.batch_mean = Grid<T>(1, C);
  r.batch_var = Grid<T>(1, C);

  if (training) {
    std::size_t count = 0;
    for (const auto& g : input) {
      if (g.channels() != C) throw ShapeError("batch_norm: ragged batch channels");
      count += g.length();
    }
    const T inv = T{1} / static_cast<T>(count);
    for (const auto& g : input) {
      for (std::size_t l = 0; l < g.length(); ++l) {
        for (std::size_t c = 0; c < C; ++c) r.batch_mean(0, c) += g(l, c);
      }
    }
    for (std::size_t c = 0; c < C; ++c) r.batch_mean(0, c) *= inv;
    for (const auto& g : input) {
      for (std::size_t l = 0; l < g.length(); ++l) {
        for (std::size_t c = 0; c < C; ++c) {
          const T d = g(l, c) - r.batch_mean(0, c);
          r.batch_var(0, c) += d * d;
        }
      }
    }
    for (std::size_t c = 0; c < C; ++c) r.batch_var(0, c) *= inv;
    for (std::size_t c = 0; c < C; ++c) {
      running_mean(0, c) =
          momentum * running_mean(0, c) + (T{1} - momentum) * r.batch_mean(0, c);
      running_var(0, c) = momentum * running_var(0, c) + (T{1} - momentum) * r.batch_var(0, c);
    }
  } else {
    r.batch_mean = running_mean;
    r.batch_var = running_var;
  }

  r.output.reserve(input.size());
  for (const auto& g : input) {
    Grid<T> out = g.zeros_like();
    for (std::size_t c = 0; c < C; ++c) {
      const T inv_std = T{1} / std::sqrt(r.batch_var(0, c) + static_cast<T>(kBnEps));
      const T gm = gamma(0, c) * inv_std;
      const T bt = beta(0, c) - gm * r.batch_mean(0, c);
      for (std::size_t l = 0; l < g.length(); ++l) out(l, c) = gm * g(l, c) + bt;
    }
    r.output.push_back(std::move(out));
  }
  return r;
}

template <typename T>
struct BnGrads {
  std::vector<Grid<T>> input;
  Grid<T> gamma;
  Grid<T> beta;
};

/// Backward through training-mode batch_norm (batch statistics on the path).
template <typename T>
BnGrads<T> batch_norm_backward(std::span<const Grid<T>> upstream,
                               std::span<const Grid<T>> input, const Grid<T>& gamma,
                               const Grid<T>& batch_mean, const Grid<T>& batch_var) {
  const std::size_t C = gamma.channels();
  std::size_t count = 0;
  for (const auto& g : input) count += g.length();
  const T inv_n = T{1} / static_cast<T>(count);

  // Per-channel reductions: sum(up) and sum(up * xhat).
  Grid<T> sum_up(1, C);
  Grid<T> sum_up_xhat(1, C);
  std::vector<T> inv_std(C);
  for (std::size_t c = 0; c < C; ++c) {
    inv_std[c] = T{1} / std::sqrt(batch_var(0, c) + static_cast<T>(kBnEps));
  }
  for (std::size_t b = 0; b < input.size(); ++b) {
    for (std::size_t l = 0; l < input[b].length(); ++l) {
      for (std::size_t c = 0; c < C; ++c) {
        const T xhat = (input[b](l, c) - batch_mean(0, c)) * inv_std[c];
        sum_up(0, c) += upstream[b](l, c);
        sum_up_xhat(0, c) += upstream[b](l, c) * xhat;
      }
    }
  }

  BnGrads<T> g;
  g.gamma = sum_up_xhat;
  g.beta = sum_up;
  g.input.reserve(input.size());
  for (std::size_t b = 0; b < input.size(); ++b) {
    Grid<T> dx = input[b].zeros_like();
    for (std::size_t c = 0; c < C; ++c) {
      const T k = gamma(0, c) * inv_std[c];
      for (std::size_t l = 0; l < input[b].length(); ++l) {
        const T xhat = (input[b](l, c) - batch_mean(0, c)) * inv_std[c];
        dx(l, c) = k * (upstream[b](l, c) - inv_n * sum_up(0, c) -
                        xhat * inv_n * sum_up_xhat(0, c));
      }
    }
    g.input.push_back(std::move(dx));
  }
  return g;
}

/// Mean over each window of `window` rows, stride = window, partial tail
/// window averaged over its actual size. Output length = ceil(L/window).
template <typename T>
Grid<T> avg_pool(const Grid<T>& input, std::size_t window) {
  const std::size_t L = input.length();
  const std::size_t C = input.channels();
  const std::size_t out_len = (L + window - 1) / window;
  Grid<T> out(out_len, C);
  for (std::size_t b = 0; b < out_len; ++b) {
    const std::size_t lo = b * window;
    const std::size_t hi = std::min(L, lo + window);
    const T inv = T{1} / static_cast<T>(hi - lo);
    for (std::size_t c = 0; c < C; ++c) {
      T acc{};
      for (std::size_t l = lo; l < hi; ++l) acc += input(l, c);
      out(b, c) = acc * inv;
    }
  }
  return out;
}

template <typename T>
Grid<T> avg_pool_backward(const Grid<T>& upstream, std::size_t input_length,
                          std::size_t window) {
  Grid<T> dx(input_length, upstream.channels());
  for (std::size_t b = 0; b < upstream.length(); ++b) {
    const std::size_t lo = b * window;
    const std::size_t hi = std::min(input_length, lo + window);
    const T inv = T{1} / static_cast<T>(hi - lo);
    for (std::size_t c = 0; c < upstream.channels(); ++c) {
      const T u = upstream(b, c) * inv;
      for (std::size_t l = lo; l < hi; ++l) dx(l, c) += u;
    }
  }
  return dx;
}

/// Zero-mean normal draws with stddev sqrt(2 / fan_in).
template <typename T>
Grid<T> he_init(std::size_t length, std::size_t channels, std::size_t fan_in, Rng& rng) {
  if (fan_in < 1) throw ContractError("he_init: fan_in must be >= 1");
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  Grid<T> g(length, channels);
  for (std::size_t i = 0; i < g.size(); ++i) g.raw()[i] = static_cast<T>(normal(rng));
  return g;
}

}  // namespace mrnet::ops
