// Criterion 1: every differentiable operation agrees with central finite
// differences (h = 1e-5, 64-bit) within 1e-4 relative error over 100
// randomized shapes/seeds, and an end-to-end reduced-model check holds
// within 1e-3. The whole suite must finish in under two minutes.

#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "../oracles.hpp"
#include "mrnet/network.hpp"
#include "mrnet/ops.hpp"
#include "mrnet/tape.hpp"

namespace {

using mrnet::Grid;
using mrnet::Tape;
namespace ops = mrnet::ops;

constexpr double kOpTol = 1e-4;
constexpr int kSeeds = 100;

Grid<double> random_grid(std::size_t l, std::size_t c, ops::Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Grid<double> g(l, c);
  for (auto& v : g.raw()) v = normal(rng);
  return g;
}

struct ShapeDraw {
  std::size_t L;
  std::size_t C;
};

ShapeDraw draw_shape(ops::Rng& rng) {
  return {3 + rng() % 62, 1 + rng() % 8};
}

double probe_sum(const Grid<double>& out, const Grid<double>& probe) {
  double acc = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) acc += out.raw()[i] * probe.raw()[i];
  return acc;
}

void expect_fd(const std::function<double()>& loss, std::span<double> x,
               std::span<const double> analytic, const char* what, int seed) {
  const auto fd = oracle::fd_gradient(loss, x);
  EXPECT_LT(oracle::max_grad_rel_error(analytic, fd), kOpTol)
      << what << " seed " << seed;
}

TEST(Criterion1_Gradients, EveryOperationMatchesFiniteDifferences) {
  const auto t0 = std::chrono::steady_clock::now();

  for (int seed = 0; seed < kSeeds; ++seed) {
    ops::Rng rng(1000 + seed);
    const auto [L, C] = draw_shape(rng);

    {  // conv1d over inputs, kernel, and bias, random stride.
      const int k = 1 + static_cast<int>(rng() % 9);
      const int cout = 1 + static_cast<int>(rng() % 8);
      const int stride = 1 + static_cast<int>(rng() % 3);
      const ops::ConvSpec spec{k, static_cast<int>(C), cout, stride};
      auto input = random_grid(L, C, rng);
      auto kernel = random_grid(static_cast<std::size_t>(k) * C, cout, rng);
      auto bias = random_grid(1, cout, rng);
      const auto probe = random_grid(spec.output_length(L), cout, rng);
      auto loss = [&] { return probe_sum(ops::conv1d(input, kernel, bias, spec), probe); };
      auto g = ops::conv1d_backward(probe, input, kernel, spec);
      expect_fd(loss, input.raw(), g.input.raw(), "conv1d/input", seed);
      expect_fd(loss, kernel.raw(), g.kernel.raw(), "conv1d/kernel", seed);
      expect_fd(loss, bias.raw(), g.bias.raw(), "conv1d/bias", seed);
    }

    {  // relu, inputs kept away from the kink.
      auto input = random_grid(L, C, rng);
      for (auto& v : input.raw()) {
        if (std::abs(v) < 1e-3) v = v < 0 ? v - 0.1 : v + 0.1;
      }
      const auto probe = random_grid(L, C, rng);
      auto loss = [&] {
        return probe_sum(ops::pointwise(input, ops::Pointwise::Relu), probe);
      };
      auto out = ops::pointwise(input, ops::Pointwise::Relu);
      auto g = ops::pointwise_backward(probe, input, out, ops::Pointwise::Relu);
      expect_fd(loss, input.raw(), g.raw(), "relu", seed);
    }

    {  // sigmoid.
      auto input = random_grid(L, C, rng, 2.0);
      const auto probe = random_grid(L, C, rng);
      auto loss = [&] {
        return probe_sum(ops::pointwise(input, ops::Pointwise::Sigmoid), probe);
      };
      auto out = ops::pointwise(input, ops::Pointwise::Sigmoid);
      auto g = ops::pointwise_backward(probe, input, out, ops::Pointwise::Sigmoid);
      expect_fd(loss, input.raw(), g.raw(), "sigmoid", seed);
    }

    {  // fully connected.
      const std::size_t out_dim = 1 + rng() % 8;
      auto x = random_grid(L, 1, rng);
      auto w = random_grid(out_dim, L, rng);
      auto b = random_grid(out_dim, 1, rng);
      const auto probe = random_grid(out_dim, 1, rng);
      auto loss = [&] { return probe_sum(ops::fully_connected(x, w, b), probe); };
      auto g = ops::fully_connected_backward(probe, x, w);
      expect_fd(loss, x.raw(), g.input.raw(), "fc/input", seed);
      expect_fd(loss, w.raw(), g.weights.raw(), "fc/weights", seed);
      expect_fd(loss, b.raw(), g.bias.raw(), "fc/bias", seed);
    }

    {  // adaptive average pooling.
      const std::size_t target = 1 + rng() % L;
      auto input = random_grid(L, C, rng);
      const auto probe = random_grid(target, C, rng);
      auto loss = [&] { return probe_sum(ops::adaptive_avg_pool(input, target), probe); };
      auto g = ops::adaptive_avg_pool_backward(probe, L);
      expect_fd(loss, input.raw(), g.raw(), "adaptive_avg_pool", seed);
    }

    {  // nearest upsample and window-2 average pool.
      auto input = random_grid(L, C, rng);
      const auto probe_up = random_grid(2 * L, C, rng);
      auto loss_up = [&] { return probe_sum(ops::upsample2x(input), probe_up); };
      expect_fd(loss_up, input.raw(), ops::upsample2x_backward(probe_up).raw(),
                "upsample2x", seed);

      const auto probe_pool = random_grid((L + 1) / 2, C, rng);
      auto loss_pool = [&] { return probe_sum(ops::avg_pool(input, 2), probe_pool); };
      expect_fd(loss_pool, input.raw(), ops::avg_pool_backward(probe_pool, L, 2).raw(),
                "avg_pool", seed);
    }

    {  // softmax cross-entropy over the 5-way head.
      auto logits = random_grid(5, 1, rng, 2.0);
      const int label = static_cast<int>(rng() % 5);
      auto loss = [&] { return ops::softmax_xent(logits, label).loss; };
      auto r = ops::softmax_xent(logits, label);
      auto g = ops::softmax_xent_backward(r.probs, label);
      expect_fd(loss, logits.raw(), g.raw(), "softmax_xent", seed);
    }

    {  // channel gate.
      auto feature = random_grid(L, C, rng);
      auto gate = random_grid(1, C, rng);
      const auto probe = random_grid(L, C, rng);
      auto loss = [&] { return probe_sum(ops::scale_channels(feature, gate), probe); };
      auto g = ops::scale_channels_backward(probe, feature, gate);
      expect_fd(loss, feature.raw(), g.feature.raw(), "scale_channels/feature", seed);
      expect_fd(loss, gate.raw(), g.weights.raw(), "scale_channels/gate", seed);
    }

    {  // dropout with a seed-pinned mask.
      const std::uint64_t mask_seed = rng();
      auto input = random_grid(L, C, rng);
      const auto probe = random_grid(L, C, rng);
      auto loss = [&] {
        ops::Rng mask_rng(mask_seed);
        return probe_sum(ops::dropout(input, 0.3, mask_rng, true).output, probe);
      };
      ops::Rng mask_rng(mask_seed);
      auto fwd = ops::dropout(input, 0.3, mask_rng, true);
      auto g = ops::dropout_backward(probe, fwd.mask, 0.3, true);
      expect_fd(loss, input.raw(), g.raw(), "dropout", seed);
    }

    {  // batch normalization, training mode, batch of 2 or 3.
      const std::size_t B = 2 + rng() % 2;
      std::vector<Grid<double>> batch, probes;
      for (std::size_t b = 0; b < B; ++b) {
        batch.push_back(random_grid(L, C, rng));
        probes.push_back(random_grid(L, C, rng));
      }
      auto gamma = random_grid(1, C, rng);
      auto beta = random_grid(1, C, rng);
      auto loss = [&] {
        Grid<double> rm(1, C);
        Grid<double> rv(1, C, 1.0);
        auto r = ops::batch_norm<double>(batch, gamma, beta, rm, rv, true);
        double acc = 0.0;
        for (std::size_t b = 0; b < B; ++b) acc += probe_sum(r.output[b], probes[b]);
        return acc;
      };
      Grid<double> rm(1, C);
      Grid<double> rv(1, C, 1.0);
      auto fwd = ops::batch_norm<double>(batch, gamma, beta, rm, rv, true);
      auto g = ops::batch_norm_backward<double>(probes, batch, gamma, fwd.batch_mean,
                                                fwd.batch_var);
      for (std::size_t b = 0; b < B; ++b) {
        expect_fd(loss, batch[b].raw(), g.input[b].raw(), "batch_norm/input", seed);
      }
      expect_fd(loss, gamma.raw(), g.gamma.raw(), "batch_norm/gamma", seed);
      expect_fd(loss, beta.raw(), g.beta.raw(), "batch_norm/beta", seed);
    }
  }

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(elapsed, 120.0) << "gradient op suite too slow";
}

TEST(Criterion1_Gradients, ReducedModelEndToEndWithinOneEThreeRelative) {
  const auto t0 = std::chrono::steady_clock::now();

  mrnet::ModelConfig cfg;
  cfg.backbone.input_length = 96;
  cfg.backbone.num_blocks = 3;
  cfg.backbone.kernel_length = 8;
  cfg.backbone.base_channels = 2;
  cfg.backbone.subsample_blocks = {1, 2, 3};
  cfg.backbone.dropout_p = 0.0;
  cfg.pyramid.tap_blocks = {1, 2, 3};
  cfg.acf.bottleneck_ratio = 2;
  cfg.head.hidden_sizes = {6};
  mrnet::Model<double> model(cfg, 404);

  ops::Rng data_rng(405);
  std::vector<Grid<double>> batch{random_grid(96, 1, data_rng),
                                  random_grid(96, 1, data_rng)};
  std::vector<int> labels{3, 1};

  auto loss_value = [&] {
    Tape<double> tape;
    ops::Rng rng(1);
    auto in = tape.leaf(batch);
    auto f = model.forward(tape, in, true, rng);
    auto losses = tape.softmax_xent(f.logits, labels);
    auto loss = tape.batch_mean(losses);
    return tape.value(loss)[0](0, 0);
  };

  model.zero_grads();
  {
    Tape<double> tape;
    ops::Rng rng(1);
    auto in = tape.leaf(batch);
    auto f = model.forward(tape, in, true, rng);
    auto losses = tape.softmax_xent(f.logits, labels);
    auto loss = tape.batch_mean(losses);
    tape.backward(loss);
    model.collect_grads(tape, f);
  }

  // Broad randomized coverage: several entries from every parameter tensor.
  std::mt19937_64 pick(406);
  int checked = 0;
  double worst = 0.0;
  for (auto& p : model.parameters()) {
    if (!p.trainable) continue;
    const int reps = p.value.size() < 4 ? static_cast<int>(p.value.size()) : 4;
    for (int rep = 0; rep < reps; ++rep) {
      const std::size_t i = pick() % p.value.size();
      const double keep = p.value.raw()[i];
      const double h = 1e-5;
      p.value.raw()[i] = keep + h;
      const double up = loss_value();
      p.value.raw()[i] = keep - h;
      const double down = loss_value();
      p.value.raw()[i] = keep;
      const double fd = (up - down) / (2 * h);
      const double err = oracle::grad_rel_error(p.grad.raw()[i], fd);
      worst = std::max(worst, err);
      EXPECT_LT(err, 1e-3) << p.name << "[" << i << "]";
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(elapsed, 120.0) << "end-to-end gradient check too slow";
}

}  // namespace
