#include "mrnet/tape.hpp"

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

namespace {

using mrnet::Grid;
using mrnet::Tape;
namespace ops = mrnet::ops;

Grid<double> random_grid(std::size_t l, std::size_t c, ops::Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Grid<double> g(l, c);
  for (auto& v : g.raw()) v = normal(rng);
  return g;
}

TEST(Tape, GradientsAccumulateAcrossSharedUses) {
  Tape<double> tape;
  auto x = tape.leaf(Grid<double>(1, 1, {3.0}));
  auto y = tape.add(x, x);  // y = 2x
  tape.backward(y);
  EXPECT_DOUBLE_EQ(tape.grad(x)[0](0, 0), 2.0);
}

TEST(Tape, BackwardThroughConvReluSum) {
  Tape<double> tape;
  auto x = tape.leaf(Grid<double>::vector({1.0, -2.0, 3.0}));
  auto w = tape.leaf(Grid<double>(1, 1, {1.0}));
  auto b = tape.leaf(Grid<double>(1, 1, {0.0}));
  auto y = tape.conv1d(x, w, b, ops::ConvSpec{1, 1, 1, 1});
  y = tape.pointwise(y, ops::Pointwise::Relu);
  // Reduce to scalar via a pool over all rows then flatten stays 1x1.
  y = tape.adaptive_avg_pool(y, 1);
  tape.backward(y);
  // relu kills the -2 path; pool contributes 1/3 each.
  EXPECT_DOUBLE_EQ(tape.grad(x)[0](0, 0), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(tape.grad(x)[0](1, 0), 0.0);
  EXPECT_DOUBLE_EQ(tape.grad(x)[0](2, 0), 1.0 / 3.0);
}

TEST(Tape, BatchMeanDistributesGradient) {
  Tape<double> tape;
  std::vector<Grid<double>> batch;
  batch.emplace_back(1, 1, std::vector<double>{2.0});
  batch.emplace_back(1, 1, std::vector<double>{4.0});
  auto x = tape.leaf(std::move(batch));
  auto m = tape.batch_mean(x);
  EXPECT_DOUBLE_EQ(tape.value(m)[0](0, 0), 3.0);
  tape.backward(m);
  EXPECT_DOUBLE_EQ(tape.grad(x)[0](0, 0), 0.5);
  EXPECT_DOUBLE_EQ(tape.grad(x)[1](0, 0), 0.5);
}

TEST(Tape, SoftmaxXentGradientMatchesClosedForm) {
  Tape<double> tape;
  ops::Rng rng(5);
  auto logits_grid = random_grid(5, 1, rng);
  auto logits = tape.leaf(logits_grid);
  std::vector<int> labels{3};
  auto loss = tape.softmax_xent(logits, labels);
  tape.backward(loss);
  auto p = ops::softmax(logits_grid);
  for (int i = 0; i < 5; ++i) {
    const double want = p(i, 0) - (i == 3 ? 1.0 : 0.0);
    EXPECT_NEAR(tape.grad(logits)[0](i, 0), want, 1e-12);
  }
}

// Composite graph: conv -> bn -> relu -> pool -> fc -> xent, batch of 2,
// checked against finite differences through the whole tape.
TEST(Tape, CompositeGraphMatchesFiniteDifferences) {
  ops::Rng rng(42);
  std::vector<Grid<double>> inputs{random_grid(8, 2, rng), random_grid(8, 2, rng)};
  auto kernel = random_grid(3 * 2, 4, rng);
  auto kbias = random_grid(1, 4, rng);
  auto gamma = random_grid(1, 4, rng);
  auto beta = random_grid(1, 4, rng);
  auto fc_w = random_grid(5, 8, rng);  // pool to 2 rows x 4 ch = 8 flat
  auto fc_b = random_grid(5, 1, rng);
  std::vector<int> labels{1, 4};
  const ops::ConvSpec spec{3, 2, 4, 2};

  auto run = [&](bool want_backward, std::vector<std::vector<double>>* grads_out) {
    Tape<double> tape;
    auto in = tape.leaf(inputs);
    auto w = tape.leaf(kernel);
    auto b = tape.leaf(kbias);
    auto g = tape.leaf(gamma);
    auto bt = tape.leaf(beta);
    auto fw = tape.leaf(fc_w);
    auto fb = tape.leaf(fc_b);
    Grid<double> rmean(1, 4);
    Grid<double> rvar(1, 4, 1.0);
    auto y = tape.conv1d(in, w, b, spec);
    y = tape.batch_norm(y, g, bt, rmean, rvar, true);
    y = tape.pointwise(y, ops::Pointwise::Relu);
    y = tape.adaptive_avg_pool(y, 2);
    y = tape.flatten(y);
    y = tape.fully_connected(y, fw, fb);
    auto losses = tape.softmax_xent(y, labels);
    auto loss = tape.batch_mean(losses);
    if (want_backward) {
      tape.backward(loss);
      grads_out->push_back(tape.grad(w)[0].raw());
      grads_out->push_back(tape.grad(b)[0].raw());
      grads_out->push_back(tape.grad(g)[0].raw());
      grads_out->push_back(tape.grad(bt)[0].raw());
      grads_out->push_back(tape.grad(fw)[0].raw());
      grads_out->push_back(tape.grad(fb)[0].raw());
      grads_out->push_back(tape.grad(in)[0].raw());
      grads_out->push_back(tape.grad(in)[1].raw());
    }
    return tape.value(loss)[0](0, 0);
  };

  std::vector<std::vector<double>> analytic;
  run(true, &analytic);

  auto loss_fn = [&]() { return run(false, nullptr); };
  std::vector<std::vector<double>*> tensors{&kernel.raw(), &kbias.raw(), &gamma.raw(),
                                            &beta.raw(),   &fc_w.raw(),  &fc_b.raw(),
                                            &inputs[0].raw(), &inputs[1].raw()};
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    auto fd = oracle::fd_gradient(loss_fn, std::span<double>(*tensors[t]));
    EXPECT_LT(oracle::max_grad_rel_error(analytic[t], fd), 1e-4) << "tensor " << t;
  }
}

TEST(Tape, BackwardRequiresScalarRoot) {
  Tape<double> tape;
  auto x = tape.leaf(Grid<double>(3, 1, 1.0));
  EXPECT_THROW(tape.backward(x), mrnet::ShapeError);
}

TEST(Tape, ConcatSplitsGradients) {
  Tape<double> tape;
  auto a = tape.leaf(Grid<double>(2, 1, 1.0));
  auto b = tape.leaf(Grid<double>(2, 2, 1.0));
  auto cat = tape.concat_channels(a, b);
  EXPECT_EQ(tape.value(cat)[0].channels(), 3u);
  auto pooled = tape.adaptive_avg_pool(cat, 1);  // 1x3
  auto flat = tape.flatten(pooled);
  auto w = tape.leaf(Grid<double>(1, 3, {1.0, 2.0, 4.0}));
  auto bias = tape.leaf(Grid<double>(1, 1));
  auto y = tape.fully_connected(flat, w, bias);
  tape.backward(y);
  EXPECT_DOUBLE_EQ(tape.grad(a)[0](0, 0), 0.5);       // weight 1 / two rows
  EXPECT_DOUBLE_EQ(tape.grad(b)[0](0, 0), 1.0);       // weight 2 / two rows
  EXPECT_DOUBLE_EQ(tape.grad(b)[0](0, 1), 2.0);       // weight 4 / two rows
}

}  // namespace
