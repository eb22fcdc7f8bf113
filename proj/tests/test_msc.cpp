#include "mrnet/msc.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

namespace {

using mrnet::Stage;
using mrnet::StageSeq;
namespace msc = mrnet::msc;

constexpr Stage W = Stage::Wake;
constexpr Stage N1 = Stage::N1;
constexpr Stage N2 = Stage::N2;

TEST(CountTransitions, DirectCount) {
  std::vector<StageSeq> records{{W, W, N1}};
  auto counts = msc::count_transitions(records);
  EXPECT_EQ(counts.m[0][0], 1);
  EXPECT_EQ(counts.m[0][1], 1);
  EXPECT_EQ(counts.total(), 2);
}

TEST(CountTransitions, SingleEpochRecordHasNoTransitions) {
  std::vector<StageSeq> records{{N2}};
  EXPECT_EQ(msc::count_transitions(records).total(), 0);
}

TEST(CountTransitions, NeverCountsAcrossRecordBoundaries) {
  std::vector<StageSeq> records{{W, N1}, {N1, W}};
  auto counts = msc::count_transitions(records);
  EXPECT_EQ(counts.m[0][1], 1);
  EXPECT_EQ(counts.m[1][0], 1);
  EXPECT_EQ(counts.m[0][0], 0);  // no W->W from the record seam
  EXPECT_EQ(counts.m[1][1], 0);
  EXPECT_EQ(counts.total(), 2);
}

TEST(Compress, LinearRowNormalization) {
  msc::TransitionCounts counts;
  counts.m[0] = {8, 2, 0, 0, 0};
  counts.m[1] = {1, 4, 0, 0, 0};
  for (int s = 2; s < 5; ++s) counts.m[s][s] = 1;
  auto m = msc::compress(counts, msc::Compression::Linear, 1.0);
  EXPECT_NEAR(m.m[0][0], 0.8, 1e-12);
  EXPECT_NEAR(m.m[0][1], 0.2, 1e-12);
  EXPECT_NEAR(m.m[1][0], 0.2, 1e-12);
  EXPECT_NEAR(m.m[1][1], 0.8, 1e-12);
}

TEST(Compress, Log1pClosedForm) {
  // Row [8, 2]: log1p -> [ln9, ln3], and ln9 = 2 ln3, so [2/3, 1/3].
  msc::TransitionCounts counts;
  counts.m[0] = {8, 2, 0, 0, 0};
  for (int s = 1; s < 5; ++s) counts.m[s][s] = 1;
  auto m = msc::compress(counts, msc::Compression::Log1p, 1.0);
  EXPECT_NEAR(m.m[0][0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(m.m[0][1], 1.0 / 3.0, 1e-12);
}

TEST(Compress, SqrtSquaredEqualsLinear) {
  msc::TransitionCounts counts;
  std::mt19937_64 rng(5);
  for (int s = 0; s < 5; ++s) {
    for (int t = 0; t < 5; ++t) counts.m[s][t] = static_cast<std::int64_t>(rng() % 50);
    counts.m[s][s] += 1;
  }
  auto a = msc::compress(counts, msc::Compression::Sqrt, 2.0);
  auto b = msc::compress(counts, msc::Compression::Linear, 1.0);
  for (int s = 0; s < 5; ++s) {
    for (int t = 0; t < 5; ++t) EXPECT_NEAR(a.m[s][t], b.m[s][t], 1e-12);
  }
}

TEST(Compress, RowsAreStochasticAcrossTheSupportedGrid) {
  msc::TransitionCounts counts;
  std::mt19937_64 rng(17);
  for (int s = 0; s < 5; ++s) {
    for (int t = 0; t < 5; ++t) counts.m[s][t] = static_cast<std::int64_t>(rng() % 2000);
    counts.m[s][s] += 1;
  }
  for (auto g : {msc::Compression::Linear, msc::Compression::Sqrt, msc::Compression::Log1p}) {
    for (double r : {1.0, 2.0, 4.2, 6.0}) {
      auto m = msc::compress(counts, g, r);
      for (int s = 0; s < 5; ++s) {
        double total = 0.0;
        for (int t = 0; t < 5; ++t) {
          EXPECT_GE(m.m[s][t], 0.0);
          total += m.m[s][t];
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
      }
    }
  }
}

TEST(Compress, MonotonePerRowForIncreasingG) {
  msc::TransitionCounts counts;
  counts.m[0] = {500, 100, 20, 3, 0};
  for (int s = 1; s < 5; ++s) counts.m[s][s] = 1;
  for (auto g : {msc::Compression::Linear, msc::Compression::Sqrt, msc::Compression::Log1p}) {
    auto m = msc::compress(counts, g, 4.2);
    EXPECT_GT(m.m[0][0], m.m[0][1]);
    EXPECT_GT(m.m[0][1], m.m[0][2]);
    EXPECT_GT(m.m[0][2], m.m[0][3]);
    EXPECT_GT(m.m[0][3], m.m[0][4]);  // log1p maps 0 -> 0, stays below count 3
  }
}

TEST(Compress, AllZeroRowIsAnErrorUnlessSmoothed) {
  msc::TransitionCounts counts;
  counts.m[0] = {1, 1, 0, 0, 0};  // row N1.. are empty
  EXPECT_THROW(msc::compress(counts, msc::Compression::Linear, 1.0), mrnet::ContractError);
  auto m = msc::compress(counts, msc::Compression::Linear, 1.0, true);
  for (int t = 0; t < 5; ++t) EXPECT_NEAR(m.m[1][t], 0.2, 1e-12);
}

TEST(Compress, RejectsExponentBelowOne) {
  msc::TransitionCounts counts;
  for (int s = 0; s < 5; ++s) counts.m[s][s] = 1;
  EXPECT_THROW(msc::compress(counts, msc::Compression::Linear, 0.5), mrnet::ContractError);
}

TEST(Inertia, SingleLookaheadCases) {
  // n=1, a=1.5: C_{i+1} == C_{i-1} -> +1/1.5; C_{i+1} == C_i -> -1/1.5.
  StageSeq back{W, N1, W};
  EXPECT_NEAR(msc::inertia(back, 1, 1.5, 1), 1.0 / 1.5, 1e-12);
  StageSeq stay{W, N1, N1};
  EXPECT_NEAR(msc::inertia(stay, 1, 1.5, 1), -1.0 / 1.5, 1e-12);
}

TEST(Inertia, FourthOrderTermByTermSum) {
  // Lookahead (C_{i-1}, C_{i-1}, C_i, other): 1/1.5 + 1/2.25 - 1/3.375 + 0.
  StageSeq seq{W, N1, W, W, N1, N2};
  const double want = 1.0 / 1.5 + 1.0 / 2.25 - 1.0 / 3.375;
  EXPECT_NEAR(msc::inertia(seq, 1, 1.5, 4), want, 1e-12);
  EXPECT_NEAR(want, 0.8148, 2e-4);
}

TEST(Inertia, TruncatesPastTheEndOfRecord) {
  StageSeq seq{W, N1};
  EXPECT_DOUBLE_EQ(msc::inertia(seq, 1, 1.5, 4), 0.0);
  StageSeq seq2{W, N1, W};
  EXPECT_NEAR(msc::inertia(seq2, 1, 1.5, 4), 1.0 / 1.5, 1e-12);
}

TEST(Inertia, RejectsIndexZeroAndNonChangePoints) {
  StageSeq seq{W, N1, W};
  EXPECT_THROW(msc::inertia(seq, 0, 1.5, 2), mrnet::ContractError);
  StageSeq flat{W, W, W};
  EXPECT_THROW(msc::inertia(flat, 1, 1.5, 2), mrnet::ContractError);
}

msc::ProcessedMatrix wake_row_matrix() {
  msc::ProcessedMatrix m;
  m.m[0] = {0.7, 0.2, 0.05, 0.03, 0.02};
  for (int s = 1; s < 5; ++s) {
    for (int t = 0; t < 5; ++t) m.m[s][t] = (s == t) ? 0.8 : 0.05;
  }
  return m;
}

TEST(MscApply, ConstantSequenceNeverTriggers) {
  msc::PredictionSequence preds;
  for (int i = 0; i < 6; ++i) {
    preds.probs.push_back({0.9, 0.025, 0.025, 0.025, 0.025});
    preds.labels.push_back(W);
  }
  msc::MscConfig cfg;
  auto out = msc::msc_apply(preds, wake_row_matrix(), cfg);
  EXPECT_EQ(out, StageSeq(6, W));
}

TEST(MscApply, WorkedHandExampleCorrectsTheJitter) {
  // C = [W, N1, W, W, W], n=2, a=1.5, row W = [0.7, 0.2, 0.05, 0.03, 0.02]:
  // w1 = 1/1.5 + 1/2.25 = 10/9; P'1 = [0.45*0.7778, 0.55*0.2, ...] -> W.
  msc::PredictionSequence preds;
  preds.probs = {{0.9, 0.1, 0.0, 0.0, 0.0},
                 {0.45, 0.55, 0.0, 0.0, 0.0},
                 {0.9, 0.1, 0.0, 0.0, 0.0},
                 {0.9, 0.1, 0.0, 0.0, 0.0},
                 {0.9, 0.1, 0.0, 0.0, 0.0}};
  preds.labels = {W, N1, W, W, W};
  msc::MscConfig cfg;
  cfg.n = 2;
  cfg.a = 1.5;

  const double w1 = msc::inertia(preds.labels, 1, cfg.a, cfg.n);
  EXPECT_NEAR(w1, 1.1111, 1e-4);
  EXPECT_NEAR(w1, 10.0 / 9.0, 1e-9);

  auto out = msc::msc_apply(preds, wake_row_matrix(), cfg);
  EXPECT_EQ(out[1], W);
  EXPECT_EQ(out, StageSeq({W, W, W, W, W}));
}

TEST(MscApply, ChangesLabelsOnlyAtRawChangePoints) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t len = 2 + rng() % 60;
    msc::PredictionSequence preds;
    for (std::size_t i = 0; i < len; ++i) {
      std::array<double, 5> p{};
      double total = 0.0;
      for (auto& v : p) total += (v = unif(rng) + 1e-3);
      for (auto& v : p) v /= total;
      preds.probs.push_back(p);
      preds.labels.push_back(msc::PredictionSequence::argmax(p));
    }
    msc::MscConfig cfg;
    auto out = msc::msc_apply(preds, wake_row_matrix(), cfg);
    for (std::size_t i = 1; i < len; ++i) {
      if (preds.labels[i] == preds.labels[i - 1]) {
        EXPECT_EQ(out[i], preds.labels[i]);
      }
    }
    EXPECT_EQ(out[0], preds.labels[0]);
  }
}

TEST(MscApply, ScalingConfidencesUniformlyLeavesResultUnchanged) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  msc::PredictionSequence a, b;
  for (int i = 0; i < 50; ++i) {
    std::array<double, 5> p{};
    double total = 0.0;
    for (auto& v : p) total += (v = unif(rng) + 1e-3);
    for (auto& v : p) v /= total;
    a.probs.push_back(p);
    a.labels.push_back(msc::PredictionSequence::argmax(p));
    for (auto& v : p) v *= 7.3;  // not a distribution; argmax path unaffected
    b.probs.push_back(p);
    b.labels.push_back(msc::PredictionSequence::argmax(p));
  }
  msc::MscConfig cfg;
  auto matrix = wake_row_matrix();
  EXPECT_EQ(msc::msc_apply(a, matrix, cfg), msc::msc_apply(b, matrix, cfg));
}

TEST(MscApply, NonPositiveInertiaBlocksTheStayHypothesis) {
  // Lookahead keeps the new stage: w < 0, so the previous stage cannot win.
  msc::PredictionSequence preds;
  preds.probs = {{0.9, 0.1, 0.0, 0.0, 0.0},
                 {0.05, 0.9, 0.05, 0.0, 0.0},
                 {0.05, 0.9, 0.05, 0.0, 0.0},
                 {0.05, 0.9, 0.05, 0.0, 0.0}};
  preds.labels = {W, N1, N1, N1};
  msc::MscConfig cfg;
  auto out = msc::msc_apply(preds, wake_row_matrix(), cfg);
  EXPECT_NE(out[1], W);
}

TEST(MscApply, AgreesWithReferenceOnRandomSequences) {
  std::mt19937_64 rng(2025);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t len = 1 + rng() % 200;
    msc::PredictionSequence preds;
    std::vector<int> labels_int;
    for (std::size_t i = 0; i < len; ++i) {
      std::array<double, 5> p{};
      double total = 0.0;
      for (auto& v : p) total += (v = unif(rng) + 1e-6);
      for (auto& v : p) v /= total;
      preds.probs.push_back(p);
      preds.labels.push_back(msc::PredictionSequence::argmax(p));
      labels_int.push_back(static_cast<int>(preds.labels.back()));
    }
    std::array<std::array<double, 5>, 5> matrix{};
    msc::ProcessedMatrix pm;
    for (int s = 0; s < 5; ++s) {
      double total = 0.0;
      for (int t = 0; t < 5; ++t) total += (matrix[s][t] = unif(rng) + 1e-6);
      for (int t = 0; t < 5; ++t) matrix[s][t] /= total;
      pm.m[s] = matrix[s];
    }
    msc::MscConfig cfg;
    cfg.a = 1.0 + unif(rng) * 2.0;
    cfg.n = 1 + static_cast<int>(rng() % 6);

    auto got = msc::msc_apply(preds, pm, cfg);
    auto want = oracle::reference_msc(preds.probs, labels_int, matrix, cfg.a, cfg.n);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      ASSERT_EQ(static_cast<int>(got[i]), want[i]) << "trial " << trial << " index " << i;
    }
  }
}

TEST(MscApply, CascadeModeFeedsCorrectionsForward) {
  // Raw: W N1 N1 W W. Non-cascading triggers at 1 and 3; cascading sees the
  // corrected stage at i-1 when comparing at i.
  msc::PredictionSequence preds;
  preds.probs = {{0.9, 0.1, 0.0, 0.0, 0.0},
                 {0.45, 0.55, 0.0, 0.0, 0.0},
                 {0.45, 0.55, 0.0, 0.0, 0.0},
                 {0.9, 0.1, 0.0, 0.0, 0.0},
                 {0.9, 0.1, 0.0, 0.0, 0.0}};
  preds.labels = {W, N1, N1, W, W};
  msc::MscConfig plain;
  msc::MscConfig cascade;
  cascade.cascade = true;
  auto matrix = wake_row_matrix();
  auto a = msc::msc_apply(preds, matrix, plain);
  auto b = msc::msc_apply(preds, matrix, cascade);
  // Both must agree away from change points.
  EXPECT_EQ(a[0], W);
  EXPECT_EQ(b[0], W);
  EXPECT_EQ(a[4], W);
  EXPECT_EQ(b[4], W);
}

TEST(FitAndApply, EmptyChangePointSetIsIdentity) {
  std::vector<StageSeq> train{{W, W, N1, N1, N2, N2, N2, Stage::N3, Stage::N3, Stage::Rem,
                               Stage::Rem, W}};
  msc::PredictionSequence preds;
  for (int i = 0; i < 5; ++i) {
    preds.probs.push_back({0.05, 0.9, 0.025, 0.0125, 0.0125});
    preds.labels.push_back(N1);
  }
  msc::MscConfig cfg;
  cfg.laplace_smoothing = true;
  auto out = msc::fit_and_apply(train, preds, cfg);
  EXPECT_EQ(out, StageSeq(5, N1));
}

}  // namespace
