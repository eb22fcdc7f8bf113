#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mrnet/errors.hpp"
#include "mrnet/stage.hpp"

namespace mrnet::msc {

/// Consecutive-epoch transition counts; entry (s, t) counts s -> t.
struct TransitionCounts {
  std::array<std::array<std::int64_t, kNumStages>, kNumStages> m{};

  std::int64_t total() const {
    std::int64_t n = 0;
    for (const auto& row : m)
      for (auto v : row) n += v;
    return n;
  }
};

/// Counted per record; never across record boundaries.
inline TransitionCounts count_transitions(std::span<const StageSeq> hypnograms) {
  TransitionCounts counts;
  for (const auto& seq : hypnograms) {
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
      const int s = static_cast<int>(seq[i]);
      const int t = static_cast<int>(seq[i + 1]);
      if (s < 0 || s >= kNumStages || t < 0 || t >= kNumStages) {
        throw ContractError("count_transitions: invalid stage value");
      }
      ++counts.m[s][t];
    }
  }
  return counts;
}

enum class Compression { Linear, Sqrt, Log1p };

inline const char* compression_name(Compression g) {
  switch (g) {
    case Compression::Linear: return "linear";
    case Compression::Sqrt: return "sqrt";
    case Compression::Log1p: return "log";
  }
  return "?";
}

inline Compression compression_from_name(const std::string& name) {
  if (name == "linear") return Compression::Linear;
  if (name == "sqrt") return Compression::Sqrt;
  if (name == "log" || name == "log1p") return Compression::Log1p;
  throw ContractError("unknown compression function '" + name +
                      "' (expected linear | sqrt | log)");
}

/// Row-stochastic matrix M' = norm(G(M)^r). The log variant is realized
/// as log1p so zero counts map to weight 0 instead of -inf, keeping every
/// entry non-negative and the per-row ordering of counts intact.
struct ProcessedMatrix {
  std::array<std::array<double, kNumStages>, kNumStages> m{};

  std::span<const double, kNumStages> row(int s) const {
    return std::span<const double, kNumStages>(m[s]);
  }
};

inline ProcessedMatrix compress(const TransitionCounts& counts, Compression g, double r,
                                bool laplace_smoothing = false) {
  if (r < 1.0) throw ContractError("compress: exponent r must be >= 1");
  ProcessedMatrix out;
  for (int s = 0; s < kNumStages; ++s) {
    std::array<double, kNumStages> weights{};
    double total = 0.0;
    for (int t = 0; t < kNumStages; ++t) {
      double c = static_cast<double>(counts.m[s][t]) + (laplace_smoothing ? 1.0 : 0.0);
      double v = 0.0;
      switch (g) {
        case Compression::Linear: v = c; break;
        case Compression::Sqrt: v = std::sqrt(c); break;
        case Compression::Log1p: v = std::log1p(c); break;
      }
      weights[t] = std::pow(v, r);
      total += weights[t];
    }
    if (total <= 0.0) {
      throw ContractError(
          "compress: row " + std::string(stage_name(static_cast<Stage>(s))) +
          " has no observed transitions; enable Laplace add-1 smoothing or supply "
          "more training hypnograms");
    }
    for (int t = 0; t < kNumStages; ++t) out.m[s][t] = weights[t] / total;
  }
  return out;
}

/// Per-epoch confidence vectors with their argmax labels.
struct PredictionSequence {
  std::vector<std::array<double, kNumStages>> probs;
  std::vector<Stage> labels;

  static Stage argmax(const std::array<double, kNumStages>& p) {
    int best = 0;
    for (int c = 1; c < kNumStages; ++c) {
      if (p[c] > p[best]) best = c;
    }
    return static_cast<Stage>(best);
  }

  static PredictionSequence from_probs(std::vector<std::array<double, kNumStages>> probs) {
    PredictionSequence seq;
    seq.labels.reserve(probs.size());
    for (const auto& p : probs) seq.labels.push_back(argmax(p));
    seq.probs = std::move(probs);
    return seq;
  }

  void validate() const {
    if (probs.size() != labels.size()) {
      throw ContractError("PredictionSequence: probs/labels length mismatch (" +
                          std::to_string(probs.size()) + " vs " +
                          std::to_string(labels.size()) + ")");
    }
    if (probs.empty()) throw ContractError("PredictionSequence: empty sequence");
  }
};

struct MscConfig {
  Compression g = Compression::Log1p;
  double r = 4.2;
  double a = 1.5;
  int n = 4;
  bool cascade = false;
  bool laplace_smoothing = false;

  void validate() const {
    if (r < 1.0 || a < 1.0 || n < 1) {
      throw ContractError("MscConfig: requires r >= 1, a >= 1, n >= 1");
    }
  }
};

/// Inertia factor w_i at a change point: a decayed vote over the next n
/// labels, +a^-j for a return to the previous stage, -a^-j for staying on
/// the new one, 0 otherwise or past the end of the record.
inline double inertia(std::span<const Stage> labels, std::size_t i, double a, int n) {
  if (i < 1 || i >= labels.size()) {
    throw ContractError("inertia: index " + std::to_string(i) + " has no predecessor");
  }
  if (labels[i] == labels[i - 1]) {
    throw ContractError("inertia: index " + std::to_string(i) + " is not a change point");
  }
  double w = 0.0;
  for (int j = 1; j <= n; ++j) {
    const std::size_t k = i + static_cast<std::size_t>(j);
    if (k >= labels.size()) break;
    double delta = 0.0;
    if (labels[k] == labels[i - 1]) delta = 1.0;
    else if (labels[k] == labels[i]) delta = -1.0;
    w += delta * std::pow(a, -j);
  }
  return w;
}

/// Sequential correction over one continuous record: at every change point
/// the previous stage's matrix row, with its "stay" entry scaled by the
/// inertia factor, reweights the confidence vector and the argmax is
/// re-taken. Comparisons and lookahead use the raw labels unless cascade
/// mode is on, in which case corrections feed subsequent comparisons.
inline StageSeq msc_apply(const PredictionSequence& preds, const ProcessedMatrix& matrix,
                          const MscConfig& cfg) {
  preds.validate();
  cfg.validate();
  const std::vector<Stage>& raw = preds.labels;
  StageSeq corrected(raw);
  const std::vector<Stage>& compare = cfg.cascade ? corrected : raw;

  for (std::size_t i = 1; i < raw.size(); ++i) {
    if (compare[i] == compare[i - 1]) continue;
    const int prev = static_cast<int>(compare[i - 1]);
    const int cur = static_cast<int>(compare[i]);

    double w = 0.0;
    for (int j = 1; j <= cfg.n; ++j) {
      const std::size_t k = i + static_cast<std::size_t>(j);
      if (k >= raw.size()) break;
      double delta = 0.0;
      if (static_cast<int>(raw[k]) == prev) delta = 1.0;
      else if (static_cast<int>(raw[k]) == cur) delta = -1.0;
      w += delta * std::pow(cfg.a, -j);
    }

    std::array<double, kNumStages> row = matrix.m[prev];
    row[prev] *= w;
    std::array<double, kNumStages> reweighted{};
    for (int c = 0; c < kNumStages; ++c) reweighted[c] = preds.probs[i][c] * row[c];
    corrected[i] = PredictionSequence::argmax(reweighted);
  }
  return corrected;
}

/// count_transitions -> compress -> msc_apply.
inline StageSeq fit_and_apply(std::span<const StageSeq> train_hypnograms,
                              const PredictionSequence& preds, const MscConfig& cfg) {
  const auto counts = count_transitions(train_hypnograms);
  const auto matrix = compress(counts, cfg.g, cfg.r, cfg.laplace_smoothing);
  return msc_apply(preds, matrix, cfg);
}

}  // namespace mrnet::msc
