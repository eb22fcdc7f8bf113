#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "mrnet/errors.hpp"
#include "mrnet/msc.hpp"
#include "mrnet/stage.hpp"

namespace mrnet::synth {

using Rng = std::mt19937_64;

/// Band-limited surrogate per stage: a few sinusoids inside the band plus
/// white noise. Amplitudes are chosen so deep sleep dwarfs wake and the
/// five classes separate cleanly at small model sizes.
struct StageProfile {
  double center_hz = 10.0;
  double bandwidth_hz = 4.0;
  double amplitude_uv = 15.0;
};

inline std::array<StageProfile, kNumStages> default_profiles() {
  return {StageProfile{10.0, 4.0, 15.0},   // W: alpha
          StageProfile{5.5, 3.0, 25.0},    // N1: theta
          StageProfile{13.0, 2.0, 35.0},   // N2: spindle band
          StageProfile{1.25, 1.5, 60.0},   // N3: delta, high amplitude
          StageProfile{8.0, 12.0, 8.0}};   // REM: low-amplitude mixed
}

/// Strongly diagonal chain with the adjacent-stage structure of the sleep
/// cycle: W<->N1, N1<->N2, N2<->N3, N2<->REM dominate; N3->W nearly never.
inline std::array<std::array<double, kNumStages>, kNumStages> default_transitions() {
  return {{
      {0.90, 0.080, 0.010, 0.000, 0.010},  // W
      {0.03, 0.900, 0.060, 0.000, 0.010},  // N1
      {0.005, 0.030, 0.900, 0.040, 0.025},  // N2
      {0.005, 0.000, 0.095, 0.900, 0.000},  // N3
      {0.02, 0.030, 0.050, 0.000, 0.900},  // REM
  }};
}

struct SynthConfig {
  std::array<std::array<double, kNumStages>, kNumStages> transition = default_transitions();
  int epochs_per_record = 120;
  double sample_rate_hz = 100.0;
  std::array<StageProfile, kNumStages> profiles = default_profiles();
  double noise_uv = 3.0;
  std::uint64_t seed = 7;

  void validate() const {
    for (int s = 0; s < kNumStages; ++s) {
      double total = 0.0;
      for (int t = 0; t < kNumStages; ++t) {
        if (transition[s][t] < 0.0) {
          throw ContractError("SynthConfig: negative transition probability");
        }
        total += transition[s][t];
      }
      if (std::abs(total - 1.0) > 1e-9) {
        throw ContractError("SynthConfig: row " +
                            std::string(stage_name(static_cast<Stage>(s))) +
                            " sums to " + std::to_string(total) + ", expected 1");
      }
    }
  }
};

inline std::uint64_t record_seed(std::uint64_t base, std::size_t record_index) {
  return base ^ (0x9E3779B97F4A7C15ull * (record_index + 1));
}

/// Markov-chain hypnogram, starting in Wake.
inline StageSeq sample_hypnogram(const SynthConfig& cfg, std::size_t n_epochs, Rng& rng) {
  cfg.validate();
  if (n_epochs == 0) throw ContractError("sample_hypnogram: empty record");
  StageSeq seq;
  seq.reserve(n_epochs);
  int state = 0;
  seq.push_back(Stage::Wake);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 1; i < n_epochs; ++i) {
    const double u = unif(rng);
    double acc = 0.0;
    int next = kNumStages - 1;
    for (int t = 0; t < kNumStages; ++t) {
      acc += cfg.transition[state][t];
      if (u < acc) {
        next = t;
        break;
      }
    }
    state = next;
    seq.push_back(static_cast<Stage>(state));
  }
  return seq;
}

/// One 30 s epoch (3000 samples at 100 Hz) of the stage's banded signal.
inline std::vector<float> synth_epoch(Stage stage, const SynthConfig& cfg, Rng& rng) {
  const auto& prof = cfg.profiles[static_cast<int>(stage)];
  const std::size_t n = static_cast<std::size_t>(30.0 * cfg.sample_rate_hz);
  constexpr int kSinusoids = 3;
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::array<double, kSinusoids> freq{}, phase{};
  for (int k = 0; k < kSinusoids; ++k) {
    freq[k] = prof.center_hz + (unif(rng) - 0.5) * prof.bandwidth_hz;
    phase[k] = unif(rng) * 2.0 * std::numbers::pi;
  }
  const double amp = prof.amplitude_uv / std::sqrt(static_cast<double>(kSinusoids));
  std::normal_distribution<double> noise(0.0, cfg.noise_uv);

  std::vector<float> x(n);
  const double dt = 1.0 / cfg.sample_rate_hz;
  for (std::size_t t = 0; t < n; ++t) {
    double v = 0.0;
    for (int k = 0; k < kSinusoids; ++k) {
      v += amp * std::sin(2.0 * std::numbers::pi * freq[k] * t * dt + phase[k]);
    }
    v += noise(rng);
    x[t] = static_cast<float>(v);
  }
  return x;
}

/// Confidence vectors peaked on the truth, with a quota of isolated flips.
/// Flipped epochs sit strictly inside runs of length >= 3, never adjacent
/// to each other, and move to a Markov-adjacent wrong stage whose
/// confidence leads the true stage by `confidence_margin`.
inline msc::PredictionSequence inject_jitter(const StageSeq& truth, double jitter_rate,
                                             double confidence_margin, const SynthConfig& cfg,
                                             Rng& rng) {
  if (jitter_rate < 0.0 || jitter_rate >= 0.5) {
    throw ContractError("inject_jitter: jitter_rate must be in [0, 0.5)");
  }
  if (confidence_margin <= 0.0 || confidence_margin >= 0.9) {
    throw ContractError("inject_jitter: confidence_margin must be in (0, 0.9)");
  }
  const std::size_t n = truth.size();

  // Eligible flip sites: interior epochs of runs no shorter than 3.
  std::vector<std::size_t> eligible;
  std::size_t run_start = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i == n || truth[i] != truth[run_start]) {
      const std::size_t run_len = i - run_start;
      if (run_len >= 3) {
        for (std::size_t j = run_start + 1; j + 1 < i; ++j) eligible.push_back(j);
      }
      run_start = i;
    }
  }

  std::vector<char> flip(n, 0);
  const std::size_t quota = static_cast<std::size_t>(std::llround(jitter_rate * n));
  std::shuffle(eligible.begin(), eligible.end(), rng);
  std::size_t placed = 0;
  for (std::size_t idx : eligible) {
    if (placed >= quota) break;
    if ((idx > 0 && flip[idx - 1]) || (idx + 1 < n && flip[idx + 1])) continue;
    flip[idx] = 1;
    ++placed;
  }

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  msc::PredictionSequence seq;
  seq.probs.reserve(n);
  seq.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int s = static_cast<int>(truth[i]);
    std::array<double, kNumStages> p{};
    if (!flip[i]) {
      for (int c = 0; c < kNumStages; ++c) p[c] = 0.025;
      p[s] = 0.9;
    } else {
      // Wrong target drawn from the stage's outgoing transition weights.
      double total = 0.0;
      for (int t = 0; t < kNumStages; ++t) {
        if (t != s) total += cfg.transition[s][t];
      }
      int target = (s + 1) % kNumStages;
      if (total > 0.0) {
        const double u = unif(rng) * total;
        double acc = 0.0;
        for (int t = 0; t < kNumStages; ++t) {
          if (t == s) continue;
          acc += cfg.transition[s][t];
          if (u < acc) {
            target = t;
            break;
          }
        }
      }
      const double rest = 1.0 - 0.9;
      for (int c = 0; c < kNumStages; ++c) p[c] = rest / 3.0;
      p[target] = 0.45 + confidence_margin / 2.0;
      p[s] = 0.45 - confidence_margin / 2.0;
    }
    seq.probs.push_back(p);
    seq.labels.push_back(msc::PredictionSequence::argmax(p));
  }
  return seq;
}

}  // namespace mrnet::synth
