#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include <json.hpp>

#include "mrnet/errors.hpp"
#include "mrnet/stage.hpp"

namespace mrnet::metrics {

/// Entry (true, predicted); total equals the number of scored epochs.
struct ConfusionMatrix {
  std::array<std::array<std::int64_t, kNumStages>, kNumStages> m{};

  std::int64_t total() const {
    std::int64_t n = 0;
    for (const auto& row : m)
      for (auto v : row) n += v;
    return n;
  }
};

inline ConfusionMatrix confusion(std::span<const Stage> truth,
                                 std::span<const Stage> predicted) {
  if (truth.size() != predicted.size()) {
    throw ContractError("confusion: length mismatch (" + std::to_string(truth.size()) +
                        " vs " + std::to_string(predicted.size()) + ")");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = static_cast<int>(truth[i]);
    const int p = static_cast<int>(predicted[i]);
    if (t < 0 || t >= kNumStages || p < 0 || p >= kNumStages) {
      throw ContractError("confusion: invalid label at index " + std::to_string(i));
    }
    ++cm.m[t][p];
  }
  return cm;
}

/// trace / N.
inline double accuracy(const ConfusionMatrix& cm) {
  const std::int64_t n = cm.total();
  if (n == 0) throw ContractError("accuracy: empty confusion matrix");
  std::int64_t correct = 0;
  for (int c = 0; c < kNumStages; ++c) correct += cm.m[c][c];
  return static_cast<double>(correct) / static_cast<double>(n);
}

/// F1_c = 2 TP / (2 TP + FP + FN); 0 when that denominator is 0.
inline std::array<double, kNumStages> per_class_f1(const ConfusionMatrix& cm) {
  std::array<double, kNumStages> f1{};
  for (int c = 0; c < kNumStages; ++c) {
    const std::int64_t tp = cm.m[c][c];
    std::int64_t fp = 0, fn = 0;
    for (int o = 0; o < kNumStages; ++o) {
      if (o == c) continue;
      fp += cm.m[o][c];
      fn += cm.m[c][o];
    }
    const std::int64_t denom = 2 * tp + fp + fn;
    f1[c] = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
  return f1;
}

/// Unweighted mean over all five classes; absent classes count as 0.
inline double macro_f1(const ConfusionMatrix& cm) {
  const auto f1 = per_class_f1(cm);
  double sum = 0.0;
  for (double v : f1) sum += v;
  return sum / static_cast<double>(kNumStages);
}

/// Number of label changes between consecutive epochs.
inline std::int64_t transition_count(std::span<const Stage> labels) {
  if (labels.empty()) throw ContractError("transition_count: empty sequence");
  std::int64_t n = 0;
  for (std::size_t i = 1; i < labels.size(); ++i) {
    if (labels[i] != labels[i - 1]) ++n;
  }
  return n;
}

inline nlohmann::json evaluation_report(const ConfusionMatrix& cm,
                                        std::int64_t transitions_raw,
                                        std::int64_t transitions_corrected) {
  const auto f1 = per_class_f1(cm);
  nlohmann::json per_class;
  for (int c = 0; c < kNumStages; ++c) {
    per_class[std::string(stage_name(static_cast<Stage>(c)))] = f1[c];
  }
  nlohmann::json confusion_rows = nlohmann::json::array();
  for (int t = 0; t < kNumStages; ++t) {
    confusion_rows.push_back(cm.m[t]);
  }
  return nlohmann::json{{"acc", accuracy(cm)},
                        {"mf1", macro_f1(cm)},
                        {"per_class_f1", per_class},
                        {"confusion", confusion_rows},
                        {"transitions_raw", transitions_raw},
                        {"transitions_corrected", transitions_corrected}};
}

}  // namespace mrnet::metrics
