#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mrnet/errors.hpp"

namespace mrnet {

/// AASM five-class scheme. Indices are the wire format everywhere.
enum class Stage : std::int8_t { Wake = 0, N1 = 1, N2 = 2, N3 = 3, Rem = 4 };

inline constexpr int kNumStages = 5;

inline constexpr std::array<std::string_view, kNumStages> kStageNames = {"W", "N1", "N2",
                                                                         "N3", "REM"};

inline std::string_view stage_name(Stage s) { return kStageNames[static_cast<int>(s)]; }

inline Stage stage_from_index(int i) {
  if (i < 0 || i >= kNumStages) {
    throw ContractError("stage index out of range: " + std::to_string(i));
  }
  return static_cast<Stage>(i);
}

inline std::optional<Stage> stage_from_name(std::string_view name) {
  for (int i = 0; i < kNumStages; ++i) {
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  }
  return std::nullopt;
}

using StageSeq = std::vector<Stage>;

}  // namespace mrnet
