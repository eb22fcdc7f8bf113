#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "mrnet/errors.hpp"
#include "mrnet/msc.hpp"
#include "mrnet/stage.hpp"

namespace mrnet::csv {

inline constexpr const char* kPredictionsHeader = "epoch_index,p_W,p_N1,p_N2,p_N3,p_REM";

/// Probabilities are written with 9 significant digits, enough to survive
/// a text round trip at 32-bit precision.
inline void write_predictions(const std::filesystem::path& path,
                              std::span<const std::array<double, kNumStages>> probs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ContractError("cannot write " + path.string());
  out << kPredictionsHeader << "\n";
  char buf[64];
  for (std::size_t i = 0; i < probs.size(); ++i) {
    out << i;
    for (int c = 0; c < kNumStages; ++c) {
      std::snprintf(buf, sizeof buf, "%.9g", probs[i][c]);
      out << "," << buf;
    }
    out << "\n";
  }
}

inline msc::PredictionSequence read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kPredictionsHeader) {
    throw ContractError(path.string() + ":1: expected header '" +
                        std::string(kPredictionsHeader) + "'");
  }
  std::vector<std::array<double, kNumStages>> probs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::array<double, kNumStages> p{};
    std::size_t pos = 0;
    auto next_field = [&]() -> std::string {
      if (pos > line.size()) {
        throw ContractError(path.string() + ":" + std::to_string(line_no) +
                            ": expected 6 comma-separated fields");
      }
      const auto comma = line.find(',', pos);
      const std::string field =
          line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      pos = comma == std::string::npos ? line.size() + 1 : comma + 1;
      return field;
    };
    const std::string idx = next_field();
    if (idx != std::to_string(probs.size())) {
      throw ContractError(path.string() + ":" + std::to_string(line_no) +
                          ": epoch_index " + idx + " out of order, expected " +
                          std::to_string(probs.size()));
    }
    for (int c = 0; c < kNumStages; ++c) {
      const std::string field = next_field();
      try {
        std::size_t used = 0;
        p[c] = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw ContractError(path.string() + ":" + std::to_string(line_no) +
                            ": malformed probability '" + field + "'");
      }
      if (p[c] < 0.0) {
        throw ContractError(path.string() + ":" + std::to_string(line_no) +
                            ": negative probability");
      }
    }
    if (pos <= line.size()) {
      throw ContractError(path.string() + ":" + std::to_string(line_no) +
                          ": trailing fields after p_REM");
    }
    probs.push_back(p);
  }
  return msc::PredictionSequence::from_probs(std::move(probs));
}

/// 5x5 matrix with stage names on both axes.
inline void write_transition_matrix(const std::filesystem::path& path,
                                    const msc::ProcessedMatrix& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ContractError("cannot write " + path.string());
  out << "stage";
  for (int t = 0; t < kNumStages; ++t) out << "," << stage_name(static_cast<Stage>(t));
  out << "\n";
  char buf[64];
  for (int s = 0; s < kNumStages; ++s) {
    out << stage_name(static_cast<Stage>(s));
    for (int t = 0; t < kNumStages; ++t) {
      std::snprintf(buf, sizeof buf, "%.17g", m.m[s][t]);
      out << "," << buf;
    }
    out << "\n";
  }
}

inline void write_transition_counts(const std::filesystem::path& path,
                                    const msc::TransitionCounts& counts) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ContractError("cannot write " + path.string());
  out << "stage";
  for (int t = 0; t < kNumStages; ++t) out << "," << stage_name(static_cast<Stage>(t));
  out << "\n";
  for (int s = 0; s < kNumStages; ++s) {
    out << stage_name(static_cast<Stage>(s));
    for (int t = 0; t < kNumStages; ++t) out << "," << counts.m[s][t];
    out << "\n";
  }
}

}  // namespace mrnet::csv
