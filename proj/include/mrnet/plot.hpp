#pragma once

#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mrnet/errors.hpp"
#include "mrnet/stage.hpp"

namespace mrnet::plot {

/// Conventional hypnogram orientation, top to bottom.
inline int stage_rank(Stage s) {
  switch (s) {
    case Stage::Wake: return 0;
    case Stage::Rem: return 1;
    case Stage::N1: return 2;
    case Stage::N2: return 3;
    case Stage::N3: return 4;
  }
  return 0;
}

inline const char* rank_name(int rank) {
  static constexpr const char* names[5] = {"W", "REM", "N1", "N2", "N3"};
  return names[rank];
}

struct Lane {
  std::string name;
  StageSeq labels;
  std::string color = "#1f77b4";
};

/// Step-line hypnogram strip, one horizontal unit per 30 s epoch, one band
/// per lane (truth / raw / corrected when all three are given).
inline std::string render_svg(std::span<const Lane> lanes) {
  if (lanes.empty()) throw ContractError("render_svg: no lanes");
  std::size_t n = 0;
  for (const auto& lane : lanes) n = std::max(n, lane.labels.size());
  if (n == 0) throw ContractError("render_svg: empty lanes");

  const int left = 56, right = 16, top = 16;
  const int band = 64, gap = 34;
  const int width = left + static_cast<int>(n) + right;
  const int height = top + static_cast<int>(lanes.size()) * (band + gap);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t li = 0; li < lanes.size(); ++li) {
    const auto& lane = lanes[li];
    const int lane_top = top + static_cast<int>(li) * (band + gap);
    svg << "<text x=\"" << left << "\" y=\"" << lane_top - 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << lane.name << "</text>\n";
    for (int rank = 0; rank < kNumStages; ++rank) {
      const int y = lane_top + rank * band / 4;
      svg << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\""
          << left + static_cast<int>(n) << "\" y2=\"" << y
          << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
      svg << "<text x=\"" << left - 6 << "\" y=\"" << y + 3
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"9\">"
          << rank_name(rank) << "</text>\n";
    }
    if (lane.labels.empty()) continue;
    std::ostringstream path;
    int prev_y = lane_top + stage_rank(lane.labels[0]) * band / 4;
    path << "M " << left << " " << prev_y;
    for (std::size_t i = 0; i < lane.labels.size(); ++i) {
      const int y = lane_top + stage_rank(lane.labels[i]) * band / 4;
      if (y != prev_y) {
        path << " V " << y;
        prev_y = y;
      }
      path << " H " << left + static_cast<int>(i + 1);
    }
    svg << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << lane.color
        << "\" stroke-width=\"1.5\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

/// Plain-text fallback: one character per epoch (W 1 2 3 R).
inline std::string render_text(std::span<const Lane> lanes) {
  static constexpr char kChar[kNumStages] = {'W', '1', '2', '3', 'R'};
  std::ostringstream out;
  out << "# hypnogram strip, one character per 30 s epoch (W 1 2 3 R)\n";
  for (const auto& lane : lanes) {
    out << lane.name << ": ";
    for (Stage s : lane.labels) out << kChar[static_cast<int>(s)];
    out << "\n";
  }
  return out.str();
}

}  // namespace mrnet::plot
