#pragma once

#include <cstdint>
#include <map>
#include <string_view>
#include <vector>

#include "tfct/alignment.hpp"

namespace tfct {

// Undirected tree as node ids and parent links (-1 for the root).
struct SimpleTree {
  std::vector<std::int32_t> ids;
  std::vector<std::int32_t> parents;  // parent id per entry, -1 for the root
};

SimpleTree simple_tree(const AlignmentTree& alignment);
SimpleTree simple_tree(const ContourTree& tree);

using CentralityMap = std::map<std::int32_t, double>;

// deg(v) / (n - 1). Throws std::invalid_argument for fewer than two nodes.
CentralityMap degree_centrality(const SimpleTree& tree);

// Fraction of unordered node pairs whose path runs through v, computed from
// the component sizes left after removing v. All zero below three nodes.
CentralityMap betweenness_centrality(const SimpleTree& tree);

enum class Measure { degree, betweenness };
enum class SeriesMode { direct, diff };

std::string_view to_string(Measure m);
std::string_view to_string(SeriesMode m);
Measure parse_measure(std::string_view name);
SeriesMode parse_series_mode(std::string_view name);

inline constexpr int kDefaultWindow = 5;

struct SelectorSeries {
  Measure measure = Measure::degree;
  SeriesMode mode = SeriesMode::direct;
  int window = kDefaultWindow;
  std::vector<double> raw;
  std::vector<double> values;  // min-max normalized; all 0.5 when raw is constant
};

// Steps of the window of odd width w centered at t, clamped to [0, steps).
std::vector<std::int32_t> window_steps(std::int32_t t, int width, std::int32_t steps);

// Per-step value over the sub-alignment of the window centered at the step:
// the mean centrality (direct) or the mean absolute centrality change to the
// next step's window over nodes present in either, absent nodes counting 0
// (diff; the last step repeats the previous value). Throws
// std::invalid_argument for even or non-positive widths; widths beyond
// 2T - 1 are clamped with a warning.
SelectorSeries selector_series(const AlignmentTree& overall, Measure measure, SeriesMode mode, int window);

}  // namespace tfct
