#include "tfct/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tfct {

ScalarGrid::ScalarGrid(std::int32_t w, std::int32_t h, std::vector<double> v)
    : width(w), height(h), values(std::move(v)) {
  validate();
}

ScalarGrid::ScalarGrid(std::int32_t w, std::int32_t h, double fill)
    : width(w), height(h), values(static_cast<std::size_t>(std::max(w, 0)) * static_cast<std::size_t>(std::max(h, 0)), fill) {
  validate();
}

void ScalarGrid::validate() const {
  if (width < 2 || height < 2) {
    throw DataError("grid must be at least 2x2, got " + std::to_string(width) + "x" + std::to_string(height));
  }
  if (values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw DataError("grid has " + std::to_string(values.size()) + " samples, expected " +
                    std::to_string(static_cast<std::size_t>(width) * static_cast<std::size_t>(height)));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw DataError("non-finite sample at vertex " + std::to_string(i));
    }
  }
}

std::vector<VertexId> sorted_vertices(const ScalarGrid& g) {
  std::vector<VertexId> order(g.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](VertexId a, VertexId b) { return vertex_less(g, a, b); });
  return order;
}

std::vector<std::int32_t> vertex_ranks(const ScalarGrid& g) {
  const auto order = sorted_vertices(g);
  std::vector<std::int32_t> rank(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[static_cast<std::size_t>(order[i])] = static_cast<std::int32_t>(i);
  return rank;
}

Neighbors neighbors(const ScalarGrid& g, VertexId v) {
  static constexpr int dx[6] = {1, -1, 0, 0, 1, -1};
  static constexpr int dy[6] = {0, 0, 1, -1, 1, -1};
  Neighbors n;
  const int x = g.x_of(v);
  const int y = g.y_of(v);
  for (int k = 0; k < 6; ++k) {
    const int nx = x + dx[k];
    const int ny = y + dy[k];
    if (nx < 0 || ny < 0 || nx >= g.width || ny >= g.height) continue;
    n.ids[static_cast<std::size_t>(n.count++)] = g.index(nx, ny);
  }
  return n;
}

void TimeSeriesDataset::finalize() {
  if (grids.empty()) throw DataError("dataset has no time steps");
  const auto w = grids.front().width;
  const auto h = grids.front().height;
  global_min = std::numeric_limits<double>::infinity();
  global_max = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < grids.size(); ++t) {
    const auto& g = grids[t];
    if (g.width != w || g.height != h) {
      throw DataError("dimension mismatch at step " + std::to_string(t) + ": " + std::to_string(g.width) + "x" +
                      std::to_string(g.height) + " vs " + std::to_string(w) + "x" + std::to_string(h));
    }
    g.validate();
    const auto [lo, hi] = std::minmax_element(g.values.begin(), g.values.end());
    global_min = std::min(global_min, *lo);
    global_max = std::max(global_max, *hi);
  }
  if (!labels.empty() && labels.size() != grids.size()) {
    throw DataError("label count does not match step count");
  }
}

}  // namespace tfct
