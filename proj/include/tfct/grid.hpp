#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfct {

// Raised for malformed or inconsistent input data (bad files, dimension
// mismatches, non-finite samples). The CLI maps it to exit code 3.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

using VertexId = std::int32_t;

// 2D scalar samples, row-major, vertex index v = y * width + x.
struct ScalarGrid {
  std::int32_t width = 0;
  std::int32_t height = 0;
  std::vector<double> values;

  ScalarGrid() = default;
  ScalarGrid(std::int32_t w, std::int32_t h, std::vector<double> v);
  ScalarGrid(std::int32_t w, std::int32_t h, double fill);

  std::size_t size() const { return values.size(); }
  VertexId index(std::int32_t x, std::int32_t y) const { return y * width + x; }
  std::int32_t x_of(VertexId v) const { return v % width; }
  std::int32_t y_of(VertexId v) const { return v / width; }
  double at(std::int32_t x, std::int32_t y) const { return values[static_cast<std::size_t>(index(x, y))]; }
  double& at(std::int32_t x, std::int32_t y) { return values[static_cast<std::size_t>(index(x, y))]; }
  double operator[](VertexId v) const { return values[static_cast<std::size_t>(v)]; }

  // Throws DataError when dimensions or samples violate the grid invariants.
  void validate() const;

  bool operator==(const ScalarGrid&) const = default;
};

// Symbolic perturbation: u < v iff (f(u), u) < (f(v), v). Never reports
// equality for distinct vertices.
inline bool vertex_less(const ScalarGrid& g, VertexId u, VertexId v) {
  const double fu = g[u];
  const double fv = g[v];
  if (fu != fv) return fu < fv;
  return u < v;
}

// Vertices sorted ascending under vertex_less.
std::vector<VertexId> sorted_vertices(const ScalarGrid& g);

// rank[v] = position of v in sorted_vertices(g).
std::vector<std::int32_t> vertex_ranks(const ScalarGrid& g);

// Neighbourhood of the Freudenthal triangulation of the grid: the four axis
// neighbours plus the (+1,+1) and (-1,-1) diagonals. Each cell is split along
// its main diagonal into two triangles.
struct Neighbors {
  std::array<VertexId, 6> ids{};
  int count = 0;
  const VertexId* begin() const { return ids.data(); }
  const VertexId* end() const { return ids.data() + count; }
};

Neighbors neighbors(const ScalarGrid& g, VertexId v);

struct TimeSeriesDataset {
  std::vector<ScalarGrid> grids;
  std::vector<std::string> labels;  // empty or one per step
  double global_min = 0.0;
  double global_max = 0.0;

  std::size_t steps() const { return grids.size(); }
  std::int32_t width() const { return grids.empty() ? 0 : grids.front().width; }
  std::int32_t height() const { return grids.empty() ? 0 : grids.front().height; }

  // Recomputes global_min / global_max and checks every invariant.
  void finalize();

  bool operator==(const TimeSeriesDataset&) const = default;
};

}  // namespace tfct
