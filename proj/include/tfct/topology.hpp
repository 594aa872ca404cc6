#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tfct/grid.hpp"

namespace tfct {

enum class NodeKind { minimum, maximum, saddle };

std::string_view to_string(NodeKind kind);
NodeKind parse_node_kind(std::string_view name);

enum class MergeDirection { join, split };

// Join trees track superlevel-set components (maxima are leaves, rooted at the
// global minimum); split trees track sublevel-set components.
struct MergeTree {
  MergeDirection direction = MergeDirection::join;
  // Augmented tree: for every vertex its neighbour towards the root, -1 at the root.
  std::vector<VertexId> next;
  // Contracted tree: leaves, saddles and the root, ascending in vertex order.
  std::vector<VertexId> nodes;
  // Contracted arcs as (node farther from root, node nearer the root).
  std::vector<std::pair<VertexId, VertexId>> arcs;
  VertexId root = -1;

  std::size_t leaf_count() const;
  std::size_t saddle_count() const;
};

MergeTree compute_merge_tree(const ScalarGrid& grid, MergeDirection direction);

struct CtNode {
  VertexId vertex = -1;
  double value = 0.0;
  NodeKind kind = NodeKind::saddle;
  // Rank within a chain of unfolded saddles sharing one vertex.
  std::int32_t clone = 0;
};

struct CtArc {
  std::int32_t lower = -1;  // node index, lower end under the node order
  std::int32_t upper = -1;
  std::vector<VertexId> segment;  // grid vertices mapped to this arc, ascending
};

// Contour tree over the critical nodes of one grid. Arc segments partition the
// grid vertices: regular vertices belong to the arc they lie on; a node's own
// vertex belongs to its incident arc whose opposite end is lowest.
class ContourTree {
public:
  std::vector<CtNode> nodes;
  std::vector<CtArc> arcs;
  std::int32_t vertex_count = 0;

  // Order on nodes: (value, vertex, clone) lexicographically.
  bool node_less(std::int32_t a, std::int32_t b) const;
  std::vector<std::vector<std::int32_t>> incident_arcs() const;
  std::int32_t opposite(const CtArc& arc, std::int32_t node) const { return arc.lower == node ? arc.upper : arc.lower; }
  std::int32_t degree(std::int32_t node) const;
  bool is_binary() const;
  std::int32_t global_max() const;
  std::int32_t global_min() const;
  std::size_t leaf_count() const;

  // vertex -> arc index
  std::vector<std::int32_t> segment_map() const;

  // Throws std::logic_error when a structural invariant is broken.
  void validate() const;
};

// Carr-Snoeyink-Axen merge of the augmented join and split trees, then
// contraction of regular vertices.
ContourTree combine(const ScalarGrid& grid, const MergeTree& join, const MergeTree& split);

// Replaces every saddle of degree k > 3 by a chain of k - 2 degree-3 saddles
// at the same vertex. Down arcs merge first (ascending by the minimum vertex
// of the subtree behind them), then up arcs split off (ascending by maximum
// vertex).
ContourTree unfold_degenerate_saddles(const ContourTree& tree);

// Repeatedly prunes the prunable leaf arc of lowest persistence while it is
// below `threshold` (or exactly zero when prune_zero is set). A max leaf is
// prunable when its saddle keeps another up arc, a min leaf when its saddle
// keeps another down arc. The global minimum and maximum are never pruned.
// Pruned segments merge into the neighbouring arc.
ContourTree simplify(const ContourTree& tree, double threshold, bool prune_zero = false);

// Join + split + combine + unfold, then optional simplification.
ContourTree compute_contour_tree(const ScalarGrid& grid, double simplify_threshold = 0.0);

struct Branch {
  std::int32_t id = -1;
  std::int32_t top_node = -1;
  std::int32_t bottom_node = -1;
  std::int32_t parent_branch = -1;       // -1 for the main branch
  std::int32_t attachment_saddle = -1;   // -1 for the main branch
  double persistence = 0.0;
  std::int64_t volume = 0;
  // Nodes owned by the branch, from its leaf towards the attachment saddle
  // (the saddle itself lies on the parent). The main branch lists every node
  // from the global maximum down to the global minimum.
  std::vector<std::int32_t> node_path;
  std::vector<std::int32_t> arcs;
};

// Hierarchical branch decomposition. The path between the global minimum and
// maximum is the main branch (id 0). Each off-path subtree is split top-down,
// giving every child a persistence no larger than its parent's whenever the
// tree admits that. Ids after 0 follow descending persistence.
struct BranchDecomposition {
  std::vector<Branch> branches;
  std::int32_t main_branch_id = 0;
  std::vector<std::int32_t> branch_of_node;

  // Sorted grid vertices covered by the branch's arcs.
  std::vector<VertexId> segment(const ContourTree& tree, std::int32_t branch) const;
};

// Throws std::invalid_argument for non-binary trees.
BranchDecomposition branch_decomposition(const ContourTree& tree);

// Debug text: "# nodes" then `id vertex value kind` lines, "# arcs" then
// `nodeA nodeB` lines.
std::string export_debug_text(const ContourTree& tree);

}  // namespace tfct
