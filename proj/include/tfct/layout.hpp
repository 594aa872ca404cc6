#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tfct/alignment.hpp"

namespace tfct {

// Scalar range mapped to y in [0, 1]. Equal bounds map everything to 0.5.
struct ValueRange {
  double min = 0.0;
  double max = 1.0;

  double normalize(double v) const { return max > min ? (v - min) / (max - min) : 0.5; }
};

enum class Side { none, left, right };

std::string_view to_string(Side side);

// Branch of an alignment tree. The id is the id of the branch's leaf, so the
// same feature keeps its id in every sub-alignment.
struct AlignmentBranch {
  std::int32_t id = -1;
  std::int32_t leaf = -1;
  std::int32_t saddle = -1;         // attachment node on the parent; root for the main branch
  std::int32_t parent_branch = -1;  // -1 for the main branch
  std::vector<std::int32_t> nodes;  // owned nodes from the top of the branch down to the leaf
  std::vector<std::int32_t> children;  // child branch ids, ascending
  std::vector<std::int32_t> members;   // steps containing the leaf, ascending
};

struct AlignmentBranches {
  std::vector<AlignmentBranch> branches;  // ascending id
  std::int32_t main_branch = -1;

  const AlignmentBranch& branch(std::int32_t id) const;
  bool contains(std::int32_t id) const;
};

// Main branch: root to the most frequent minimum leaf (then lower value,
// then lower id). Every other subtree hanging off a branch contributes the
// branch to its most frequent leaf (then larger distance in value from the
// attachment saddle, then lower id).
AlignmentBranches alignment_branches(const AlignmentTree& alignment);

struct BranchLayout {
  std::int32_t id = -1;
  double x = 0.0;
  double order_key = 0.0;  // strict horizontal order
  Side side = Side::none;  // side of the parent branch
  double y_low = 0.0;      // normalized value span including the attachment saddle
  double y_high = 0.0;
};

struct NodeLayout {
  std::int32_t id = -1;
  std::int32_t branch = -1;
  double x = 0.0;
  double y = 0.0;
};

struct Layout {
  AlignmentBranches structure;
  std::vector<BranchLayout> branches;  // same order as structure.branches
  std::vector<NodeLayout> nodes;       // ascending node id
  ValueRange range;
  double initial_cost = 0.0;
  double cost = 0.0;

  const BranchLayout& branch(std::int32_t id) const;
  const NodeLayout& node(std::int32_t id) const;
};

struct BranchBox {
  double x0 = 0.0;
  double x1 = 0.0;
  double y0 = 0.0;
  double y1 = 0.0;
  std::vector<std::int32_t> members;  // ascending
};

inline constexpr double kBoxWidth = 0.8;
inline constexpr double kCompactness = 0.01;

bool contemporary(const BranchBox& a, const BranchBox& b);
double overlap_area(const BranchBox& a, const BranchBox& b);

// Overlap area summed over contemporary pairs plus kCompactness times the sum
// of |box center x|.
double annealing_cost(const std::vector<BranchBox>& boxes);

std::vector<BranchBox> branch_boxes(const Layout& layout);

// Contemporary branch pairs whose boxes overlap with positive area.
std::vector<std::pair<std::int32_t, std::int32_t>> contemporary_overlaps(const Layout& layout);

struct AnnealingOptions {
  std::uint64_t seed = 42;
  int sweeps = 200;
  double cooling = 0.95;
};

// Simulated annealing over integer branch offsets relative to the parent
// branch. The main branch stays at x = 0 and siblings never share an offset.
Layout compute_layout(const AlignmentTree& alignment, const ValueRange& range, const AnnealingOptions& options = {});

// Rebuilds a layout from stored branch positions (x and order_key by id).
// Throws std::invalid_argument when a branch has no stored position.
Layout restore_layout(const AlignmentTree& alignment, const ValueRange& range, const std::vector<BranchLayout>& placed,
                      double initial_cost);

// Layout of a sub-alignment inherited from the overall layout. Branch
// positions are looked up by leaf id; with compact_gaps the occupied x values
// are renumbered to consecutive slots on each side of the main branch.
// Throws std::invalid_argument when sub has a leaf unknown to the layout.
Layout trickle_down(const Layout& overall, const AlignmentTree& sub, bool compact_gaps);

// Children of every branch are spread evenly over their side: with span s =
// ceil(max |offset|) the i-th of k children sits at offset s * i / k.
// Subtrees move with their branch; order keys are kept.
Layout optimized_branch_spacing(const Layout& layout);

using Point = std::array<double, 2>;

struct MemberNodeLayout {
  std::int32_t node = -1;       // member tree node index
  std::int32_t alignment_node = -1;
  NodeKind kind = NodeKind::saddle;
  double x = 0.0;
  double y = 0.0;
};

struct MemberEdge {
  std::int32_t child = -1;   // member tree node indices
  std::int32_t parent = -1;
  std::vector<Point> points;  // child, corner, parent
};

struct MemberLayout {
  std::int32_t step = 0;
  std::vector<MemberNodeLayout> nodes;  // ascending alignment node id
  std::vector<MemberEdge> edges;
  std::vector<std::int32_t> branches;   // branch ids whose leaf is present, ascending
};

// Throws std::invalid_argument when t is not part of sub.
MemberLayout transfer_to_member(const Layout& sub_layout, const AlignmentTree& sub, std::int32_t t);

struct BundledEdge {
  std::int32_t child = -1;   // alignment node ids
  std::int32_t parent = -1;
  std::array<Point, 3> points;  // start, control, end of a quadratic curve
  double opacity = 1.0;
  std::int32_t members = 0;
};

struct BundledNode {
  std::int32_t id = -1;
  NodeKind kind = NodeKind::saddle;
  double x = 0.0;
  double y = 0.0;
  std::int32_t frequency = 0;
  std::string color;
};

struct BundledGeometry {
  std::vector<BundledNode> nodes;  // ascending id
  std::vector<BundledEdge> edges;  // ascending child id
};

// An arc is used by every selected step that has a member in the child's
// subtree, since member edges follow alignment paths towards the root.
BundledGeometry bundle(const Layout& sub_layout, const AlignmentTree& sub);

// Categorical color of a color key, "#rrggbb".
std::string leaf_color(std::int32_t color_key);

}  // namespace tfct
