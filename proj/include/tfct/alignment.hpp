#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string_view>
#include <vector>

#include "tfct/topology.hpp"

namespace tfct {

enum class MetricKind { persistence, volume, combined, overlap };

std::string_view to_string(MetricKind kind);
MetricKind parse_metric_kind(std::string_view name);

struct MatchMetric {
  MetricKind kind = MetricKind::overlap;
  double lambda = 0.5;  // weight of the persistence term in `combined`

  bool operator==(const MatchMetric&) const = default;
};

// Matching attributes of a node: those of the branch containing it.
struct NodeAttributes {
  double persistence = 0.0;
  std::int64_t volume = 0;
  std::shared_ptr<const std::vector<VertexId>> segment;  // ascending
};

struct JaccardCounts {
  std::int64_t intersection = 0;
  std::int64_t union_size = 0;
};

// Both inputs ascending and duplicate free.
JaccardCounts jaccard_counts(const std::vector<VertexId>& a, const std::vector<VertexId>& b);

// Match cost in [0, 1]. `degenerate` is set when the persistence term
// compares two zero-persistence branches (cost 0 by convention).
double node_cost(const NodeAttributes& a, const NodeAttributes& b, const MatchMetric& metric,
                 bool* degenerate = nullptr);

inline constexpr double kInsertionCost = 1.0;

struct MemberNode {
  std::int32_t ct_node = -1;
  NodeKind kind = NodeKind::saddle;
  double value = 0.0;
  std::int32_t parent = -1;
  std::vector<std::int32_t> children;
  NodeAttributes attr;
};

// Contour tree of one time step rooted at its global maximum. Node index i
// is contour tree node i.
struct MemberTree {
  std::int32_t step = 0;
  std::vector<MemberNode> nodes;
  std::int32_t root = -1;
};

// Requires a binary tree (see unfold_degenerate_saddles).
MemberTree make_member_tree(const ContourTree& tree, std::int32_t step);

struct MemberRef {
  std::int32_t node = -1;  // member tree node index
  double value = 0.0;

  bool operator==(const MemberRef&) const = default;
};

struct AlignmentNode {
  std::int32_t id = -1;
  NodeKind kind = NodeKind::saddle;
  double value = 0.0;  // representative value, follows the last aligned member
  std::int32_t parent = -1;
  std::vector<std::int32_t> children;  // ids, ascending
  std::map<std::int32_t, MemberRef> members;
  std::int32_t color_key = -1;
  // Matching attributes of the member from the most recently aligned step
  // containing this node. Not persisted.
  NodeAttributes attr;

  std::int32_t frequency() const { return static_cast<std::int32_t>(members.size()); }
};

// Supertree of member trees. Also used for sub-alignments, where `steps`
// holds the selected steps and nodes keep their ids from the overall tree.
struct AlignmentTree {
  std::vector<AlignmentNode> nodes;  // ascending id
  std::int32_t root_id = -1;
  std::int32_t member_count = 0;
  MatchMetric metric;
  // Overall alignment: steps in fold order. Sub-alignment: selected steps, ascending.
  std::vector<std::int32_t> steps;

  bool contains(std::int32_t id) const;
  std::size_t index_of(std::int32_t id) const;  // throws std::out_of_range
  const AlignmentNode& node(std::int32_t id) const { return nodes[index_of(id)]; }
  AlignmentNode& node(std::int32_t id) { return nodes[index_of(id)]; }
  std::int32_t next_id() const { return nodes.empty() ? 0 : nodes.back().id + 1; }

  // Throws std::logic_error on broken structure or frequency invariants.
  void validate() const;
};

AlignmentTree alignment_from_tree(const MemberTree& tree, const MatchMetric& metric);

// Minimum-cost supertree of `base` and `tree` under the alignment dynamic
// program. Matched nodes gain the member of `tree.step`; unmatched tree
// nodes become new nodes with fresh ids. Values are left to
// update_alignment_values. `cost` receives the alignment cost.
AlignmentTree align_pair(const AlignmentTree& base, const MemberTree& tree, const MatchMetric& metric,
                         double* cost = nullptr);

// Sets the value of every node containing step t to its member value.
void update_alignment_values(AlignmentTree& alignment, std::int32_t t);

// first, first+1, ..., T-1, then first-1 down to 0.
std::vector<std::int32_t> fold_order(std::int32_t steps, std::int32_t first);

// trees[t] must have step t.
AlignmentTree align_sequence(const std::vector<MemberTree>& trees, const MatchMetric& metric, std::int32_t first = 0);

// Restriction of `overall` to `steps`: nodes without a selected member are
// dropped, the rest are re-linked to their nearest surviving ancestor.
AlignmentTree sub_alignment(const AlignmentTree& overall, const std::vector<std::int32_t>& steps);

}  // namespace tfct
