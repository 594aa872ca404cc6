#pragma once

// Structural checks on alignments shared by several suites.

#include <map>
#include <set>
#include <string>

#include "tfct/alignment.hpp"

namespace checks {

// Empty when the member tree embeds into the alignment: members of step t
// hit every member node once, kinds agree, the root maps to the root and
// each member's parent is its nearest alignment ancestor carrying step t.
inline std::string embedding_error(const tfct::AlignmentTree& a, const tfct::MemberTree& tree) {
  const auto t = tree.step;
  std::map<std::int32_t, std::int32_t> node_of;  // member node -> alignment id
  for (const auto& n : a.nodes) {
    auto it = n.members.find(t);
    if (it == n.members.end()) continue;
    const auto m = it->second.node;
    if (m < 0 || m >= static_cast<std::int32_t>(tree.nodes.size())) return "member index out of range";
    if (!node_of.emplace(m, n.id).second) return "member node " + std::to_string(m) + " used twice";
    if (tree.nodes[static_cast<std::size_t>(m)].kind != n.kind) return "kind mismatch at " + std::to_string(n.id);
  }
  if (node_of.size() != tree.nodes.size()) return "not every member node is present";
  if (node_of.at(tree.root) != a.root_id) return "member root is not the alignment root";
  for (std::size_t m = 0; m < tree.nodes.size(); ++m) {
    const auto p = tree.nodes[m].parent;
    if (p < 0) continue;
    auto up = a.node(node_of.at(static_cast<std::int32_t>(m))).parent;
    while (up >= 0 && !a.node(up).members.count(t)) up = a.node(up).parent;
    if (up < 0 || up != node_of.at(p)) return "ancestor relation broken at member node " + std::to_string(m);
  }
  return {};
}

// Non-root extrema never carry children.
inline bool extrema_are_leaves(const tfct::AlignmentTree& a) {
  for (const auto& n : a.nodes) {
    if (n.id != a.root_id && n.kind != tfct::NodeKind::saddle && !n.children.empty()) return false;
  }
  return true;
}

inline bool same_structure(const tfct::AlignmentTree& x, const tfct::AlignmentTree& y) {
  if (x.root_id != y.root_id || x.member_count != y.member_count || x.nodes.size() != y.nodes.size()) return false;
  for (std::size_t i = 0; i < x.nodes.size(); ++i) {
    const auto& a = x.nodes[i];
    const auto& b = y.nodes[i];
    if (a.id != b.id || a.kind != b.kind || a.parent != b.parent || a.children != b.children ||
        a.members != b.members || a.color_key != b.color_key || a.value != b.value) {
      return false;
    }
  }
  return true;
}

}  // namespace checks
