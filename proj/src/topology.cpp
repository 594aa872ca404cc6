#include "tfct/topology.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tfct {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::minimum: return "minimum";
    case NodeKind::maximum: return "maximum";
    case NodeKind::saddle: return "saddle";
  }
  return "saddle";
}

NodeKind parse_node_kind(std::string_view name) {
  if (name == "minimum") return NodeKind::minimum;
  if (name == "maximum") return NodeKind::maximum;
  if (name == "saddle") return NodeKind::saddle;
  throw std::invalid_argument("unknown node kind '" + std::string(name) + "'");
}

namespace {

class DisjointSets {
public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::int32_t find(std::int32_t x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      auto& p = parent_[static_cast<std::size_t>(x)];
      p = parent_[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  }

  std::int32_t unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (rank_[static_cast<std::size_t>(a)] < rank_[static_cast<std::size_t>(b)]) std::swap(a, b);
    parent_[static_cast<std::size_t>(b)] = a;
    if (rank_[static_cast<std::size_t>(a)] == rank_[static_cast<std::size_t>(b)]) ++rank_[static_cast<std::size_t>(a)];
    return a;
  }

private:
  std::vector<std::int32_t> parent_;
  std::vector<std::int32_t> rank_;
};

void erase_value(std::vector<VertexId>& v, VertexId x) {
  auto it = std::find(v.begin(), v.end(), x);
  if (it != v.end()) v.erase(it);
}

void replace_value(std::vector<VertexId>& v, VertexId from, VertexId to) {
  auto it = std::find(v.begin(), v.end(), from);
  if (it != v.end()) *it = to;
}

}  // namespace

std::size_t MergeTree::leaf_count() const {
  std::vector<int> children(next.size(), 0);
  for (const auto& [a, b] : arcs) ++children[static_cast<std::size_t>(b)];
  std::size_t n = 0;
  for (auto v : nodes) {
    if (children[static_cast<std::size_t>(v)] == 0 && v != root) ++n;
  }
  return n;
}

std::size_t MergeTree::saddle_count() const {
  std::vector<int> children(next.size(), 0);
  for (const auto& [a, b] : arcs) ++children[static_cast<std::size_t>(b)];
  std::size_t n = 0;
  for (auto v : nodes) {
    if (children[static_cast<std::size_t>(v)] >= 2) ++n;
  }
  return n;
}

MergeTree compute_merge_tree(const ScalarGrid& grid, MergeDirection direction) {
  auto order = sorted_vertices(grid);
  if (direction == MergeDirection::join) std::reverse(order.begin(), order.end());

  const std::size_t n = grid.size();
  MergeTree tree;
  tree.direction = direction;
  tree.next.assign(n, -1);
  DisjointSets sets(n);
  std::vector<VertexId> tail(n, -1);
  std::vector<char> processed(n, 0);

  for (VertexId v : order) {
    processed[static_cast<std::size_t>(v)] = 1;
    tail[static_cast<std::size_t>(v)] = v;
    for (VertexId u : neighbors(grid, v)) {
      if (!processed[static_cast<std::size_t>(u)]) continue;
      const auto ru = sets.find(u);
      const auto rv = sets.find(v);
      if (ru == rv) continue;
      tree.next[static_cast<std::size_t>(tail[static_cast<std::size_t>(ru)])] = v;
      const auto r = sets.unite(ru, rv);
      tail[static_cast<std::size_t>(r)] = v;
    }
  }
  tree.root = order.back();

  std::vector<int> children(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    if (tree.next[v] >= 0) ++children[static_cast<std::size_t>(tree.next[v])];
  }
  std::vector<char> is_node(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    is_node[v] = children[v] != 1 || static_cast<VertexId>(v) == tree.root;
  }
  for (VertexId v : sorted_vertices(grid)) {
    if (!is_node[static_cast<std::size_t>(v)]) continue;
    tree.nodes.push_back(v);
    if (v == tree.root) continue;
    VertexId cur = tree.next[static_cast<std::size_t>(v)];
    while (!is_node[static_cast<std::size_t>(cur)]) cur = tree.next[static_cast<std::size_t>(cur)];
    tree.arcs.emplace_back(v, cur);
  }
  return tree;
}

bool ContourTree::node_less(std::int32_t a, std::int32_t b) const {
  const auto& na = nodes[static_cast<std::size_t>(a)];
  const auto& nb = nodes[static_cast<std::size_t>(b)];
  if (na.value != nb.value) return na.value < nb.value;
  if (na.vertex != nb.vertex) return na.vertex < nb.vertex;
  return na.clone < nb.clone;
}

std::vector<std::vector<std::int32_t>> ContourTree::incident_arcs() const {
  std::vector<std::vector<std::int32_t>> inc(nodes.size());
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    inc[static_cast<std::size_t>(arcs[i].lower)].push_back(static_cast<std::int32_t>(i));
    inc[static_cast<std::size_t>(arcs[i].upper)].push_back(static_cast<std::int32_t>(i));
  }
  return inc;
}

std::int32_t ContourTree::degree(std::int32_t node) const {
  std::int32_t d = 0;
  for (const auto& a : arcs) d += (a.lower == node) + (a.upper == node);
  return d;
}

bool ContourTree::is_binary() const {
  const auto inc = incident_arcs();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto d = inc[i].size();
    if (nodes[i].kind == NodeKind::saddle ? d != 3 : d != 1) return false;
  }
  return true;
}

std::int32_t ContourTree::global_max() const {
  std::int32_t best = 0;
  for (std::int32_t i = 1; i < static_cast<std::int32_t>(nodes.size()); ++i) {
    if (node_less(best, i)) best = i;
  }
  return best;
}

std::int32_t ContourTree::global_min() const {
  std::int32_t best = 0;
  for (std::int32_t i = 1; i < static_cast<std::int32_t>(nodes.size()); ++i) {
    if (node_less(i, best)) best = i;
  }
  return best;
}

std::size_t ContourTree::leaf_count() const {
  const auto inc = incident_arcs();
  return static_cast<std::size_t>(std::count_if(inc.begin(), inc.end(), [](const auto& a) { return a.size() == 1; }));
}

std::vector<std::int32_t> ContourTree::segment_map() const {
  std::vector<std::int32_t> map(static_cast<std::size_t>(vertex_count), -1);
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    for (auto v : arcs[i].segment) map[static_cast<std::size_t>(v)] = static_cast<std::int32_t>(i);
  }
  return map;
}

void ContourTree::validate() const {
  const auto fail = [](const std::string& msg) { throw std::logic_error("contour tree invariant: " + msg); };
  if (nodes.size() < 2) fail("fewer than two nodes");
  if (arcs.size() + 1 != nodes.size()) fail("arc count is not node count - 1");
  DisjointSets sets(nodes.size());
  for (const auto& a : arcs) {
    if (a.lower < 0 || a.upper < 0 || a.lower >= static_cast<std::int32_t>(nodes.size()) ||
        a.upper >= static_cast<std::int32_t>(nodes.size())) {
      fail("arc endpoint out of range");
    }
    if (!node_less(a.lower, a.upper)) fail("arc endpoints not ordered");
    if (sets.find(a.lower) == sets.find(a.upper)) fail("cycle");
    sets.unite(a.lower, a.upper);
  }
  std::vector<int> up(nodes.size(), 0);
  std::vector<int> down(nodes.size(), 0);
  for (const auto& a : arcs) {
    ++up[static_cast<std::size_t>(a.lower)];
    ++down[static_cast<std::size_t>(a.upper)];
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto kind = nodes[i].kind;
    if (down[i] == 0 && kind != NodeKind::minimum) fail("node without down arcs is not a minimum");
    if (up[i] == 0 && kind != NodeKind::maximum) fail("node without up arcs is not a maximum");
    if (kind == NodeKind::saddle && up[i] + down[i] < 3) fail("saddle of degree < 3");
    if (kind != NodeKind::saddle && up[i] + down[i] != 1) fail("extremum is not a leaf");
  }
  std::vector<int> seen(static_cast<std::size_t>(vertex_count), 0);
  for (const auto& a : arcs) {
    for (auto v : a.segment) {
      if (v < 0 || v >= vertex_count) fail("segment vertex out of range");
      if (seen[static_cast<std::size_t>(v)]++) fail("segments overlap");
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) fail("segments do not cover the grid");
}

namespace {

void assign_node_vertices(ContourTree& tree) {
  const auto inc = tree.incident_arcs();
  for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
    if (tree.nodes[n].clone != 0) continue;
    std::int32_t best = -1;
    for (auto a : inc[n]) {
      if (best < 0 || tree.node_less(tree.opposite(tree.arcs[static_cast<std::size_t>(a)], static_cast<std::int32_t>(n)),
                                     tree.opposite(tree.arcs[static_cast<std::size_t>(best)], static_cast<std::int32_t>(n)))) {
        best = a;
      }
    }
    tree.arcs[static_cast<std::size_t>(best)].segment.push_back(tree.nodes[n].vertex);
  }
  for (auto& a : tree.arcs) std::sort(a.segment.begin(), a.segment.end());
}

NodeKind kind_from_degrees(int up, int down) {
  if (down == 0) return NodeKind::minimum;
  if (up == 0) return NodeKind::maximum;
  return NodeKind::saddle;
}

}  // namespace

ContourTree combine(const ScalarGrid& grid, const MergeTree& join, const MergeTree& split) {
  const std::size_t n = grid.size();
  if (join.direction != MergeDirection::join || split.direction != MergeDirection::split) {
    throw std::invalid_argument("combine expects a join tree and a split tree");
  }
  if (join.next.size() != n || split.next.size() != n) {
    throw std::invalid_argument("merge trees do not cover the same vertex set");
  }

  std::vector<VertexId> jt_down = join.next;
  std::vector<VertexId> st_up = split.next;
  std::vector<std::vector<VertexId>> jt_up(n);
  std::vector<std::vector<VertexId>> st_down(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (jt_down[v] >= 0) jt_up[static_cast<std::size_t>(jt_down[v])].push_back(static_cast<VertexId>(v));
    if (st_up[v] >= 0) st_down[static_cast<std::size_t>(st_up[v])].push_back(static_cast<VertexId>(v));
  }

  const auto is_upper_leaf = [&](VertexId v) {
    return jt_up[static_cast<std::size_t>(v)].empty() && st_down[static_cast<std::size_t>(v)].size() == 1;
  };
  const auto is_lower_leaf = [&](VertexId v) {
    return st_down[static_cast<std::size_t>(v)].empty() && jt_up[static_cast<std::size_t>(v)].size() == 1;
  };

  std::vector<char> removed(n, 0);
  std::vector<char> queued(n, 0);
  std::vector<VertexId> queue;
  for (std::size_t v = 0; v < n; ++v) {
    if (is_upper_leaf(static_cast<VertexId>(v)) || is_lower_leaf(static_cast<VertexId>(v))) {
      queue.push_back(static_cast<VertexId>(v));
      queued[v] = 1;
    }
  }

  std::vector<std::pair<VertexId, VertexId>> augmented;
  augmented.reserve(n);
  std::size_t remaining = n;
  std::size_t head = 0;
  while (remaining > 1) {
    if (head == queue.size()) throw std::logic_error("join/split trees are inconsistent; merge stalled");
    const VertexId v = queue[head++];
    VertexId w = -1;
    if (is_upper_leaf(v)) {
      w = jt_down[static_cast<std::size_t>(v)];
      erase_value(jt_up[static_cast<std::size_t>(w)], v);
      const VertexId d = st_down[static_cast<std::size_t>(v)].front();
      const VertexId u = st_up[static_cast<std::size_t>(v)];
      st_up[static_cast<std::size_t>(d)] = u;
      if (u >= 0) replace_value(st_down[static_cast<std::size_t>(u)], v, d);
    } else if (is_lower_leaf(v)) {
      w = st_up[static_cast<std::size_t>(v)];
      erase_value(st_down[static_cast<std::size_t>(w)], v);
      const VertexId u = jt_up[static_cast<std::size_t>(v)].front();
      const VertexId d = jt_down[static_cast<std::size_t>(v)];
      jt_down[static_cast<std::size_t>(u)] = d;
      if (d >= 0) replace_value(jt_up[static_cast<std::size_t>(d)], v, u);
    } else {
      throw std::logic_error("queued vertex is no longer a leaf");
    }
    augmented.emplace_back(v, w);
    removed[static_cast<std::size_t>(v)] = 1;
    --remaining;
    if (!removed[static_cast<std::size_t>(w)] && !queued[static_cast<std::size_t>(w)] &&
        (is_upper_leaf(w) || is_lower_leaf(w))) {
      queue.push_back(w);
      queued[static_cast<std::size_t>(w)] = 1;
    }
  }

  // Contract regular vertices (one up, one down neighbour).
  const auto rank = vertex_ranks(grid);
  std::vector<std::vector<VertexId>> up(n);
  std::vector<int> down_count(n, 0);
  for (const auto& [a, b] : augmented) {
    const auto lo = rank[static_cast<std::size_t>(a)] < rank[static_cast<std::size_t>(b)] ? a : b;
    const auto hi = lo == a ? b : a;
    up[static_cast<std::size_t>(lo)].push_back(hi);
    ++down_count[static_cast<std::size_t>(hi)];
  }

  ContourTree tree;
  tree.vertex_count = static_cast<std::int32_t>(n);
  std::vector<std::int32_t> node_of(n, -1);
  for (VertexId v : sorted_vertices(grid)) {
    const auto vi = static_cast<std::size_t>(v);
    const int u = static_cast<int>(up[vi].size());
    if (u == 1 && down_count[vi] == 1) continue;
    node_of[vi] = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.push_back({v, grid[v], kind_from_degrees(u, down_count[vi]), 0});
  }
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto v = tree.nodes[i].vertex;
    for (VertexId start : up[static_cast<std::size_t>(v)]) {
      CtArc arc;
      arc.lower = static_cast<std::int32_t>(i);
      VertexId cur = start;
      while (node_of[static_cast<std::size_t>(cur)] < 0) {
        arc.segment.push_back(cur);
        cur = up[static_cast<std::size_t>(cur)].front();
      }
      arc.upper = node_of[static_cast<std::size_t>(cur)];
      tree.arcs.push_back(std::move(arc));
    }
  }
  assign_node_vertices(tree);
  return tree;
}

namespace {

// Extremal node of the part of the tree reached from `start` without passing
// through `blocked`.
std::int32_t subtree_extremum(const ContourTree& tree, const std::vector<std::vector<std::int32_t>>& inc,
                              std::int32_t start, std::int32_t blocked, bool want_max) {
  std::int32_t best = start;
  std::vector<std::int32_t> stack{start};
  std::vector<char> seen(tree.nodes.size(), 0);
  seen[static_cast<std::size_t>(start)] = 1;
  seen[static_cast<std::size_t>(blocked)] = 1;
  while (!stack.empty()) {
    const auto n = stack.back();
    stack.pop_back();
    if (want_max ? tree.node_less(best, n) : tree.node_less(n, best)) best = n;
    for (auto a : inc[static_cast<std::size_t>(n)]) {
      const auto o = tree.opposite(tree.arcs[static_cast<std::size_t>(a)], n);
      if (!seen[static_cast<std::size_t>(o)]) {
        seen[static_cast<std::size_t>(o)] = 1;
        stack.push_back(o);
      }
    }
  }
  return best;
}

}  // namespace

ContourTree unfold_degenerate_saddles(const ContourTree& input) {
  ContourTree tree = input;
  const std::size_t original_count = tree.nodes.size();
  for (std::size_t si = 0; si < original_count; ++si) {
    const auto s = static_cast<std::int32_t>(si);
    const auto inc = tree.incident_arcs();
    if (inc[si].size() <= 3) continue;

    std::vector<std::pair<std::int32_t, std::int32_t>> downs;  // (extremum, arc)
    std::vector<std::pair<std::int32_t, std::int32_t>> ups;
    for (auto a : inc[si]) {
      const auto& arc = tree.arcs[static_cast<std::size_t>(a)];
      if (arc.upper == s) {
        downs.emplace_back(subtree_extremum(tree, inc, arc.lower, s, false), a);
      } else {
        ups.emplace_back(subtree_extremum(tree, inc, arc.upper, s, true), a);
      }
    }
    const auto by_extremum = [&](const auto& l, const auto& r) { return tree.node_less(l.first, r.first); };
    std::sort(downs.begin(), downs.end(), by_extremum);
    std::sort(ups.begin(), ups.end(), by_extremum);

    std::int32_t clones = 0;
    const auto new_clone = [&]() -> std::int32_t {
      if (clones == 0) {
        ++clones;
        return s;
      }
      CtNode node = tree.nodes[si];
      node.clone = clones++;
      tree.nodes.push_back(node);
      return static_cast<std::int32_t>(tree.nodes.size() - 1);
    };
    const auto attach_down = [&](std::int32_t arc, std::int32_t node) { tree.arcs[static_cast<std::size_t>(arc)].upper = node; };
    const auto attach_up = [&](std::int32_t arc, std::int32_t node) { tree.arcs[static_cast<std::size_t>(arc)].lower = node; };
    const auto chain = [&](std::int32_t lower, std::int32_t upper) { tree.arcs.push_back({lower, upper, {}}); };

    std::int32_t cur = -1;
    if (downs.size() >= 2) {
      cur = new_clone();
      attach_down(downs[0].second, cur);
      attach_down(downs[1].second, cur);
      for (std::size_t i = 2; i < downs.size(); ++i) {
        const auto c = new_clone();
        attach_down(downs[i].second, c);
        chain(cur, c);
        cur = c;
      }
    }
    if (ups.size() == 1) {
      attach_up(ups[0].second, cur);
    } else {
      std::int32_t prev = -1;
      for (std::size_t j = 0; j + 1 < ups.size(); ++j) {
        const auto c = new_clone();
        if (j == 0) {
          if (cur >= 0) {
            chain(cur, c);
          } else {
            attach_down(downs[0].second, c);
          }
        } else {
          chain(prev, c);
        }
        attach_up(ups[j].second, c);
        if (j + 2 == ups.size()) attach_up(ups[j + 1].second, c);
        prev = c;
      }
    }
  }
  return tree;
}

namespace {

// Mutable view used by simplification.
class PruningTree {
public:
  struct Arc {
    std::int32_t lower;
    std::int32_t upper;
    std::vector<VertexId> segment;
    bool alive = true;
  };

  explicit PruningTree(const ContourTree& tree)
      : tree_(tree), alive_(tree.nodes.size(), 1), inc_(tree.nodes.size()), gmax_(tree.global_max()), gmin_(tree.global_min()) {
    for (std::size_t i = 0; i < tree.arcs.size(); ++i) {
      const auto& a = tree.arcs[i];
      arcs_.push_back({a.lower, a.upper, a.segment, true});
      inc_[static_cast<std::size_t>(a.lower)].push_back(static_cast<std::int32_t>(i));
      inc_[static_cast<std::size_t>(a.upper)].push_back(static_cast<std::int32_t>(i));
    }
  }

  // Prunes while `accept(persistence)` holds for the lowest candidate. The
  // global extrema are only considered once no other leaf can be pruned.
  template <typename Accept>
  void run(Accept accept) {
    for (;;) {
      auto best = lowest_candidate(false);
      if (best.leaf < 0) best = lowest_candidate(true);
      if (best.leaf < 0 || !accept(best.persistence)) return;
      prune(best.leaf, best.arc);
    }
  }

  ContourTree result() const {
    ContourTree out;
    out.vertex_count = tree_.vertex_count;
    std::vector<std::int32_t> remap(alive_.size(), -1);
    for (std::size_t n = 0; n < alive_.size(); ++n) {
      if (!alive_[n]) continue;
      remap[n] = static_cast<std::int32_t>(out.nodes.size());
      out.nodes.push_back(tree_.nodes[n]);
    }
    for (const auto& a : arcs_) {
      if (!a.alive) continue;
      CtArc arc{remap[static_cast<std::size_t>(a.lower)], remap[static_cast<std::size_t>(a.upper)], a.segment};
      std::sort(arc.segment.begin(), arc.segment.end());
      out.arcs.push_back(std::move(arc));
    }
    return out;
  }

private:
  struct Candidate {
    std::int32_t leaf = -1;
    std::int32_t arc = -1;
    double persistence = 0.0;
  };

  Candidate lowest_candidate(bool allow_global) const {
    Candidate best;
    for (std::size_t n = 0; n < alive_.size(); ++n) {
      if (!alive_[n] || inc_[n].size() != 1) continue;
      const auto leaf = static_cast<std::int32_t>(n);
      if (!allow_global && (leaf == gmax_ || leaf == gmin_)) continue;
      const auto a = inc_[n].front();
      const auto& arc = arcs_[static_cast<std::size_t>(a)];
      const bool is_max = arc.upper == leaf;
      const auto s = is_max ? arc.lower : arc.upper;
      int same_side = 0;
      for (auto b : inc_[static_cast<std::size_t>(s)]) {
        const auto& other = arcs_[static_cast<std::size_t>(b)];
        same_side += is_max ? other.lower == s : other.upper == s;
      }
      if (same_side < 2) continue;
      const double p = std::abs(tree_.nodes[n].value - tree_.nodes[static_cast<std::size_t>(s)].value);
      if (best.leaf < 0 || p < best.persistence || (p == best.persistence && tree_.node_less(leaf, best.leaf))) {
        best = {leaf, a, p};
      }
    }
    return best;
  }

  void kill_arc(std::int32_t a) {
    auto& arc = arcs_[static_cast<std::size_t>(a)];
    arc.alive = false;
    for (auto end : {arc.lower, arc.upper}) {
      auto& v = inc_[static_cast<std::size_t>(end)];
      v.erase(std::find(v.begin(), v.end(), a));
    }
  }

  void prune(std::int32_t leaf, std::int32_t a) {
    const auto& arc = arcs_[static_cast<std::size_t>(a)];
    const auto s = arc.lower == leaf ? arc.upper : arc.lower;
    auto segment = arc.segment;
    kill_arc(a);
    alive_[static_cast<std::size_t>(leaf)] = 0;

    auto& sinc = inc_[static_cast<std::size_t>(s)];
    std::int32_t below = -1;
    std::int32_t above = -1;
    int ups = 0;
    int downs = 0;
    for (auto b : sinc) {
      if (arcs_[static_cast<std::size_t>(b)].upper == s) {
        below = b;
        ++downs;
      } else {
        above = b;
        ++ups;
      }
    }
    if (ups == 1 && downs == 1) {
      const auto& lo = arcs_[static_cast<std::size_t>(below)];
      const auto& hi = arcs_[static_cast<std::size_t>(above)];
      Arc merged{lo.lower, hi.upper, lo.segment, true};
      merged.segment.insert(merged.segment.end(), hi.segment.begin(), hi.segment.end());
      merged.segment.insert(merged.segment.end(), segment.begin(), segment.end());
      kill_arc(below);
      kill_arc(above);
      alive_[static_cast<std::size_t>(s)] = 0;
      const auto id = static_cast<std::int32_t>(arcs_.size());
      inc_[static_cast<std::size_t>(merged.lower)].push_back(id);
      inc_[static_cast<std::size_t>(merged.upper)].push_back(id);
      arcs_.push_back(std::move(merged));
    } else {
      std::int32_t target = -1;
      for (auto b : sinc) {
        if (target < 0 || tree_.node_less(other_end(b, s), other_end(target, s))) target = b;
      }
      auto& dst = arcs_[static_cast<std::size_t>(target)].segment;
      dst.insert(dst.end(), segment.begin(), segment.end());
    }
  }

  std::int32_t other_end(std::int32_t a, std::int32_t n) const {
    const auto& arc = arcs_[static_cast<std::size_t>(a)];
    return arc.lower == n ? arc.upper : arc.lower;
  }

  const ContourTree& tree_;
  std::vector<char> alive_;
  std::vector<std::vector<std::int32_t>> inc_;
  std::vector<Arc> arcs_;
  std::int32_t gmax_;
  std::int32_t gmin_;
};

}  // namespace

ContourTree simplify(const ContourTree& tree, double threshold, bool prune_zero) {
  if (!(threshold >= 0.0)) throw std::invalid_argument("simplification threshold must be >= 0");
  PruningTree pt(tree);
  pt.run([&](double p) { return p < threshold || (prune_zero && p == 0.0); });
  return pt.result();
}

ContourTree compute_contour_tree(const ScalarGrid& grid, double simplify_threshold) {
  const auto join = compute_merge_tree(grid, MergeDirection::join);
  const auto split = compute_merge_tree(grid, MergeDirection::split);
  auto tree = unfold_degenerate_saddles(combine(grid, join, split));
  if (simplify_threshold > 0.0) tree = simplify(tree, simplify_threshold);
  return tree;
}

namespace {

struct Rooted {
  std::vector<std::int32_t> parent;       // -1 on the main path
  std::vector<std::int32_t> parent_arc;
  std::vector<std::vector<std::int32_t>> children;
  std::vector<std::int32_t> order;        // parents before children
};

// Roots every off-path subtree at its attachment node on the main path.
Rooted root_at_path(const ContourTree& tree, const std::vector<std::vector<std::int32_t>>& inc,
                    const std::vector<std::int32_t>& path) {
  const auto n = tree.nodes.size();
  Rooted r{std::vector<std::int32_t>(n, -1), std::vector<std::int32_t>(n, -1), std::vector<std::vector<std::int32_t>>(n), {}};
  std::vector<char> seen(n, 0);
  for (auto p : path) seen[static_cast<std::size_t>(p)] = 1;
  r.order = path;
  for (std::size_t head = 0; head < r.order.size(); ++head) {
    const auto x = r.order[head];
    for (auto a : inc[static_cast<std::size_t>(x)]) {
      const auto y = tree.opposite(tree.arcs[static_cast<std::size_t>(a)], x);
      if (seen[static_cast<std::size_t>(y)]) continue;
      seen[static_cast<std::size_t>(y)] = 1;
      r.parent[static_cast<std::size_t>(y)] = x;
      r.parent_arc[static_cast<std::size_t>(y)] = a;
      r.children[static_cast<std::size_t>(x)].push_back(y);
      r.order.push_back(y);
    }
  }
  return r;
}

struct LeafOption {
  std::int32_t leaf;
  double persistence;  // |leaf - attachment|
  double hanging;      // worst best-case persistence of the subtrees hanging off the path
};

// Leaves of the subtree under `y` with the hanging bound of their path.
std::vector<LeafOption> leaf_options(const ContourTree& tree, const Rooted& r, const std::vector<double>& best,
                                     std::int32_t y) {
  const double base = tree.nodes[static_cast<std::size_t>(r.parent[static_cast<std::size_t>(y)])].value;
  std::vector<LeafOption> out;
  std::vector<std::pair<std::int32_t, double>> stack{{y, 0.0}};
  while (!stack.empty()) {
    const auto [x, h] = stack.back();
    stack.pop_back();
    const auto& ch = r.children[static_cast<std::size_t>(x)];
    if (ch.empty()) {
      out.push_back({x, std::abs(tree.nodes[static_cast<std::size_t>(x)].value - base), h});
      continue;
    }
    // largest and second largest child bound
    std::int32_t top = -1;
    double m1 = 0.0;
    double m2 = 0.0;
    for (auto c : ch) {
      const double b = best[static_cast<std::size_t>(c)];
      if (top < 0 || b > m1) {
        m2 = m1;
        m1 = b;
        top = c;
      } else if (b > m2) {
        m2 = b;
      }
    }
    for (auto c : ch) stack.emplace_back(c, std::max(h, c == top ? m2 : m1));
  }
  return out;
}

}  // namespace

BranchDecomposition branch_decomposition(const ContourTree& tree) {
  if (!tree.is_binary()) throw std::invalid_argument("branch decomposition requires a binary contour tree");
  const auto inc = tree.incident_arcs();
  const auto gmax = tree.global_max();
  const auto gmin = tree.global_min();

  // main path from the global maximum to the global minimum
  std::vector<std::int32_t> main_path;
  {
    std::vector<std::int32_t> prev(tree.nodes.size(), -2);
    std::vector<std::int32_t> queue{gmax};
    prev[static_cast<std::size_t>(gmax)] = -1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const auto x = queue[head];
      for (auto a : inc[static_cast<std::size_t>(x)]) {
        const auto y = tree.opposite(tree.arcs[static_cast<std::size_t>(a)], x);
        if (prev[static_cast<std::size_t>(y)] != -2) continue;
        prev[static_cast<std::size_t>(y)] = x;
        queue.push_back(y);
      }
    }
    for (auto x = gmin; x >= 0; x = prev[static_cast<std::size_t>(x)]) main_path.push_back(x);
    std::reverse(main_path.begin(), main_path.end());
  }
  const auto r = root_at_path(tree, inc, main_path);

  // best[y]: smallest top persistence of a decomposition of the subtree under
  // y (hanging from parent(y)) whose persistences never increase downwards,
  // infinite when there is none. worst[y]: smallest achievable maximum
  // persistence, used when no such decomposition exists.
  std::vector<double> best(tree.nodes.size(), 0.0);
  std::vector<double> worst(tree.nodes.size(), 0.0);
  for (auto it = r.order.rbegin(); it != r.order.rend(); ++it) {
    const auto y = *it;
    if (r.parent[static_cast<std::size_t>(y)] < 0) continue;
    double b = std::numeric_limits<double>::infinity();
    for (const auto& o : leaf_options(tree, r, best, y)) {
      if (o.hanging <= o.persistence) b = std::min(b, o.persistence);
    }
    double w = std::numeric_limits<double>::infinity();
    for (const auto& o : leaf_options(tree, r, worst, y)) w = std::min(w, std::max(o.persistence, o.hanging));
    best[static_cast<std::size_t>(y)] = b;
    worst[static_cast<std::size_t>(y)] = w;
  }

  BranchDecomposition bd;
  bd.branch_of_node.assign(tree.nodes.size(), -1);
  const auto add_branch = [&](std::int32_t leaf_end, std::int32_t other_end, std::int32_t saddle,
                              std::vector<std::int32_t> path) {
    Branch b;
    b.id = static_cast<std::int32_t>(bd.branches.size());
    const bool leaf_on_top = tree.node_less(other_end, leaf_end);
    b.top_node = leaf_on_top ? leaf_end : other_end;
    b.bottom_node = leaf_on_top ? other_end : leaf_end;
    b.attachment_saddle = saddle;
    b.persistence = std::abs(tree.nodes[static_cast<std::size_t>(leaf_end)].value -
                             tree.nodes[static_cast<std::size_t>(other_end)].value);
    for (auto node : path) {
      bd.branch_of_node[static_cast<std::size_t>(node)] = b.id;
      if (r.parent_arc[static_cast<std::size_t>(node)] >= 0) b.arcs.push_back(r.parent_arc[static_cast<std::size_t>(node)]);
    }
    b.node_path = std::move(path);
    bd.branches.push_back(std::move(b));
    return bd.branches.back().id;
  };

  // main branch arcs are the path arcs
  add_branch(gmax, gmin, -1, main_path);
  for (std::size_t i = 0; i + 1 < main_path.size(); ++i) {
    for (auto a : inc[static_cast<std::size_t>(main_path[i])]) {
      if (tree.opposite(tree.arcs[static_cast<std::size_t>(a)], main_path[i]) == main_path[i + 1]) bd.branches[0].arcs.push_back(a);
    }
  }

  struct Pending {
    std::int32_t root;
    std::int32_t parent_branch;
    double limit;
  };
  std::vector<Pending> queue;
  const auto enqueue_hanging = [&](const std::vector<std::int32_t>& path, std::int32_t branch, double limit) {
    for (auto x : path) {
      for (auto c : r.children[static_cast<std::size_t>(x)]) {
        if (bd.branch_of_node[static_cast<std::size_t>(c)] < 0) queue.push_back({c, branch, limit});
      }
    }
  };
  enqueue_hanging(main_path, 0, bd.branches[0].persistence);

  for (std::size_t head = 0; head < queue.size(); ++head) {
    const auto job = queue[head];
    // Largest persistence that keeps the chain non-increasing; otherwise the
    // option with the smallest worst case.
    auto options = leaf_options(tree, r, best, job.root);
    const LeafOption* pick = nullptr;
    for (const auto& o : options) {
      if (o.hanging > o.persistence || o.persistence > job.limit) continue;
      if (!pick || o.persistence > pick->persistence ||
          (o.persistence == pick->persistence && tree.node_less(o.leaf, pick->leaf))) {
        pick = &o;
      }
    }
    if (!pick) {
      options = leaf_options(tree, r, worst, job.root);
      for (const auto& o : options) {
        const double w = std::max(o.persistence, o.hanging);
        const double pw = pick ? std::max(pick->persistence, pick->hanging) : 0.0;
        if (!pick || w < pw || (w == pw && tree.node_less(o.leaf, pick->leaf))) pick = &o;
      }
    }
    const auto saddle = r.parent[static_cast<std::size_t>(job.root)];
    std::vector<std::int32_t> path;  // leaf first, saddle excluded
    for (auto x = pick->leaf; x != saddle; x = r.parent[static_cast<std::size_t>(x)]) path.push_back(x);
    const auto id = add_branch(pick->leaf, saddle, saddle, path);
    bd.branches.back().parent_branch = job.parent_branch;
    enqueue_hanging(path, id, pick->persistence);
  }

  // main first, then descending persistence
  std::vector<std::int32_t> order(bd.branches.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin() + 1, order.end(), [&](std::int32_t a, std::int32_t b) {
    return bd.branches[static_cast<std::size_t>(a)].persistence > bd.branches[static_cast<std::size_t>(b)].persistence;
  });
  std::vector<std::int32_t> new_id(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) new_id[static_cast<std::size_t>(order[i])] = static_cast<std::int32_t>(i);
  std::vector<Branch> sorted;
  for (auto old : order) {
    Branch b = std::move(bd.branches[static_cast<std::size_t>(old)]);
    b.id = new_id[static_cast<std::size_t>(old)];
    if (b.parent_branch >= 0) b.parent_branch = new_id[static_cast<std::size_t>(b.parent_branch)];
    std::sort(b.arcs.begin(), b.arcs.end());
    for (auto a : b.arcs) b.volume += static_cast<std::int64_t>(tree.arcs[static_cast<std::size_t>(a)].segment.size());
    sorted.push_back(std::move(b));
  }
  bd.branches = std::move(sorted);
  for (auto& owner : bd.branch_of_node) owner = new_id[static_cast<std::size_t>(owner)];
  return bd;
}

std::vector<VertexId> BranchDecomposition::segment(const ContourTree& tree, std::int32_t branch) const {
  std::vector<VertexId> out;
  for (auto a : branches[static_cast<std::size_t>(branch)].arcs) {
    const auto& seg = tree.arcs[static_cast<std::size_t>(a)].segment;
    out.insert(out.end(), seg.begin(), seg.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string export_debug_text(const ContourTree& tree) {
  std::ostringstream out;
  out.precision(17);
  out << "# nodes\n";
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    out << i << ' ' << n.vertex << ' ' << n.value << ' ' << to_string(n.kind) << '\n';
  }
  out << "# arcs\n";
  for (const auto& a : tree.arcs) out << a.lower << ' ' << a.upper << '\n';
  return out.str();
}

}  // namespace tfct
