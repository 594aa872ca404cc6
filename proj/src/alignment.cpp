#include "tfct/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "tfct/diagnostics.hpp"

namespace tfct {

std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::persistence: return "persistence";
    case MetricKind::volume: return "volume";
    case MetricKind::combined: return "combined";
    case MetricKind::overlap: return "overlap";
  }
  return "overlap";
}

MetricKind parse_metric_kind(std::string_view name) {
  if (name == "persistence") return MetricKind::persistence;
  if (name == "volume") return MetricKind::volume;
  if (name == "combined") return MetricKind::combined;
  if (name == "overlap") return MetricKind::overlap;
  throw std::invalid_argument("unknown metric '" + std::string(name) + "'");
}

JaccardCounts jaccard_counts(const std::vector<VertexId>& a, const std::vector<VertexId>& b) {
  JaccardCounts c;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++c.intersection;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  c.union_size = static_cast<std::int64_t>(a.size() + b.size()) - c.intersection;
  return c;
}

namespace {

double relative_difference(double a, double b) {
  const double m = std::max(std::abs(a), std::abs(b));
  return m == 0.0 ? 0.0 : std::abs(a - b) / m;
}

}  // namespace

double node_cost(const NodeAttributes& a, const NodeAttributes& b, const MatchMetric& metric, bool* degenerate) {
  const auto persistence_term = [&] {
    if (degenerate && a.persistence == 0.0 && b.persistence == 0.0) *degenerate = true;
    return relative_difference(a.persistence, b.persistence);
  };
  const auto volume_term = [&] {
    return relative_difference(static_cast<double>(a.volume), static_cast<double>(b.volume));
  };
  switch (metric.kind) {
    case MetricKind::persistence: return persistence_term();
    case MetricKind::volume: return volume_term();
    case MetricKind::combined: return metric.lambda * persistence_term() + (1.0 - metric.lambda) * volume_term();
    case MetricKind::overlap: {
      static const std::vector<VertexId> empty;
      const auto c = jaccard_counts(a.segment ? *a.segment : empty, b.segment ? *b.segment : empty);
      if (c.union_size == 0) return 0.0;
      return 1.0 - static_cast<double>(c.intersection) / static_cast<double>(c.union_size);
    }
  }
  return 1.0;
}

MemberTree make_member_tree(const ContourTree& tree, std::int32_t step) {
  const auto bd = branch_decomposition(tree);  // rejects non-binary trees
  std::vector<NodeAttributes> branch_attr(bd.branches.size());
  for (std::size_t b = 0; b < bd.branches.size(); ++b) {
    branch_attr[b].persistence = bd.branches[b].persistence;
    branch_attr[b].volume = bd.branches[b].volume;
    branch_attr[b].segment = std::make_shared<const std::vector<VertexId>>(bd.segment(tree, static_cast<std::int32_t>(b)));
  }

  MemberTree mt;
  mt.step = step;
  mt.root = tree.global_max();
  mt.nodes.resize(tree.nodes.size());
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    auto& n = mt.nodes[i];
    n.ct_node = static_cast<std::int32_t>(i);
    n.kind = tree.nodes[i].kind;
    n.value = tree.nodes[i].value;
    n.attr = branch_attr[static_cast<std::size_t>(bd.branch_of_node[i])];
  }
  const auto inc = tree.incident_arcs();
  std::vector<std::int32_t> queue{mt.root};
  std::vector<char> seen(tree.nodes.size(), 0);
  seen[static_cast<std::size_t>(mt.root)] = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const auto x = queue[head];
    for (auto a : inc[static_cast<std::size_t>(x)]) {
      const auto y = tree.opposite(tree.arcs[static_cast<std::size_t>(a)], x);
      if (seen[static_cast<std::size_t>(y)]) continue;
      seen[static_cast<std::size_t>(y)] = 1;
      mt.nodes[static_cast<std::size_t>(y)].parent = x;
      mt.nodes[static_cast<std::size_t>(x)].children.push_back(y);
      queue.push_back(y);
    }
  }
  for (auto& n : mt.nodes) std::sort(n.children.begin(), n.children.end());
  return mt;
}

bool AlignmentTree::contains(std::int32_t id) const {
  return std::binary_search(nodes.begin(), nodes.end(), id, [](const auto& l, const auto& r) {
    if constexpr (std::is_same_v<std::decay_t<decltype(l)>, AlignmentNode>) {
      return l.id < r;
    } else {
      return l < r.id;
    }
  });
}

std::size_t AlignmentTree::index_of(std::int32_t id) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), id, [](const AlignmentNode& n, std::int32_t v) { return n.id < v; });
  if (it == nodes.end() || it->id != id) throw std::out_of_range("no alignment node with id " + std::to_string(id));
  return static_cast<std::size_t>(it - nodes.begin());
}

void AlignmentTree::validate() const {
  const auto fail = [](const std::string& msg) { throw std::logic_error("alignment invariant: " + msg); };
  if (nodes.empty()) fail("no nodes");
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (nodes[i - 1].id >= nodes[i].id) fail("node ids not ascending");
  }
  if (!contains(root_id)) fail("missing root");
  if (static_cast<std::int32_t>(steps.size()) != member_count) fail("step list does not match member count");
  std::vector<std::int32_t> sorted_steps = steps;
  std::sort(sorted_steps.begin(), sorted_steps.end());
  std::size_t reached = 0;
  std::vector<std::int32_t> stack{root_id};
  std::vector<char> seen(nodes.size(), 0);
  while (!stack.empty()) {
    const auto id = stack.back();
    stack.pop_back();
    const auto idx = index_of(id);
    if (seen[idx]++) fail("cycle through node " + std::to_string(id));
    ++reached;
    for (auto c : nodes[idx].children) {
      if (node(c).parent != id) fail("child " + std::to_string(c) + " does not point back to " + std::to_string(id));
      stack.push_back(c);
    }
  }
  if (reached != nodes.size()) fail("tree is not connected");
  for (const auto& n : nodes) {
    if (n.id != root_id && (n.parent < 0 || !contains(n.parent))) fail("dangling parent at " + std::to_string(n.id));
    if (n.frequency() < 1 || n.frequency() > member_count) fail("frequency out of range at " + std::to_string(n.id));
    for (const auto& [t, ref] : n.members) {
      if (!std::binary_search(sorted_steps.begin(), sorted_steps.end(), t)) fail("member of unknown step");
    }
  }
  if (node(root_id).frequency() != member_count) fail("root frequency differs from member count");
  if (node(root_id).parent != -1) fail("root has a parent");
}

AlignmentTree alignment_from_tree(const MemberTree& tree, const MatchMetric& metric) {
  AlignmentTree a;
  a.metric = metric;
  a.member_count = 1;
  a.steps = {tree.step};
  a.root_id = tree.root;
  a.nodes.resize(tree.nodes.size());
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& m = tree.nodes[i];
    auto& n = a.nodes[i];
    n.id = static_cast<std::int32_t>(i);
    n.kind = m.kind;
    n.value = m.value;
    n.parent = m.parent;
    n.children = m.children;
    n.members[tree.step] = {static_cast<std::int32_t>(i), m.value};
    n.color_key = n.id;
    n.attr = m.attr;
  }
  return a;
}

namespace {

using Ids = std::vector<std::int32_t>;

Ids without(const Ids& set, const Ids& removed) {
  Ids out;
  for (auto v : set) {
    if (std::find(removed.begin(), removed.end(), v) == removed.end()) out.push_back(v);
  }
  return out;
}

// Alignment dynamic program between the base alignment (side A, node
// indices into base.nodes) and a member tree (side B, node indices).
class PairAligner {
public:
  PairAligner(const AlignmentTree& base, const MemberTree& tree, const MatchMetric& metric)
      : base_(base), tree_(tree), metric_(metric), children_a_(base.nodes.size()), size_a_(base.nodes.size(), 0),
        size_b_(tree.nodes.size(), 0), preferred_(base.nodes.size(), 0) {
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
      for (auto c : base.nodes[i].children) children_a_[i].push_back(static_cast<std::int32_t>(base.index_of(c)));
      std::sort(children_a_[i].begin(), children_a_[i].end());
      if (!base.steps.empty()) preferred_[i] = base.nodes[i].members.count(base.steps.back()) > 0;
    }
    for (std::size_t i = base.nodes.size(); i-- > 0;) size_a_[i] = subtree_size_a(static_cast<std::int32_t>(i));
    for (std::size_t i = tree.nodes.size(); i-- > 0;) size_b_[i] = subtree_size_b(static_cast<std::int32_t>(i));
  }

  double solve() {
    const auto ra = static_cast<std::int32_t>(base_.index_of(base_.root_id));
    return root_cost_ = forest(children_a_[static_cast<std::size_t>(ra)], tree_.nodes[static_cast<std::size_t>(tree_.root)].children);
  }

  int degenerate_pairs() const { return degenerate_; }

  AlignmentTree build() {
    out_ = base_;
    out_.member_count = base_.member_count + 1;
    out_.steps.push_back(tree_.step);
    next_id_ = base_.next_id();
    const auto ra = static_cast<std::int32_t>(base_.index_of(base_.root_id));
    match_node(ra, tree_.root);
    emit(children_a_[static_cast<std::size_t>(ra)], tree_.nodes[static_cast<std::size_t>(tree_.root)].children, base_.root_id);

    std::sort(out_.nodes.begin(), out_.nodes.end(), [](const auto& l, const auto& r) { return l.id < r.id; });
    for (auto& n : out_.nodes) n.children.clear();
    for (auto& n : out_.nodes) {
      if (n.id != out_.root_id) out_.node(n.parent).children.push_back(n.id);
    }
    for (auto& n : out_.nodes) std::sort(n.children.begin(), n.children.end());
    return std::move(out_);
  }

private:
  enum class Move { a_only, b_only, match, insert_b, gap_a };

  struct Entry {
    double cost = 0.0;
    Move move = Move::a_only;
    std::int32_t x = -1;
    std::int32_t y = -1;
    Ids subset;  // absorbed children: from A for insert_b, from B for gap_a
  };

  std::int32_t subtree_size_a(std::int32_t i) const {
    std::int32_t s = 1;
    for (auto c : children_a_[static_cast<std::size_t>(i)]) s += size_a_[static_cast<std::size_t>(c)];
    return s;
  }

  std::int32_t subtree_size_b(std::int32_t i) const {
    std::int32_t s = 1;
    for (auto c : tree_.nodes[static_cast<std::size_t>(i)].children) s += size_b_[static_cast<std::size_t>(c)];
    return s;
  }

  static std::string key(const Ids& f, const Ids& g) {
    std::string k;
    k.reserve((f.size() + g.size() + 1) * sizeof(std::int32_t));
    const auto put = [&](std::int32_t v) { k.append(reinterpret_cast<const char*>(&v), sizeof v); };
    for (auto v : f) put(v);
    put(-1);
    for (auto v : g) put(v);
    return k;
  }

  double pair_cost(std::int32_t x, std::int32_t y) {
    bool degenerate = false;
    const double c = node_cost(base_.nodes[static_cast<std::size_t>(x)].attr, tree_.nodes[static_cast<std::size_t>(y)].attr,
                               metric_, &degenerate);
    degenerate_ += degenerate;
    return c;
  }

  double matched(std::int32_t x, std::int32_t y) {
    const auto k = (static_cast<std::int64_t>(x) << 32) | static_cast<std::uint32_t>(y);
    if (auto it = matched_.find(k); it != matched_.end()) return it->second;
    const double c = pair_cost(x, y) + forest(children_a_[static_cast<std::size_t>(x)], tree_.nodes[static_cast<std::size_t>(y)].children);
    matched_.emplace(k, c);
    return c;
  }

  double forest(const Ids& f, const Ids& g) {
    if (f.empty() || g.empty()) {
      double s = 0.0;
      for (auto x : f) s += size_a_[static_cast<std::size_t>(x)];
      for (auto y : g) s += size_b_[static_cast<std::size_t>(y)];
      return s * kInsertionCost;
    }
    const auto k = key(f, g);
    if (auto it = memo_.find(k); it != memo_.end()) return it->second.cost;

    Entry best;
    best.cost = std::numeric_limits<double>::infinity();
    const auto offer = [&](double cost, Move move, std::int32_t x, std::int32_t y, Ids subset) {
      if (cost < best.cost - 1e-12) best = {cost, move, x, y, std::move(subset)};
    };

    const auto y = g.front();
    const Ids rest_g(g.begin() + 1, g.end());
    const auto& ny = tree_.nodes[static_cast<std::size_t>(y)];

    // match y, trying nodes present in the previous step first
    Ids order = f;
    std::stable_sort(order.begin(), order.end(), [&](std::int32_t l, std::int32_t r) {
      return preferred_[static_cast<std::size_t>(l)] > preferred_[static_cast<std::size_t>(r)];
    });
    for (auto x : order) {
      if (base_.nodes[static_cast<std::size_t>(x)].kind != ny.kind) continue;
      offer(matched(x, y) + forest(without(f, {x}), rest_g), Move::match, x, y, {});
    }

    // y inserted; a saddle may adopt up to two trees of f
    offer(kInsertionCost + forest({}, ny.children) + forest(f, rest_g), Move::insert_b, -1, y, {});
    if (ny.kind == NodeKind::saddle) {
      const std::size_t max_pair = f.size() <= kPairLimit ? f.size() : 0;
      for (std::size_t i = 0; i < f.size(); ++i) {
        offer(kInsertionCost + forest({f[i]}, ny.children) + forest(without(f, {f[i]}), rest_g), Move::insert_b, -1, y, {f[i]});
        for (std::size_t j = i + 1; j < max_pair; ++j) {
          const Ids r{f[i], f[j]};
          offer(kInsertionCost + forest(r, ny.children) + forest(without(f, r), rest_g), Move::insert_b, -1, y, r);
        }
      }
    }

    // a saddle of f left unmatched adopts y (and possibly the other tree of g)
    for (auto x : f) {
      if (base_.nodes[static_cast<std::size_t>(x)].kind != NodeKind::saddle) continue;
      const auto& cx = children_a_[static_cast<std::size_t>(x)];
      const Ids rest_f = without(f, {x});
      offer(kInsertionCost + forest(cx, {y}) + forest(rest_f, rest_g), Move::gap_a, x, -1, {y});
      if (!rest_g.empty()) {
        for (auto y2 : rest_g) {
          Ids s{y, y2};
          std::sort(s.begin(), s.end());
          offer(kInsertionCost + forest(cx, s) + forest(rest_f, without(rest_g, {y2})), Move::gap_a, x, -1, s);
        }
      }
    }

    memo_.emplace(k, best);
    return best.cost;
  }

  void match_node(std::int32_t x, std::int32_t y) {
    auto& n = out_.nodes[static_cast<std::size_t>(x)];
    const auto& m = tree_.nodes[static_cast<std::size_t>(y)];
    n.members[tree_.step] = {y, m.value};
    n.attr = m.attr;
  }

  std::int32_t insert_node(std::int32_t y, std::int32_t parent) {
    const auto& m = tree_.nodes[static_cast<std::size_t>(y)];
    AlignmentNode n;
    n.id = next_id_++;
    n.kind = m.kind;
    n.value = m.value;
    n.parent = parent;
    n.members[tree_.step] = {y, m.value};
    n.color_key = n.id;
    n.attr = m.attr;
    out_.nodes.push_back(std::move(n));
    return out_.nodes.back().id;
  }

  void insert_subtree(std::int32_t y, std::int32_t parent) {
    const auto id = insert_node(y, parent);
    for (auto c : tree_.nodes[static_cast<std::size_t>(y)].children) insert_subtree(c, id);
  }

  void emit(const Ids& f, const Ids& g, std::int32_t parent) {
    if (g.empty()) {
      for (auto x : f) out_.nodes[static_cast<std::size_t>(x)].parent = parent;
      return;
    }
    if (f.empty()) {
      for (auto y : g) insert_subtree(y, parent);
      return;
    }
    const Entry e = memo_.at(key(f, g));
    const Ids rest_g(g.begin() + 1, g.end());
    switch (e.move) {
      case Move::match: {
        out_.nodes[static_cast<std::size_t>(e.x)].parent = parent;
        match_node(e.x, e.y);
        const auto id = base_.nodes[static_cast<std::size_t>(e.x)].id;
        emit(children_a_[static_cast<std::size_t>(e.x)], tree_.nodes[static_cast<std::size_t>(e.y)].children, id);
        emit(without(f, {e.x}), rest_g, parent);
        break;
      }
      case Move::insert_b: {
        const auto id = insert_node(e.y, parent);
        emit(e.subset, tree_.nodes[static_cast<std::size_t>(e.y)].children, id);
        emit(without(f, e.subset), rest_g, parent);
        break;
      }
      case Move::gap_a: {
        out_.nodes[static_cast<std::size_t>(e.x)].parent = parent;
        const auto id = base_.nodes[static_cast<std::size_t>(e.x)].id;
        emit(children_a_[static_cast<std::size_t>(e.x)], e.subset, id);
        emit(without(f, {e.x}), without(g, e.subset), parent);
        break;
      }
      default: throw std::logic_error("unexpected alignment move");
    }
  }

  // Above this many candidate trees a gap node adopts at most one of them.
  static constexpr std::size_t kPairLimit = 6;

  const AlignmentTree& base_;
  const MemberTree& tree_;
  MatchMetric metric_;
  std::vector<Ids> children_a_;
  std::vector<std::int32_t> size_a_;
  std::vector<std::int32_t> size_b_;
  std::vector<char> preferred_;
  std::unordered_map<std::string, Entry> memo_;
  std::unordered_map<std::int64_t, double> matched_;
  int degenerate_ = 0;
  double root_cost_ = 0.0;
  AlignmentTree out_;
  std::int32_t next_id_ = 0;
};

}  // namespace

AlignmentTree align_pair(const AlignmentTree& base, const MemberTree& tree, const MatchMetric& metric, double* cost) {
  if (base.nodes.empty() || !base.contains(base.root_id)) throw std::invalid_argument("base alignment has no root");
  if (tree.root < 0 || tree.root >= static_cast<std::int32_t>(tree.nodes.size()) ||
      tree.nodes[static_cast<std::size_t>(tree.root)].parent != -1) {
    throw std::invalid_argument("member tree has no root");
  }
  for (const auto& n : tree.nodes) {
    if (n.children.size() > 2) throw std::invalid_argument("member tree is not binary");
  }
  if (std::find(base.steps.begin(), base.steps.end(), tree.step) != base.steps.end()) {
    throw std::invalid_argument("step " + std::to_string(tree.step) + " is already aligned");
  }
  PairAligner aligner(base, tree, metric);
  const double c = aligner.solve();
  if (cost) *cost = c;
  if (aligner.degenerate_pairs() > 0) {
    warn("step " + std::to_string(tree.step) + ": persistence metric compared " + std::to_string(aligner.degenerate_pairs()) +
         " pairs of zero-persistence branches (cost 0); consider the volume or overlap metric");
  }
  auto out = aligner.build();
  out.metric = metric;
  return out;
}

void update_alignment_values(AlignmentTree& alignment, std::int32_t t) {
  if (std::find(alignment.steps.begin(), alignment.steps.end(), t) == alignment.steps.end()) {
    throw std::invalid_argument("step " + std::to_string(t) + " is not aligned");
  }
  for (auto& n : alignment.nodes) {
    if (auto it = n.members.find(t); it != n.members.end()) n.value = it->second.value;
  }
}

std::vector<std::int32_t> fold_order(std::int32_t steps, std::int32_t first) {
  if (steps < 1) throw std::invalid_argument("no time steps to align");
  if (first < 0 || first >= steps) throw std::invalid_argument("seed step " + std::to_string(first) + " out of range");
  std::vector<std::int32_t> order;
  for (auto t = first; t < steps; ++t) order.push_back(t);
  for (auto t = first - 1; t >= 0; --t) order.push_back(t);
  return order;
}

AlignmentTree align_sequence(const std::vector<MemberTree>& trees, const MatchMetric& metric, std::int32_t first) {
  const auto order = fold_order(static_cast<std::int32_t>(trees.size()), first);
  for (std::size_t t = 0; t < trees.size(); ++t) {
    if (trees[t].step != static_cast<std::int32_t>(t)) throw std::invalid_argument("member trees must be indexed by step");
  }
  auto alignment = alignment_from_tree(trees[static_cast<std::size_t>(first)], metric);
  for (std::size_t i = 1; i < order.size(); ++i) {
    alignment = align_pair(alignment, trees[static_cast<std::size_t>(order[i])], metric);
    update_alignment_values(alignment, order[i]);
  }
  return alignment;
}

AlignmentTree sub_alignment(const AlignmentTree& overall, const std::vector<std::int32_t>& steps) {
  if (steps.empty()) throw std::invalid_argument("empty selection");
  std::vector<std::int32_t> selected = steps;
  std::sort(selected.begin(), selected.end());
  selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
  for (auto t : selected) {
    if (std::find(overall.steps.begin(), overall.steps.end(), t) == overall.steps.end()) {
      throw std::invalid_argument("step " + std::to_string(t) + " is not part of the alignment");
    }
  }

  AlignmentTree sub;
  sub.metric = overall.metric;
  sub.root_id = overall.root_id;
  sub.member_count = static_cast<std::int32_t>(selected.size());
  sub.steps = selected;
  for (const auto& n : overall.nodes) {
    AlignmentNode copy;
    for (auto t : selected) {
      if (auto it = n.members.find(t); it != n.members.end()) copy.members.emplace(t, it->second);
    }
    if (copy.members.empty()) continue;
    copy.id = n.id;
    copy.kind = n.kind;
    copy.value = n.value;
    copy.color_key = n.color_key;
    copy.attr = n.attr;
    sub.nodes.push_back(std::move(copy));
  }
  for (auto& n : sub.nodes) {
    if (n.id == sub.root_id) continue;
    auto p = overall.node(n.id).parent;
    while (!sub.contains(p)) p = overall.node(p).parent;
    n.parent = p;
  }
  for (auto& n : sub.nodes) {
    if (n.id != sub.root_id) sub.node(n.parent).children.push_back(n.id);
  }
  for (auto& n : sub.nodes) std::sort(n.children.begin(), n.children.end());
  return sub;
}

}  // namespace tfct
