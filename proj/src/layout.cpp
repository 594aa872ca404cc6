#include "tfct/layout.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

namespace tfct {

std::string_view to_string(Side side) {
  switch (side) {
    case Side::none: return "none";
    case Side::left: return "left";
    case Side::right: return "right";
  }
  return "none";
}

const AlignmentBranch& AlignmentBranches::branch(std::int32_t id) const {
  auto it = std::lower_bound(branches.begin(), branches.end(), id, [](const AlignmentBranch& b, std::int32_t v) { return b.id < v; });
  if (it == branches.end() || it->id != id) throw std::out_of_range("no branch with id " + std::to_string(id));
  return *it;
}

bool AlignmentBranches::contains(std::int32_t id) const {
  auto it = std::lower_bound(branches.begin(), branches.end(), id, [](const AlignmentBranch& b, std::int32_t v) { return b.id < v; });
  return it != branches.end() && it->id == id;
}

namespace {

void collect_leaves(const AlignmentTree& a, std::int32_t id, std::vector<std::int32_t>& out) {
  const auto& n = a.node(id);
  if (n.children.empty()) out.push_back(id);
  for (auto c : n.children) collect_leaves(a, c, out);
}

std::vector<std::int32_t> member_steps(const AlignmentNode& n) {
  std::vector<std::int32_t> steps;
  for (const auto& [t, ref] : n.members) steps.push_back(t);
  return steps;
}

// Mean member value; the displayed height of an alignment node.
double mean_value(const AlignmentNode& n) {
  if (n.members.empty()) return n.value;
  double s = 0.0;
  for (const auto& [t, ref] : n.members) s += ref.value;
  return s / static_cast<double>(n.members.size());
}

}  // namespace

AlignmentBranches alignment_branches(const AlignmentTree& alignment) {
  AlignmentBranches out;
  const auto& a = alignment;

  const auto path_down = [&](std::int32_t top, std::int32_t leaf) {
    std::vector<std::int32_t> path;
    for (auto v = leaf;; v = a.node(v).parent) {
      path.push_back(v);
      if (v == top) break;
    }
    std::reverse(path.begin(), path.end());
    return path;
  };

  std::vector<std::int32_t> leaves;
  collect_leaves(a, a.root_id, leaves);
  std::vector<std::int32_t> minima;
  for (auto l : leaves) {
    if (l != a.root_id && a.node(l).kind == NodeKind::minimum) minima.push_back(l);
  }
  if (minima.empty()) minima = leaves;
  const auto main_leaf = *std::min_element(minima.begin(), minima.end(), [&](std::int32_t l, std::int32_t r) {
    const auto& x = a.node(l);
    const auto& y = a.node(r);
    if (x.frequency() != y.frequency()) return x.frequency() > y.frequency();
    if (x.value != y.value) return x.value < y.value;
    return l < r;
  });

  AlignmentBranch main;
  main.id = main_leaf;
  main.leaf = main_leaf;
  main.saddle = a.root_id;
  main.nodes = path_down(a.root_id, main_leaf);
  out.branches.push_back(main);
  out.main_branch = main_leaf;

  for (std::size_t head = 0; head < out.branches.size(); ++head) {
    const auto branch_id = out.branches[head].id;
    const auto path = out.branches[head].nodes;
    const std::set<std::int32_t> on_path(path.begin(), path.end());
    for (auto s : path) {
      for (auto c : a.node(s).children) {
        if (on_path.count(c)) continue;
        std::vector<std::int32_t> sub_leaves;
        collect_leaves(a, c, sub_leaves);
        const double base = a.node(s).value;
        const auto leaf = *std::min_element(sub_leaves.begin(), sub_leaves.end(), [&](std::int32_t l, std::int32_t r) {
          const auto& x = a.node(l);
          const auto& y = a.node(r);
          if (x.frequency() != y.frequency()) return x.frequency() > y.frequency();
          const double dx = std::abs(x.value - base);
          const double dy = std::abs(y.value - base);
          if (dx != dy) return dx > dy;
          return l < r;
        });
        AlignmentBranch b;
        b.id = leaf;
        b.leaf = leaf;
        b.saddle = s;
        b.parent_branch = branch_id;
        b.nodes = path_down(c, leaf);
        out.branches.push_back(std::move(b));
      }
    }
  }
  for (auto& b : out.branches) b.members = member_steps(a.node(b.leaf));
  std::sort(out.branches.begin(), out.branches.end(), [](const auto& l, const auto& r) { return l.id < r.id; });
  for (auto& b : out.branches) {
    if (b.parent_branch >= 0) {
      auto& p = *std::lower_bound(out.branches.begin(), out.branches.end(), b.parent_branch,
                                  [](const AlignmentBranch& x, std::int32_t v) { return x.id < v; });
      p.children.push_back(b.id);
    }
  }
  for (auto& b : out.branches) std::sort(b.children.begin(), b.children.end());
  return out;
}

const BranchLayout& Layout::branch(std::int32_t id) const {
  auto it = std::lower_bound(branches.begin(), branches.end(), id, [](const BranchLayout& b, std::int32_t v) { return b.id < v; });
  if (it == branches.end() || it->id != id) throw std::out_of_range("no branch with id " + std::to_string(id));
  return *it;
}

const NodeLayout& Layout::node(std::int32_t id) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), id, [](const NodeLayout& n, std::int32_t v) { return n.id < v; });
  if (it == nodes.end() || it->id != id) throw std::out_of_range("no node with id " + std::to_string(id));
  return *it;
}

bool contemporary(const BranchBox& a, const BranchBox& b) {
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.members.size() && j < b.members.size()) {
    if (a.members[i] == b.members[j]) return true;
    if (a.members[i] < b.members[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return false;
}

double overlap_area(const BranchBox& a, const BranchBox& b) {
  const double w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  return w > 0.0 && h > 0.0 ? w * h : 0.0;
}

double annealing_cost(const std::vector<BranchBox>& boxes) {
  double overlap = 0.0;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      if (contemporary(boxes[i], boxes[j])) overlap += overlap_area(boxes[i], boxes[j]);
    }
  }
  double spread = 0.0;
  for (const auto& b : boxes) spread += std::abs(0.5 * (b.x0 + b.x1));
  return overlap + kCompactness * spread;
}

std::vector<BranchBox> branch_boxes(const Layout& layout) {
  std::vector<BranchBox> boxes;
  for (std::size_t i = 0; i < layout.branches.size(); ++i) {
    const auto& b = layout.branches[i];
    boxes.push_back({b.x - kBoxWidth / 2, b.x + kBoxWidth / 2, b.y_low, b.y_high, layout.structure.branches[i].members});
  }
  return boxes;
}

std::vector<std::pair<std::int32_t, std::int32_t>> contemporary_overlaps(const Layout& layout) {
  const auto boxes = branch_boxes(layout);
  std::vector<std::pair<std::int32_t, std::int32_t>> out;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      if (contemporary(boxes[i], boxes[j]) && overlap_area(boxes[i], boxes[j]) > 0.0) {
        out.emplace_back(layout.branches[i].id, layout.branches[j].id);
      }
    }
  }
  return out;
}

namespace {

// Node heights and branch spans shared by compute_layout and trickle_down.
Layout skeleton(const AlignmentTree& alignment, const ValueRange& range) {
  Layout l;
  l.range = range;
  l.structure = alignment_branches(alignment);
  std::map<std::int32_t, std::int32_t> branch_of;
  for (const auto& b : l.structure.branches) {
    for (auto v : b.nodes) branch_of[v] = b.id;
  }
  for (const auto& n : alignment.nodes) l.nodes.push_back({n.id, branch_of.at(n.id), 0.0, range.normalize(mean_value(n))});
  for (const auto& b : l.structure.branches) {
    BranchLayout bl;
    bl.id = b.id;
    bl.y_low = bl.y_high = l.node(b.saddle).y;
    for (auto v : b.nodes) {
      bl.y_low = std::min(bl.y_low, l.node(v).y);
      bl.y_high = std::max(bl.y_high, l.node(v).y);
    }
    l.branches.push_back(bl);
  }
  return l;
}

void finish(Layout& l) {
  // order keys: x, then ascending id among branches sharing x
  std::map<double, std::int32_t> seen;
  for (auto& b : l.branches) b.order_key = b.x + 0.001 * static_cast<double>(seen[b.x]++);
  for (auto& b : l.branches) {
    const auto& s = l.structure.branch(b.id);
    b.side = s.parent_branch < 0 ? Side::none : (b.x < l.branch(s.parent_branch).x ? Side::left : Side::right);
  }
  for (auto& n : l.nodes) n.x = l.branch(n.branch).x;
}

// Offsets of every branch relative to its parent, annealed in place.
class Annealer {
public:
  Annealer(const Layout& l, const AnnealingOptions& options) : l_(l), options_(options), rng_(options.seed) {
    const auto n = l.branches.size();
    parent_.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = l.structure.branches[i].parent_branch;
      if (p >= 0) parent_[i] = index(p);
    }
    // breadth-first order, larger value spans first
    order_.push_back(index(l.structure.main_branch));
    for (std::size_t head = 0; head < order_.size(); ++head) {
      auto kids = l.structure.branches[order_[head]].children;
      std::stable_sort(kids.begin(), kids.end(), [&](std::int32_t a, std::int32_t b) {
        return span(index(a)) > span(index(b));
      });
      for (auto k : kids) order_.push_back(index(k));
    }
    const auto boxes = branch_boxes(l);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double h = std::min(boxes[i].y1, boxes[j].y1) - std::max(boxes[i].y0, boxes[j].y0);
        if (h > 0.0 && contemporary(boxes[i], boxes[j])) pairs_.push_back({i, j, h});
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (parent_[i] >= 0) movable_.push_back(i);
    }
  }

  std::vector<double> run(double* initial_cost, double* final_cost) {
    const auto n = l_.branches.size();
    offset_.assign(n, 0);
    std::int64_t right = 0;
    std::int64_t left = 0;
    std::vector<std::int64_t> x0(n, 0);
    for (std::size_t k = 1; k < order_.size(); ++k) {
      const auto i = order_[k];
      x0[i] = k % 2 == 1 ? ++right : -++left;
      offset_[i] = x0[i] - x0[static_cast<std::size_t>(parent_[i])];
    }
    double overlap = 0.0;
    double cost = evaluate(offset_, &overlap);
    *initial_cost = cost;
    auto best = offset_;
    double best_cost = cost;

    double temperature = cost > 0.0 ? cost : 1.0;
    for (int sweep = 0; sweep < options_.sweeps && !movable_.empty(); ++sweep) {
      for (std::size_t m = 0; m < movable_.size(); ++m) {
        auto trial = offset_;
        if (!propose(trial)) continue;
        double trial_overlap = 0.0;
        const double trial_cost = evaluate(trial, &trial_overlap);
        const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        if (trial_cost <= cost || u < std::exp(-(trial_cost - cost) / temperature)) {
          offset_ = std::move(trial);
          cost = trial_cost;
          if (trial_overlap == 0.0 && cost < best_cost - 1e-12) {
            best = offset_;
            best_cost = cost;
          }
        }
      }
      temperature *= options_.cooling;
    }
    *final_cost = best_cost;
    return positions(best);
  }

private:
  struct Pair {
    std::size_t a;
    std::size_t b;
    double height;
  };

  std::size_t index(std::int32_t id) const {
    auto it = std::lower_bound(l_.branches.begin(), l_.branches.end(), id, [](const BranchLayout& b, std::int32_t v) { return b.id < v; });
    return static_cast<std::size_t>(it - l_.branches.begin());
  }

  double span(std::size_t i) const { return l_.branches[i].y_high - l_.branches[i].y_low; }

  std::vector<double> positions(const std::vector<std::int64_t>& offset) const {
    std::vector<double> x(offset.size(), 0.0);
    for (std::size_t k = 1; k < order_.size(); ++k) {
      const auto i = order_[k];
      x[i] = x[static_cast<std::size_t>(parent_[i])] + static_cast<double>(offset[i]);
    }
    return x;
  }

  double evaluate(const std::vector<std::int64_t>& offset, double* overlap) const {
    const auto x = positions(offset);
    double o = 0.0;
    for (const auto& p : pairs_) {
      const double w = kBoxWidth - std::abs(x[p.a] - x[p.b]);
      if (w > 0.0) o += w * p.height;
    }
    double spread = 0.0;
    for (auto v : x) spread += std::abs(v);
    *overlap = o;
    return o + kCompactness * spread;
  }

  bool sibling_has(const std::vector<std::int64_t>& offset, std::size_t i, std::int64_t value) const {
    for (std::size_t j = 0; j < offset.size(); ++j) {
      if (j != i && parent_[j] == parent_[i] && offset[j] == value) return true;
    }
    return false;
  }

  bool propose(std::vector<std::int64_t>& offset) {
    const auto i = movable_[rng_() % movable_.size()];
    switch (rng_() % 3) {
      case 0: {  // swap with a sibling
        std::vector<std::size_t> siblings;
        for (auto j : movable_) {
          if (j != i && parent_[j] == parent_[i]) siblings.push_back(j);
        }
        if (siblings.empty()) return false;
        std::swap(offset[i], offset[siblings[rng_() % siblings.size()]]);
        return true;
      }
      case 1: {  // mirror to the other side
        if (sibling_has(offset, i, -offset[i])) return false;
        offset[i] = -offset[i];
        return true;
      }
      default: {  // shift by one slot
        const std::int64_t step = rng_() % 2 ? 1 : -1;
        auto next = offset[i] + step;
        if (next == 0) next += step;
        if (sibling_has(offset, i, next)) return false;
        offset[i] = next;
        return true;
      }
    }
  }

  const Layout& l_;
  AnnealingOptions options_;
  std::mt19937_64 rng_;
  std::vector<std::ptrdiff_t> parent_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> movable_;
  std::vector<Pair> pairs_;
  std::vector<std::int64_t> offset_;
};

}  // namespace

Layout compute_layout(const AlignmentTree& alignment, const ValueRange& range, const AnnealingOptions& options) {
  auto l = skeleton(alignment, range);
  Annealer annealer(l, options);
  double initial = 0.0;
  double final_cost = 0.0;
  auto x = annealer.run(&initial, &final_cost);
  // close unused columns; this keeps order, sides and overlaps
  std::set<double> right;
  std::set<double> left;
  for (auto v : x) (v > 0 ? right : left).insert(v);
  std::map<double, double> slot{{0.0, 0.0}};
  double k = 0.0;
  for (auto v : right) slot[v] = ++k;
  k = 0.0;
  for (auto it = left.rbegin(); it != left.rend(); ++it) {
    if (*it < 0) slot[*it] = -++k;
  }
  for (std::size_t i = 0; i < l.branches.size(); ++i) l.branches[i].x = slot.at(x[i]);
  finish(l);
  l.initial_cost = initial;
  l.cost = annealing_cost(branch_boxes(l));
  return l;
}

Layout restore_layout(const AlignmentTree& alignment, const ValueRange& range, const std::vector<BranchLayout>& placed,
                      double initial_cost) {
  auto l = skeleton(alignment, range);
  std::map<std::int32_t, const BranchLayout*> by_id;
  for (const auto& b : placed) by_id[b.id] = &b;
  for (auto& b : l.branches) {
    auto it = by_id.find(b.id);
    if (it == by_id.end()) throw std::invalid_argument("no stored position for branch " + std::to_string(b.id));
    b.x = it->second->x;
    b.order_key = it->second->order_key;
  }
  for (auto& b : l.branches) {
    const auto& s = l.structure.branch(b.id);
    b.side = s.parent_branch < 0 ? Side::none : (b.x < l.branch(s.parent_branch).x ? Side::left : Side::right);
  }
  for (auto& n : l.nodes) n.x = l.branch(n.branch).x;
  l.initial_cost = initial_cost;
  l.cost = annealing_cost(branch_boxes(l));
  return l;
}

Layout trickle_down(const Layout& overall, const AlignmentTree& sub, bool compact_gaps) {
  auto l = skeleton(sub, overall.range);
  for (auto& b : l.branches) {
    if (!overall.structure.contains(b.id)) {
      throw std::invalid_argument("sub-alignment leaf " + std::to_string(b.id) + " is not a branch of the overall layout");
    }
    const auto& o = overall.branch(b.id);
    b.x = o.x;
    b.order_key = o.order_key;
  }
  if (compact_gaps) {
    const double main_x = l.branch(l.structure.main_branch).x;
    std::set<double> right;
    std::set<double> left;
    for (const auto& b : l.branches) {
      if (b.x > main_x) right.insert(b.x);
      if (b.x < main_x) left.insert(b.x);
    }
    std::map<double, double> slot;
    double k = 0.0;
    for (auto x : right) slot[x] = main_x + ++k;
    k = 0.0;
    for (auto it = left.rbegin(); it != left.rend(); ++it) slot[*it] = main_x - ++k;
    for (auto& b : l.branches) {
      if (b.x == main_x) continue;
      const double x = slot.at(b.x);
      b.order_key = x + (b.order_key - b.x);
      b.x = x;
    }
  }
  for (auto& b : l.branches) {
    const auto& s = l.structure.branch(b.id);
    b.side = s.parent_branch < 0 ? Side::none : (b.x < l.branch(s.parent_branch).x ? Side::left : Side::right);
  }
  for (auto& n : l.nodes) n.x = l.branch(n.branch).x;
  l.initial_cost = l.cost = annealing_cost(branch_boxes(l));
  return l;
}

Layout optimized_branch_spacing(const Layout& layout) {
  Layout l = layout;
  const auto index = [&](std::int32_t id) {
    auto it = std::lower_bound(l.branches.begin(), l.branches.end(), id, [](const BranchLayout& b, std::int32_t v) { return b.id < v; });
    return static_cast<std::size_t>(it - l.branches.begin());
  };
  const auto shift_subtree = [&](std::int32_t id, double delta) {
    std::vector<std::int32_t> stack{id};
    while (!stack.empty()) {
      const auto b = stack.back();
      stack.pop_back();
      l.branches[index(b)].x += delta;
      for (auto c : l.structure.branch(b).children) stack.push_back(c);
    }
  };
  std::vector<std::int32_t> queue{l.structure.main_branch};
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const auto p = queue[head];
    const double px = l.branches[index(p)].x;
    for (const int sign : {1, -1}) {
      std::vector<std::pair<double, std::int32_t>> kids;  // |offset|, id
      for (auto c : l.structure.branch(p).children) {
        const double off = l.branches[index(c)].x - px;
        const bool right = l.branches[index(c)].side == Side::right;
        if ((sign > 0) == right) kids.emplace_back(std::abs(off), c);
      }
      if (kids.size() < 2) continue;
      std::sort(kids.begin(), kids.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return sign * l.branches[index(a.second)].order_key < sign * l.branches[index(b.second)].order_key;
      });
      const double span = std::ceil(kids.back().first);
      for (std::size_t i = 0; i < kids.size(); ++i) {
        const double target = px + sign * span * static_cast<double>(i + 1) / static_cast<double>(kids.size());
        shift_subtree(kids[i].second, target - l.branches[index(kids[i].second)].x);
      }
    }
    for (auto c : l.structure.branch(p).children) queue.push_back(c);
  }
  for (auto& n : l.nodes) n.x = l.branch(n.branch).x;
  l.cost = annealing_cost(branch_boxes(l));
  return l;
}

MemberLayout transfer_to_member(const Layout& sub_layout, const AlignmentTree& sub, std::int32_t t) {
  if (std::find(sub.steps.begin(), sub.steps.end(), t) == sub.steps.end()) {
    throw std::invalid_argument("step " + std::to_string(t) + " is not selected");
  }
  MemberLayout m;
  m.step = t;
  for (const auto& n : sub.nodes) {
    auto it = n.members.find(t);
    if (it == n.members.end()) continue;
    m.nodes.push_back({it->second.node, n.id, n.kind, sub_layout.node(n.id).x, sub_layout.range.normalize(it->second.value)});
  }
  const auto image = [&](std::int32_t alignment_id) -> const MemberNodeLayout& {
    return *std::lower_bound(m.nodes.begin(), m.nodes.end(), alignment_id,
                             [](const MemberNodeLayout& x, std::int32_t v) { return x.alignment_node < v; });
  };
  for (const auto& c : m.nodes) {
    if (c.alignment_node == sub.root_id) continue;
    auto p = sub.node(c.alignment_node).parent;
    while (!sub.node(p).members.count(t)) p = sub.node(p).parent;
    const auto& pn = image(p);
    m.edges.push_back({c.node, pn.node, {Point{c.x, c.y}, Point{c.x, pn.y}, Point{pn.x, pn.y}}});
  }
  for (const auto& b : sub_layout.structure.branches) {
    if (std::binary_search(b.members.begin(), b.members.end(), t)) m.branches.push_back(b.id);
  }
  return m;
}

BundledGeometry bundle(const Layout& sub_layout, const AlignmentTree& sub) {
  BundledGeometry g;
  // steps with a member somewhere below each node, children before parents
  std::map<std::int32_t, std::set<std::int32_t>> below;
  std::vector<std::int32_t> order{sub.root_id};
  for (std::size_t head = 0; head < order.size(); ++head) {
    for (auto c : sub.node(order[head]).children) order.push_back(c);
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    auto& s = below[*it];
    const auto& n = sub.node(*it);
    for (const auto& [t, ref] : n.members) s.insert(t);
    for (auto c : n.children) s.insert(below[c].begin(), below[c].end());
  }
  for (const auto& n : sub.nodes) {
    const auto& nl = sub_layout.node(n.id);
    g.nodes.push_back({n.id, n.kind, nl.x, nl.y, n.frequency(), leaf_color(n.color_key)});
    if (n.id == sub.root_id) continue;
    const auto& pl = sub_layout.node(n.parent);
    BundledEdge e;
    e.child = n.id;
    e.parent = n.parent;
    e.points = {Point{nl.x, nl.y}, Point{nl.x, pl.y}, Point{pl.x, pl.y}};
    e.members = static_cast<std::int32_t>(below[n.id].size());
    e.opacity = static_cast<double>(e.members) / static_cast<double>(sub.member_count);
    g.edges.push_back(e);
  }
  return g;
}

std::string leaf_color(std::int32_t color_key) {
  static constexpr const char* palette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                            "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};
  // splitmix64 finalizer
  std::uint64_t z = static_cast<std::uint64_t>(static_cast<std::int64_t>(color_key)) + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return palette[z % std::size(palette)];
}

}  // namespace tfct
