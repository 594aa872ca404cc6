#include "tfct/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "tfct/diagnostics.hpp"

namespace tfct {

SimpleTree simple_tree(const AlignmentTree& alignment) {
  SimpleTree t;
  for (const auto& n : alignment.nodes) {
    t.ids.push_back(n.id);
    t.parents.push_back(n.id == alignment.root_id ? -1 : n.parent);
  }
  return t;
}

SimpleTree simple_tree(const ContourTree& tree) {
  const auto root = tree.global_max();
  SimpleTree t;
  t.ids.resize(tree.nodes.size());
  t.parents.assign(tree.nodes.size(), -1);
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) t.ids[i] = static_cast<std::int32_t>(i);
  const auto inc = tree.incident_arcs();
  std::vector<std::int32_t> queue{root};
  std::vector<char> seen(tree.nodes.size(), 0);
  seen[static_cast<std::size_t>(root)] = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const auto x = queue[head];
    for (auto a : inc[static_cast<std::size_t>(x)]) {
      const auto y = tree.opposite(tree.arcs[static_cast<std::size_t>(a)], x);
      if (seen[static_cast<std::size_t>(y)]) continue;
      seen[static_cast<std::size_t>(y)] = 1;
      t.parents[static_cast<std::size_t>(y)] = x;
      queue.push_back(y);
    }
  }
  return t;
}

namespace {

// Position of each id, children lists and a root-first order.
struct Indexed {
  std::map<std::int32_t, std::size_t> pos;
  std::vector<std::vector<std::size_t>> children;
  std::vector<std::size_t> order;
};

Indexed index_tree(const SimpleTree& tree) {
  if (tree.ids.size() != tree.parents.size()) throw std::invalid_argument("tree ids and parents differ in length");
  Indexed ix;
  for (std::size_t i = 0; i < tree.ids.size(); ++i) {
    if (!ix.pos.emplace(tree.ids[i], i).second) throw std::invalid_argument("duplicate node id");
  }
  ix.children.resize(tree.ids.size());
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < tree.ids.size(); ++i) {
    if (tree.parents[i] < 0) {
      roots.push_back(i);
    } else {
      auto it = ix.pos.find(tree.parents[i]);
      if (it == ix.pos.end()) throw std::invalid_argument("parent id not in tree");
      ix.children[it->second].push_back(i);
    }
  }
  if (roots.size() != 1) throw std::invalid_argument("tree must have exactly one root");
  ix.order.push_back(roots.front());
  for (std::size_t head = 0; head < ix.order.size(); ++head) {
    for (auto c : ix.children[ix.order[head]]) ix.order.push_back(c);
  }
  if (ix.order.size() != tree.ids.size()) throw std::invalid_argument("tree is not connected");
  return ix;
}

}  // namespace

CentralityMap degree_centrality(const SimpleTree& tree) {
  const auto ix = index_tree(tree);
  const auto n = tree.ids.size();
  if (n < 2) throw std::invalid_argument("degree centrality needs at least two nodes");
  CentralityMap c;
  for (std::size_t i = 0; i < n; ++i) {
    const auto degree = ix.children[i].size() + (tree.parents[i] >= 0 ? 1 : 0);
    c[tree.ids[i]] = static_cast<double>(degree) / static_cast<double>(n - 1);
  }
  return c;
}

CentralityMap betweenness_centrality(const SimpleTree& tree) {
  const auto ix = index_tree(tree);
  const auto n = tree.ids.size();
  CentralityMap c;
  if (n < 3) {
    for (auto id : tree.ids) c[id] = 0.0;
    return c;
  }
  std::vector<double> size(n, 1.0);
  for (auto it = ix.order.rbegin(); it != ix.order.rend(); ++it) {
    for (auto ch : ix.children[*it]) size[*it] += size[ch];
  }
  const double norm = static_cast<double>(n - 1) * static_cast<double>(n - 2) / 2.0;
  for (std::size_t i = 0; i < n; ++i) {
    // pairs split by v: (sum^2 - sum of squares) / 2 over component sizes
    double sum = 0.0;
    double squares = 0.0;
    for (auto ch : ix.children[i]) {
      sum += size[ch];
      squares += size[ch] * size[ch];
    }
    const double up = static_cast<double>(n) - size[i];
    sum += up;
    squares += up * up;
    c[tree.ids[i]] = (sum * sum - squares) / 2.0 / norm;
  }
  return c;
}

std::string_view to_string(Measure m) { return m == Measure::degree ? "degree" : "betweenness"; }
std::string_view to_string(SeriesMode m) { return m == SeriesMode::direct ? "direct" : "diff"; }

Measure parse_measure(std::string_view name) {
  if (name == "degree") return Measure::degree;
  if (name == "betweenness") return Measure::betweenness;
  throw std::invalid_argument("unknown measure '" + std::string(name) + "'");
}

SeriesMode parse_series_mode(std::string_view name) {
  if (name == "direct") return SeriesMode::direct;
  if (name == "diff") return SeriesMode::diff;
  throw std::invalid_argument("unknown selector mode '" + std::string(name) + "'");
}

std::vector<std::int32_t> window_steps(std::int32_t t, int width, std::int32_t steps) {
  if (width < 1 || width % 2 == 0) throw std::invalid_argument("window width must be odd and positive");
  if (t < 0 || t >= steps) throw std::invalid_argument("window center out of range");
  const auto half = static_cast<std::int32_t>(width / 2);
  std::vector<std::int32_t> out;
  for (auto s = std::max(0, t - half); s <= std::min(steps - 1, t + half); ++s) out.push_back(s);
  return out;
}

SelectorSeries selector_series(const AlignmentTree& overall, Measure measure, SeriesMode mode, int window) {
  if (window < 1 || window % 2 == 0) throw std::invalid_argument("window width must be odd and positive");
  std::vector<std::int32_t> steps = overall.steps;
  std::sort(steps.begin(), steps.end());
  const auto count = static_cast<std::int32_t>(steps.size());
  for (std::int32_t i = 0; i < count; ++i) {
    if (steps[static_cast<std::size_t>(i)] != i) throw std::invalid_argument("selector needs the overall alignment of steps 0..T-1");
  }
  if (window > 2 * count - 1) {
    warn("selector window " + std::to_string(window) + " exceeds 2T - 1 = " + std::to_string(2 * count - 1) + "; clamped");
    window = 2 * count - 1;
  }
  SelectorSeries s;
  s.measure = measure;
  s.mode = mode;
  s.window = window;

  std::vector<CentralityMap> maps;
  for (std::int32_t t = 0; t < count; ++t) {
    const auto sub = simple_tree(sub_alignment(overall, window_steps(t, window, count)));
    maps.push_back(measure == Measure::degree ? degree_centrality(sub) : betweenness_centrality(sub));
  }
  s.raw.assign(static_cast<std::size_t>(count), 0.0);
  for (std::int32_t t = 0; t < count; ++t) {
    const auto& m = maps[static_cast<std::size_t>(t)];
    if (mode == SeriesMode::direct) {
      double sum = 0.0;
      for (const auto& [id, v] : m) sum += v;
      s.raw[static_cast<std::size_t>(t)] = sum / static_cast<double>(m.size());
    } else if (t + 1 < count) {
      const auto& next = maps[static_cast<std::size_t>(t + 1)];
      std::set<std::int32_t> ids;
      for (const auto& [id, v] : m) ids.insert(id);
      for (const auto& [id, v] : next) ids.insert(id);
      double sum = 0.0;
      for (auto id : ids) {
        const auto a = m.find(id);
        const auto b = next.find(id);
        sum += std::abs((a == m.end() ? 0.0 : a->second) - (b == next.end() ? 0.0 : b->second));
      }
      s.raw[static_cast<std::size_t>(t)] = sum / static_cast<double>(ids.size());
    } else if (count > 1) {
      s.raw[static_cast<std::size_t>(t)] = s.raw[static_cast<std::size_t>(t - 1)];
    }
  }
  const auto [lo, hi] = std::minmax_element(s.raw.begin(), s.raw.end());
  for (auto v : s.raw) s.values.push_back(*hi > *lo ? (v - *lo) / (*hi - *lo) : 0.5);
  return s;
}

}  // namespace tfct
