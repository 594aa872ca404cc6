#include "tfct/payload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include <json.hpp>

namespace tfct {

using nlohmann::json;

std::string_view to_string(SelectionMode mode) {
  switch (mode) {
    case SelectionMode::window: return "window";
    case SelectionMode::multi: return "multi";
    case SelectionMode::periodic: return "periodic";
  }
  return "?";
}

SelectionMode parse_selection_mode(std::string_view name) {
  if (name == "window") return SelectionMode::window;
  if (name == "multi") return SelectionMode::multi;
  if (name == "periodic") return SelectionMode::periodic;
  throw SelectionError("unknown selection mode '" + std::string(name) + "'");
}

namespace {

void check_step(std::int32_t t, std::int32_t steps, const char* what) {
  if (t < 0 || t >= steps) {
    throw SelectionError(std::string(what) + " " + std::to_string(t) + " outside [0, " + std::to_string(steps) + ")");
  }
}

}  // namespace

Selection window_selection(std::int32_t center, int width, std::int32_t steps) {
  if (width <= 0 || width % 2 == 0) throw SelectionError("window width must be odd and positive");
  check_step(center, steps, "window center");
  Selection s;
  s.mode = SelectionMode::window;
  s.center = center;
  s.width = width;
  const std::int32_t half = width / 2;
  for (auto t = std::max(0, center - half); t <= std::min(steps - 1, center + half); ++t) s.members.push_back(t);
  return s;
}

Selection multi_selection(std::vector<std::int32_t> members, std::int32_t steps) {
  if (members.empty()) throw SelectionError("empty selection");
  for (auto t : members) check_step(t, steps, "step");
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  Selection s;
  s.mode = SelectionMode::multi;
  s.members = std::move(members);
  return s;
}

Selection periodic_selection(std::int32_t anchor, int period, std::int32_t steps) {
  if (period <= 0) throw SelectionError("period must be positive");
  check_step(anchor, steps, "anchor");
  Selection s;
  s.mode = SelectionMode::periodic;
  s.anchor = anchor;
  s.period = period;
  for (std::int64_t t = anchor; t < steps; t += period) s.members.push_back(static_cast<std::int32_t>(t));
  return s;
}

Selection all_steps(std::int32_t steps) {
  if (steps <= 0) throw SelectionError("empty selection");
  Selection s;
  s.mode = SelectionMode::multi;
  for (std::int32_t t = 0; t < steps; ++t) s.members.push_back(t);
  return s;
}

Selection shifted(const Selection& s, int direction, std::int32_t steps) {
  if (direction != 1 && direction != -1) throw SelectionError("direction must be 1 or -1");
  if (s.members.front() + direction < 0 || s.members.back() + direction >= steps) {
    throw ShiftError("shift by " + std::to_string(direction) + " leaves [0, " + std::to_string(steps) + ")");
  }
  auto out = s;
  for (auto& t : out.members) t += direction;
  if (s.mode == SelectionMode::window) out.center += direction;
  if (s.mode == SelectionMode::periodic) out.anchor += direction;
  return out;
}

std::string signature(const Selection& s, const ViewOptions& view) {
  std::string key(to_string(s.mode));
  if (s.mode == SelectionMode::window) key += ":c" + std::to_string(s.center) + ":w" + std::to_string(s.width);
  if (s.mode == SelectionMode::periodic) key += ":a" + std::to_string(s.anchor) + ":p" + std::to_string(s.period);
  key += ":m";
  for (auto t : s.members) key += std::to_string(t) + ",";
  key += view.compact_gaps ? ":g1" : ":g0";
  key += view.optimized_spacing ? ":o1" : ":o0";
  return key;
}

namespace {

json point(const Point& p) { return json::array({p[0], p[1]}); }

json selection_json(const Selection& s, const ViewOptions& view) {
  json j;
  j["mode"] = to_string(s.mode);
  j["members"] = s.members;
  if (s.mode == SelectionMode::window) {
    j["center"] = s.center;
    j["width"] = s.width;
  }
  if (s.mode == SelectionMode::periodic) {
    j["anchor"] = s.anchor;
    j["period"] = s.period;
  }
  j["compact_gaps"] = view.compact_gaps;
  j["optimized_spacing"] = view.optimized_spacing;
  return j;
}

json member_json(const MemberLayout& m) {
  json nodes = json::array();
  for (const auto& n : m.nodes) {
    nodes.push_back({{"node", n.node},
                     {"alignment_node", n.alignment_node},
                     {"kind", to_string(n.kind)},
                     {"x", n.x},
                     {"y", n.y}});
  }
  json edges = json::array();
  for (const auto& e : m.edges) {
    json pts = json::array();
    for (const auto& p : e.points) pts.push_back(point(p));
    edges.push_back({{"child", e.child}, {"parent", e.parent}, {"points", pts}});
  }
  return {{"step", m.step}, {"nodes", nodes}, {"edges", edges}, {"branches", m.branches}};
}

}  // namespace

std::string fct_payload(const Precomputed& data, const Selection& s, const ViewOptions& view) {
  const auto sub = sub_alignment(data.alignment, s.members);
  auto layout = trickle_down(data.layout, sub, view.compact_gaps);
  if (view.optimized_spacing) layout = optimized_branch_spacing(layout);
  const auto geometry = bundle(layout, sub);

  json branches = json::array();
  for (std::size_t i = 0; i < layout.branches.size(); ++i) {
    const auto& b = layout.branches[i];
    const auto& sb = layout.structure.branches[i];
    branches.push_back({{"id", b.id},
                        {"x", b.x},
                        {"order", b.order_key},
                        {"side", to_string(b.side)},
                        {"parent", sb.parent_branch},
                        {"y_low", b.y_low},
                        {"y_high", b.y_high},
                        {"color", leaf_color(sub.node(sb.leaf).color_key)},
                        {"members", sb.members}});
  }
  json nodes = json::array();
  for (const auto& n : geometry.nodes) {
    const auto& an = sub.node(n.id);
    nodes.push_back({{"id", n.id},
                     {"kind", to_string(n.kind)},
                     {"x", n.x},
                     {"y", n.y},
                     {"value", an.value},
                     {"frequency", n.frequency},
                     {"color", n.color},
                     {"branch", layout.node(n.id).branch},
                     {"parent", an.parent}});
  }
  json edges = json::array();
  for (const auto& e : geometry.edges) {
    edges.push_back({{"child", e.child},
                     {"parent", e.parent},
                     {"points", json::array({point(e.points[0]), point(e.points[1]), point(e.points[2])})},
                     {"opacity", e.opacity},
                     {"members", e.members}});
  }
  json members = json::array();
  for (auto t : s.members) members.push_back(member_json(transfer_to_member(layout, sub, t)));

  json j;
  j["selection"] = selection_json(s, view);
  j["member_count"] = sub.member_count;
  j["main_branch"] = layout.structure.main_branch;
  j["root"] = sub.root_id;
  j["range"] = {{"min", layout.range.min}, {"max", layout.range.max}};
  j["branches"] = std::move(branches);
  j["nodes"] = std::move(nodes);
  j["edges"] = std::move(edges);
  j["member_layouts"] = std::move(members);
  return j.dump();
}

namespace {

std::string num(const json& v) { return v.dump(); }
std::string num(double v) { return json(v).dump(); }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const std::string& payload_json) {
  const auto j = json::parse(payload_json);
  double x0 = 0.0;
  double x1 = 0.0;
  for (const auto& n : j.at("nodes")) {
    x0 = std::min(x0, n.at("x").get<double>());
    x1 = std::max(x1, n.at("x").get<double>());
  }
  const double left = std::floor(x0) - 1.0;
  const double span = std::ceil(x1) + 1.0 - left;
  const double pad = 0.05;

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" + num(left) + " " + num(-pad) + " " + num(span) + " " +
         num(1.0 + 2 * pad) + "\" width=\"" + num(60.0 * span) + "\" height=\"600\" preserveAspectRatio=\"none\">\n";
  // Flip y so larger values are drawn higher.
  out += "<g transform=\"matrix(1 0 0 -1 0 1)\">\n";
  for (const auto& e : j.at("edges")) {
    const auto& p = e.at("points");
    out += "<path class=\"edge\" data-child=\"" + num(e.at("child")) + "\" data-parent=\"" + num(e.at("parent")) +
           "\" d=\"M " + num(p[0][0]) + " " + num(p[0][1]) + " Q " + num(p[1][0]) + " " + num(p[1][1]) + " " +
           num(p[2][0]) + " " + num(p[2][1]) + "\" fill=\"none\" stroke=\"#333333\" stroke-opacity=\"" +
           num(e.at("opacity")) + "\" stroke-width=\"2\" vector-effect=\"non-scaling-stroke\"/>\n";
  }
  for (const auto& n : j.at("nodes")) {
    const auto kind = n.at("kind").get<std::string>();
    const auto color = kind == "saddle" ? std::string("#333333") : escape(n.at("color").get<std::string>());
    // Zero-length round-capped stroke: a dot of constant screen size.
    out += "<path class=\"node " + escape(kind) + "\" data-id=\"" + num(n.at("id")) + "\" d=\"M " + num(n.at("x")) +
           " " + num(n.at("y")) + " h 0\" stroke=\"" + color + "\" stroke-width=\"" + (kind == "saddle" ? "6" : "10") +
           "\" stroke-linecap=\"round\" vector-effect=\"non-scaling-stroke\"/>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

std::string dataset_payload(const Precomputed& data) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(data.info.hash));
  json j;
  j["T"] = data.info.steps;
  j["width"] = data.info.width;
  j["height"] = data.info.height;
  j["labels"] = data.info.labels;
  j["global_min"] = data.info.global_min;
  j["global_max"] = data.info.global_max;
  j["hash"] = hash;
  j["metric"] = to_string(data.metric.kind);
  j["lambda"] = data.metric.lambda;
  j["seed_step"] = data.seed_step;
  j["nodes"] = data.alignment.nodes.size();
  j["branches"] = data.layout.branches.size();
  return j.dump();
}

std::string highlight_tree_payload(const Precomputed& data, const Selection& s, const ViewOptions& view,
                                   std::int32_t t) {
  if (t < 0 || t >= data.info.steps) throw std::out_of_range("time step " + std::to_string(t) + " out of range");
  const auto sub = sub_alignment(data.alignment, s.members);
  json j;
  j["step"] = t;
  if (std::binary_search(s.members.begin(), s.members.end(), t)) {
    auto layout = trickle_down(data.layout, sub, view.compact_gaps);
    if (view.optimized_spacing) layout = optimized_branch_spacing(layout);
    j["selected"] = true;
    j["full"] = member_json(transfer_to_member(layout, sub, t));
  } else {
    std::vector<std::int32_t> present;
    for (const auto& b : alignment_branches(sub).branches) {
      if (data.alignment.node(b.leaf).members.count(t)) present.push_back(b.id);
    }
    j["selected"] = false;
    j["branches_only"] = present;
  }
  return j.dump();
}

std::string highlight_branch_payload(const Precomputed& data, std::int32_t branch_id) {
  if (!data.layout.structure.contains(branch_id)) {
    throw std::out_of_range("unknown branch " + std::to_string(branch_id));
  }
  std::set<std::int32_t> steps;
  for (auto id : data.layout.structure.branch(branch_id).nodes) {
    for (const auto& [t, m] : data.alignment.node(id).members) steps.insert(t);
  }
  json j;
  j["branch"] = branch_id;
  j["present_at"] = steps;
  return j.dump();
}

std::string selector_payload(const SelectorSeries& series) {
  json j;
  j["measure"] = to_string(series.measure);
  j["mode"] = to_string(series.mode);
  j["window"] = series.window;
  j["raw"] = series.raw;
  j["values"] = series.values;
  return j.dump();
}

}  // namespace tfct
