#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tfct/analysis.hpp"
#include "tfct/pipeline.hpp"

namespace tfct {

enum class SelectionMode { window, multi, periodic };

std::string_view to_string(SelectionMode mode);
SelectionMode parse_selection_mode(std::string_view name);  // throws SelectionError

// Selection parameters that cannot produce a valid selection (HTTP 422).
class SelectionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Shift that would move a member out of range (HTTP 409).
class ShiftError : public std::out_of_range {
public:
  using std::out_of_range::out_of_range;
};

inline constexpr int kDefaultPeriod = 12;

struct Selection {
  SelectionMode mode = SelectionMode::multi;
  std::vector<std::int32_t> members;  // ascending, unique, nonempty
  std::int32_t center = 0;            // window
  int width = 5;                      // window
  std::int32_t anchor = 0;            // periodic
  int period = kDefaultPeriod;        // periodic

  bool operator==(const Selection&) const = default;
};

// Odd positive width, center in [0, steps); clamped at the borders.
Selection window_selection(std::int32_t center, int width, std::int32_t steps);
// Any nonempty subset of [0, steps); duplicates are dropped.
Selection multi_selection(std::vector<std::int32_t> members, std::int32_t steps);
// anchor + k * period for k >= 0 inside [0, steps).
Selection periodic_selection(std::int32_t anchor, int period, std::int32_t steps);
Selection all_steps(std::int32_t steps);

// Moves every member (and the window center or periodic anchor) by direction.
// Throws ShiftError when a member would leave [0, steps), SelectionError when
// direction is not +1 or -1.
Selection shifted(const Selection& s, int direction, std::int32_t steps);

struct ViewOptions {
  bool compact_gaps = false;
  bool optimized_spacing = false;

  bool operator==(const ViewOptions&) const = default;
};

// Canonical cache key of a selection and view flags.
std::string signature(const Selection& s, const ViewOptions& view);

// Sub-alignment, trickled-down layout, member layouts and bundled geometry of
// a selection serialized as one JSON document with sorted keys. Coordinates
// are in layout units: x in branch slots, y in [0, 1].
std::string fct_payload(const Precomputed& data, const Selection& s, const ViewOptions& view);

// SVG drawing of a payload produced by fct_payload. Coordinates are written
// with the same number formatting as the payload.
std::string render_svg(const std::string& payload_json);

std::string dataset_payload(const Precomputed& data);

// Selected t: {"step", "selected": true, "full": member layout}. Otherwise
// {"step", "selected": false, "branches_only": ids of the selection's
// branches whose leaf exists at t}. Throws std::out_of_range for t outside
// [0, T).
std::string highlight_tree_payload(const Precomputed& data, const Selection& s, const ViewOptions& view,
                                   std::int32_t t);

// {"branch", "present_at": every step with a member on the branch in the
// overall alignment}. Throws std::out_of_range for unknown branch ids.
std::string highlight_branch_payload(const Precomputed& data, std::int32_t branch_id);

std::string selector_payload(const SelectorSeries& series);

}  // namespace tfct
