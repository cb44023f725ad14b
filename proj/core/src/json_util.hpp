#pragma once

// Internal helpers shared by the JSON-backed formats. Not installed.

#include <string>

#include "json.hpp"
#include "movingout/errors.hpp"
#include "movingout/geometry.hpp"

namespace movingout::detail {

using nlohmann::json;

inline json to_json(Vec2 v) { return json::array({v.x, v.y}); }

inline Vec2 vec2_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected [x, y]");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

inline json to_json(const Rect& r) { return json::array({r.min.x, r.min.y, r.max.x, r.max.y}); }

inline Rect rect_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument("expected [x0, y0, x1, y1]");
  return {{j.at(0).get<double>(), j.at(1).get<double>()}, {j.at(2).get<double>(), j.at(3).get<double>()}};
}

}  // namespace movingout::detail
