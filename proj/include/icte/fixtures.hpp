#pragma once

// Synthetic fixture maps with a pinned sensor pose inside each.

#include <cmath>
#include <string>
#include <vector>

#include "icte/geometry.hpp"

namespace icte::fixtures {

struct FixtureMap {
  std::string id;
  PolylineMap map;
  Pose2 truth;
  bool convex = false;
};

inline PolylineMap rectangle_map(double width, double height, Point2 corner = {0.0, 0.0}) {
  const std::vector<Point2> v{corner,
                              {corner.x + width, corner.y},
                              {corner.x + width, corner.y + height},
                              {corner.x, corner.y + height}};
  return PolylineMap::from_polyline(v, true);
}

inline PolylineMap regular_polygon_map(std::size_t sides, double radius, Point2 center = {}, double phase = 0.0) {
  std::vector<Point2> v;
  for (std::size_t i = 0; i < sides; ++i) {
    const double a = phase + kTwoPi * static_cast<double>(i) / static_cast<double>(sides);
    v.push_back(center + radius * direction(a));
  }
  return PolylineMap::from_polyline(v, true);
}

inline PolylineMap star_map(std::size_t points, double outer, double inner, Point2 center = {}) {
  std::vector<Point2> v;
  for (std::size_t i = 0; i < 2 * points; ++i) {
    const double a = kPi * static_cast<double>(i) / static_cast<double>(points);
    v.push_back(center + (i % 2 == 0 ? outer : inner) * direction(a));
  }
  return PolylineMap::from_polyline(v, true);
}

inline PolylineMap l_room_map() {
  const std::vector<Point2> v{{0, 0}, {8, 0}, {8, 3}, {3, 3}, {3, 7}, {0, 7}};
  return PolylineMap::from_polyline(v, true);
}

/// 7 x 5 room with a 0.6 m square pillar.
inline PolylineMap pillar_room_map() {
  return rectangle_map(7.0, 5.0).merged(rectangle_map(0.6, 0.6, {4.2, 2.6}));
}

/// The shipped suite: convex and non-convex rooms, each with an interior sensor pose.
inline std::vector<FixtureMap> suite() {
  return {
      {"rectangle", rectangle_map(6.0, 4.0), Pose2{2.3, 1.6, 0.4}, true},
      {"l-room", l_room_map(), Pose2{1.5, 2.0, -0.7}, false},
      {"star", star_map(5, 5.0, 2.5, {0.0, 0.0}), Pose2{0.3, -0.2, 1.1}, false},
      {"64-gon", regular_polygon_map(64, 4.0, {1.0, -2.0}), Pose2{1.5, -1.7, 2.5}, true},
      {"pillar-room", pillar_room_map(), Pose2{2.5, 2.0, -2.0}, false},
  };
}

}  // namespace icte::fixtures
