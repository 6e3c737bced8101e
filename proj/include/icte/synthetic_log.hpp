#pragma once

// Synthetic stand-in for a recorded 180 degree laser log: an office floor plan
// and a loop trajectory through its corridor and rooms.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "icte/dataset.hpp"
#include "icte/fixtures.hpp"
#include "icte/geometry.hpp"
#include "icte/perturbation.hpp"
#include "icte/scan.hpp"

namespace icte {

struct SyntheticLogOptions {
  std::size_t records = 778;
  std::size_t readings = 360;
  double range_sigma = 0.01;       ///< meters, before millimeter rounding
  double dropout_fraction = 0.005; ///< readings reported as 0
  double max_range = 80.0;
  std::uint64_t seed = 1;
};

/// 30 x 16 m floor: a corridor along y in [7, 9], three rooms below, four above,
/// doorways into each room and a few pieces of furniture.
inline PolylineMap office_floor_plan() {
  std::vector<Segment> w;
  auto wall = [&](double x1, double y1, double x2, double y2) { w.emplace_back(Point2{x1, y1}, Point2{x2, y2}); };
  auto merge = [&](const PolylineMap& m) { w.insert(w.end(), m.segments().begin(), m.segments().end()); };

  merge(fixtures::rectangle_map(30.0, 16.0));
  // Corridor walls with doorways.
  wall(0, 7, 4, 7), wall(5.2, 7, 14, 7), wall(15.2, 7, 24, 7), wall(25.2, 7, 30, 7);
  wall(0, 9, 3, 9), wall(4.2, 9, 11, 9), wall(12.2, 9, 19, 9), wall(20.2, 9, 26, 9), wall(27.2, 9, 30, 9);
  // Room dividers.
  wall(10, 0, 10, 7), wall(20, 0, 20, 7);
  wall(8, 9, 8, 16), wall(16, 9, 16, 16), wall(23, 9, 23, 16);
  // Furniture.
  merge(fixtures::rectangle_map(2.0, 1.0, {1.0, 1.0}));
  merge(fixtures::rectangle_map(1.5, 1.2, {12.0, 2.0}));
  merge(fixtures::rectangle_map(2.0, 1.0, {25.0, 4.5}));
  merge(fixtures::rectangle_map(0.5, 0.5, {6.5, 12.0}));
  merge(fixtures::rectangle_map(2.0, 1.0, {18.0, 13.0}));
  merge(fixtures::rectangle_map(2.0, 1.0, {27.5, 14.5}));
  merge(fixtures::rectangle_map(3.0, 0.5, {1.0, 14.5}));
  return PolylineMap(std::move(w));
}

/// Waypoints of a loop along the corridor with an excursion into every room.
inline std::vector<Point2> office_route() {
  return {{1.5, 8.0},   {4.6, 8.0},   {4.6, 4.5},  {7.0, 3.0},   {4.6, 4.5},   {4.6, 8.0},   {3.6, 8.0},
          {3.6, 11.5},  {5.0, 13.0},  {3.6, 11.5}, {3.6, 8.0},   {11.6, 8.0},  {11.6, 12.0}, {13.0, 13.5},
          {11.6, 12.0}, {11.6, 8.0},  {14.6, 8.0}, {14.6, 4.0},  {17.0, 5.0},  {14.6, 4.0},  {14.6, 8.0},
          {19.6, 8.0},  {19.6, 11.5}, {21.0, 12.0}, {19.6, 11.5}, {19.6, 8.0},  {24.6, 8.0},  {24.6, 3.0},
          {22.0, 2.0},  {24.6, 3.0},  {24.6, 8.0},  {26.6, 8.0},  {26.6, 12.0}, {28.0, 12.5}, {26.6, 12.0},
          {26.6, 8.0},  {28.5, 8.0}};
}

/// Poses spaced evenly by arc length along the route, heading along the direction of travel
/// with a slow sway.
inline std::vector<Pose2> sample_route(const std::vector<Point2>& route, std::size_t count) {
  std::vector<double> cum{0.0};
  for (std::size_t i = 1; i < route.size(); ++i) cum.push_back(cum.back() + distance(route[i - 1], route[i]));
  const double total = cum.back();
  std::vector<Pose2> poses;
  poses.reserve(count);
  std::size_t leg = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double s = count > 1 ? total * static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
    while (leg + 2 < route.size() && cum[leg + 1] < s) ++leg;
    const Vec2 d = route[leg + 1] - route[leg];
    const double t = (s - cum[leg]) / (cum[leg + 1] - cum[leg]);
    const double sway = 0.15 * std::sin(0.9 * s);
    poses.emplace_back(route[leg] + t * d, std::atan2(d.y, d.x) + sway);
  }
  return poses;
}

inline std::vector<DatasetRecord> generate_office_log(const SyntheticLogOptions& opts = {}) {
  const PolylineMap plan = office_floor_plan();
  const std::vector<Pose2> poses = sample_route(office_route(), opts.records);
  const SensorProperties props{opts.readings, kPi, opts.max_range};
  std::vector<DatasetRecord> records;
  records.reserve(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    Rng rng(derive_seed(opts.seed, i));
    std::normal_distribution<double> noise(0.0, opts.range_sigma);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const RangeScan scan = scan_map(plan, poses[i], props);
    DatasetRecord rec;
    rec.capture_pose = poses[i];
    rec.timestamp = 0.2 * static_cast<double>(i);
    rec.ranges.resize(opts.readings, 0.0);
    for (std::size_t n = 0; n < opts.readings; ++n) {
      const double w = opts.range_sigma > 0.0 ? noise(rng) : 0.0;
      const bool drop = unit(rng) < opts.dropout_fraction;
      if (!scan.valid[n] || drop) continue;
      const double r = std::clamp(scan.ranges[n] + w, 0.001, opts.max_range);
      rec.ranges[n] = std::round(r * 1000.0) / 1000.0;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace icte
