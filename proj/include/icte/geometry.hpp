#pragma once

// Planar primitives: points, poses, segments, rigid transforms, ray casting
// and line-of-sight queries against a segment map.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace icte {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Hits closer than this along a ray are discarded (self-hit guard).
inline constexpr double kNoHitFloor = 1e-9;
/// |cross(ray, segment)| below this is treated as parallel.
inline constexpr double kParallelEps = 1e-12;
/// Slack on the segment parameter so rays through a shared vertex hit it.
inline constexpr double kSegmentParamSlack = 1e-12;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
  friend constexpr Point2 operator*(Point2 p, double s) { return {s * p.x, s * p.y}; }
  friend constexpr bool operator==(Point2, Point2) = default;
};

/// Displacements share the point representation.
using Vec2 = Point2;

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

/// Wraps an angle into [-pi, pi).
inline double wrap_angle(double a) {
  if (a >= -kPi && a < kPi) return a;
  double r = std::fmod(a + kPi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  r -= kPi;
  if (r >= kPi) r -= kTwoPi;
  return r;
}

struct Pose2 {
  Point2 location;
  double heading = 0.0;

  Pose2() = default;
  Pose2(Point2 loc, double theta) : location(loc), heading(wrap_angle(theta)) {}
  Pose2(double x, double y, double theta) : Pose2(Point2{x, y}, theta) {}
};

struct Segment {
  Point2 a;
  Point2 b;

  Segment() = default;
  Segment(Point2 p, Point2 q) : a(p), b(q) {
    if (p == q) throw std::invalid_argument("degenerate segment: endpoints coincide");
  }

  double length() const { return distance(a, b); }
};

/// p -> R(rotation) p + translation.
struct RigidTransform {
  Vec2 translation;
  double rotation = 0.0;

  RigidTransform() = default;
  RigidTransform(Vec2 t, double theta) : translation(t), rotation(wrap_angle(theta)) {}

  static RigidTransform identity() { return {}; }
};

inline Point2 apply_transform(const RigidTransform& q, Point2 p) {
  const double c = std::cos(q.rotation);
  const double s = std::sin(q.rotation);
  return {c * p.x - s * p.y + q.translation.x, s * p.x + c * p.y + q.translation.y};
}

/// Transform equal to applying `first`, then `second`.
inline RigidTransform compose(const RigidTransform& second, const RigidTransform& first) {
  const double c = std::cos(second.rotation);
  const double s = std::sin(second.rotation);
  const Vec2 t{c * first.translation.x - s * first.translation.y + second.translation.x,
               s * first.translation.x + c * first.translation.y + second.translation.y};
  return {t, first.rotation + second.rotation};
}

inline Pose2 apply_transform(const RigidTransform& q, const Pose2& p) {
  return {apply_transform(q, p.location), p.heading + q.rotation};
}

inline Segment apply_transform(const RigidTransform& q, const Segment& s) {
  return {apply_transform(q, s.a), apply_transform(q, s.b)};
}

inline Vec2 direction(double angle) { return {std::cos(angle), std::sin(angle)}; }

/// Distance along the unit direction `dir` from `origin` to `seg`, if hit.
inline std::optional<double> ray_segment_intersection(Point2 origin, Vec2 dir, const Segment& seg) {
  const Vec2 edge = seg.b - seg.a;
  const double denom = cross(dir, edge);
  if (std::abs(denom) < kParallelEps) return std::nullopt;
  const Vec2 rel = seg.a - origin;
  const double t = cross(rel, edge) / denom;
  const double s = cross(rel, dir) / denom;
  if (s < -kSegmentParamSlack || s > 1.0 + kSegmentParamSlack) return std::nullopt;
  if (t < kNoHitFloor) return std::nullopt;
  return t;
}

inline std::optional<double> ray_segment_intersection(Point2 origin, double angle, const Segment& seg) {
  return ray_segment_intersection(origin, direction(angle), seg);
}

struct BoundingBox {
  Point2 min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Point2 max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};

  void extend(Point2 p) {
    min = {std::min(min.x, p.x), std::min(min.y, p.y)};
    max = {std::max(max.x, p.x), std::max(max.y, p.y)};
  }
  bool contains(Point2 p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
  double diagonal() const { return distance(min, max); }
};

/// Flat, immutable list of obstacle boundary segments. Polylines need not be closed.
class PolylineMap {
 public:
  PolylineMap() = default;
  explicit PolylineMap(std::vector<Segment> segments) : segments_(std::move(segments)) {
    for (const auto& s : segments_) {
      if (!std::isfinite(s.a.x) || !std::isfinite(s.a.y) || !std::isfinite(s.b.x) ||
          !std::isfinite(s.b.y)) {
        throw std::invalid_argument("map segment with non-finite coordinate");
      }
      bounds_.extend(s.a);
      bounds_.extend(s.b);
    }
  }

  /// Joins consecutive vertices; `closed` also links the last vertex back to the first.
  static PolylineMap from_polyline(std::span<const Point2> vertices, bool closed) {
    std::vector<Segment> segs;
    if (vertices.size() < 2) throw std::invalid_argument("polyline needs at least two vertices");
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i) segs.emplace_back(vertices[i], vertices[i + 1]);
    if (closed && vertices.size() > 2) segs.emplace_back(vertices.back(), vertices.front());
    return PolylineMap(std::move(segs));
  }

  std::span<const Segment> segments() const { return segments_; }
  std::size_t size() const { return segments_.size(); }
  bool empty() const { return segments_.empty(); }
  const BoundingBox& bounds() const { return bounds_; }
  /// Upper bound on the distance between any two points of the map.
  double diameter() const { return empty() ? 0.0 : bounds_.diagonal(); }

  PolylineMap transformed(const RigidTransform& q) const {
    std::vector<Segment> out;
    out.reserve(segments_.size());
    for (const auto& s : segments_) out.push_back(apply_transform(q, s));
    return PolylineMap(std::move(out));
  }

  PolylineMap merged(const PolylineMap& other) const {
    std::vector<Segment> out(segments_.begin(), segments_.end());
    out.insert(out.end(), other.segments_.begin(), other.segments_.end());
    return PolylineMap(std::move(out));
  }

 private:
  std::vector<Segment> segments_;
  BoundingBox bounds_;
};

/// Nearest hit over all map segments (linear scan).
inline std::optional<double> ray_cast(Point2 origin, Vec2 dir, const PolylineMap& map) {
  std::optional<double> best;
  for (const auto& seg : map.segments()) {
    if (auto t = ray_segment_intersection(origin, dir, seg); t && (!best || *t < *best)) best = t;
  }
  return best;
}

inline std::optional<double> ray_cast(Point2 origin, double angle, const PolylineMap& map) {
  if (!std::isfinite(angle)) throw std::invalid_argument("ray angle must be finite");
  return ray_cast(origin, direction(angle), map);
}

namespace detail {

inline int orientation_sign(Point2 a, Point2 b, Point2 c) {
  const double v = cross(b - a, c - a);
  const double scale = std::max({norm(b - a) * norm(c - a), 1e-300});
  if (std::abs(v) <= 1e-14 * scale) return 0;
  return v > 0 ? 1 : -1;
}

inline bool on_segment(Point2 a, Point2 b, Point2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

// Does the open segment (p, q) meet the closed segment s?
inline bool open_segment_blocked(Point2 p, Point2 q, const Segment& s) {
  const int o1 = orientation_sign(p, q, s.a);
  const int o2 = orientation_sign(p, q, s.b);
  const int o3 = orientation_sign(s.a, s.b, p);
  const int o4 = orientation_sign(s.a, s.b, q);

  if (o1 == 0 && o2 == 0) {
    // Collinear: blocked iff the overlap has positive length inside (p, q).
    const Vec2 d = q - p;
    const double len2 = dot(d, d);
    double ta = dot(s.a - p, d) / len2;
    double tb = dot(s.b - p, d) / len2;
    if (ta > tb) std::swap(ta, tb);
    return std::min(tb, 1.0) - std::max(ta, 0.0) > 0.0;
  }
  if (o1 != o2 && o3 != o4) {
    // Proper crossing, or a map vertex lying on the open sight line.
    if (o3 == 0 || o4 == 0) return false;  // touches only at p or q
    return true;
  }
  if (o1 == 0 && on_segment(p, q, s.a) && s.a != p && s.a != q) return true;
  if (o2 == 0 && on_segment(p, q, s.b) && s.b != p && s.b != q) return true;
  return false;
}

}  // namespace detail

/// True iff the open segment a-b crosses no map segment.
inline bool line_of_sight(Point2 a, Point2 b, const PolylineMap& map) {
  if (a == b) return true;
  // Canonical argument order keeps the predicate exactly symmetric.
  if (std::pair{b.x, b.y} < std::pair{a.x, a.y}) std::swap(a, b);
  for (const auto& seg : map.segments()) {
    if (detail::open_segment_blocked(a, b, seg)) return false;
  }
  return true;
}

}  // namespace icte
