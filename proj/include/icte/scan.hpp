#pragma once

// Range scans and the virtual map-scan generator.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "icte/geometry.hpp"

namespace icte {

struct SensorProperties {
  std::size_t num_rays = 720;
  double fov = kTwoPi;       ///< angular range, radians
  double max_range = 80.0;   ///< meters; only used for clamping

  void validate() const {
    if (num_rays < 1) throw std::invalid_argument("sensor needs at least one ray");
    if (!(fov > 0.0) || fov > kTwoPi + 1e-9) throw std::invalid_argument("fov must lie in (0, 2pi]");
    if (!(max_range > 0.0)) throw std::invalid_argument("max_range must be positive");
  }
  bool panoramic() const { return fov >= kTwoPi - 1e-12; }
  double spacing() const { return fov / static_cast<double>(num_rays); }

  friend bool operator==(const SensorProperties&, const SensorProperties&) = default;
};

/// Sensor-frame angle of ray n: -fov/2 + fov*n/N.
inline double ray_angle(std::size_t n, const SensorProperties& props) {
  if (n >= props.num_rays) {
    throw std::out_of_range("ray index " + std::to_string(n) + " out of range for " +
                            std::to_string(props.num_rays) + " rays");
  }
  return -props.fov / 2.0 + props.fov * static_cast<double>(n) / static_cast<double>(props.num_rays);
}

/// Ordered ranges with a validity mask; invalid rays carry range 0.
struct RangeScan {
  std::vector<double> ranges;
  std::vector<bool> valid;
  SensorProperties properties;

  RangeScan() = default;
  explicit RangeScan(SensorProperties props)
      : ranges(props.num_rays, 0.0), valid(props.num_rays, false), properties(props) {}

  std::size_t size() const { return ranges.size(); }

  std::size_t valid_count() const {
    std::size_t c = 0;
    for (bool v : valid) c += v ? 1 : 0;
    return c;
  }

  void set(std::size_t n, double range) {
    ranges[n] = range;
    valid[n] = true;
  }
  void invalidate(std::size_t n) {
    ranges[n] = 0.0;
    valid[n] = false;
  }

  void validate() const {
    properties.validate();
    if (ranges.size() != properties.num_rays || valid.size() != properties.num_rays) {
      throw std::invalid_argument("scan length does not match its ray count");
    }
    for (std::size_t n = 0; n < ranges.size(); ++n) {
      if (valid[n]) {
        if (!(ranges[n] > 0.0) || ranges[n] > properties.max_range) {
          throw std::invalid_argument("valid ray " + std::to_string(n) + " has out-of-range value");
        }
      } else if (ranges[n] != 0.0) {
        throw std::invalid_argument("invalid ray " + std::to_string(n) + " must carry range 0");
      }
    }
  }
};

namespace detail {

/// Buckets map segments by the rays of one scan whose directions they can
/// intersect, as seen from the scan origin. Each ray is then tested only
/// against its bucket, a superset of the segments it can hit.
class AngularBuckets {
 public:
  AngularBuckets(const PolylineMap& map, Point2 origin, double first_ray_angle,
                 const SensorProperties& props) {
    const std::size_t n_rays = props.num_rays;
    const double step = props.spacing();
    const bool cyclic = props.panoramic();
    const auto segs = map.segments();

    ranges_.reserve(segs.size());
    offsets_.assign(n_rays + 1, 0);

    auto for_each_ray = [&](const Interval& iv, auto&& fn) {
      if (iv.all) {
        for (std::size_t n = 0; n < n_rays; ++n) fn(n);
        return;
      }
      const auto n_signed = static_cast<std::int64_t>(n_rays);
      if (cyclic) {
        const std::int64_t count = std::min<std::int64_t>(iv.hi - iv.lo + 1, n_signed);
        for (std::int64_t i = 0; i < count; ++i) {
          std::int64_t idx = (iv.lo + i) % n_signed;
          if (idx < 0) idx += n_signed;
          fn(static_cast<std::size_t>(idx));
        }
        return;
      }
      // Open fan: the sector may also be reached one full turn earlier.
      for (auto [lo, hi] : {std::pair{iv.lo, iv.hi}, std::pair{iv.wrapped_lo, iv.wrapped_hi}}) {
        lo = std::max<std::int64_t>(lo, 0);
        hi = std::min<std::int64_t>(hi, n_signed - 1);
        for (std::int64_t idx = lo; idx <= hi; ++idx) fn(static_cast<std::size_t>(idx));
      }
    };

    for (const auto& seg : segs) ranges_.push_back(interval_for(seg, origin, first_ray_angle, step));
    for (const auto& iv : ranges_) for_each_ray(iv, [&](std::size_t n) { ++offsets_[n + 1]; });
    for (std::size_t n = 0; n < n_rays; ++n) offsets_[n + 1] += offsets_[n];
    members_.resize(offsets_.back());
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t i = 0; i < ranges_.size(); ++i) {
      for_each_ray(ranges_[i], [&](std::size_t n) { members_[cursor[n]++] = static_cast<std::uint32_t>(i); });
    }
  }

  std::span<const std::uint32_t> candidates(std::size_t ray) const {
    return {members_.data() + offsets_[ray], offsets_[ray + 1] - offsets_[ray]};
  }

 private:
  struct Interval {
    std::int64_t lo = 0;
    std::int64_t hi = -1;
    std::int64_t wrapped_lo = 0;
    std::int64_t wrapped_hi = -1;
    bool all = false;
  };

  static Interval interval_for(const Segment& seg, Point2 origin, double first_ray_angle, double step) {
    const Vec2 va = seg.a - origin;
    const Vec2 vb = seg.b - origin;
    const double c = cross(va, vb);
    const double scale = norm(va) * norm(vb);
    if (std::abs(c) <= 1e-12 * scale && dot(va, vb) <= 0.0) return {.all = true};

    double start = std::atan2(va.y, va.x);
    double end = std::atan2(vb.y, vb.x);
    if (c < 0.0) std::swap(start, end);
    double span = end - start;
    if (span < 0.0) span += kTwoPi;
    double rel = std::fmod(start - first_ray_angle, kTwoPi);
    if (rel < 0.0) rel += kTwoPi;
    auto first = [&](double a) { return static_cast<std::int64_t>(std::floor(a / step)) - 1; };
    auto last = [&](double a) { return static_cast<std::int64_t>(std::ceil(a / step)) + 1; };
    return {first(rel), last(rel + span), first(rel - kTwoPi), last(rel + span - kTwoPi), false};
  }

  std::vector<Interval> ranges_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> members_;
};

}  // namespace detail

/// Simulates a scan from `pose` inside `map`: ray n leaves at heading + ray_angle(n).
/// Hits are clamped to max_range; misses become invalid rays.
inline RangeScan scan_map(const PolylineMap& map, const Pose2& pose, const SensorProperties& props) {
  props.validate();
  if (map.empty()) throw std::invalid_argument("scan_map: map is empty");
  RangeScan scan(props);
  const Point2 origin = pose.location;
  const detail::AngularBuckets buckets(map, origin, pose.heading + ray_angle(0, props), props);
  const auto segs = map.segments();
  for (std::size_t n = 0; n < props.num_rays; ++n) {
    const Vec2 dir = direction(ray_angle(n, props) + pose.heading);
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t i : buckets.candidates(n)) {
      if (auto t = ray_segment_intersection(origin, dir, segs[i]); t && *t < best) best = *t;
    }
    if (std::isfinite(best)) scan.set(n, std::min(best, props.max_range));
  }
  return scan;
}

/// World-frame endpoints of the valid rays of `scan` taken from `pose`.
inline std::vector<Point2> scan_endpoints(const RangeScan& scan, const Pose2& pose) {
  std::vector<Point2> out;
  out.reserve(scan.size());
  for (std::size_t n = 0; n < scan.size(); ++n) {
    if (!scan.valid[n]) continue;
    out.push_back(pose.location + scan.ranges[n] * direction(pose.heading + ray_angle(n, scan.properties)));
  }
  return out;
}

}  // namespace icte
