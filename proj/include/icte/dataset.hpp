#pragma once

// Benchmark log ingest and per-record experiment inputs: a map rebuilt from a
// 180 degree scan (closed behind the sensor by one of three strategies) and
// the panoramic "real" scan obtained by filling the missing rear half from it.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "icte/geometry.hpp"
#include "icte/scan.hpp"

namespace icte {

struct DatasetRecord {
  std::vector<double> ranges;  ///< 0 marks a missing reading
  Pose2 capture_pose;
  std::optional<double> timestamp;
};

enum class ClosureStrategy { MirrorX, MirrorY, Arc };

inline const char* to_string(ClosureStrategy c) {
  switch (c) {
    case ClosureStrategy::MirrorX: return "mirror-x";
    case ClosureStrategy::MirrorY: return "mirror-y";
    case ClosureStrategy::Arc: return "arc";
  }
  return "unknown";
}

inline ClosureStrategy parse_closure(std::string_view name) {
  if (name == "mirror-x") return ClosureStrategy::MirrorX;
  if (name == "mirror-y") return ClosureStrategy::MirrorY;
  if (name == "arc") return ClosureStrategy::Arc;
  throw std::invalid_argument("unknown closure strategy '" + std::string(name) + "'");
}

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LogParseResult {
  std::vector<DatasetRecord> records;
  std::size_t skipped_lines = 0;  ///< laser lines that failed to parse
};

namespace detail {

inline bool parse_double(const std::string& tok, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(tok, &pos);
    return pos == tok.size() && std::isfinite(out);
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace detail

/// Parses a Carmen-style log. Each `FLASER n r_1 ... r_n x y theta [odom_x odom_y odom_theta
/// timestamp ...]` line becomes one record; other lines are ignored.
inline LogParseResult parse_log(std::istream& in) {
  LogParseResult result;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag != "FLASER") continue;
    std::vector<std::string> tokens;
    for (std::string t; ls >> t;) tokens.push_back(std::move(t));

    double count_d = 0.0;
    if (tokens.empty() || !detail::parse_double(tokens[0], count_d) || count_d < 1.0 ||
        count_d != std::floor(count_d) || tokens.size() < static_cast<std::size_t>(count_d) + 4) {
      ++result.skipped_lines;
      continue;
    }
    const auto count = static_cast<std::size_t>(count_d);
    DatasetRecord rec;
    rec.ranges.resize(count);
    bool ok = true;
    for (std::size_t i = 0; i < count && ok; ++i) {
      ok = detail::parse_double(tokens[1 + i], rec.ranges[i]) && rec.ranges[i] >= 0.0;
    }
    double x = 0, y = 0, th = 0;
    ok = ok && detail::parse_double(tokens[count + 1], x) && detail::parse_double(tokens[count + 2], y) &&
         detail::parse_double(tokens[count + 3], th);
    if (!ok) {
      ++result.skipped_lines;
      continue;
    }
    rec.capture_pose = Pose2{x, y, th};
    if (double ts = 0; tokens.size() > count + 7 && detail::parse_double(tokens[count + 7], ts)) rec.timestamp = ts;
    result.records.push_back(std::move(rec));
  }
  if (result.records.empty()) throw ParseError("log contains no parseable FLASER records");
  return result;
}

/// Line-delimited JSON: one {"ranges": [...], "pose": [x, y, theta], "timestamp": t?} per line.
inline LogParseResult parse_jsonl(std::istream& in) {
  LogParseResult result;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      DatasetRecord rec;
      rec.ranges = j.at("ranges").get<std::vector<double>>();
      const auto pose = j.at("pose").get<std::vector<double>>();
      if (pose.size() != 3 || rec.ranges.empty()) throw ParseError("bad shape");
      for (double r : rec.ranges) {
        if (!std::isfinite(r) || r < 0.0) throw ParseError("bad range");
      }
      rec.capture_pose = Pose2{pose[0], pose[1], pose[2]};
      if (j.contains("timestamp")) rec.timestamp = j.at("timestamp").get<double>();
      result.records.push_back(std::move(rec));
    } catch (const std::exception&) {
      ++result.skipped_lines;
    }
  }
  if (result.records.empty()) throw ParseError("no parseable JSON records");
  return result;
}

inline void write_carmen_log(std::ostream& out, const std::vector<DatasetRecord>& records) {
  out << "# synthetic Carmen log: FLASER num_readings [range_readings] x y theta odom_x odom_y odom_theta "
         "ipc_timestamp ipc_hostname logger_timestamp\n";
  char buf[64];
  for (const auto& rec : records) {
    out << "FLASER " << rec.ranges.size();
    for (double r : rec.ranges) {
      std::snprintf(buf, sizeof buf, " %.3f", r);
      out << buf;
    }
    const auto& p = rec.capture_pose;
    std::snprintf(buf, sizeof buf, " %.6f %.6f %.6f", p.location.x, p.location.y, p.heading);
    out << buf << buf;
    const double ts = rec.timestamp.value_or(0.0);
    std::snprintf(buf, sizeof buf, " %.6f synthetic %.6f\n", ts, ts);
    out << buf;
  }
}

/// Bearing of reading i of a 180 degree record, relative to the heading: -pi/2 + i*pi/N_d.
inline double record_bearing(std::size_t i, std::size_t n_readings) {
  return -kPi / 2.0 + static_cast<double>(i) * kPi / static_cast<double>(n_readings);
}

/// World-frame endpoint of every reading (zero-range readings included, at the capture location).
inline std::vector<Point2> record_to_points(const DatasetRecord& record) {
  std::vector<Point2> pts;
  pts.reserve(record.ranges.size());
  const auto& p = record.capture_pose;
  for (std::size_t i = 0; i < record.ranges.size(); ++i) {
    const double a = record_bearing(i, record.ranges.size()) + p.heading;
    pts.push_back({p.location.x + record.ranges[i] * std::cos(a), p.location.y + record.ranges[i] * std::sin(a)});
  }
  return pts;
}

struct MapBuildOptions {
  /// When set, consecutive points farther apart than this are left unlinked.
  std::optional<double> split_gaps_longer_than;
};

namespace detail {

// Links consecutive present points (in scan order) of a cyclic or open chain.
inline void link_chain(const std::vector<std::optional<Point2>>& chain, bool closed,
                       const MapBuildOptions& opts, std::vector<Segment>& out) {
  std::vector<Point2> present;
  for (const auto& p : chain) {
    if (p && (present.empty() || !(present.back() == *p))) present.push_back(*p);
  }
  if (closed && present.size() > 1 && present.front() == present.back()) present.pop_back();
  auto link = [&](Point2 a, Point2 b) {
    if (a == b) return;
    if (opts.split_gaps_longer_than && distance(a, b) > *opts.split_gaps_longer_than) return;
    out.emplace_back(a, b);
  };
  for (std::size_t i = 0; i + 1 < present.size(); ++i) link(present[i], present[i + 1]);
  if (closed && present.size() > 2) link(present.back(), present.front());
}

inline bool same_point(Point2 a, Point2 b) { return distance(a, b) <= 1e-9; }

}  // namespace detail

/// Arc radius: the smaller of the two extreme readings, skipping missing (zero) extremes.
inline double arc_closure_radius(const DatasetRecord& record) {
  const auto& r = record.ranges;
  auto first = std::find_if(r.begin(), r.end(), [](double v) { return v > 0.0; });
  auto last = std::find_if(r.rbegin(), r.rend(), [](double v) { return v > 0.0; });
  if (first == r.end()) throw std::invalid_argument("arc closure: record has no nonzero reading");
  return std::min(*first, *last);
}

/// Rebuilds a closed map around the capture pose from one 180 degree record.
///
/// MirrorY reflects the front points across the sensor's lateral (y) axis into the rear.
/// MirrorX reflects them across the sensor's x axis and then across the y axis, i.e. a
/// point reflection through the capture location, so the rear is filled as well.
/// Arc closes the rear with a semicircle of radius min(first, last range) centered at the
/// capture location, with one vertex per missing rear ray direction.
inline PolylineMap build_map(const DatasetRecord& record, ClosureStrategy closure, const MapBuildOptions& opts = {}) {
  const std::size_t nd = record.ranges.size();
  if (nd < 2) throw std::invalid_argument("build_map: record needs at least two readings");
  const Pose2& pose = record.capture_pose;
  const double c = std::cos(pose.heading);
  const double s = std::sin(pose.heading);
  auto to_world = [&](Point2 local) {
    return Point2{pose.location.x + c * local.x - s * local.y, pose.location.y + s * local.x + c * local.y};
  };

  // Front points in the sensor frame, in increasing bearing.
  std::vector<std::optional<Point2>> front(nd);
  std::size_t present = 0;
  for (std::size_t i = 0; i < nd; ++i) {
    if (record.ranges[i] <= 0.0) continue;
    front[i] = record.ranges[i] * direction(record_bearing(i, nd));
    ++present;
  }
  if (present < 2) throw std::invalid_argument("build_map: record has fewer than two nonzero readings");

  // The closed boundary as one cyclic chain in increasing bearing around the sensor.
  std::vector<std::optional<Point2>> chain(front.begin(), front.end());
  switch (closure) {
    case ClosureStrategy::MirrorY: {
      // (a, b) -> (-a, b): bearing phi -> pi - phi, so walk the originals backwards.
      for (std::size_t i = nd; i-- > 0;) {
        if (!front[i]) {
          chain.emplace_back();
          continue;
        }
        const Point2 q{-front[i]->x, front[i]->y};
        const bool on_axis = detail::same_point(q, *front[i]);
        chain.push_back(on_axis ? std::nullopt : std::optional<Point2>(q));
      }
      break;
    }
    case ClosureStrategy::MirrorX: {
      // (a, b) -> (-a, -b): bearing phi -> phi + pi, same walking order.
      for (std::size_t i = 0; i < nd; ++i) {
        if (!front[i]) {
          chain.emplace_back();
          continue;
        }
        const Point2 q{-front[i]->x, -front[i]->y};
        const bool coincident = detail::same_point(q, *front[i]);
        chain.push_back(coincident ? std::nullopt : std::optional<Point2>(q));
      }
      break;
    }
    case ClosureStrategy::Arc: {
      // One vertex on each missing rear ray direction, pi/2 + j*pi/N_d.
      const double radius = arc_closure_radius(record);
      for (std::size_t j = 0; j < nd; ++j) {
        const double a = kPi / 2.0 + static_cast<double>(j) * kPi / static_cast<double>(nd);
        chain.push_back(radius * direction(a));
      }
      break;
    }
  }
  for (auto& p : chain) {
    if (p) p = to_world(*p);
  }
  std::vector<Segment> segs;
  detail::link_chain(chain, true, opts, segs);
  return PolylineMap(std::move(segs));
}

/// Panoramic 2*N_d-ray scan from the capture pose: front half passes the recorded ranges
/// through, rear half is ray cast into `map`.
inline RangeScan augment_scan(const DatasetRecord& record, const PolylineMap& map, double max_range = 80.0) {
  const std::size_t nd = record.ranges.size();
  SensorProperties props{2 * nd, kTwoPi, max_range};
  // Ray n of the panoramic scan sits at -pi + pi*n/N_d; reading i maps to n = N_d/2 + i.
  const std::size_t front_start = nd / 2;
  if (nd % 2 != 0) throw std::invalid_argument("augment_scan: odd reading count cannot be aligned");
  const RangeScan cast = scan_map(map, record.capture_pose, props);
  RangeScan out(props);
  for (std::size_t n = 0; n < props.num_rays; ++n) {
    if (n >= front_start && n < front_start + nd) {
      const double r = record.ranges[n - front_start];
      if (r > 0.0) out.set(n, std::min(r, max_range));
    } else if (cast.valid[n]) {
      out.set(n, cast.ranges[n]);
    }
  }
  return out;
}

/// Plain-text segment list, one "x1 y1 x2 y2" per line.
inline void write_segments(std::ostream& out, const PolylineMap& map) {
  char buf[128];
  for (const auto& s : map.segments()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g\n", s.a.x, s.a.y, s.b.x, s.b.y);
    out << buf;
  }
}

inline PolylineMap read_segments(std::istream& in) {
  std::vector<Segment> segs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double x1, y1, x2, y2;
    if (!(ls >> x1 >> y1 >> x2 >> y2)) throw ParseError("segment list line " + std::to_string(lineno) + ": expected x1 y1 x2 y2");
    if (Point2{x1, y1} == Point2{x2, y2}) continue;
    segs.emplace_back(Point2{x1, y1}, Point2{x2, y2});
  }
  if (segs.empty()) throw ParseError("segment list is empty");
  return PolylineMap(std::move(segs));
}

/// Scan file: header "N fov max_range", then N lines "range valid(0|1)".
inline void write_scan(std::ostream& out, const RangeScan& scan) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%zu %.17g %.17g\n", scan.size(), scan.properties.fov, scan.properties.max_range);
  out << buf;
  for (std::size_t n = 0; n < scan.size(); ++n) {
    std::snprintf(buf, sizeof buf, "%.17g %d\n", scan.ranges[n], scan.valid[n] ? 1 : 0);
    out << buf;
  }
}

inline RangeScan read_scan(std::istream& in) {
  SensorProperties props;
  if (!(in >> props.num_rays >> props.fov >> props.max_range)) throw ParseError("scan file: bad header");
  try {
    props.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("scan file: ") + e.what());
  }
  RangeScan scan(props);
  for (std::size_t n = 0; n < props.num_rays; ++n) {
    double r = 0.0;
    int v = 0;
    if (!(in >> r >> v)) throw ParseError("scan file: expected " + std::to_string(props.num_rays) + " rays");
    if (v != 0) scan.set(n, r);
  }
  try {
    scan.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("scan file: ") + e.what());
  }
  return scan;
}

}  // namespace icte
