#pragma once

// Iterative correspondenceless translation estimation.
//
// Given a map, a physical range scan and a homoriented pose estimate, the
// location estimate is driven toward the true sensor location by
//
//   l[k+1] = l[k] + u[k],   u[k] = (1/N) [cos t  sin t; sin t  -cos t] [Re X1; Im X1]
//
// where X1 is the first DFT term of the per-ray range differences between the
// physical scan and a map-scan simulated from the current estimate.

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "icte/geometry.hpp"
#include "icte/scan.hpp"

namespace icte {

using Complex = std::complex<double>;

struct IcteConfig {
  std::size_t k_max = 60;
  double epsilon_u = 1e-5;  ///< meters

  void validate() const {
    if (k_max < 1) throw std::invalid_argument("k_max must be at least 1");
    if (!(epsilon_u > 0.0)) throw std::invalid_argument("epsilon_u must be positive");
  }
};

enum class Termination { ControlBelowThreshold, MaxIterations };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::ControlBelowThreshold: return "control-below-threshold";
    case Termination::MaxIterations: return "max-iterations";
  }
  return "unknown";
}

/// State of one iteration. `pose_estimate` is the estimate the map-scan was
/// taken from; `e` and `delta` are filled only when ground truth is known,
/// with delta = e - u.
struct IterationRecord {
  std::size_t k = 0;
  Vec2 u;
  Pose2 pose_estimate;
  std::optional<Vec2> e;
  std::optional<Vec2> delta;
};

struct IcteResult {
  Pose2 corrected_pose;
  std::size_t k_stop = 0;
  Termination termination = Termination::MaxIterations;
  /// Set when the error (or, without ground truth, the control) outgrew the map diameter.
  bool diverged = false;
  std::vector<IterationRecord> trace;
};

/// The estimator could not proceed, e.g. the map-scan saw nothing.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// e^{-i 2 pi n / N} for n in [0, N), cached per thread for the last N used.
inline const std::vector<Complex>& twiddles(std::size_t n_rays) {
  thread_local std::vector<Complex> cache;
  if (cache.size() != n_rays) {
    cache.resize(n_rays);
    for (std::size_t n = 0; n < n_rays; ++n) {
      const double a = kTwoPi * static_cast<double>(n) / static_cast<double>(n_rays);
      cache[n] = {std::cos(a), -std::sin(a)};
    }
  }
  return cache;
}

}  // namespace detail

/// First DFT term of the range differences real - virtual, in O(N).
/// A ray invalid in either scan contributes a zero difference but stays in the sum.
inline Complex diff_dft(const RangeScan& real_scan, const RangeScan& virtual_scan) {
  if (real_scan.size() != virtual_scan.size()) {
    throw std::invalid_argument("diff_dft: scans differ in size (" + std::to_string(real_scan.size()) +
                                " vs " + std::to_string(virtual_scan.size()) + ")");
  }
  if (std::abs(real_scan.properties.fov - virtual_scan.properties.fov) > 1e-12) {
    throw std::invalid_argument("diff_dft: scans differ in angular range");
  }
  const std::size_t n_rays = real_scan.size();
  if (n_rays == 0) throw std::invalid_argument("diff_dft: empty scans");
  const auto& w = detail::twiddles(n_rays);
  double re = 0.0;
  double im = 0.0;
  for (std::size_t n = 0; n < n_rays; ++n) {
    if (!real_scan.valid[n] || !virtual_scan.valid[n]) continue;
    const double d = real_scan.ranges[n] - virtual_scan.ranges[n];
    re += d * w[n].real();
    im += d * w[n].imag();
  }
  return {re, im};
}

/// Maps X1 to the location correction for an estimate with the given heading.
inline Vec2 control_vector(Complex x1, double heading, std::size_t n_rays) {
  if (n_rays < 1) throw std::invalid_argument("control_vector: N must be at least 1");
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  const double inv_n = 1.0 / static_cast<double>(n_rays);
  return {(c * x1.real() + s * x1.imag()) * inv_n, (s * x1.real() - c * x1.imag()) * inv_n};
}

/// Leaves the virtual scan untouched.
struct NoDisturbance {
  void operator()(std::size_t /*k*/, RangeScan& /*virtual_scan*/) const {}
};

struct StepResult {
  Vec2 u;
  Pose2 next;
};

/// One iteration: simulate the map-scan at `estimate`, compute u, translate the estimate by u.
/// `disturb(k, scan)` may perturb the freshly simulated map-scan in place.
template <typename Disturbance = NoDisturbance>
StepResult correction_step(const PolylineMap& map, const RangeScan& real_scan, const Pose2& estimate,
                     Disturbance&& disturb = {}, std::size_t k = 0) {
  RangeScan virtual_scan = scan_map(map, estimate, real_scan.properties);
  if (virtual_scan.valid_count() == 0) {
    throw EstimationError("map-scan from (" + std::to_string(estimate.location.x) + ", " +
                          std::to_string(estimate.location.y) + ") has no valid rays");
  }
  disturb(k, virtual_scan);
  const Complex x1 = diff_dft(real_scan, virtual_scan);
  const Vec2 u = control_vector(x1, estimate.heading, real_scan.size());
  return {u, Pose2{estimate.location + u, estimate.heading}};
}

/// Runs the iteration until ||u|| < epsilon_u (checked after the update) or k_max
/// iterations. With `truth`, the trace also carries e = l - l_hat and delta = e - u.
template <typename Disturbance = NoDisturbance>
IcteResult correct_location(const PolylineMap& map, const RangeScan& real_scan, const Pose2& estimate,
                const IcteConfig& cfg, const std::optional<Pose2>& truth = std::nullopt,
                Disturbance&& disturb = {}) {
  cfg.validate();
  real_scan.validate();
  if (map.empty()) throw std::invalid_argument("correct_location: map is empty");

  IcteResult result;
  result.trace.reserve(cfg.k_max);
  const double diameter = map.diameter();
  Pose2 current = estimate;
  std::size_t k = 0;
  result.termination = Termination::MaxIterations;
  while (k < cfg.k_max) {
    const StepResult step = correction_step(map, real_scan, current, disturb, k);
    IterationRecord rec{k, step.u, current, std::nullopt, std::nullopt};
    if (truth) {
      const Vec2 e = truth->location - current.location;
      rec.e = e;
      rec.delta = e - step.u;
      if (norm(e) > diameter) result.diverged = true;
    } else if (norm(step.u) > diameter) {
      result.diverged = true;
    }
    result.trace.push_back(rec);
    current = step.next;
    if (norm(step.u) < cfg.epsilon_u) {
      result.termination = Termination::ControlBelowThreshold;
      break;
    }
    ++k;
  }
  result.k_stop = k;
  result.corrected_pose = current;
  return result;
}

}  // namespace icte
