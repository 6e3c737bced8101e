#pragma once

// Disturbance and sensor-limitation generators. Every generator is a pure
// function of its inputs and a 64-bit seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "icte/geometry.hpp"
#include "icte/scan.hpp"

namespace icte {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  return mix_seed(base ^ mix_seed(tag));
}

struct NoiseSpec {
  double sigma_real = 0.0;     ///< meters
  double sigma_virtual = 0.0;  ///< meters
  /// Truncation level as a multiple of sigma; empty means untruncated.
  std::optional<double> bound_sigmas = 6.0;

  void validate() const {
    if (sigma_real < 0.0 || sigma_virtual < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
    if (bound_sigmas && !(*bound_sigmas > 0.0)) throw std::invalid_argument("noise bound must be > 0");
  }
};

struct DisplacementSpec {
  double alpha = 0.0;  ///< half-width of the per-axis uniform offset, meters
};

enum class RayFailureMode { RandomFraction, ConsecutiveBlock };

struct RayFailureSpec {
  RayFailureMode mode = RayFailureMode::RandomFraction;
  double fraction = 0.0;

  void validate() const {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("ray failure fraction must lie in [0, 1]");
  }
};

/// Heading error drawn from U(-rho1, -rho0) u U(rho0, rho1).
struct RotationMisalignSpec {
  double rho0 = 0.003;
  double rho1 = 0.01;

  void validate() const {
    if (!(rho0 > 0.0 && rho0 < rho1)) throw std::invalid_argument("rotation spec needs 0 < rho0 < rho1");
  }
};

class NoAdmissibleEstimate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kAdmissibleRetryCap = 100;

/// Adds independent N(0, sigma^2) noise to each valid range, redrawing samples beyond
/// `bound` (absolute, meters) if given, then clamps into (0, max_range].
inline RangeScan perturb_ranges(const RangeScan& scan, double sigma, std::uint64_t seed,
                                std::optional<double> bound = std::nullopt) {
  if (sigma < 0.0) throw std::invalid_argument("perturb_ranges: sigma must be >= 0");
  if (bound && !(*bound > 0.0)) throw std::invalid_argument("perturb_ranges: bound must be > 0");
  RangeScan out = scan;
  if (sigma == 0.0) return out;
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  const double max_range = scan.properties.max_range;
  for (std::size_t n = 0; n < out.size(); ++n) {
    if (!out.valid[n]) continue;
    double w = gauss(rng);
    if (bound) {
      while (std::abs(w) > *bound) w = gauss(rng);
    }
    out.ranges[n] = std::clamp(out.ranges[n] + w, kNoHitFloor, max_range);
  }
  return out;
}

inline RangeScan perturb_ranges(const RangeScan& scan, double sigma, std::uint64_t seed, const NoiseSpec& spec) {
  std::optional<double> bound;
  if (spec.bound_sigmas && sigma > 0.0) bound = *spec.bound_sigmas * sigma;
  return perturb_ranges(scan, sigma, seed, bound);
}

/// Offsets x and y of `truth` by U(-alpha, alpha) each, redrawing until the estimate
/// has line of sight to the truth.
inline Pose2 sample_displacement(const Pose2& truth, const DisplacementSpec& spec, const PolylineMap& map,
                                 std::uint64_t seed) {
  if (spec.alpha < 0.0) throw std::invalid_argument("sample_displacement: alpha must be >= 0");
  if (spec.alpha == 0.0) return truth;
  Rng rng(seed);
  std::uniform_real_distribution<double> offset(-spec.alpha, spec.alpha);
  for (int attempt = 0; attempt < kAdmissibleRetryCap; ++attempt) {
    const double dx = offset(rng);
    const double dy = offset(rng);
    const Pose2 candidate{truth.location + Vec2{dx, dy}, truth.heading};
    if (line_of_sight(candidate.location, truth.location, map)) return candidate;
  }
  throw NoAdmissibleEstimate("no admissible estimate within " + std::to_string(kAdmissibleRetryCap) +
                             " draws (alpha = " + std::to_string(spec.alpha) + ")");
}

/// Marks floor(fraction * N) rays invalid: a uniform random subset, or a cyclic block
/// starting at a uniform random index.
inline RangeScan invalidate_rays(const RangeScan& scan, const RayFailureSpec& spec, std::uint64_t seed) {
  spec.validate();
  RangeScan out = scan;
  const std::size_t n_rays = scan.size();
  const auto count = static_cast<std::size_t>(std::floor(spec.fraction * static_cast<double>(n_rays)));
  if (count == 0 || n_rays == 0) return out;
  Rng rng(seed);
  if (spec.mode == RayFailureMode::RandomFraction) {
    std::vector<std::size_t> idx(n_rays);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `count` entries are a uniform subset.
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n_rays - 1);
      std::swap(idx[i], idx[pick(rng)]);
      out.invalidate(idx[i]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> start_dist(0, n_rays - 1);
    const std::size_t start = start_dist(rng);
    for (std::size_t i = 0; i < count; ++i) out.invalidate((start + i) % n_rays);
  }
  return out;
}

/// Keeps every (N / target_n)-th ray starting at ray 0.
inline RangeScan subsample_rays(const RangeScan& scan, std::size_t target_n) {
  const std::size_t n_rays = scan.size();
  if (target_n == 0 || n_rays % target_n != 0) {
    throw std::invalid_argument("subsample_rays: " + std::to_string(target_n) + " does not divide " +
                                std::to_string(n_rays));
  }
  const std::size_t stride = n_rays / target_n;
  SensorProperties props = scan.properties;
  props.num_rays = target_n;
  RangeScan out(props);
  for (std::size_t i = 0; i < target_n; ++i) {
    out.ranges[i] = scan.ranges[i * stride];
    out.valid[i] = scan.valid[i * stride];
  }
  return out;
}

/// Keeps the centered sub-fan of roughly `fov` radians while preserving ray spacing.
/// The resulting angular range is M * (fov / N) for the M rays kept.
inline RangeScan crop_fov(const RangeScan& scan, double fov) {
  const std::size_t n_rays = scan.size();
  const double step = scan.properties.spacing();
  if (!(fov > 0.0) || fov > scan.properties.fov + 1e-9) {
    throw std::invalid_argument("crop_fov: fov must lie in (0, current fov]");
  }
  const auto keep = static_cast<std::size_t>(std::llround(fov / step));
  if (keep == 0 || keep > n_rays || (n_rays - keep) % 2 != 0) {
    throw std::invalid_argument("crop_fov: cannot center " + std::to_string(keep) + " of " +
                                std::to_string(n_rays) + " rays");
  }
  const std::size_t first = (n_rays - keep) / 2;
  SensorProperties props = scan.properties;
  props.num_rays = keep;
  props.fov = step * static_cast<double>(keep);
  RangeScan out(props);
  for (std::size_t i = 0; i < keep; ++i) {
    out.ranges[i] = scan.ranges[first + i];
    out.valid[i] = scan.valid[first + i];
  }
  return out;
}

inline double sample_rotation_error(const RotationMisalignSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::bernoulli_distribution positive(0.5);
  std::uniform_real_distribution<double> magnitude(spec.rho0, spec.rho1);
  const bool pos = positive(rng);
  const double m = magnitude(rng);
  return pos ? m : -m;
}

}  // namespace icte
