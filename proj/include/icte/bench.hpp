#pragma once

// Experiment grid runner: per-run seeding, perturbation and variant plumbing,
// summary statistics and CSV / JSON output.

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "icte/dataset.hpp"
#include "icte/estimator.hpp"
#include "icte/fixtures.hpp"
#include "icte/perturbation.hpp"
#include "icte/scan.hpp"

namespace icte {

/// One experiment input: a map, the pose the physical scan was taken from, and that scan.
struct BenchCase {
  std::string id;
  PolylineMap map;
  Pose2 truth;
  RangeScan real_scan;
};

inline std::vector<BenchCase> synthetic_cases(const SensorProperties& props = {}) {
  std::vector<BenchCase> out;
  for (auto& f : fixtures::suite()) {
    if (f.id == "pillar-room") continue;
    RangeScan scan = scan_map(f.map, f.truth, props);
    out.push_back({f.id, std::move(f.map), f.truth, std::move(scan)});
  }
  return out;
}

/// `count` records spread evenly over the log, each turned into a map and augmented scan.
inline std::vector<BenchCase> dataset_cases(const std::vector<DatasetRecord>& records, std::size_t count,
                                            ClosureStrategy closure, double max_range = 80.0) {
  if (records.empty()) throw std::invalid_argument("dataset_cases: no records");
  count = std::min(count, records.size());
  std::vector<BenchCase> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t idx = i * records.size() / count;
    PolylineMap map = build_map(records[idx], closure);
    RangeScan scan = augment_scan(records[idx], map, max_range);
    out.push_back({"record-" + std::to_string(idx), std::move(map), records[idx].capture_pose, std::move(scan)});
  }
  return out;
}

struct ExperimentGrid {
  std::vector<double> alphas{0.05, 0.10, 0.15, 0.20};
  std::vector<double> sigmas_real{0.0, 0.005, 0.01, 0.02, 0.05};
  std::vector<double> sigmas_virtual{0.0, 0.005, 0.01, 0.02, 0.05};
  std::size_t runs_per_cell = 10;
  std::optional<RayFailureSpec> ray_failure;
  std::optional<std::size_t> subsample;
  std::optional<double> fov;
  std::optional<RotationMisalignSpec> rotation;
  IcteConfig cfg;
  std::uint64_t seed = 0;
  /// Truncation of range noise, in multiples of sigma.
  std::optional<double> noise_bound_sigmas = 6.0;

  void validate() const {
    if (alphas.empty() || sigmas_real.empty() || sigmas_virtual.empty()) {
      throw std::invalid_argument("grid lists must be nonempty");
    }
    if (runs_per_cell < 1) throw std::invalid_argument("runs per cell must be at least 1");
    for (double a : alphas) {
      if (!(a >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
    }
    for (const auto* list : {&sigmas_real, &sigmas_virtual}) {
      for (double s : *list) {
        if (!(s >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
      }
    }
    if (ray_failure) ray_failure->validate();
    if (rotation) rotation->validate();
    if (subsample && *subsample == 0) throw std::invalid_argument("ray count must be positive");
    if (fov && !(*fov > 0.0 && *fov <= kTwoPi + 1e-9)) throw std::invalid_argument("fov must lie in (0, 2pi]");
    cfg.validate();
  }

  /// Label of the sensor-limitation variant, "nominal" when none applies.
  std::string variant() const {
    std::vector<std::string> parts;
    char buf[64];
    if (subsample) parts.push_back("rays" + std::to_string(*subsample));
    if (fov) {
      std::snprintf(buf, sizeof buf, "fov%.4f", *fov);
      parts.emplace_back(buf);
    }
    if (ray_failure) {
      const char* mode = ray_failure->mode == RayFailureMode::RandomFraction ? "invalid-random" : "invalid-block";
      std::snprintf(buf, sizeof buf, "%s%g", mode, ray_failure->fraction);
      parts.emplace_back(buf);
    }
    if (rotation) {
      std::snprintf(buf, sizeof buf, "rot%g-%g", rotation->rho0, rotation->rho1);
      parts.emplace_back(buf);
    }
    if (parts.empty()) return "nominal";
    std::string out = parts.front();
    for (std::size_t i = 1; i < parts.size(); ++i) out += "+" + parts[i];
    return out;
  }
};

struct RunRecord {
  double alpha = 0.0;
  double sigma_r = 0.0;
  double sigma_v = 0.0;
  std::string variant;
  std::string map_id;
  std::size_t run = 0;
  double initial_error = std::numeric_limits<double>::quiet_NaN();
  double final_error = std::numeric_limits<double>::quiet_NaN();
  std::size_t k_stop = 0;
  std::string termination;  ///< estimator termination, or "failed:<reason>"
  double wall_time = 0.0;   ///< seconds; 0 unless timing was requested

  bool failed() const { return termination.rfind("failed:", 0) == 0; }
  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct CellStats {
  double alpha = 0.0;
  double sigma_r = 0.0;
  double sigma_v = 0.0;
  std::string variant;
  std::size_t runs = 0;
  std::size_t failed = 0;
  double mean_final_error = std::numeric_limits<double>::quiet_NaN();
  double median_final_error = std::numeric_limits<double>::quiet_NaN();
  double std_final_error = std::numeric_limits<double>::quiet_NaN();
  double mean_initial_error = std::numeric_limits<double>::quiet_NaN();
  double mean_k_stop = std::numeric_limits<double>::quiet_NaN();
  double mean_wall_time = std::numeric_limits<double>::quiet_NaN();
  /// Runs that started outside the cell's bound (mean + 3 std of final errors) and ended farther out.
  std::size_t objective_violations = 0;
};

using SummaryStats = std::vector<CellStats>;

namespace detail {

inline std::uint64_t hash_string(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Stable per-run seed from the master seed, the cell, the map id and the run index.
inline std::uint64_t run_seed(std::uint64_t master, double alpha, double sigma_r, double sigma_v,
                              const std::string& variant, const std::string& map_id, std::size_t run) {
  std::uint64_t h = mix_seed(master);
  for (std::uint64_t part : {std::bit_cast<std::uint64_t>(alpha), std::bit_cast<std::uint64_t>(sigma_r),
                             std::bit_cast<std::uint64_t>(sigma_v), detail::hash_string(variant),
                             detail::hash_string(map_id), static_cast<std::uint64_t>(run)}) {
    h = derive_seed(h, part);
  }
  return h;
}

// Stream tags under a run seed.
inline constexpr std::uint64_t kStreamDisplacement = 1;
inline constexpr std::uint64_t kStreamRealNoise = 2;
inline constexpr std::uint64_t kStreamVirtualNoise = 3;
inline constexpr std::uint64_t kStreamRayFailure = 4;
inline constexpr std::uint64_t kStreamRotation = 5;

struct RunOptions {
  std::size_t threads = 1;
  bool measure_time = false;
};

/// Applies the grid's variant and noise to `bc`, runs the estimator and records the outcome.
inline RunRecord run_single(const ExperimentGrid& grid, const BenchCase& bc, double alpha, double sigma_r,
                            double sigma_v, std::size_t run, bool measure_time) {
  RunRecord rec;
  rec.alpha = alpha;
  rec.sigma_r = sigma_r;
  rec.sigma_v = sigma_v;
  rec.variant = grid.variant();
  rec.map_id = bc.id;
  rec.run = run;
  const std::uint64_t seed = run_seed(grid.seed, alpha, sigma_r, sigma_v, rec.variant, bc.id, run);
  const auto start = std::chrono::steady_clock::now();
  try {
    RangeScan real = bc.real_scan;
    if (grid.subsample) real = subsample_rays(real, *grid.subsample);
    if (grid.fov) real = crop_fov(real, *grid.fov);
    if (grid.ray_failure) real = invalidate_rays(real, *grid.ray_failure, derive_seed(seed, kStreamRayFailure));
    auto bound = [&](double sigma) -> std::optional<double> {
      if (grid.noise_bound_sigmas && sigma > 0.0) return *grid.noise_bound_sigmas * sigma;
      return std::nullopt;
    };
    real = perturb_ranges(real, sigma_r, derive_seed(seed, kStreamRealNoise), bound(sigma_r));

    Pose2 estimate = sample_displacement(bc.truth, {alpha}, bc.map, derive_seed(seed, kStreamDisplacement));
    if (grid.rotation) {
      estimate.heading = wrap_angle(estimate.heading + sample_rotation_error(*grid.rotation,
                                                                             derive_seed(seed, kStreamRotation)));
    }
    rec.initial_error = distance(estimate.location, bc.truth.location);

    const std::uint64_t vseed = derive_seed(seed, kStreamVirtualNoise);
    const auto vbound = bound(sigma_v);
    auto disturb = [&](std::size_t k, RangeScan& v) {
      if (sigma_v > 0.0) v = perturb_ranges(v, sigma_v, derive_seed(vseed, k), vbound);
    };
    const IcteResult res = correct_location(bc.map, real, estimate, grid.cfg, std::nullopt, disturb);
    rec.final_error = distance(res.corrected_pose.location, bc.truth.location);
    rec.k_stop = res.k_stop;
    rec.termination = res.diverged ? "diverged" : to_string(res.termination);
  } catch (const NoAdmissibleEstimate&) {
    rec.termination = "failed:inadmissible-estimate";
  } catch (const EstimationError&) {
    rec.termination = "failed:empty-map-scan";
    rec.final_error = std::numeric_limits<double>::quiet_NaN();
  } catch (const std::invalid_argument&) {
    rec.termination = "failed:invalid-input";
  }
  if (measure_time) {
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return rec;
}

/// Runs every (alpha, sigma_r, sigma_v) x case x run combination. Output order is
/// canonical: cell-major (alpha, then sigma_r, then sigma_v), then case, then run.
inline std::vector<RunRecord> run_grid(const ExperimentGrid& grid, const std::vector<BenchCase>& cases,
                                       const RunOptions& opts = {}) {
  grid.validate();
  if (cases.empty()) throw std::invalid_argument("run_grid: no inputs");
  struct Task {
    double alpha, sr, sv;
    std::size_t case_index, run;
  };
  std::vector<Task> tasks;
  for (double a : grid.alphas)
    for (double sr : grid.sigmas_real)
      for (double sv : grid.sigmas_virtual)
        for (std::size_t c = 0; c < cases.size(); ++c)
          for (std::size_t r = 0; r < grid.runs_per_cell; ++r) tasks.push_back({a, sr, sv, c, r});

  std::vector<RunRecord> out(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const Task& t = tasks[i];
      out[i] = run_single(grid, cases[t.case_index], t.alpha, t.sr, t.sv, t.run, opts.measure_time);
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, opts.threads);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  return out;
}

namespace detail {

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Sample standard deviation; 0 for a single value.
inline double stddev(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (v.size() == 1) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace detail

/// Per-cell aggregation in order of first appearance. Failed runs are counted but
/// excluded from every mean.
inline SummaryStats summarize(const std::vector<RunRecord>& records) {
  using Key = std::tuple<double, double, double, std::string>;
  std::vector<Key> order;
  std::map<Key, std::vector<const RunRecord*>> cells;
  for (const auto& r : records) {
    Key key{r.alpha, r.sigma_r, r.sigma_v, r.variant};
    auto [it, inserted] = cells.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }
  SummaryStats stats;
  for (const auto& key : order) {
    const auto& runs = cells[key];
    CellStats cs;
    std::tie(cs.alpha, cs.sigma_r, cs.sigma_v, cs.variant) = key;
    cs.runs = runs.size();
    std::vector<double> fin, init, ks, wt;
    for (const RunRecord* r : runs) {
      if (r->failed()) {
        ++cs.failed;
        continue;
      }
      fin.push_back(r->final_error);
      init.push_back(r->initial_error);
      ks.push_back(static_cast<double>(r->k_stop));
      wt.push_back(r->wall_time);
    }
    cs.mean_final_error = detail::mean(fin);
    cs.median_final_error = detail::median(fin);
    cs.std_final_error = detail::stddev(fin);
    cs.mean_initial_error = detail::mean(init);
    cs.mean_k_stop = detail::mean(ks);
    cs.mean_wall_time = detail::mean(wt);
    if (!fin.empty()) {
      const double bound = cs.mean_final_error + 3.0 * cs.std_final_error;
      for (std::size_t i = 0; i < fin.size(); ++i) {
        if (init[i] > bound && fin[i] > init[i]) ++cs.objective_violations;
      }
    }
    stats.push_back(std::move(cs));
  }
  return stats;
}

// ---- output ----

inline std::string format_float(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline constexpr const char* kRecordsHeader =
    "alpha,sigma_r,sigma_v,variant,map_id,run,initial_error_m,final_error_m,k_stop,termination,wall_time_s";
inline constexpr const char* kStatsHeader =
    "alpha,sigma_r,sigma_v,variant,runs,failed,mean_final_error_m,median_final_error_m,std_final_error_m,"
    "mean_initial_error_m,mean_k_stop,mean_wall_time_s,objective_violations";

inline void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << kRecordsHeader << '\n';
  for (const auto& r : records) {
    out << format_float(r.alpha) << ',' << format_float(r.sigma_r) << ',' << format_float(r.sigma_v) << ','
        << r.variant << ',' << r.map_id << ',' << r.run << ',' << format_float(r.initial_error) << ','
        << format_float(r.final_error) << ',' << r.k_stop << ',' << r.termination << ','
        << format_float(r.wall_time) << '\n';
  }
}

inline void write_stats_csv(std::ostream& out, const SummaryStats& stats) {
  out << kStatsHeader << '\n';
  for (const auto& s : stats) {
    out << format_float(s.alpha) << ',' << format_float(s.sigma_r) << ',' << format_float(s.sigma_v) << ','
        << s.variant << ',' << s.runs << ',' << s.failed << ',' << format_float(s.mean_final_error) << ','
        << format_float(s.median_final_error) << ',' << format_float(s.std_final_error) << ','
        << format_float(s.mean_initial_error) << ',' << format_float(s.mean_k_stop) << ','
        << format_float(s.mean_wall_time) << ',' << s.objective_violations << '\n';
  }
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline double parse_csv_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  if (!parse_double(s, v)) throw ParseError("bad number '" + s + "'");
  return v;
}

inline std::size_t parse_csv_count(const std::string& s) {
  std::size_t pos = 0;
  const unsigned long long v = std::stoull(s, &pos);
  if (pos != s.size()) throw ParseError("bad count '" + s + "'");
  return static_cast<std::size_t>(v);
}

// Rounds to the precision written by format_float.
inline nlohmann::json json_number(double v) {
  if (std::isnan(v)) return nullptr;
  return std::strtod(format_float(v).c_str(), nullptr);
}

}  // namespace detail

inline std::vector<RunRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kRecordsHeader) throw ParseError("records CSV: unexpected header");
  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 11) throw ParseError("records CSV: expected 11 fields, got " + std::to_string(f.size()));
    RunRecord r;
    r.alpha = detail::parse_csv_double(f[0]);
    r.sigma_r = detail::parse_csv_double(f[1]);
    r.sigma_v = detail::parse_csv_double(f[2]);
    r.variant = f[3];
    r.map_id = f[4];
    r.run = detail::parse_csv_count(f[5]);
    r.initial_error = detail::parse_csv_double(f[6]);
    r.final_error = detail::parse_csv_double(f[7]);
    r.k_stop = detail::parse_csv_count(f[8]);
    r.termination = f[9];
    r.wall_time = detail::parse_csv_double(f[10]);
    out.push_back(std::move(r));
  }
  return out;
}

inline nlohmann::json to_json(const std::vector<RunRecord>& records, const SummaryStats& stats) {
  using detail::json_number;
  nlohmann::json jr = nlohmann::json::array();
  for (const auto& r : records) {
    jr.push_back({{"alpha", json_number(r.alpha)},
                  {"sigma_r", json_number(r.sigma_r)},
                  {"sigma_v", json_number(r.sigma_v)},
                  {"variant", r.variant},
                  {"map_id", r.map_id},
                  {"run", r.run},
                  {"initial_error_m", json_number(r.initial_error)},
                  {"final_error_m", json_number(r.final_error)},
                  {"k_stop", r.k_stop},
                  {"termination", r.termination},
                  {"wall_time_s", json_number(r.wall_time)}});
  }
  nlohmann::json js = nlohmann::json::array();
  for (const auto& s : stats) {
    js.push_back({{"alpha", json_number(s.alpha)},
                  {"sigma_r", json_number(s.sigma_r)},
                  {"sigma_v", json_number(s.sigma_v)},
                  {"variant", s.variant},
                  {"runs", s.runs},
                  {"failed", s.failed},
                  {"mean_final_error_m", json_number(s.mean_final_error)},
                  {"median_final_error_m", json_number(s.median_final_error)},
                  {"std_final_error_m", json_number(s.std_final_error)},
                  {"mean_initial_error_m", json_number(s.mean_initial_error)},
                  {"mean_k_stop", json_number(s.mean_k_stop)},
                  {"mean_wall_time_s", json_number(s.mean_wall_time)},
                  {"objective_violations", s.objective_violations}});
  }
  return {{"records", jr}, {"stats", js}};
}

enum class OutputFormat { Csv, Json };

/// Writes records.csv and stats.csv (or results.json) into `dir`, which must exist.
inline std::vector<std::string> emit(const std::vector<RunRecord>& records, const SummaryStats& stats,
                                     OutputFormat format, const std::string& dir) {
  auto open = [](const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    return f;
  };
  auto close = [](std::ofstream& f, const std::string& path) {
    f.flush();
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
  };
  std::vector<std::string> written;
  if (format == OutputFormat::Csv) {
    const std::string rp = dir + "/records.csv";
    const std::string sp = dir + "/stats.csv";
    auto rf = open(rp);
    write_records_csv(rf, records);
    close(rf, rp);
    auto sf = open(sp);
    write_stats_csv(sf, stats);
    close(sf, sp);
    written = {rp, sp};
  } else {
    const std::string jp = dir + "/results.json";
    auto jf = open(jp);
    jf << to_json(records, stats).dump(2) << '\n';
    close(jf, jp);
    written = {jp};
  }
  return written;
}

}  // namespace icte
