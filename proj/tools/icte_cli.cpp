// icte: command-line front end for the location corrector and its experiment grid.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "icte/icte.hpp"

namespace {

constexpr int kExitInput = 1;
constexpr int kExitPartial = 2;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open '" + path + "'");
  return f;
}

std::vector<icte::DatasetRecord> load_dataset(const std::string& path) {
  auto f = open_input(path);
  const bool jsonl = path.size() > 6 && path.substr(path.size() - 6) == ".jsonl";
  auto parsed = jsonl ? icte::parse_jsonl(f) : icte::parse_log(f);
  if (parsed.skipped_lines > 0) {
    std::cerr << "warning: skipped " << parsed.skipped_lines << " malformed line(s) in " << path << "\n";
  }
  return std::move(parsed.records);
}

struct RunArgs {
  std::string map_path, scan_path;
  double x = 0.0, y = 0.0, theta = 0.0;
  std::size_t k_max = 60;
  double eps_u = 1e-5;
  bool trace = false;
};

int cmd_run(const RunArgs& a) {
  auto mf = open_input(a.map_path);
  auto sf = open_input(a.scan_path);
  const icte::PolylineMap map = icte::read_segments(mf);
  const icte::RangeScan scan = icte::read_scan(sf);
  const icte::IcteConfig cfg{a.k_max, a.eps_u};
  const auto res = icte::correct_location(map, scan, icte::Pose2{a.x, a.y, a.theta}, cfg);
  if (a.trace) {
    for (const auto& r : res.trace) {
      std::printf("k=%zu x=%.9g y=%.9g ux=%.9g uy=%.9g\n", r.k, r.pose_estimate.location.x,
                  r.pose_estimate.location.y, r.u.x, r.u.y);
    }
  }
  const auto& p = res.corrected_pose;
  std::printf("x %.9g\ny %.9g\ntheta %.9g\nk_stop %zu\ntermination %s%s\n", p.location.x, p.location.y, p.heading,
              res.k_stop, icte::to_string(res.termination), res.diverged ? " (diverged)" : "");
  return 0;
}

struct BenchArgs {
  std::string dataset;
  bool synthetic = false;
  std::vector<double> alphas{0.05, 0.10, 0.15, 0.20};
  std::vector<double> sigmas_real{0.0, 0.005, 0.01, 0.02, 0.05};
  std::vector<double> sigmas_virtual;
  std::size_t runs = 10;
  std::size_t records = 20;
  std::uint64_t seed = 0;
  std::optional<double> invalid_random, invalid_block;
  std::optional<std::size_t> rays;
  std::optional<double> fov;
  std::optional<double> rot_rho0, rot_rho1;
  std::string closure = "mirror-y";
  std::size_t k_max = 60;
  double eps_u = 1e-5;
  std::string out;
  std::string format = "csv";
  std::size_t threads = 1;
  bool timing = false;
  double max_failure_fraction = 0.05;
};

int cmd_bench(const BenchArgs& a) {
  if (a.synthetic == !a.dataset.empty()) throw InputError("give exactly one of --dataset or --synthetic");
  if (a.invalid_random && a.invalid_block) throw InputError("--invalid-random and --invalid-block are exclusive");
  if (a.rot_rho0.has_value() != a.rot_rho1.has_value()) throw InputError("--rot-rho0 and --rot-rho1 go together");

  icte::ExperimentGrid grid;
  grid.alphas = a.alphas;
  grid.sigmas_real = a.sigmas_real;
  grid.sigmas_virtual = a.sigmas_virtual.empty() ? a.sigmas_real : a.sigmas_virtual;
  grid.runs_per_cell = a.runs;
  grid.seed = a.seed;
  grid.cfg = {a.k_max, a.eps_u};
  if (a.invalid_random) grid.ray_failure = icte::RayFailureSpec{icte::RayFailureMode::RandomFraction, *a.invalid_random};
  if (a.invalid_block) grid.ray_failure = icte::RayFailureSpec{icte::RayFailureMode::ConsecutiveBlock, *a.invalid_block};
  grid.subsample = a.rays;
  grid.fov = a.fov;
  if (a.rot_rho0) grid.rotation = icte::RotationMisalignSpec{*a.rot_rho0, *a.rot_rho1};
  try {
    grid.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }

  std::vector<icte::BenchCase> cases;
  if (a.synthetic) {
    cases = icte::synthetic_cases();
  } else {
    cases = icte::dataset_cases(load_dataset(a.dataset), a.records, icte::parse_closure(a.closure));
  }

  const auto records = icte::run_grid(grid, cases, {a.threads, a.timing});
  const auto stats = icte::summarize(records);
  std::filesystem::create_directories(a.out);
  const auto written = icte::emit(records, stats, a.format == "json" ? icte::OutputFormat::Json : icte::OutputFormat::Csv, a.out);

  std::size_t failed = 0;
  for (const auto& r : records) failed += r.failed() ? 1 : 0;
  for (const auto& path : written) std::cout << "wrote " << path << "\n";
  std::cout << records.size() << " runs, " << failed << " failed, " << stats.size() << " cells\n";
  const double frac = records.empty() ? 0.0 : static_cast<double>(failed) / static_cast<double>(records.size());
  if (frac > a.max_failure_fraction) {
    std::cerr << "failure fraction " << frac << " exceeds " << a.max_failure_fraction << "\n";
    return kExitPartial;
  }
  return 0;
}

struct InspectArgs {
  std::string dataset;
  std::size_t record = 0;
  std::string closure = "arc";
  std::string emit_map;
  std::string emit_scan;
};

int cmd_inspect(const InspectArgs& a) {
  const auto records = load_dataset(a.dataset);
  if (a.record >= records.size()) {
    throw InputError("record " + std::to_string(a.record) + " out of range (" + std::to_string(records.size()) +
                     " records)");
  }
  const auto& rec = records[a.record];
  const auto map = icte::build_map(rec, icte::parse_closure(a.closure));
  const auto& p = rec.capture_pose;
  std::printf("record %zu: %zu readings, pose (%.6f, %.6f, %.6f), %zu segments\n", a.record, rec.ranges.size(),
              p.location.x, p.location.y, p.heading, map.size());
  if (!a.emit_map.empty()) {
    std::ofstream f(a.emit_map);
    if (!f) throw InputError("cannot write '" + a.emit_map + "'");
    icte::write_segments(f, map);
  }
  if (!a.emit_scan.empty()) {
    std::ofstream f(a.emit_scan);
    if (!f) throw InputError("cannot write '" + a.emit_scan + "'");
    icte::write_scan(f, icte::augment_scan(rec, map));
  }
  return 0;
}

struct SynthArgs {
  std::string out;
  icte::SyntheticLogOptions opts;
  std::string emit_plan;
};

int cmd_synth(const SynthArgs& a) {
  std::ofstream f(a.out);
  if (!f) throw InputError("cannot write '" + a.out + "'");
  icte::write_carmen_log(f, icte::generate_office_log(a.opts));
  if (!a.emit_plan.empty()) {
    std::ofstream pf(a.emit_plan);
    if (!pf) throw InputError("cannot write '" + a.emit_plan + "'");
    icte::write_segments(pf, icte::office_floor_plan());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Correspondenceless location correction for 2D range scans"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Correct a location estimate against a map");
  run_cmd->add_option("--map", run.map_path, "Segment list, one 'x1 y1 x2 y2' per line")->required();
  run_cmd->add_option("--scan", run.scan_path, "Scan file: 'N fov max_range' then N lines 'range valid'")->required();
  run_cmd->add_option("--x", run.x)->required();
  run_cmd->add_option("--y", run.y)->required();
  run_cmd->add_option("--theta", run.theta)->required();
  run_cmd->add_option("--kmax", run.k_max)->check(CLI::PositiveNumber);
  run_cmd->add_option("--eps-u", run.eps_u)->check(CLI::PositiveNumber);
  run_cmd->add_flag("--trace", run.trace, "Print every iteration");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run an experiment grid");
  bench_cmd->add_option("--dataset", bench.dataset, "Carmen log (or .jsonl)");
  bench_cmd->add_flag("--synthetic", bench.synthetic, "Use the built-in fixture maps");
  bench_cmd->add_option("--alphas", bench.alphas)->delimiter(',');
  bench_cmd->add_option("--sigmas-real", bench.sigmas_real)->delimiter(',');
  bench_cmd->add_option("--sigmas-virtual", bench.sigmas_virtual, "Defaults to --sigmas-real")->delimiter(',');
  bench_cmd->add_option("--runs", bench.runs)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--records", bench.records)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed);
  bench_cmd->add_option("--invalid-random", bench.invalid_random)->check(CLI::Range(0.0, 1.0));
  bench_cmd->add_option("--invalid-block", bench.invalid_block)->check(CLI::Range(0.0, 1.0));
  bench_cmd->add_option("--rays", bench.rays)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--fov", bench.fov);
  bench_cmd->add_option("--rot-rho0", bench.rot_rho0);
  bench_cmd->add_option("--rot-rho1", bench.rot_rho1);
  bench_cmd->add_option("--closure", bench.closure)->check(CLI::IsMember({"mirror-x", "mirror-y", "arc"}));
  bench_cmd->add_option("--kmax", bench.k_max)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--eps-u", bench.eps_u)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out", bench.out, "Output directory")->required();
  bench_cmd->add_option("--format", bench.format)->check(CLI::IsMember({"csv", "json"}));
  bench_cmd->add_option("--threads", bench.threads)->check(CLI::PositiveNumber);
  bench_cmd->add_flag("--timing", bench.timing, "Record wall time per run (output is then not reproducible)");
  bench_cmd->add_option("--max-failure-fraction", bench.max_failure_fraction)->check(CLI::Range(0.0, 1.0));

  InspectArgs inspect;
  auto* inspect_cmd = app.add_subcommand("inspect", "Rebuild one record's map");
  inspect_cmd->add_option("--dataset", inspect.dataset)->required();
  inspect_cmd->add_option("--record", inspect.record)->required();
  inspect_cmd->add_option("--closure", inspect.closure)->check(CLI::IsMember({"mirror-x", "mirror-y", "arc"}));
  inspect_cmd->add_option("--emit-map", inspect.emit_map, "Write the segment list here");
  inspect_cmd->add_option("--emit-scan", inspect.emit_scan, "Write the augmented scan here");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth-log", "Write a synthetic office log in Carmen format");
  synth_cmd->add_option("--out", synth.out)->required();
  synth_cmd->add_option("--records", synth.opts.records)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth.opts.seed);
  synth_cmd->add_option("--emit-plan", synth.emit_plan, "Also write the floor plan segment list");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(run);
    if (bench_cmd->parsed()) return cmd_bench(bench);
    if (inspect_cmd->parsed()) return cmd_inspect(inspect);
    if (synth_cmd->parsed()) return cmd_synth(synth);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const icte::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return 0;
}
