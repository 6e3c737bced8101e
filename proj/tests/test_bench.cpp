#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "icte/bench.hpp"
#include "icte/synthetic_log.hpp"

using namespace icte;

namespace {

ExperimentGrid small_grid() {
  ExperimentGrid g;
  g.alphas = {0.05, 0.2};
  g.sigmas_real = {0.0, 0.02};
  g.sigmas_virtual = {0.0};
  g.runs_per_cell = 3;
  g.seed = 99;
  return g;
}

RunRecord make_record(double final_error, std::string termination = "control-below-threshold") {
  RunRecord r;
  r.alpha = 0.1;
  r.variant = "nominal";
  r.map_id = "m";
  r.initial_error = 0.1;
  r.final_error = final_error;
  r.termination = std::move(termination);
  return r;
}

}  // namespace

TEST(RunGrid, NoiselessZeroOffsetConverges) {
  ExperimentGrid g;
  g.alphas = {0.0};
  g.sigmas_real = {0.0};
  g.sigmas_virtual = {0.0};
  g.runs_per_cell = 1;
  const auto records = run_grid(g, synthetic_cases());
  ASSERT_EQ(records.size(), 4u);
  for (const auto& r : records) {
    EXPECT_FALSE(r.failed());
    EXPECT_LT(r.final_error, 1e-3);
  }
}

TEST(RunGrid, CanonicalOrder) {
  const auto g = small_grid();
  const auto cases = synthetic_cases();
  const auto records = run_grid(g, cases);
  ASSERT_EQ(records.size(), 2u * 2u * 1u * cases.size() * 3u);
  std::size_t i = 0;
  for (double a : g.alphas)
    for (double sr : g.sigmas_real)
      for (const auto& c : cases)
        for (std::size_t run = 0; run < 3; ++run, ++i) {
          EXPECT_EQ(records[i].alpha, a);
          EXPECT_EQ(records[i].sigma_r, sr);
          EXPECT_EQ(records[i].map_id, c.id);
          EXPECT_EQ(records[i].run, run);
        }
}

TEST(RunGrid, DeterministicAcrossRepeatsAndThreads) {
  const auto g = small_grid();
  const auto cases = synthetic_cases();
  const auto a = run_grid(g, cases, {1, false});
  const auto b = run_grid(g, cases, {1, false});
  const auto c = run_grid(g, cases, {4, false});
  std::ostringstream sa, sb, sc;
  write_records_csv(sa, a);
  write_records_csv(sb, b);
  write_records_csv(sc, c);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(sa.str(), sc.str());
}

TEST(RunGrid, SeedChangesOutcome) {
  auto g = small_grid();
  const auto a = run_grid(g, synthetic_cases());
  g.seed = 100;
  const auto b = run_grid(g, synthetic_cases());
  EXPECT_NE(a[0].initial_error, b[0].initial_error);
}

TEST(RunGrid, FailuresAreRecordedNotThrown) {
  // A map the estimate cannot see out of: truth boxed in, every offset is inadmissible.
  BenchCase bc{"boxed", fixtures::rectangle_map(0.002, 0.002, {0.999, 0.999}), Pose2{1, 1, 0}, {}};
  bc.real_scan = scan_map(bc.map, bc.truth, {360, kTwoPi, 80});
  auto g = small_grid();
  g.alphas = {0.5};
  const auto records = run_grid(g, {bc});
  for (const auto& r : records) {
    EXPECT_TRUE(r.failed());
    EXPECT_EQ(r.termination, "failed:inadmissible-estimate");
    EXPECT_TRUE(std::isnan(r.final_error));
  }
  const auto stats = summarize(records);
  EXPECT_EQ(stats[0].failed, stats[0].runs);
}

TEST(RunGrid, VariantLabels) {
  ExperimentGrid g;
  EXPECT_EQ(g.variant(), "nominal");
  g.subsample = 240;
  EXPECT_EQ(g.variant(), "rays240");
  g.subsample.reset();
  g.ray_failure = RayFailureSpec{RayFailureMode::ConsecutiveBlock, 0.5};
  EXPECT_EQ(g.variant(), "invalid-block0.5");
  g.ray_failure.reset();
  g.rotation = RotationMisalignSpec{};
  EXPECT_EQ(g.variant(), "rot0.003-0.01");
  g.rotation.reset();
  g.fov = 3 * kPi / 2;
  EXPECT_EQ(g.variant(), "fov4.7124");
}

TEST(RunGrid, VariantsRunOnDatasetCases) {
  const auto cases = dataset_cases(generate_office_log({.records = 40, .seed = 2}), 3, ClosureStrategy::Arc);
  auto g = small_grid();
  g.sigmas_real = {0.01};
  g.sigmas_virtual = {0.01};
  g.fov = 3 * kPi / 2;
  g.ray_failure = RayFailureSpec{RayFailureMode::RandomFraction, 0.1};
  g.rotation = RotationMisalignSpec{};
  g.subsample = 360;
  g.fov.reset();
  for (const auto& r : run_grid(g, cases)) EXPECT_FALSE(r.failed()) << r.termination;
}

TEST(RunGrid, InvalidGridRejected) {
  auto g = small_grid();
  g.alphas.clear();
  EXPECT_THROW(run_grid(g, synthetic_cases()), std::invalid_argument);
  g = small_grid();
  EXPECT_THROW(run_grid(g, {}), std::invalid_argument);
}

TEST(Summarize, Singleton) {
  const auto s = summarize({make_record(0.25)});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].mean_final_error, 0.25);
  EXPECT_EQ(s[0].median_final_error, 0.25);
  EXPECT_EQ(s[0].std_final_error, 0.0);
}

TEST(Summarize, HandComputedCell) {
  // 0.1, 0.2, 0.6: mean 0.3, median 0.2, sample variance (0.04 + 0.01 + 0.09) / 2 = 0.07.
  auto recs = std::vector<RunRecord>{make_record(0.1), make_record(0.2), make_record(0.6),
                                     make_record(NAN, "failed:inadmissible-estimate")};
  recs[1].k_stop = 10;
  recs[2].k_stop = 20;
  const auto s = summarize(recs);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].runs, 4u);
  EXPECT_EQ(s[0].failed, 1u);
  EXPECT_NEAR(s[0].mean_final_error, 0.3, 1e-15);
  EXPECT_NEAR(s[0].median_final_error, 0.2, 1e-15);
  EXPECT_NEAR(s[0].std_final_error, std::sqrt(0.07), 1e-15);
  EXPECT_NEAR(s[0].mean_k_stop, 10.0, 1e-15);
}

TEST(Summarize, OneRowPerCell) {
  const auto g = small_grid();
  const auto records = run_grid(g, synthetic_cases());
  const auto stats = summarize(records);
  EXPECT_EQ(stats.size(), g.alphas.size() * g.sigmas_real.size() * g.sigmas_virtual.size());
  for (const auto& s : stats) EXPECT_EQ(s.runs, synthetic_cases().size() * g.runs_per_cell);
  std::ostringstream out;
  write_stats_csv(out, stats);
  std::size_t lines = 0;
  for (char ch : out.str()) lines += ch == '\n';
  EXPECT_EQ(lines, stats.size() + 1);
}

TEST(Emit, EmptyRecordsGiveHeaderOnly) {
  std::ostringstream out;
  write_records_csv(out, {});
  EXPECT_EQ(out.str(), std::string(kRecordsHeader) + "\n");
}

TEST(Emit, CsvParseBackIsExactAtWrittenPrecision) {
  auto records = run_grid(small_grid(), synthetic_cases());
  records.push_back(make_record(NAN, "failed:empty-map-scan"));
  std::ostringstream first;
  write_records_csv(first, records);
  std::istringstream in(first.str());
  const auto back = read_records_csv(in);
  ASSERT_EQ(back.size(), records.size());
  std::ostringstream second;
  write_records_csv(second, back);
  EXPECT_EQ(first.str(), second.str());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].map_id, records[i].map_id);
    EXPECT_EQ(back[i].k_stop, records[i].k_stop);
    EXPECT_EQ(back[i].termination, records[i].termination);
  }
}

TEST(Emit, FilesAndJson) {
  const auto records = run_grid(small_grid(), synthetic_cases());
  const auto stats = summarize(records);
  const auto dir = std::filesystem::temp_directory_path() / "icte_emit_test";
  std::filesystem::create_directories(dir);
  const auto csv = emit(records, stats, OutputFormat::Csv, dir.string());
  ASSERT_EQ(csv.size(), 2u);
  const auto json_files = emit(records, stats, OutputFormat::Json, dir.string());
  std::ifstream jf(json_files[0]);
  const auto j = nlohmann::json::parse(jf);
  EXPECT_EQ(j["records"].size(), records.size());
  EXPECT_EQ(j["stats"].size(), stats.size());
  EXPECT_EQ(j["records"][0]["map_id"], records[0].map_id);
  EXPECT_THROW(emit(records, stats, OutputFormat::Csv, (dir / "missing" / "deeper").string()), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST(RunSeed, StableAndSensitive) {
  const auto s = run_seed(1, 0.05, 0.0, 0.01, "nominal", "rectangle", 3);
  EXPECT_EQ(s, run_seed(1, 0.05, 0.0, 0.01, "nominal", "rectangle", 3));
  EXPECT_NE(s, run_seed(1, 0.05, 0.0, 0.01, "nominal", "rectangle", 4));
  EXPECT_NE(s, run_seed(1, 0.05, 0.01, 0.0, "nominal", "rectangle", 3));
  EXPECT_NE(s, run_seed(1, 0.05, 0.0, 0.01, "nominal", "l-room", 3));
}
