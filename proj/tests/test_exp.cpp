#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "hfl/errors.hpp"
#include "hfl/exp/codec_check.hpp"
#include "hfl/exp/spectrum.hpp"
#include "hfl/exp/stats.hpp"
#include "hfl/exp/sweep.hpp"
#include "test_util.hpp"

namespace hfl {
namespace {

namespace fs = std::filesystem;

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.model = test::bolt();
  cfg.rates.fast_hz = 8000;
  cfg.duration = 0.5;
  return cfg;
}

SweepSpec small_spec() {
  SweepSpec spec;
  spec.base = small_config();
  spec.kp = {200.0, 1000.0};
  spec.seeds = {1, 2};
  spec.steady_start = 0.2;
  return spec;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_row(const SummaryRow& a, const SummaryRow& b) {
  return a.kp == b.kp && a.mode == b.mode && a.seed_count == b.seed_count &&
         a.pos_err_med == b.pos_err_med && a.pos_err_p5 == b.pos_err_p5 &&
         a.pos_err_p95 == b.pos_err_p95 && a.vel_err_med == b.vel_err_med &&
         a.vel_err_p5 == b.vel_err_p5 && a.vel_err_p95 == b.vel_err_p95 &&
         a.vel_err_p9 == b.vel_err_p9 && a.blowup_frac == b.blowup_frac;
}

TEST(Percentile, Examples) {
  const std::vector<double> x{5, 1, 3, 2, 4};
  EXPECT_EQ(percentile(x, 50), 3.0);
  EXPECT_EQ(percentile(x, 0), 1.0);
  EXPECT_EQ(percentile(x, 100), 5.0);
  EXPECT_EQ(percentile(std::vector<double>{1, 2, 3, 4}, 50), 2.5);
  EXPECT_EQ(percentile(std::vector<double>{10}, 95), 10.0);
  EXPECT_EQ(spread(x), percentile(x, 95) - percentile(x, 5));
}

TEST(Percentile, MonotoneInP) {
  std::mt19937_64 rng(81);
  const auto v = test::uniform(rng, 257, -3, 3);
  const std::vector<double> x(v.data(), v.data() + v.size());
  double prev = -INFINITY;
  for (int p = 0; p <= 100; ++p) {
    const double q = percentile(x, p);
    EXPECT_GE(q, prev);
    prev = q;
  }
}

TEST(Percentile, RejectsBadInput) {
  EXPECT_THROW(percentile(std::vector<double>{}, 50), std::invalid_argument);
  EXPECT_THROW(percentile(std::vector<double>{1.0, std::nan("")}, 50), std::invalid_argument);
  EXPECT_THROW(percentile(std::vector<double>{1.0}, 101), std::invalid_argument);
}

TEST(Sweep, SingleCell) {
  SweepSpec spec = small_spec();
  spec.kp = {500.0};
  spec.modes = {ExecutionMode::kInterpolated};
  spec.seeds = {3};
  const auto dir = scratch("hfl_sweep_single");
  const auto res = run_sweep(spec, dir);
  ASSERT_EQ(res.rows.size(), 1u);
  ASSERT_EQ(res.cells.size(), 1u);
  EXPECT_EQ(res.rows[0].seed_count, 1);
  EXPECT_TRUE(fs::exists(res.cells[0].trace_file));
  EXPECT_EQ(res.cells[0].trace_file.filename(), trace_file_name(500.0, ExecutionMode::kInterpolated, 3));
  fs::remove_all(dir);
}

TEST(Sweep, DuplicateSeedsGiveIdenticalMetrics) {
  SweepSpec spec = small_spec();
  spec.kp = {500.0};
  spec.seeds = {4, 4};
  const auto res = run_sweep(spec);
  ASSERT_EQ(res.cells.size(), 4u);
  for (std::size_t i = 0; i < res.cells.size(); i += 2) {
    const auto& a = res.cells[i].trace.rows;
    const auto& b = res.cells[i + 1].trace.rows;
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t r = 0; r < a.size(); ++r) EXPECT_EQ(a[r].vel_err, b[r].vel_err);
  }
}

TEST(Sweep, SummaryRecomputesFromTraceFiles) {
  const SweepSpec spec = small_spec();
  const auto dir = scratch("hfl_sweep_recompute");
  const auto res = run_sweep(spec, dir);
  ASSERT_EQ(res.rows.size(), spec.kp.size() * spec.modes.size());
  std::size_t cell = 0;
  for (const auto& row : res.rows) {
    std::vector<SimTrace> back;
    for (int s = 0; s < row.seed_count; ++s) back.push_back(read_trace_csv(res.cells[cell++].trace_file));
    std::vector<const SimTrace*> ptrs;
    for (const auto& t : back) ptrs.push_back(&t);
    EXPECT_TRUE(same_row(summarize(row.kp, row.mode, ptrs, spec.steady_start), row))
        << row.kp << " " << to_string(row.mode);
  }
  fs::remove_all(dir);
}

TEST(Sweep, SummaryCsvIsByteIdenticalAcrossRuns) {
  SweepSpec spec = small_spec();
  std::ostringstream a, b;
  spec.threads = 1;
  write_summary_csv(run_sweep(spec).rows, a);
  spec.threads = 3;
  write_summary_csv(run_sweep(spec).rows, b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')),
            "kp,mode,seed_count,pos_err_med,pos_err_p5,pos_err_p95,vel_err_med,vel_err_p5,"
            "vel_err_p95,vel_err_p9,blowup_frac");
}

TEST(Sweep, ParseRejectsBadSpecs) {
  EXPECT_THROW(parse_sweep({{"kp", {1, 2}}, {"bogus", 1}}), ConfigError);
  EXPECT_THROW(parse_sweep({{"kp", {2, 1}}}), ConfigError);
  EXPECT_THROW(parse_sweep({{"kp", {-1}}}), ConfigError);
  const auto spec = parse_sweep({{"kp", {100, 200}}, {"base", {{"seed", 10}}}, {"repetitions", 3}});
  EXPECT_EQ(spec.seeds, (std::vector<std::uint64_t>{10, 11, 12}));
  const auto cfg = cell_config(spec, 200.0, ExecutionMode::kDirect, 11);
  EXPECT_EQ(cfg.controller.kp, 200.0);
  EXPECT_EQ(cfg.seed, 11u);
  EXPECT_EQ(cfg.mode, ExecutionMode::kDirect);
}

TEST(Compare, SelfComparisonIsOne) {
  auto cfg = small_config();
  cfg.duration = 0.6;
  const auto cmp = compare_runs(cfg, cfg, 0.2);
  EXPECT_GT(cmp.spread_a, 0.0);
  EXPECT_EQ(cmp.ratio, 1.0);
}

TEST(Compare, AffineModesAgree) {
  auto cfg = small_config();
  cfg.controller.kind = ControllerKind::kJointPd;
  cfg.realism.vel_noise_std = 0.0;
  cfg.realism.vel_lowpass_hz = 0.0;
  cfg.wire_float32 = false;
  cfg.initial_q = std::vector<double>{0.1, 0.3, -0.5, -0.2, 0.4, -0.6};
  auto direct = cfg;
  direct.mode = ExecutionMode::kDirect;
  direct.rates.controller_hz = cfg.rates.fast_hz;
  const auto cmp = compare_runs(direct, cfg, 0.1);
  EXPECT_NEAR(cmp.ratio, 1.0, 1e-9);
  std::ostringstream csv;
  write_comparison_csv(cmp, csv);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')),
            "t,pos_err_a,vel_err_a,foot_speed_a,pos_err_b,vel_err_b,foot_speed_b");
}

TEST(Spectrum, SinusoidPeak) {
  const double fs_hz = 4000.0, f0 = 250.0, amp = 0.7;
  std::vector<double> x(8192);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = 3.0 + amp * std::sin(2 * std::numbers::pi * f0 * static_cast<double>(i) / fs_hz);
  }
  const auto s = welch_amplitude(x, fs_hz);
  ASSERT_EQ(s.frequency.size(), 257u);
  EXPECT_EQ(s.frequency.back(), fs_hz / 2);
  const auto peak = std::max_element(s.amplitude.begin(), s.amplitude.end()) - s.amplitude.begin();
  EXPECT_EQ(s.frequency[static_cast<std::size_t>(peak)], f0);  // bin-centred
  EXPECT_NEAR(s.amplitude[static_cast<std::size_t>(peak)], amp, 1e-9);
  EXPECT_LT(s.amplitude[0], 1e-9);  // mean removed
  EXPECT_LT(band(s, 400, 2000).front(), 1e-6);
  EXPECT_EQ(band(s, 0, fs_hz).size(), s.amplitude.size());
}

TEST(Spectrum, RejectsShortSignals) {
  std::vector<double> x(100, 1.0);
  EXPECT_THROW(welch_amplitude(x, 1000.0), std::invalid_argument);
  EXPECT_THROW(welch_amplitude(x, 1000.0, 7), std::invalid_argument);
}

TEST(CodecCheck, Passes) {
  const auto r = codec_check(200, 5);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.roundtrips, 200);
  EXPECT_EQ(r.bit_flips, (9 + 9 * 6) * 8);
  std::ostringstream os;
  write_codec_report(r, os);
  EXPECT_NE(os.str().find("PASS"), std::string::npos);
}

}  // namespace
}  // namespace hfl
