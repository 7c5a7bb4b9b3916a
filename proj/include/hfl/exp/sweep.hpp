#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "hfl/sim/config.hpp"
#include "hfl/sim/executor.hpp"

namespace hfl {

/// Transient discarded before computing summary statistics (s).
inline constexpr double kSteadyStateStart = 1.0;

struct SweepSpec {
  std::vector<double> kp;  // s^-2, positive and strictly increasing
  std::vector<ExecutionMode> modes{ExecutionMode::kDirect, ExecutionMode::kInterpolated};
  std::vector<std::uint64_t> seeds{1};
  ExperimentConfig base;
  double steady_start = kSteadyStateStart;
  int threads = 0;  // 0: hardware concurrency

  void validate() const;
};

/// { "base": {...config...} | "base_config": "path", "kp": [...],
///   "modes": ["direct", "interpolated"], "seeds": [1, 2] | "repetitions": 3 }
SweepSpec parse_sweep(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
SweepSpec load_sweep(const std::filesystem::path& path);

struct SummaryRow {
  double kp = 0.0;
  ExecutionMode mode = ExecutionMode::kInterpolated;
  int seed_count = 0;
  double pos_err_med = 0.0, pos_err_p5 = 0.0, pos_err_p95 = 0.0;
  double vel_err_med = 0.0, vel_err_p5 = 0.0, vel_err_p95 = 0.0, vel_err_p9 = 0.0;
  double blowup_frac = 0.0;
};

struct SweepCell {
  double kp = 0.0;
  ExecutionMode mode = ExecutionMode::kInterpolated;
  std::uint64_t seed = 0;
  SimTrace trace;
  std::filesystem::path trace_file;  // empty when no output directory was given
};

struct SweepResult {
  std::vector<SummaryRow> rows;
  std::vector<SweepCell> cells;  // (kp, mode, seed) order
};

/// Config for one sweep cell.
ExperimentConfig cell_config(const SweepSpec& spec, double kp, ExecutionMode mode,
                             std::uint64_t seed);

/// Runs every (kp, mode, seed) cell; cells may run in parallel but results and
/// file names depend only on the spec. Trace CSVs go to `out_dir` when set.
SweepResult run_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir = {});

/// Pools the steady-state samples of all traces of one (kp, mode) cell.
SummaryRow summarize(double kp, ExecutionMode mode, const std::vector<const SimTrace*>& traces,
                     double steady_start = kSteadyStateStart);

std::string trace_file_name(double kp, ExecutionMode mode, std::uint64_t seed);

// kp, mode, seed_count, pos_err_med, pos_err_p5, pos_err_p95, vel_err_med,
// vel_err_p5, vel_err_p95, vel_err_p9, blowup_frac
void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out);
void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path);

struct ModeComparison {
  double spread_a = 0.0;  // p95 − p5 of the velocity error, steady state
  double spread_b = 0.0;
  double ratio = 0.0;     // spread_b / spread_a
  SimTrace a;
  SimTrace b;
};

/// Runs both configs and compares their velocity-error spreads.
ModeComparison compare_runs(const ExperimentConfig& a, const ExperimentConfig& b,
                            double steady_start = kSteadyStateStart);

/// DIRECT (a) against INTERPOLATED (b) at the given Kp and identical seeds.
ModeComparison compare_modes(const ExperimentConfig& cfg, double kp,
                             double steady_start = kSteadyStateStart);

/// t, then per run: pos_err, vel_err, foot_speed; rows aligned on t.
void write_comparison_csv(const ModeComparison& cmp, std::ostream& out);

/// Plain-text report for the CLI.
void write_comparison_report(const ModeComparison& cmp, std::ostream& out);

}  // namespace hfl
