#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hfl/sim/config.hpp"

namespace hfl {

struct TraceRow {
  double t = 0.0;
  Eigen::VectorXd q, v, tau;  // tau: torque applied to the plant
  Eigen::Vector3d p, pdot, p_ref, v_ref;
  double pos_err = 0.0;  // ‖p* − p‖, m
  double vel_err = 0.0;  // ‖ṗ* − ṗ‖, m/s
};

struct SimTrace {
  int dof = 0;
  std::vector<TraceRow> rows;
  bool blowup = false;
  double blowup_time = 0.0;
  std::string blowup_reason;

  std::uint64_t controller_evaluations = 0;
  std::uint64_t fast_recomputations = 0;
  std::uint64_t laws_pushed = 0;
  // Applied torque on every fast tick; filled when record_fast_torques is set.
  std::vector<Eigen::VectorXd> fast_torques;
  // Largest |τ_applied − τ(x(t); t)| over fast ticks (fidelity probe).
  double max_interp_residual = 0.0;
  // Largest anchor mismatch |τ_fast − τ_controller| on controller ticks.
  double max_anchor_error = 0.0;
};

struct RunOptions {
  bool record_fast_torques = false;
};

/// Deterministic multirate run. Blow-ups end the run and are recorded in the
/// trace; configuration problems throw ConfigError.
SimTrace run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// INTERPOLATED at fast_hz with decimation D against fast feedback at
/// fast_hz / D with D = 1, both on the same plant and sensing timeline.
/// True when the applied torques agree exactly at every shared tick.
bool decimation_equivalence_check(const ExperimentConfig& cfg, int decimation);

// Trace CSV: header row then one row per record, columns
//   t, q0..q{n-1}, v0..v{n-1}, tau0..tau{n-1}, px, py, pz, vx, vy, vz,
//   pref_x, pref_y, pref_z, vref_x, vref_y, vref_z, pos_err, vel_err, blowup
// Numbers use the shortest round-trip decimal form.
std::vector<std::string> trace_columns(int dof);
void write_trace_csv(const SimTrace& trace, std::ostream& out);
void write_trace_csv(const SimTrace& trace, const std::filesystem::path& path);
SimTrace read_trace_csv(const std::filesystem::path& path);

std::string format_double(double v);

}  // namespace hfl
