#include "hfl/sim/executor.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "hfl/control/linearize.hpp"
#include "hfl/errors.hpp"
#include "hfl/net/driver_network.hpp"
#include "hfl/rbd/dynamics.hpp"
#include "hfl/rbd/kinematics.hpp"

namespace hfl {

namespace {

constexpr double kBlowupVelocity = 1e3;  // rad/s

// First-order low-pass on the measured joint velocities, stepped at plant rate.
class VelocitySensor {
 public:
  VelocitySensor(const RealismConfig& cfg, double dt, std::uint64_t seed, Eigen::VectorXd initial)
      : noise_std_(cfg.vel_noise_std), rng_(seed), filtered_(std::move(initial)) {
    if (cfg.vel_lowpass_hz > 0.0) {
      const double rc = 1.0 / (2.0 * M_PI * cfg.vel_lowpass_hz);
      alpha_ = dt / (rc + dt);
    }
  }

  const Eigen::VectorXd& sense(const Eigen::VectorXd& v) {
    Eigen::VectorXd measured = v;
    if (noise_std_ > 0.0) {
      for (Eigen::Index i = 0; i < measured.size(); ++i) measured(i) += noise_std_ * normal_(rng_);
    }
    filtered_ += alpha_ * (measured - filtered_);
    return filtered_;
  }

 private:
  double noise_std_;
  double alpha_ = 1.0;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  Eigen::VectorXd filtered_;
};

TraceRow make_row(const RobotModel& model, const std::string& frame, const CircleTrajectory& traj,
                  double t, const JointState& x, const Eigen::VectorXd& tau) {
  TraceRow row;
  row.t = t;
  row.q = x.q;
  row.v = x.v;
  row.tau = tau;
  row.p = forward_kinematics(model, x.q, frame).position;
  row.pdot = frame_jacobian(model, x.q, frame) * x.v;
  const TaskReference ref = circle_ref(traj, t);
  row.p_ref = ref.position;
  row.v_ref = ref.velocity;
  row.pos_err = (row.p_ref - row.p).norm();
  row.vel_err = (row.v_ref - row.pdot).norm();
  return row;
}

TraceRow nan_row(int n, double t) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  TraceRow row;
  row.t = t;
  row.q = row.v = row.tau = Eigen::VectorXd::Constant(n, nan);
  row.p = row.pdot = row.p_ref = row.v_ref = Eigen::Vector3d::Constant(nan);
  row.pos_err = row.vel_err = nan;
  return row;
}

}  // namespace

SimTrace run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  cfg.validate();
  const auto model = resolve_model(cfg);
  const int n = model->dof();
  const CircleTrajectory traj = resolve_trajectory(cfg, *model);
  std::unique_ptr<TorqueController> ctrl;
  if (!cfg.passive) ctrl = make_controller(cfg, model);

  const int plant_hz = cfg.effective_plant_hz();
  const long fast_period = plant_hz / cfg.rates.fast_hz;
  const long ctrl_period = plant_hz / cfg.effective_controller_hz();
  const long push_period = plant_hz / cfg.rates.law_push_hz;
  const long record_period = plant_hz / cfg.record_hz;
  const long steps = std::lround(cfg.duration * plant_hz);
  const double dt = 1.0 / plant_hz;

  const Eigen::VectorXd limits = cfg.realism.torque_limit
                                     ? Eigen::VectorXd::Constant(n, *cfg.realism.torque_limit)
                                     : model->torque_limits();

  JointState state = JointState::zero(n);
  state.q = model->nominal_posture();
  if (cfg.initial_q) {
    if (static_cast<int>(cfg.initial_q->size()) != n) throw ConfigError("initial_q length != dof");
    state.q = Eigen::Map<const Eigen::VectorXd>(cfg.initial_q->data(), n);
  }

  std::optional<net::DriverNetwork> network;
  if (cfg.mode == ExecutionMode::kInterpolated && ctrl) {
    net::NetworkOptions nopt;
    nopt.hop_delay = cfg.hop_delay;
    nopt.decimation = cfg.decimation;
    nopt.law_latency = cfg.law_latency;
    nopt.wire_float32 = cfg.wire_float32;
    nopt.drop_probability = cfg.drop_probability;
    nopt.drop_seed = cfg.seed ^ 0x9E3779B97F4A7C15ull;
    network.emplace(n, net::default_boards(n), nopt);
  }

  VelocitySensor sensor(cfg.realism, dt, cfg.seed, state.v);
  std::deque<Eigen::VectorXd> actuation(static_cast<std::size_t>(cfg.realism.actuation_delay_ticks),
                                        Eigen::VectorXd::Zero(n));

  SimTrace trace;
  trace.dof = n;
  trace.rows.reserve(static_cast<std::size_t>(steps / record_period + 2));

  Eigen::VectorXd held = Eigen::VectorXd::Zero(n);      // DIRECT: last slow-loop torque
  Eigen::VectorXd fast_tau = Eigen::VectorXd::Zero(n);  // torque out of the fast loop
  std::optional<LinearFeedbackLaw> latest;
  std::uint32_t sequence = 0;
  std::uint32_t pushed = 0;
  Eigen::VectorXd anchor_tau;

  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) / plant_hz;
    const JointState sensed{state.q, sensor.sense(state.v)};
    bool controller_tick = false;

    try {
      if (ctrl && k % ctrl_period == 0) {
        controller_tick = true;
        ++trace.controller_evaluations;
        if (cfg.mode == ExecutionMode::kDirect) {
          held = ctrl->evaluate(sensed, t);
        } else {
          LinearFeedbackLaw law = linearize(*ctrl, sensed, t);
          law.sequence = ++sequence;
          anchor_tau = ctrl->evaluate(sensed, t);
          latest = std::move(law);
        }
      }
      if (network && latest && k % push_period == 0 && latest->sequence != pushed) {
        network->stage_law(*latest);
        pushed = latest->sequence;
        ++trace.laws_pushed;
      }
      if (k % fast_period == 0) {
        if (!ctrl) {
          fast_tau.setZero();
        } else if (network) {
          fast_tau = network->tick(sensed.q, sensed.v);
        } else {
          fast_tau = held;
          ++trace.fast_recomputations;
        }
        if (network && controller_tick) {
          trace.max_anchor_error = std::max(
              trace.max_anchor_error, (fast_tau - anchor_tau).cwiseAbs().maxCoeff());
        }
        if (network && cfg.fidelity_probe) {
          trace.max_interp_residual =
              std::max(trace.max_interp_residual,
                       (fast_tau - ctrl->evaluate(sensed, t)).cwiseAbs().maxCoeff());
        }
        if (options.record_fast_torques) trace.fast_torques.push_back(fast_tau);
      }
    } catch (const NonFiniteError& e) {
      trace.blowup = true;
      trace.blowup_time = t;
      trace.blowup_reason = e.what();
      trace.rows.push_back(nan_row(n, t));
      break;
    }

    const Eigen::VectorXd commanded = fast_tau.cwiseMax(-limits).cwiseMin(limits);
    Eigen::VectorXd applied = commanded;
    if (!actuation.empty()) {
      actuation.push_back(commanded);
      applied = actuation.front();
      actuation.pop_front();
    }

    if (k % record_period == 0) trace.rows.push_back(make_row(*model, cfg.frame, traj, t, state, applied));

    try {
      state = integrate_step(*model, state, applied, dt);
    } catch (const BlowupError& e) {
      trace.blowup = true;
      trace.blowup_time = t + dt;
      trace.blowup_reason = e.what();
      trace.rows.push_back(nan_row(n, t + dt));
      break;
    }
    if (state.v.cwiseAbs().maxCoeff() > kBlowupVelocity) {
      trace.blowup = true;
      trace.blowup_time = t + dt;
      trace.blowup_reason = "joint velocity above 1e3 rad/s";
      trace.rows.push_back(make_row(*model, cfg.frame, traj, t + dt, state, applied));
      break;
    }
  }
  if (network) trace.fast_recomputations = network->recompute_count();
  return trace;
}

bool decimation_equivalence_check(const ExperimentConfig& cfg, int decimation) {
  if (cfg.hop_delay != 0) throw ConfigError("decimation check requires hop_delay = 0");
  if (decimation < 1 || cfg.rates.fast_hz % decimation != 0) {
    throw ConfigError("decimation must divide fast_hz");
  }
  ExperimentConfig fine = cfg;
  fine.mode = ExecutionMode::kInterpolated;
  fine.decimation = decimation;
  fine.rates.plant_hz = cfg.effective_plant_hz();

  ExperimentConfig coarse = fine;
  coarse.decimation = 1;
  coarse.rates.fast_hz = cfg.rates.fast_hz / decimation;

  const RunOptions opts{.record_fast_torques = true};
  const SimTrace a = run_experiment(fine, opts);
  const SimTrace b = run_experiment(coarse, opts);
  if (a.blowup != b.blowup) return false;
  for (std::size_t i = 0; i < b.fast_torques.size(); ++i) {
    const std::size_t j = i * static_cast<std::size_t>(decimation);
    if (j >= a.fast_torques.size()) return false;
    if (a.fast_torques[j] != b.fast_torques[i]) return false;
  }
  return !b.fast_torques.empty();
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> trace_columns(int dof) {
  std::vector<std::string> cols{"t"};
  for (const char* prefix : {"q", "v", "tau"}) {
    for (int i = 0; i < dof; ++i) cols.push_back(prefix + std::to_string(i));
  }
  for (const char* c : {"px", "py", "pz", "vx", "vy", "vz", "pref_x", "pref_y", "pref_z", "vref_x",
                        "vref_y", "vref_z", "pos_err", "vel_err", "blowup"}) {
    cols.emplace_back(c);
  }
  return cols;
}

void write_trace_csv(const SimTrace& trace, std::ostream& out) {
  const auto cols = trace_columns(trace.dof);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (std::size_t r = 0; r < trace.rows.size(); ++r) {
    const TraceRow& row = trace.rows[r];
    std::string line = format_double(row.t);
    auto add = [&line](double v) {
      line += ',';
      line += format_double(v);
    };
    for (const auto* vec : {&row.q, &row.v, &row.tau}) {
      for (Eigen::Index i = 0; i < vec->size(); ++i) add((*vec)(i));
    }
    for (const auto* vec : {&row.p, &row.pdot, &row.p_ref, &row.v_ref}) {
      for (int i = 0; i < 3; ++i) add((*vec)(i));
    }
    add(row.pos_err);
    add(row.vel_err);
    line += (trace.blowup && r + 1 == trace.rows.size()) ? ",1" : ",0";
    out << line << '\n';
  }
}

void write_trace_csv(const SimTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace " + path.string());
  write_trace_csv(trace, out);
}

SimTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace " + path.string());
  std::string line;
  std::getline(in, line);
  const auto ncols = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
  // 1 + 3n + 12 + 3 columns
  if ((ncols - 16) % 3 != 0) throw std::runtime_error("trace: unexpected column count");
  SimTrace trace;
  trace.dof = (ncols - 16) / 3;
  const int n = trace.dof;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      if (cell == "nan") {
        v = std::numeric_limits<double>::quiet_NaN();
      } else if (cell == "inf" || cell == "-inf") {
        v = cell[0] == '-' ? -HUGE_VAL : HUGE_VAL;
      } else {
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (res.ec != std::errc()) throw std::runtime_error("trace: bad number '" + cell + "'");
      }
      vals.push_back(v);
    }
    if (static_cast<int>(vals.size()) != ncols) throw std::runtime_error("trace: ragged row");
    TraceRow row;
    int c = 0;
    row.t = vals[c++];
    auto take = [&](Eigen::Index len) {
      Eigen::VectorXd out(len);
      for (Eigen::Index i = 0; i < len; ++i) out(i) = vals[static_cast<std::size_t>(c++)];
      return out;
    };
    row.q = take(n);
    row.v = take(n);
    row.tau = take(n);
    row.p = take(3);
    row.pdot = take(3);
    row.p_ref = take(3);
    row.v_ref = take(3);
    row.pos_err = vals[static_cast<std::size_t>(c++)];
    row.vel_err = vals[static_cast<std::size_t>(c++)];
    if (vals[static_cast<std::size_t>(c)] != 0.0) {
      trace.blowup = true;
      trace.blowup_time = row.t;
    }
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

}  // namespace hfl
