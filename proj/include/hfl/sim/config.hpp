#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "hfl/control/controller.hpp"
#include "hfl/control/trajectory.hpp"
#include "hfl/rbd/model.hpp"

namespace hfl {

enum class ExecutionMode { kDirect, kInterpolated };

std::string to_string(ExecutionMode mode);
ExecutionMode parse_mode(std::string_view text);

enum class ControllerKind { kInverseDynamics, kMlp, kAffine, kJointPd };

std::string to_string(ControllerKind kind);
ControllerKind parse_controller_kind(std::string_view text);

struct ControllerConfig {
  ControllerKind kind = ControllerKind::kInverseDynamics;
  // Task-space inverse dynamics.
  double kp = 500.0;            // s^-2
  std::optional<double> kd;     // s^-1; default √(2 kp)
  double pinv_damping = 1e-4;
  double posture_kp = 10.0;     // s^-2
  // MLP policy: a file, or the seeded stand-in when no file is given.
  std::string policy_path;
  std::uint64_t policy_seed = 7;
  double policy_kq = 5.0;       // N m / rad
  double policy_kv = 0.6;       // N m s / rad
  // Joint PD baseline.
  double joint_kp = 5.0;        // N m / rad
  double joint_kd = 0.1;        // N m s / rad
  // Explicit affine law τ = K x + c (row-major K).
  std::vector<double> affine_gain;
  std::vector<double> affine_offset;
};

struct RateConfig {
  int fast_hz = 40000;
  int controller_hz = 0;   // 0: 500 for inverse dynamics, 200 for the MLP
  int law_push_hz = 1000;
  int plant_hz = 0;        // 0: fast_hz
};

struct RealismConfig {
  double vel_noise_std = 0.05;       // rad/s
  double vel_lowpass_hz = 500.0;     // <= 0 disables the filter
  int actuation_delay_ticks = 1;     // plant steps
  std::optional<double> torque_limit;  // N m, all joints; default: model limits
};

struct TrajectoryConfig {
  std::optional<Eigen::Vector3d> center;  // default: foot position at the nominal posture
  double radius = 0.05;
  double angular_rate = 3.14159265358979323846;
  Eigen::Vector3d u = Eigen::Vector3d::UnitX();
  Eigen::Vector3d w = Eigen::Vector3d::UnitZ();
  double phase = 0.0;
};

#ifdef HFL_DEFAULT_MODEL
inline constexpr const char* kDefaultModelPath = HFL_DEFAULT_MODEL;
#else
inline constexpr const char* kDefaultModelPath = "data/bolt_lite.json";
#endif

/// Everything one simulation run needs. Fields mirror the JSON config file.
struct ExperimentConfig {
  std::string model_path = kDefaultModelPath;
  std::shared_ptr<const RobotModel> model;  // preloaded model overrides model_path
  std::string frame = "right_foot";
  ControllerConfig controller;
  ExecutionMode mode = ExecutionMode::kInterpolated;
  RateConfig rates;
  int decimation = 1;
  int hop_delay = 0;
  int law_latency = 0;
  bool wire_float32 = true;
  double drop_probability = 0.0;
  double duration = 2.0;  // s
  TrajectoryConfig trajectory;
  RealismConfig realism;
  std::optional<std::vector<double>> initial_q;  // default: nominal posture
  int record_hz = 1000;
  std::uint64_t seed = 1;
  // Evaluate the non-linear controller on every fast tick and track the
  // largest deviation from the torque actually applied (INTERPOLATED only).
  bool fidelity_probe = false;
  // Skip the controller entirely (passive plant), for reference runs.
  bool passive = false;

  int effective_controller_hz() const;
  int effective_plant_hz() const;

  /// Throws ConfigError.
  void validate() const;
};

/// Parses the JSON config. Relative paths resolve against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& doc,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Applies "a.b.c=value" to a JSON document; the value is parsed as JSON when
/// possible, otherwise taken as a string.
void apply_override(nlohmann::json& doc, std::string_view assignment);

std::shared_ptr<const RobotModel> resolve_model(const ExperimentConfig& cfg);
CircleTrajectory resolve_trajectory(const ExperimentConfig& cfg, const RobotModel& model);
std::unique_ptr<TorqueController> make_controller(const ExperimentConfig& cfg,
                                                  std::shared_ptr<const RobotModel> model);

}  // namespace hfl
