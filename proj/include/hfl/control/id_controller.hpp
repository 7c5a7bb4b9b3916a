#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hfl/control/controller.hpp"
#include "hfl/control/trajectory.hpp"
#include "hfl/rbd/model.hpp"

namespace hfl {

/// Task-space PD gains plus redundancy-resolution settings.
struct TaskGains {
  Eigen::Vector3d kp = Eigen::Vector3d::Constant(500.0);  // s^-2
  Eigen::Vector3d kd = Eigen::Vector3d::Constant(std::sqrt(1000.0));  // s^-1
  double damping = 1e-4;      // pseudoinverse damping λ
  double posture_kp = 10.0;   // s^-2
  double posture_kd = std::sqrt(20.0);  // s^-1

  /// Kd = √(2 Kp) for the task and for the posture term.
  static TaskGains critically_damped(double kp, double damping = 1e-4,
                                     double posture_kp = 10.0);
  static TaskGains critically_damped(const Eigen::Vector3d& kp, double damping = 1e-4,
                                     double posture_kp = 10.0);

  void validate() const;
};

/// Instantaneous task-space inverse-dynamics tracker:
///
///   p̈_cmd = p̈* + Kp (p* − p) + Kd (ṗ* − ṗ)
///   a*    = J⁺ (p̈_cmd − J̇v) + (I − J⁺J) (Kp_post (q₀ − q) − Kd_post v)
///   τ     = ID(q, v, a*)
///
/// with J⁺ = Jᵀ (J Jᵀ + λ² I)⁻¹. Stateless.
class IdTrackingController final : public TorqueController {
 public:
  struct Options {
    std::string frame = "right_foot";
    std::vector<int> task_axes = {0, 1, 2};  // world axes tracked
    Eigen::VectorXd posture;                 // empty: the model's nominal posture
  };

  IdTrackingController(std::shared_ptr<const RobotModel> model, TaskGains gains,
                       CircleTrajectory trajectory, Options options);
  IdTrackingController(std::shared_ptr<const RobotModel> model, TaskGains gains,
                       CircleTrajectory trajectory)
      : IdTrackingController(std::move(model), gains, std::move(trajectory), Options{}) {}

  Eigen::VectorXd evaluate(const JointState& x, double t) const override;
  int dof() const override { return model_->dof(); }

  /// The joint acceleration a* handed to inverse dynamics.
  Eigen::VectorXd task_acceleration(const JointState& x, double t) const;
  /// p̈_cmd restricted to the tracked axes.
  Eigen::VectorXd commanded_task_acceleration(const JointState& x, double t) const;

  const TaskGains& gains() const { return gains_; }
  const CircleTrajectory& trajectory() const { return trajectory_; }
  const RobotModel& model() const { return *model_; }

 private:
  Eigen::MatrixXd selection() const;

  std::shared_ptr<const RobotModel> model_;
  TaskGains gains_;
  CircleTrajectory trajectory_;
  Options options_;
};

}  // namespace hfl
