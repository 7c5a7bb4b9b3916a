#include "hfl/control/id_controller.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "hfl/errors.hpp"
#include "hfl/rbd/dynamics.hpp"
#include "hfl/rbd/kinematics.hpp"

namespace hfl {

TaskGains TaskGains::critically_damped(double kp, double damping, double posture_kp) {
  return critically_damped(Eigen::Vector3d::Constant(kp), damping, posture_kp);
}

TaskGains TaskGains::critically_damped(const Eigen::Vector3d& kp, double damping,
                                       double posture_kp) {
  TaskGains g;
  g.kp = kp;
  g.kd = (2.0 * kp).cwiseSqrt();
  g.damping = damping;
  g.posture_kp = posture_kp;
  g.posture_kd = std::sqrt(2.0 * posture_kp);
  return g;
}

void TaskGains::validate() const {
  if (!(kp.array() > 0.0).all()) throw std::invalid_argument("task gains: Kp must be positive");
  if (!(kd.array() > 0.0).all()) throw std::invalid_argument("task gains: Kd must be positive");
  if (!(damping >= 0.0)) throw std::invalid_argument("task gains: damping must be >= 0");
  if (!(posture_kp >= 0.0) || !(posture_kd >= 0.0)) {
    throw std::invalid_argument("task gains: posture gains must be >= 0");
  }
}

IdTrackingController::IdTrackingController(std::shared_ptr<const RobotModel> model,
                                           TaskGains gains, CircleTrajectory trajectory,
                                           Options options)
    : model_(std::move(model)),
      gains_(gains),
      trajectory_(std::move(trajectory)),
      options_(std::move(options)) {
  if (!model_) throw std::invalid_argument("id controller: null model");
  gains_.validate();
  trajectory_.validate();
  model_->frame(options_.frame);  // throws for unknown frames
  if (options_.task_axes.empty() || options_.task_axes.size() > 3) {
    throw std::invalid_argument("id controller: 1 to 3 task axes required");
  }
  for (int a : options_.task_axes) {
    if (a < 0 || a > 2) throw std::invalid_argument("id controller: task axis out of range");
  }
  if (options_.posture.size() == 0) options_.posture = model_->nominal_posture();
  if (options_.posture.size() != model_->dof()) {
    throw DimensionError("id controller: posture length does not match model dof");
  }
}

Eigen::MatrixXd IdTrackingController::selection() const {
  const auto k = static_cast<Eigen::Index>(options_.task_axes.size());
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(k, 3);
  for (Eigen::Index r = 0; r < k; ++r) s(r, options_.task_axes[static_cast<std::size_t>(r)]) = 1.0;
  return s;
}

Eigen::VectorXd IdTrackingController::commanded_task_acceleration(const JointState& x,
                                                                  double t) const {
  check_state(*model_, x);
  const auto pose = forward_kinematics(*model_, x.q, options_.frame);
  const Eigen::MatrixXd jac = frame_jacobian(*model_, x.q, options_.frame);
  const Eigen::Vector3d pdot = jac * x.v;
  const TaskReference ref = circle_ref(trajectory_, t);
  const Eigen::Vector3d cmd = ref.acceleration +
                              gains_.kp.cwiseProduct(ref.position - pose.position) +
                              gains_.kd.cwiseProduct(ref.velocity - pdot);
  return selection() * cmd;
}

Eigen::VectorXd IdTrackingController::task_acceleration(const JointState& x, double t) const {
  const int n = model_->dof();
  const Eigen::MatrixXd sel = selection();
  const Eigen::MatrixXd jac = sel * frame_jacobian(*model_, x.q, options_.frame);
  const Eigen::VectorXd drift = sel * jdot_v(*model_, x.q, x.v, options_.frame);
  const Eigen::VectorXd cmd = commanded_task_acceleration(x, t);

  const double lambda2 = gains_.damping * gains_.damping;
  const Eigen::MatrixXd jjt =
      jac * jac.transpose() + lambda2 * Eigen::MatrixXd::Identity(jac.rows(), jac.rows());
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(jjt);
  // J⁺ = Jᵀ (J Jᵀ + λ² I)⁻¹
  const Eigen::MatrixXd pinv = ldlt.solve(jac).transpose();

  const Eigen::VectorXd posture_acc =
      gains_.posture_kp * (options_.posture - x.q) - gains_.posture_kd * x.v;
  const Eigen::MatrixXd nullspace = Eigen::MatrixXd::Identity(n, n) - pinv * jac;
  Eigen::VectorXd acc = pinv * (cmd - drift) + nullspace * posture_acc;
  if (!acc.allFinite()) throw NonFiniteError("id controller: non-finite task acceleration");
  return acc;
}

Eigen::VectorXd IdTrackingController::evaluate(const JointState& x, double t) const {
  const Eigen::VectorXd acc = task_acceleration(x, t);
  Eigen::VectorXd tau = inverse_dynamics(*model_, x.q, x.v, acc);
  if (!tau.allFinite()) throw NonFiniteError("id controller: non-finite torque");
  return tau;
}

}  // namespace hfl
