#include "hfl/rbd/dynamics.hpp"

namespace hfl {

JointState integrate_step(const RobotModel& model, const JointState& state,
                          const Eigen::VectorXd& tau, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_step: dt must be positive");
  check_state(model, state);
  Eigen::VectorXd accel;
  try {
    accel = forward_dynamics(model, state.q, state.v, tau);
  } catch (const NonFiniteError& e) {
    throw BlowupError(std::string("integrate_step: ") + e.what());
  }
  JointState next;
  next.v = state.v + accel * dt;
  next.q = state.q + next.v * dt;
  if (!next.q.allFinite() || !next.v.allFinite()) {
    throw BlowupError("integrate_step: non-finite state after step");
  }
  return next;
}

}  // namespace hfl
