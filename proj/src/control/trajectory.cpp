#include "hfl/control/trajectory.hpp"

#include <cmath>
#include <stdexcept>

namespace hfl {

void CircleTrajectory::validate() const {
  constexpr double tol = 1e-12;
  if (!(radius > 0.0)) throw std::invalid_argument("circle radius must be positive");
  if (std::abs(u.norm() - 1.0) > tol || std::abs(w.norm() - 1.0) > tol ||
      std::abs(u.dot(w)) > tol) {
    throw std::invalid_argument("circle plane basis must be orthonormal");
  }
  if (!center.allFinite() || !std::isfinite(angular_rate) || !std::isfinite(phase)) {
    throw std::invalid_argument("circle parameters must be finite");
  }
}

TaskReference circle_ref(const CircleTrajectory& traj, double t) {
  const double angle = traj.angular_rate * t + traj.phase;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double r = traj.radius;
  const double om = traj.angular_rate;
  TaskReference ref;
  ref.position = traj.center + r * (c * traj.u + s * traj.w);
  ref.velocity = r * om * (-s * traj.u + c * traj.w);
  ref.acceleration = -r * om * om * (c * traj.u + s * traj.w);
  return ref;
}

}  // namespace hfl
