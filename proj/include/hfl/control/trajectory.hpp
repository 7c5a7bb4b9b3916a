#pragma once

#include <Eigen/Core>

namespace hfl {

/// Reference position, velocity and acceleration at one instant.
struct TaskReference {
  Eigen::Vector3d position;      // m
  Eigen::Vector3d velocity;      // m/s
  Eigen::Vector3d acceleration;  // m/s^2
};

/// p*(t) = c + R (cos(ωt + φ) u + sin(ωt + φ) w)
struct CircleTrajectory {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 0.05;
  double angular_rate = 3.14159265358979323846;
  Eigen::Vector3d u = Eigen::Vector3d::UnitX();
  Eigen::Vector3d w = Eigen::Vector3d::UnitZ();
  double phase = 0.0;

  /// Throws std::invalid_argument unless u, w are orthonormal and radius > 0.
  void validate() const;
};

TaskReference circle_ref(const CircleTrajectory& traj, double t);

}  // namespace hfl
