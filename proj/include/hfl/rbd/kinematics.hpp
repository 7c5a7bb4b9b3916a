#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "hfl/errors.hpp"
#include "hfl/rbd/model.hpp"

namespace hfl {

/// World pose of a frame.
template <typename Scalar>
struct Pose {
  Matrix3<Scalar> rotation = Matrix3<Scalar>::Identity();
  Vector3<Scalar> position = Vector3<Scalar>::Zero();
};

namespace detail {

template <typename Derived>
void require_size(const Eigen::MatrixBase<Derived>& vec, int n, const char* what) {
  if (vec.size() != n) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(n) +
                         ", got " + std::to_string(vec.size()));
  }
}

// Rotation of link i relative to its parent: placement rotation then joint rotation.
template <typename Scalar>
Matrix3<Scalar> joint_rotation(const JointSpec& js, Scalar angle) {
  const Vector3<Scalar> axis = js.axis.template cast<Scalar>();
  return js.rotation.template cast<Scalar>() *
         Eigen::AngleAxis<Scalar>(angle, axis).toRotationMatrix();
}

}  // namespace detail

/// World pose of every link frame.
template <typename Derived>
std::vector<Pose<typename Derived::Scalar>> link_poses(const RobotModel& model,
                                                      const Eigen::MatrixBase<Derived>& q) {
  using Scalar = typename Derived::Scalar;
  detail::require_size(q, model.dof(), "q");
  std::vector<Pose<Scalar>> poses(static_cast<std::size_t>(model.dof()));
  for (int i = 0; i < model.dof(); ++i) {
    const JointSpec& js = model.joint(i);
    const Matrix3<Scalar> rel = detail::joint_rotation<Scalar>(js, q(i));
    const Vector3<Scalar> trans = js.translation.template cast<Scalar>();
    auto& pose = poses[static_cast<std::size_t>(i)];
    if (js.parent < 0) {
      pose.rotation = rel;
      pose.position = trans;
    } else {
      const auto& parent = poses[static_cast<std::size_t>(js.parent)];
      pose.rotation = parent.rotation * rel;
      pose.position = parent.position + parent.rotation * trans;
    }
  }
  return poses;
}

template <typename Derived>
Pose<typename Derived::Scalar> forward_kinematics(const RobotModel& model,
                                                  const Eigen::MatrixBase<Derived>& q,
                                                  std::string_view frame) {
  using Scalar = typename Derived::Scalar;
  const FrameSpec& fs = model.frame(frame);
  const auto poses = link_poses(model, q);
  const auto& link = poses[static_cast<std::size_t>(fs.link)];
  Pose<Scalar> out;
  out.rotation = link.rotation;
  out.position = link.position + link.rotation * fs.offset.template cast<Scalar>();
  return out;
}

/// World-frame linear-velocity Jacobian of a frame origin (3 x n).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 3, Eigen::Dynamic> frame_jacobian(
    const RobotModel& model, const Eigen::MatrixBase<Derived>& q, std::string_view frame) {
  using Scalar = typename Derived::Scalar;
  const FrameSpec& fs = model.frame(frame);
  const auto poses = link_poses(model, q);
  const auto& link = poses[static_cast<std::size_t>(fs.link)];
  const Vector3<Scalar> p = link.position + link.rotation * fs.offset.template cast<Scalar>();

  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> jac =
      Eigen::Matrix<Scalar, 3, Eigen::Dynamic>::Zero(3, model.dof());
  for (int j = fs.link; j >= 0; j = model.joint(j).parent) {
    const auto& pj = poses[static_cast<std::size_t>(j)];
    const Vector3<Scalar> axis = pj.rotation * model.joint(j).axis.template cast<Scalar>();
    jac.col(j) = axis.cross(p - pj.position);
  }
  return jac;
}

}  // namespace hfl
