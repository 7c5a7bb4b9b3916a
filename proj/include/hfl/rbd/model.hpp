#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hfl {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// One revolute joint and the link it drives.
///
/// The joint frame sits at `translation` in the parent link frame, rotated by
/// `rotation`. The joint then rotates its link about `axis` (joint frame).
/// Link quantities (COM offset, inertia) are expressed in the link frame,
/// which coincides with the joint frame at q = 0.
struct JointSpec {
  std::string name;
  int parent = -1;  // -1 is the fixed base
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();  // m
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  double mass = 0.0;                                     // kg
  Eigen::Vector3d com = Eigen::Vector3d::Zero();         // m
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Zero();     // kg m^2, about COM
  double damping = 0.0;                                  // N m s / rad
  double torque_limit = 2.7;                             // N m
};

/// Task frame rigidly attached to a link.
struct FrameSpec {
  std::string name;
  int link = 0;
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();  // m, link frame
};

/// Fixed-base revolute-joint tree. Immutable after construction.
class RobotModel {
 public:
  /// Validates the tree and inertial invariants; throws ModelError.
  RobotModel(std::vector<JointSpec> joints, std::vector<FrameSpec> frames,
             Eigen::Vector3d gravity = Eigen::Vector3d(0.0, 0.0, -9.81),
             Eigen::VectorXd nominal_posture = {});

  int dof() const { return static_cast<int>(joints_.size()); }
  const std::vector<JointSpec>& joints() const { return joints_; }
  const JointSpec& joint(int i) const { return joints_[static_cast<std::size_t>(i)]; }
  const std::vector<FrameSpec>& frames() const { return frames_; }
  const Eigen::Vector3d& gravity() const { return gravity_; }
  /// Default standing/posture configuration (zeros unless the file sets one).
  const Eigen::VectorXd& nominal_posture() const { return nominal_posture_; }

  /// Throws ModelError for unknown names.
  const FrameSpec& frame(std::string_view name) const;
  bool has_frame(std::string_view name) const;

  /// True when joint `j` lies on the path from the base to link `link`.
  bool is_ancestor(int j, int link) const;

  Eigen::VectorXd torque_limits() const;
  Eigen::VectorXd damping() const;

  /// Same kinematics and inertia, different gravity/damping. Handy for tests.
  RobotModel with_gravity(const Eigen::Vector3d& g) const;
  RobotModel with_damping(double d) const;

 private:
  std::vector<JointSpec> joints_;
  std::vector<FrameSpec> frames_;
  Eigen::Vector3d gravity_;
  Eigen::VectorXd nominal_posture_;
};

/// Joint angles (rad) and velocities (rad/s).
struct JointState {
  Eigen::VectorXd q;
  Eigen::VectorXd v;

  static JointState zero(int n) {
    return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  }
  static JointState from_stacked(const Eigen::VectorXd& x);

  int size() const { return static_cast<int>(q.size()); }
  /// x = (q, v)
  Eigen::VectorXd stacked() const;
};

/// Throws DimensionError / NonFiniteError.
void check_state(const RobotModel& model, const JointState& x);

RobotModel load_model(const std::filesystem::path& path);
RobotModel parse_model(std::string_view json_text);

/// Single revolute joint about `axis` with a point mass `mass` at `length`
/// along local +x, frame "right_foot" at the mass. Gravity along -z.
/// With axis -y, positive q lifts the mass: height = l sin q.
RobotModel make_point_pendulum(double mass = 1.0, double length = 1.0, double damping = 0.0,
                               const Eigen::Vector3d& axis = Eigen::Vector3d::UnitY());

}  // namespace hfl
